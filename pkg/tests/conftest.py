from pathlib import Path

import pytest

from listterm import parse_program

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"


def corpus_files():
    return sorted(CORPUS.glob("*.ir"))


def expected_verdict(path: Path) -> str:
    for line in path.read_text().splitlines():
        if line.startswith("; expect:"):
            return line.split(":", 1)[1].strip()
    raise ValueError(f"{path} has no expect header")


def load(name: str):
    return parse_program((CORPUS / name).read_text())


@pytest.fixture(scope="session")
def example_program():
    return load("list_create_traverse.ir")


def explore(p, limit=200):
    """Plain depth-first symbolic execution without generalization (bounded)."""
    from listterm.symexec import initial_state, step
    out, stack = [], [initial_state(p)]
    while stack and len(out) < limit:
        s = stack.pop()
        out.append(s)
        res = step(p, s)
        if not res.is_error:
            stack.extend(t for t, _ in reversed(res.successors))
    return out
