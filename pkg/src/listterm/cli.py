"""Command-line front end: parse, build the SEG, extract the ITS, prove termination."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from .analysis import Report, analyze
from .ir import ParseError, parse_program
from .its import export_its
from .oracle import OracleBounds, concretize, contains
from .ranking import MEMORY_UNSAFE, TERMINATING, UNKNOWN, explain
from .seg import Limits, export_dot, export_json
from .symexec import IRError

EXIT = {TERMINATING: 0, UNKNOWN: 1, MEMORY_UNSAFE: 2}
EXIT_ERROR = 3


@dataclass
class RunConfig:
    path: Path
    emit_dot: Path | None = None
    emit_its: Path | None = None
    emit_seg_json: Path | None = None
    malloc_may_fail: bool = False
    widen_after: int = 3
    node_cap: int = 10_000
    explain: bool = False
    oracle_bounds: OracleBounds | None = None

    @property
    def limits(self) -> Limits:
        return Limits(self.widen_after, self.node_cap, self.malloc_may_fail)


def _positive(s: str) -> int:
    n = int(s)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return n


def _bounds(s: str) -> OracleBounds:
    try:
        return OracleBounds.parse(s)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="listterm", description=__doc__)
    ap.add_argument("path", type=Path, help="program in the mini-IR")
    ap.add_argument("--emit-dot", type=Path, metavar="PATH", help="write the SEG as Graphviz DOT")
    ap.add_argument("--emit-its", type=Path, metavar="PATH", help="write the ITS in native text form")
    ap.add_argument("--emit-seg-json", type=Path, metavar="PATH", help="write the SEG as JSON")
    ap.add_argument("--malloc-may-fail", action="store_true", help="model malloc returning null")
    ap.add_argument("--widen-after", type=_positive, default=3, metavar="N")
    ap.add_argument("--node-cap", type=_positive, default=10_000, metavar="N")
    ap.add_argument("--explain", action="store_true", help="print ranking functions or the failure")
    ap.add_argument("--oracle-bounds", type=_bounds, metavar="BOUNDS",
                    help="test mode: check every generalization by bounded concretization, "
                         "e.g. len=3,vals=-1:2")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def parse_args(argv) -> RunConfig:
    a = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if a.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    return RunConfig(a.path, a.emit_dot, a.emit_its, a.emit_seg_json, a.malloc_may_fail,
                     a.widen_after, a.node_cap, a.explain, a.oracle_bounds)


def oracle_check(report: Report, bounds: OracleBounds) -> list[str]:
    """Generalization edges whose source has a bounded concretization the target misses."""
    seg = report.outcome.seg
    out = []
    for e in seg.edges:
        if e.kind != "generalize":
            continue
        src, dst = seg.nodes[e.src].state, seg.nodes[e.dst].state
        for c in concretize(seg.program, src, bounds):
            if not contains(seg.program, dst, c):
                out.append(f"node {e.src} -> {e.dst}: concrete state not covered")
                break
    return out


def format_report(cfg: RunConfig, report: Report, wall: float) -> str:
    st = report.outcome.seg.stats
    ntrans = len(report.its.transitions) if report.its else 0
    lines = [
        f"file: {cfg.path}",
        f"verdict: {report.verdict}",
        f"memory safety: {'violated' if report.verdict == MEMORY_UNSAFE else 'proved' if report.outcome.status == 'complete' else 'unknown'}",
        f"nodes: {len(report.outcome.seg.nodes)} (created {st['nodes']})",
        f"merges: {st['merges']}",
        f"widenings: {st['widenings']}",
        f"transitions: {ntrans}",
        f"wall time: {wall:.3f}s",
    ]
    if report.diagnostic:
        lines.append(f"diagnostic: {report.diagnostic}")
    if report.certificate_ok is not None:
        lines.append(f"certificate: {'checked' if report.certificate_ok else 'REJECTED'}")
    return "\n".join(lines)


def run(cfg: RunConfig) -> tuple[Report, str]:
    t0 = time.perf_counter()
    program = parse_program(cfg.path.read_text())
    report = analyze(program, cfg.limits)
    text = format_report(cfg, report, time.perf_counter() - t0)
    seg = report.outcome.seg
    if cfg.emit_dot:
        cfg.emit_dot.write_text(export_dot(seg))
    if cfg.emit_seg_json:
        cfg.emit_seg_json.write_text(export_json(seg))
    if cfg.emit_its and report.its is not None:
        cfg.emit_its.write_text(export_its(report.its))
    if cfg.explain and report.termination is not None:
        text += "\n" + explain(report.its, report.termination)
    if cfg.oracle_bounds is not None:
        problems = oracle_check(report, cfg.oracle_bounds)
        text += f"\noracle: {len(problems)} violation(s)"
        for msg in problems:
            text += "\n  " + msg
    return report, text


def main(argv=None) -> int:
    try:
        cfg = parse_args(sys.argv[1:] if argv is None else argv)
    except SystemExit as e:
        return EXIT_ERROR if e.code else 0
    try:
        report, text = run(cfg)
    except (OSError, ParseError, IRError) as e:
        print(f"listterm: error: {e}", file=sys.stderr)
        return EXIT_ERROR
    print(text)
    return EXIT[report.verdict]


if __name__ == "__main__":
    sys.exit(main())
