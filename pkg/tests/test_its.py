import pytest

from listterm.analysis import analyze
from listterm.constraints import entails, eq, project
from listterm.its import export_its, parse_its

from conftest import load

PROGRAMS = ["list_create_traverse.ir", "count_loop.ir", "append_then_count.ir"]


@pytest.fixture(scope="module", params=PROGRAMS)
def report(request):
    return analyze(load(request.param))


def _renaming(orig, back, t, u):
    m = dict(zip(orig.locations[t.src], back.locations[u.src]))
    for y, yb in zip(orig.locations[t.dst], back.locations[u.dst]):
        m[t.primed[y]] = u.primed[yb]
    return m


def test_round_trip_preserves_guards(report):
    orig = report.its
    back = parse_its(export_its(orig))
    assert list(back.locations) == list(orig.locations)
    assert [len(v) for v in back.locations.values()] == [len(v) for v in orig.locations.values()]
    assert [(t.src, t.dst) for t in back.transitions] == [(t.src, t.dst) for t in orig.transitions]
    for t, u in zip(orig.transitions, back.transitions):
        m = _renaming(orig, back, t, u)
        # the exported guard substitutes solved updates, so compare with them added back
        full = t.guard.add(*(eq(yp, e) for yp, e in t.update.items() if e is not None))
        mapped = [c.substitute(m) for c in full]
        shown = project(u.guard, set(m.values()))
        for c in mapped:
            assert entails(u.guard, c)
        inv = {b: a for a, b in m.items()}
        for c in shown:
            assert entails(full, c.substitute(inv))


def test_export_is_deterministic(report):
    assert export_its(report.its) == export_its(report.its)


def test_start_location(report):
    its = report.its
    assert its.start == "start" and its.locations["start"] == ()
    assert all(t.dst != "start" for t in its.transitions)


def test_updates_match_guards(report):
    for t in report.its.transitions:
        for yp, e in t.update.items():
            if e is not None:
                assert entails(t.guard, eq(yp, e))


def test_parse_rejects_garbage():
    with pytest.raises(ValueError):
        parse_its("LOC: a(x)\nthis is not a transition\n")
