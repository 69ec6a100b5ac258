import itertools

import pytest

from listterm.instance import instance_mapping, is_instance
from listterm.merge import MergeRefused, lossy, merge_states, widen
from listterm.oracle import OracleBounds, concretize, contains
from listterm.state import Position, audit

from conftest import explore

SMALL = OracleBounds(max_len=3, vmin=-1, vmax=3)


def header_visits(p, block="cmpF", k=4):
    return [s for s in explore(p, 400) if s.pos == Position(block, 0)][:k]


@pytest.fixture(scope="module")
def visits(example_program):
    return header_visits(example_program)


def test_merge_refuses_mismatch(example_program, visits):
    other = next(s for s in explore(example_program, 60) if s.pos != visits[0].pos)
    with pytest.raises(MergeRefused):
        merge_states(example_program, visits[0], other)
    # the first visit precedes the loop body, so fewer registers are defined
    with pytest.raises(MergeRefused):
        merge_states(example_program, visits[0], visits[1])


def test_merged_state_is_well_formed(example_program, visits):
    merged, mu_a, mu_b = merge_states(example_program, visits[1], visits[2])
    assert audit(example_program, merged) == []
    assert len(merged.li) == 1
    assert set(mu_a) >= set(merged.lv.values())


@pytest.mark.parametrize("pair", [(1, 2), (1, 3)])
def test_merge_covers_both_sides(example_program, visits, pair):
    a, b = (visits[i] for i in pair)
    merged, _, _ = merge_states(example_program, a, b)
    for side in (a, b):
        n = 0
        for c in itertools.islice(concretize(example_program, side, SMALL), 300):
            n += 1
            assert contains(example_program, merged, c)
        assert n > 0


def test_instance_of_merge(example_program, visits):
    merged, _, _ = merge_states(example_program, visits[1], visits[2])
    assert is_instance(example_program, merged, visits[2])
    sigma = instance_mapping(example_program, merged, visits[1])
    assert sigma is not None
    for name, x in merged.lv.items():
        assert sigma[x] == visits[1].lv[name] or sigma[x].as_var() == visits[1].lv[name]


def test_merge_with_generalized_state(example_program, visits):
    merged, _, _ = merge_states(example_program, visits[1], visits[2])
    again, _, _ = merge_states(example_program, merged, visits[3], widening=True)
    assert audit(example_program, again) == []
    assert is_instance(example_program, again, visits[3])
    assert is_instance(example_program, again, merged)


def test_instance_is_reflexive(example_program, visits):
    for s in visits:
        assert is_instance(example_program, s, s)


def test_more_specific_is_not_general(example_program, visits):
    merged, _, _ = merge_states(example_program, visits[1], visits[2])
    # the single-node state cannot represent a list of arbitrary length
    assert not is_instance(example_program, visits[1], merged)


def test_lossy_and_widen(example_program, visits):
    merged, _, _ = merge_states(example_program, visits[1], visits[2])
    assert not lossy(example_program, merged, visits[2])
    assert lossy(example_program, merged, merged.with_(li=frozenset()))
    w = widen(merged)
    assert set(w.kb) <= set(merged.kb)
    assert audit(example_program, w) == []
