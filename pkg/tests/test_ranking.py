from fractions import Fraction

import pytest

from listterm.its import parse_its
from listterm.ranking import (TERMINATING, UNKNOWN, Certificate, RankingRound, check_certificate,
                              explain, prove_termination)


def its(body: str, locs="LOC: start()\nLOC: l(x, y)\n"):
    return parse_its("START: start\n" + locs + "start() -> l(x0, y0)\n" + body)


COUNTDOWN = its("l(x, y) -> l(x - 1, y) :: 1 <= x\n")
DIVERGE = its("l(x, y) -> l(x + 1, y) :: 1 <= x\n")
LEX = its("l(x, y) -> l(x - 1, yy) :: 1 <= x\n"
          "l(x, y) -> l(x, y - 1) :: 1 <= y\n")
TWO_LOCS = parse_its("START: start\nLOC: start()\nLOC: a(i, n)\nLOC: b(i, n)\n"
                     "start() -> a(0, n0)\n"
                     "a(i, n) -> b(i, n) :: i + 1 <= n\n"
                     "b(i, n) -> a(i + 1, n)\n")


@pytest.mark.parametrize("system", [COUNTDOWN, LEX, TWO_LOCS], ids=["countdown", "lex", "two"])
def test_proves_and_certificate_checks(system):
    res = prove_termination(system)
    assert res.verdict == TERMINATING
    assert check_certificate(system, res.certificate)


def test_lexicographic_needs_two_rounds():
    res = prove_termination(LEX)
    assert len(res.certificate.rounds) == 2


def test_divergent_loop_is_unknown():
    res = prove_termination(DIVERGE)
    assert res.verdict == UNKNOWN
    assert res.stuck and "no ranking function" in res.reason


def test_tampered_certificates_are_rejected():
    res = prove_termination(COUNTDOWN)
    rnd = res.certificate.rounds[0]
    loc = "l"
    bad_fn = dict(rnd.functions)
    bad_fn[loc] = rnd.functions[loc] * 0 + 5
    assert not check_certificate(COUNTDOWN, Certificate([RankingRound(
        rnd.scc, bad_fn, rnd.strict, rnd.weak, rnd.delta)]))
    big = {ti: Fraction(10) for ti in rnd.delta}
    assert not check_certificate(COUNTDOWN, Certificate([RankingRound(
        rnd.scc, rnd.functions, rnd.strict, rnd.weak, big)]))
    # dropping the only round leaves a cycle behind
    assert not check_certificate(COUNTDOWN, Certificate([]))


def test_unsatisfiable_guards_are_ignored():
    system = its("l(x, y) -> l(x + 1, y) :: 1 <= x && x <= 0\n")
    assert prove_termination(system).verdict == TERMINATING


def test_explain_lists_functions():
    text = explain(LEX, prove_termination(LEX))
    assert "round 0" in text and "round 1" in text and "f_l" in text
    text = explain(DIVERGE, prove_termination(DIVERGE))
    assert "unranked" in text
