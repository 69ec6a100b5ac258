"""End-to-end pipeline: SEG, ITS, ranking."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from .ir import Program
from .its import Its, extract_its
from .ranking import (MEMORY_UNSAFE, TERMINATING, UNKNOWN, TerminationResult,
                      check_certificate, prove_termination)
from .seg import AnalysisOutcome, Limits, build_seg


@dataclass
class Report:
    verdict: str
    outcome: AnalysisOutcome
    its: Its | None = None
    termination: TerminationResult | None = None
    certificate_ok: bool | None = None
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def diagnostic(self) -> str:
        if self.outcome.diagnostic:
            return self.outcome.diagnostic
        return self.termination.reason if self.termination else ""


def analyze(p: Program, limits: Limits | None = None) -> Report:
    t0 = time.perf_counter()
    outcome = build_seg(p, limits)
    t1 = time.perf_counter()
    timings = {"seg": t1 - t0}
    if outcome.status == "unsafe":
        return Report(MEMORY_UNSAFE, outcome, timings=timings)
    if outcome.status != "complete":
        return Report(UNKNOWN, outcome, timings=timings)
    its = extract_its(outcome.seg)
    t2 = time.perf_counter()
    res = prove_termination(its)
    t3 = time.perf_counter()
    ok = check_certificate(its, res.certificate) if res.verdict == TERMINATING else None
    timings.update(its=t2 - t1, ranking=t3 - t2)
    verdict = res.verdict if ok is not False else UNKNOWN
    return Report(verdict, outcome, its, res, ok, timings)
