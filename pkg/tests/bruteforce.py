"""Grid evaluation of small linear systems, shared by the constraint tests."""
import random

import numpy as np

from listterm.constraints import Constraint, LinTerm, SymVar

VARS = [SymVar(10_000 + i, "g") for i in range(4)]


def grid(lo=-8, hi=8, n=4):
    axes = np.meshgrid(*[np.arange(lo, hi + 1)] * n, indexing="ij")
    return {v: a.ravel() for v, a in zip(VARS[:n], axes)}


def mask(cs, g):
    """Boolean vector: which grid points satisfy every constraint of ``cs``."""
    size = len(next(iter(g.values())))
    m = np.ones(size, dtype=bool)
    for c in cs:
        val = np.full(size, int(c.term.const), dtype=np.int64)
        for v, a in c.term.coeffs:
            val = val + int(a) * g[v]
        m &= (val == 0) if c.rel == "=" else (val <= 0)
    return m


def random_constraint(rng: random.Random, nvars=4, cmax=3) -> Constraint:
    coeffs = [(v, rng.randint(-cmax, cmax)) for v in VARS[:nvars]]
    rel = rng.choice(["<=", "<=", "<=", "="])
    return Constraint(rel, LinTerm(coeffs, rng.randint(-6, 6)))


def random_system(rng: random.Random, nvars=4, max_cs=6):
    return [random_constraint(rng, nvars) for _ in range(rng.randint(1, max_cs))]
