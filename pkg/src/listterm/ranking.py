"""Termination proofs for integer transition systems via linear ranking functions.

Each round takes the nontrivial SCCs of the remaining transitions and asks an LP
for one linear function per location that is bounded and non-increasing on
every transition of the SCC and strictly decreasing on as many as possible.
If no such function exists, a single transition is ranked on its own (bounded
and decreasing there, non-increasing elsewhere), which gives lexicographic
proofs.  Strict transitions are dropped and the rest is decomposed again.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import networkx as nx

from .constraints import KnowledgeBase, LinTerm, SymVar, entails, ge, is_satisfiable, project
from .its import Its
from .lp import LinearProgram

TERMINATING = "TERMINATING"
UNKNOWN = "UNKNOWN"
MEMORY_UNSAFE = "MEMORY_UNSAFE"


@dataclass
class RankingRound:
    scc: tuple[str, ...]
    functions: dict[str, LinTerm]
    strict: list[int]          # indices into Its.transitions
    weak: list[int]
    delta: dict[int, Fraction]


@dataclass
class Certificate:
    rounds: list[RankingRound] = field(default_factory=list)


@dataclass
class TerminationResult:
    verdict: str
    certificate: Certificate | None = None
    reason: str = ""
    stuck: list[int] = field(default_factory=list)


def _rows(kb: KnowledgeBase):
    """Guard as ``(coeffs, is_eq, const)`` with ``coeffs·z + const <= 0`` (or ``= 0``)."""
    return [(dict(c.term.coeffs), c.rel == "=", c.term.const) for c in kb]


def _farkas(lp: LinearProgram, rows, target: dict, rhs_terms: dict):
    """Constrain ``guard ⇒ target·z <= rhs`` where rhs = Σ rhs_terms[col]*col + const.

    ``target`` maps SymVar -> {lp column: coeff}; ``rhs_terms`` maps lp column
    (or None for a constant) -> coeff.  Adds multipliers λ (free on equalities).
    """
    lams = [lp.var("lam", lb=None if is_eq else 0) for _, is_eq, _ in rows]
    zs = set(target)
    for co, _, _ in rows:
        zs |= set(co)
    for z in sorted(zs, key=lambda v: v.id):
        expr: dict[int, Fraction] = {}
        for lam, (co, _, _) in zip(lams, rows):
            if z in co:
                expr[lam] = expr.get(lam, 0) + co[z]
        for col, a in target.get(z, {}).items():
            expr[col] = expr.get(col, 0) - a
        lp.add(expr, "=", 0)
    # λ·b <= rhs  where the guard reads coeffs·z <= -const
    expr = {}
    const = Fraction(0)
    for lam, (_, _, c) in zip(lams, rows):
        expr[lam] = expr.get(lam, 0) - c
    for col, a in rhs_terms.items():
        if col is None:
            const += a
        else:
            expr[col] = expr.get(col, 0) - a
    lp.add(expr, "<=", const)


def _interesting(its: Its, scc: list[str], trans: list[int]) -> dict[str, set[SymVar]]:
    """Per location: variables related by a guard inequality or changed by a self-loop."""
    out: dict[str, set[SymVar]] = {loc: set() for loc in scc}
    for ti in trans:
        t = its.transitions[ti]
        back = {yp: y for y, yp in t.primed.items()}
        for c in t.guard:
            if c.rel == "=" or len(c.vars()) < 2:
                continue
            for v in c.vars():
                if v in back:
                    out[t.dst].add(back[v])
                elif v in its.locations[t.src]:
                    out[t.src].add(v)
        if t.src == t.dst:
            for y, yp in t.primed.items():
                if t.update.get(yp) != LinTerm.of(y):
                    out[t.src].add(y)
    return out


def _solve_scc(its: Its, scc: list[str], trans: list[int],
               only: dict[str, set[SymVar]] | None = None,
               focus: int | None = None) -> RankingRound | None:
    """One LP over the SCC; with ``only``, functions range over those variables and
    guards are projected onto them (a weaker guard, so any solution stays valid).

    With ``focus`` only that transition has to decrease, and only there must the
    function be bounded; the others merely may not increase it.
    """
    lp = LinearProgram()
    coef: dict[str, dict[SymVar, int]] = {}
    const: dict[str, int] = {}
    for loc in scc:
        vs = [v for v in its.locations[loc] if only is None or v in only[loc]]
        coef[loc] = {v: lp.var(f"c[{loc},{v}]", lb=None) for v in vs}
        const[loc] = lp.var(f"c0[{loc}]", lb=None)
    deltas = {}
    for ti in trans:
        t = its.transitions[ti]
        guard = t.guard
        if only is not None:
            guard = project(guard, set(coef[t.src]) | {t.primed[y] for y in coef[t.dst]})
        rows = _rows(guard)
        d = lp.var(f"delta[{ti}]", lb=0, ub=1 if focus in (None, ti) else 0)
        deltas[ti] = d
        # decrease: -f_src(x) + f_dst(x') <= -delta  i.e. target·z <= c0_src - c0_dst - delta
        target: dict[SymVar, dict[int, int]] = {}
        for v, col in coef[t.src].items():
            target.setdefault(v, {})[col] = -1
        for y, col in coef[t.dst].items():
            target.setdefault(t.primed[y], {})[col] = 1
        rhs = {const[t.src]: 1, d: -1}
        rhs[const[t.dst]] = rhs.get(const[t.dst], 0) - 1
        _farkas(lp, rows, target, rhs)
        if focus in (None, ti):
            # bounded: -f_src(x) <= 0  i.e. target·z <= c0_src
            target = {v: {col: -1} for v, col in coef[t.src].items()}
            _farkas(lp, rows, target, {const[t.src]: 1})
    res = lp.maximize({d: 1 for d in deltas.values()})
    if res.status != "optimal" or res.value == 0:
        return None
    functions = {}
    for loc in scc:
        functions[loc] = LinTerm([(v, res.x[col]) for v, col in coef[loc].items()],
                                 res.x[const[loc]])
    delta = {ti: res.x[d] for ti, d in deltas.items()}
    strict = [ti for ti in trans if delta[ti] > 0]
    weak = [ti for ti in trans if delta[ti] == 0]
    return RankingRound(tuple(scc), functions, strict, weak, delta)


def _graph(its: Its, alive: set[int]) -> nx.MultiDiGraph:
    g = nx.MultiDiGraph()
    g.add_nodes_from(its.locations)
    for ti in alive:
        t = its.transitions[ti]
        g.add_edge(t.src, t.dst, key=ti)
    return g


def prove_termination(its: Its, max_rounds: int = 50) -> TerminationResult:
    alive = {i for i, t in enumerate(its.transitions) if is_satisfiable(t.guard)}
    cert = Certificate()
    for _ in range(max_rounds):
        g = _graph(its, alive)
        work = []
        for comp in nx.strongly_connected_components(g):
            inside = sorted(ti for ti in alive if its.transitions[ti].src in comp
                            and its.transitions[ti].dst in comp)
            if inside:
                work.append((sorted(comp), inside))
        if not work:
            return TerminationResult(TERMINATING, cert)
        for comp, inside in sorted(work):
            rnd = _solve_scc(its, comp, inside, _interesting(its, comp, inside))
            if rnd is None or rnd.weak:
                full = _solve_scc(its, comp, inside)
                if full is not None and (rnd is None or len(full.strict) > len(rnd.strict)):
                    rnd = full
            if rnd is None:
                # lexicographic step: rank one transition, the rest only must not increase
                rnd = next((r for ti in inside
                            if (r := _solve_scc(its, comp, inside, focus=ti)) is not None), None)
            if rnd is None:
                return TerminationResult(UNKNOWN, cert, f"no ranking function for SCC {comp}",
                                         inside)
            cert.rounds.append(rnd)
            alive -= set(rnd.strict)
    return TerminationResult(UNKNOWN, cert, "round limit reached", sorted(alive))


def _f(fn: LinTerm, mapping: dict[SymVar, SymVar] | None = None) -> LinTerm:
    return fn if mapping is None else fn.substitute(mapping)


def check_certificate(its: Its, cert: Certificate) -> bool:
    """Re-check every round with the constraint engine alone."""
    alive = {i for i, t in enumerate(its.transitions) if is_satisfiable(t.guard)}
    for rnd in cert.rounds:
        for ti in rnd.strict + rnd.weak:
            t = its.transitions[ti]
            f_src = rnd.functions[t.src]
            f_dst = _f(rnd.functions[t.dst], t.primed)
            if ti in rnd.strict and not entails(t.guard, ge(f_src, 0)):
                return False
            if not entails(t.guard, ge(f_src - f_dst, rnd.delta[ti])):
                return False
        if any(rnd.delta[ti] <= 0 for ti in rnd.strict):
            return False
        alive -= set(rnd.strict)
    g = _graph(its, alive)
    for comp in nx.strongly_connected_components(g):
        if any(its.transitions[ti].src in comp and its.transitions[ti].dst in comp for ti in alive):
            return False
    return True


def explain(its: Its, result: TerminationResult) -> str:
    lines = [f"verdict: {result.verdict}"]
    if result.reason:
        lines.append(f"reason: {result.reason}")
    if result.certificate is not None:
        for k, rnd in enumerate(result.certificate.rounds):
            lines.append(f"round {k}: SCC {{{', '.join(rnd.scc)}}}")
            for loc, fn in rnd.functions.items():
                lines.append(f"  f_{loc} = {fn}")
            for ti in rnd.strict:
                lines.append(f"  strict: {its.transitions[ti].label()} (decrease >= {rnd.delta[ti]})")
            for ti in rnd.weak:
                lines.append(f"  weak:   {its.transitions[ti].label()}")
    for ti in result.stuck:
        lines.append(f"  unranked: {its.transitions[ti].label()}")
    return "\n".join(lines)
