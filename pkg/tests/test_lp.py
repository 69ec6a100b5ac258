import itertools
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from listterm.lp import LinearProgram


def _solve(rows, rhs):
    """Exact Gaussian elimination; None when singular."""
    n = len(rows)
    a = [list(map(Fraction, r)) + [Fraction(b)] for r, b in zip(rows, rhs)]
    for col in range(n):
        piv = next((i for i in range(col, n) if a[i][col] != 0), None)
        if piv is None:
            return None
        a[col], a[piv] = a[piv], a[col]
        for i in range(n):
            if i != col and a[i][col] != 0:
                f = a[i][col] / a[col][col]
                a[i] = [u - f * v for u, v in zip(a[i], a[col])]
    return [a[i][n] / a[i][i] for i in range(n)]


def vertex_optimum(cons, obj, n):
    """Max of obj over {x : a·x <= b} by enumerating vertices (bounded problems only)."""
    best = None
    for sub in itertools.combinations(cons, n):
        x = _solve([a for a, _ in sub], [b for _, b in sub])
        if x is None:
            continue
        if all(sum(ai * xi for ai, xi in zip(a, x)) <= b for a, b in cons):
            v = sum(c * xi for c, xi in zip(obj, x))
            best = v if best is None else max(best, v)
    return best


row = st.tuples(st.lists(st.integers(-3, 3), min_size=3, max_size=3), st.integers(-4, 6))


@settings(max_examples=250, deadline=None)
@given(st.lists(row, max_size=5), st.lists(st.integers(-3, 3), min_size=3, max_size=3),
       st.lists(st.booleans(), min_size=3, max_size=3))
def test_matches_vertex_enumeration(rows, obj, free):
    n = 3
    cons = [(tuple(a), b) for a, b in rows]
    # a box keeps everything bounded; nonnegative variables get lb 0 from the box
    for j in range(n):
        e = [0] * n
        e[j] = 1
        cons.append((tuple(e), 5))
        e2 = [0] * n
        e2[j] = -1
        cons.append((tuple(e2), 5 if free[j] else 0))
    lp = LinearProgram()
    xs = [lp.var(f"x{j}", lb=None if free[j] else 0, ub=5) for j in range(n)]
    for a, b in rows:
        lp.add(dict(zip(xs, a)), "<=", b)
    for j in range(n):
        if free[j]:
            lp.add({xs[j]: 1}, ">=", -5)
    res = lp.maximize(dict(zip(xs, obj)))
    want = vertex_optimum(cons, obj, n)
    if want is None:
        assert res.status == "infeasible"
    else:
        assert res.status == "optimal" and res.value == want
        for a, b in rows:
            assert sum(ai * res.x[x] for ai, x in zip(a, xs)) <= b


def test_equality_rows():
    lp = LinearProgram()
    a, b = lp.var("a"), lp.var("b")
    lp.add({a: 1, b: 1}, "=", 4)
    lp.add({a: 1, b: -1}, "=", 1)
    res = lp.maximize({a: 1})
    assert res.status == "optimal" and res.x[a] == Fraction(5, 2) and res.x[b] == Fraction(3, 2)


def test_unbounded_and_infeasible():
    lp = LinearProgram()
    a = lp.var("a", lb=None)
    lp.add({a: 1}, ">=", 0)
    assert lp.maximize({a: 1}).status == "unbounded"
    lp.add({a: 1}, "<=", -1)
    assert lp.maximize({a: 1}).status == "infeasible"


def test_degenerate_cycling_example():
    # Beale's example cycles under the textbook rule; Bland's rule must terminate
    lp = LinearProgram()
    x = [lp.var() for _ in range(4)]
    lp.add({x[0]: Fraction(1, 4), x[1]: -60, x[2]: Fraction(-1, 25), x[3]: 9}, "<=", 0)
    lp.add({x[0]: Fraction(1, 2), x[1]: -90, x[2]: Fraction(-1, 50), x[3]: 3}, "<=", 0)
    lp.add({x[2]: 1}, "<=", 1)
    res = lp.maximize({x[0]: Fraction(3, 4), x[1]: -150, x[2]: Fraction(1, 50), x[3]: -6})
    assert res.status == "optimal" and res.value == Fraction(1, 20)


def test_only_supported_bounds():
    import pytest
    with pytest.raises(ValueError):
        LinearProgram().var("a", lb=3)
