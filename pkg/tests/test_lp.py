import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import vertex_lp
from regretmd.lp import (
    EQ,
    GE,
    INFEASIBLE,
    LE,
    OPTIMAL,
    UNBOUNDED,
    LinearProgram,
    LpError,
    PivotLimitError,
    format_lp,
    solve_lp,
)


def test_single_lower_bound_row():
    sol = solve_lp(LinearProgram.build([1.0], [([1.0], GE, 3.0)]))
    assert sol.status == OPTIMAL
    assert sol.x[0] == pytest.approx(3.0)
    assert sol.objective_value == pytest.approx(3.0)


def test_maximize_on_simplex_face():
    sol = solve_lp(LinearProgram.build([1.0, 1.0], [([1.0, 1.0], LE, 1.0)], maximize=True))
    assert sol.status == OPTIMAL
    assert sol.objective_value == pytest.approx(1.0)


def test_infeasible_and_unbounded():
    lp = LinearProgram.build([1.0], [([1.0], LE, 1.0), ([1.0], GE, 2.0)])
    sol = solve_lp(lp)
    assert sol.status == INFEASIBLE
    assert sol.phase1_value > 1e-9
    assert solve_lp(LinearProgram.build([1.0], maximize=True)).status == UNBOUNDED


def test_free_and_negative_bounds():
    # min x + y, x free, y in [-2, 5], x - y >= -1
    lp = LinearProgram.build([1.0, 1.0], [([1.0, -1.0], GE, -1.0), ([1.0, 0.0], GE, -10.0)],
                             lower=[-np.inf, -2.0], upper=[np.inf, 5.0])
    sol = solve_lp(lp)
    assert sol.status == OPTIMAL
    # y at its lower bound -2, then x = y - 1
    assert sol.objective_value == pytest.approx(-5.0)
    assert sol.x == pytest.approx([-3.0, -2.0])


def test_upper_only_variable():
    lp = LinearProgram.build([-1.0], lower=[-np.inf], upper=[4.0])
    sol = solve_lp(lp)
    assert sol.x[0] == pytest.approx(4.0)


def test_redundant_equalities():
    rows = [([1.0, 1.0], EQ, 1.0), ([2.0, 2.0], EQ, 2.0)]
    sol = solve_lp(LinearProgram.build([1.0, 2.0], rows))
    assert sol.status == OPTIMAL
    assert sol.x == pytest.approx([1.0, 0.0])


def test_malformed_program_rejected():
    with pytest.raises(LpError):
        LinearProgram.build([1.0], [([1.0, 2.0], LE, 1.0)])
    with pytest.raises(LpError):
        LinearProgram.build([np.nan], [])
    with pytest.raises(LpError):
        LinearProgram.build([1.0], [([1.0], "<", 1.0)])
    with pytest.raises(LpError):
        LinearProgram.build([1.0], lower=[2.0], upper=[1.0])


def test_pivot_limit_is_distinct():
    rng = np.random.default_rng(0)
    rows = [(rng.random(6), LE, 1.0) for _ in range(6)]
    with pytest.raises(PivotLimitError):
        solve_lp(LinearProgram.build(np.ones(6), rows, maximize=True), max_pivots=1)


def test_degenerate_cycling_example():
    # Beale's example cycles under the textbook largest-coefficient rule
    c = [-0.75, 150.0, -0.02, 6.0]
    rows = [
        ([0.25, -60.0, -0.04, 9.0], LE, 0.0),
        ([0.5, -90.0, -0.02, 3.0], LE, 0.0),
        ([0.0, 0.0, 1.0, 0.0], LE, 1.0),
    ]
    sol = solve_lp(LinearProgram.build(c, rows))
    assert sol.status == OPTIMAL
    assert sol.objective_value == pytest.approx(-0.05)


def test_format_lp_mentions_names():
    lp = LinearProgram.build([1.0, 0.0], [([1.0, 1.0], GE, 1.0)], upper=[np.inf, 2.0])
    text = format_lp(lp, ["alpha", "beta"])
    assert "minimize" in text and "1*alpha" in text and "beta" in text


def _random_tiny(seed):
    rng = np.random.default_rng(seed)
    n = 3
    rels = [LE, GE, EQ]
    rows = []
    for _ in range(4):
        rel = rels[rng.choice(3, p=[0.6, 0.25, 0.15])]
        rows.append((rng.integers(-4, 5, n).astype(float), rel, float(rng.integers(-3, 8))))
    c = rng.integers(-5, 6, n).astype(float)
    upper = rng.integers(1, 6, n).astype(float)
    return c, rows, upper, bool(rng.integers(2))


@settings(max_examples=200)
@given(st.integers(0, 10**9))
def test_matches_vertex_enumeration(seed):
    c, rows, upper, maximize = _random_tiny(seed)
    lp = LinearProgram.build(c, rows, upper=upper, maximize=maximize)
    sol = solve_lp(lp)
    ref = vertex_lp(c, rows, upper=upper, maximize=maximize)
    if ref is None:
        assert sol.status == INFEASIBLE
    else:
        assert sol.status == OPTIMAL
        assert sol.objective_value == pytest.approx(ref[0], abs=1e-6)
        assert lp.max_violation(sol.x) <= 1e-9


@settings(max_examples=50)
@given(st.integers(0, 10**9))
def test_deterministic_and_weak_duality(seed):
    rng = np.random.default_rng(seed)
    m, n = 5, 4
    A = rng.random((m, n)) + 0.1
    b = rng.random(m) + 0.5
    c = rng.random(n)
    lp = LinearProgram.build(c, [(A[k], LE, b[k]) for k in range(m)], maximize=True)
    first, second = solve_lp(lp), solve_lp(lp)
    assert np.array_equal(first.x, second.x)
    # any y >= 0 with A^T y >= c bounds the primal maximum by b @ y
    y = np.full(m, max(c / A.min(axis=0)))
    assert np.all(A.T @ y >= c - 1e-12)
    assert first.objective_value <= b @ y + 1e-9
