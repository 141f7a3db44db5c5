"""Dense two-phase tableau simplex.

Every regret computation and the mechanism optimizer run on this solver, so
it is written for determinism first: Bland's rule picks the lowest-index
improving column and breaks ratio ties by the lowest basic-variable index.
Identical inputs therefore produce identical pivot sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

LE, EQ, GE = "<=", "==", ">="
_RELATIONS = (LE, EQ, GE)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_PIVOT_EPS = 1e-9
_COST_EPS = 1e-9


class LpError(RuntimeError):
    """Raised for malformed programs or solver breakdown."""


class PivotLimitError(LpError):
    """The pivot budget ran out before the simplex terminated."""


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """``min`` or ``max`` of ``objective @ x`` over rows ``A x (rel) rhs`` and box bounds."""

    objective: np.ndarray
    A: np.ndarray
    relations: tuple[str, ...]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    maximize: bool = False

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).ravel()
        n = c.size
        A = np.asarray(self.A, dtype=float).reshape(-1, n) if n else np.zeros((len(self.relations), 0))
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "rhs", np.asarray(self.rhs, dtype=float).ravel())
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float).ravel())
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float).ravel())
        object.__setattr__(self, "relations", tuple(self.relations))
        problems = self.violations()
        if problems:
            raise LpError("; ".join(problems))

    @classmethod
    def build(
        cls,
        objective: Sequence[float],
        rows: Iterable[tuple[Sequence[float], str, float]] = (),
        lower: Sequence[float] | float | None = None,
        upper: Sequence[float] | float | None = None,
        maximize: bool = False,
    ) -> "LinearProgram":
        """Assemble a program from ``(coefficients, relation, rhs)`` triples.

        Bounds default to ``0 <= x < inf``; pass ``-np.inf`` for free variables.
        """
        c = np.asarray(objective, dtype=float).ravel()
        n = c.size
        rows = list(rows)
        short = [k for k, r in enumerate(rows) if np.asarray(r[0]).size != n]
        if short:
            raise LpError(f"row(s) {short} do not have {n} coefficients")
        A = np.array([np.asarray(r[0], dtype=float).ravel() for r in rows]).reshape(len(rows), n)
        rel = tuple(r[1] for r in rows)
        b = np.array([float(r[2]) for r in rows])
        lo = np.zeros(n) if lower is None else np.broadcast_to(np.asarray(lower, dtype=float), (n,)).copy()
        hi = np.full(n, np.inf) if upper is None else np.broadcast_to(np.asarray(upper, dtype=float), (n,)).copy()
        return cls(c, A, rel, b, lo, hi, maximize)

    @property
    def n_vars(self) -> int:
        return self.objective.size

    @property
    def n_rows(self) -> int:
        return self.rhs.size

    def violations(self) -> list[str]:
        out = []
        n = self.objective.size
        if self.A.shape != (len(self.relations), n):
            out.append(f"constraint matrix shape {self.A.shape} does not match {len(self.relations)} rows x {n} vars")
        if self.rhs.size != len(self.relations):
            out.append("rhs length does not match number of rows")
        if self.lower.size != n or self.upper.size != n:
            out.append("bounds length does not match number of variables")
        bad = [r for r in self.relations if r not in _RELATIONS]
        if bad:
            out.append(f"unknown relation(s) {sorted(set(bad))}")
        if not (np.all(np.isfinite(self.objective)) and np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.rhs))):
            out.append("non-finite coefficient")
        if self.lower.size == self.upper.size and np.any(self.lower > self.upper):
            out.append("lower bound exceeds upper bound")
        if np.any(self.lower == np.inf) or np.any(self.upper == -np.inf):
            out.append("bound pinned at infinity")
        return out

    def max_violation(self, x: np.ndarray) -> float:
        """Largest constraint or bound violation of ``x`` (0 when feasible)."""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        if self.n_rows:
            ax = self.A @ x
            for rel, lhs, b in zip(self.relations, ax, self.rhs):
                if rel == LE:
                    worst = max(worst, lhs - b)
                elif rel == GE:
                    worst = max(worst, b - lhs)
                else:
                    worst = max(worst, abs(lhs - b))
        if x.size:
            worst = max(worst, float(np.max(self.lower - x, initial=0.0)), float(np.max(x - self.upper, initial=0.0)))
        return float(worst)


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: str
    x: np.ndarray | None = None
    objective_value: float | None = None
    iterations: int = 0
    phase1_value: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


@dataclass
class _StandardForm:
    # column map back to the original variables: x = offset + S @ y
    S: np.ndarray
    offset: np.ndarray
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    c0: float
    n_struct: int
    slack_basis: dict[int, int] = field(default_factory=dict)
    artificial_rows: list[int] = field(default_factory=list)


def _standardize(lp: LinearProgram) -> _StandardForm:
    n = lp.n_vars
    sign = -1.0 if lp.maximize else 1.0
    c = sign * lp.objective
    cols: list[np.ndarray] = []
    maps: list[tuple[int, float]] = []
    offset = np.zeros(n)
    extra_rows: list[tuple[int, float]] = []  # (struct col, upper) rows y <= u - l
    for j in range(n):
        lo, hi = lp.lower[j], lp.upper[j]
        if np.isfinite(lo):
            offset[j] = lo
            maps.append((j, 1.0))
            if np.isfinite(hi):
                extra_rows.append((len(maps) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            maps.append((j, -1.0))
        else:
            maps.append((j, 1.0))
            maps.append((j, -1.0))
    ns = len(maps)
    S = np.zeros((n, ns))
    for k, (j, s) in enumerate(maps):
        S[j, k] = s
    A0 = lp.A @ S if lp.n_rows else np.zeros((0, ns))
    b0 = lp.rhs - (lp.A @ offset if lp.n_rows else 0.0)
    rel = list(lp.relations)
    if extra_rows:
        U = np.zeros((len(extra_rows), ns))
        for r, (k, cap) in enumerate(extra_rows):
            U[r, k] = 1.0
        A0 = np.vstack([A0, U])
        b0 = np.concatenate([b0, [cap for _, cap in extra_rows]])
        rel += [LE] * len(extra_rows)
    m = len(rel)
    flip = b0 < 0
    A0[flip] *= -1
    b0 = np.where(flip, -b0, b0)
    rel = [({LE: GE, GE: LE, EQ: EQ}[r] if f else r) for r, f in zip(rel, flip)]
    n_slack = sum(r != EQ for r in rel)
    A = np.zeros((m, ns + n_slack))
    A[:, :ns] = A0
    slack_basis: dict[int, int] = {}
    art_rows: list[int] = []
    col = ns
    for r, kind in enumerate(rel):
        if kind == LE:
            A[r, col] = 1.0
            slack_basis[r] = col
            col += 1
        elif kind == GE:
            A[r, col] = -1.0
            col += 1
            art_rows.append(r)
        else:
            art_rows.append(r)
    cs = np.zeros(A.shape[1])
    cs[:ns] = c @ S
    return _StandardForm(S, offset, A, b0, cs, float(c @ offset), ns, slack_basis, art_rows)


class _Tableau:
    """Rows 0..m-1 hold constraints, last row holds reduced costs, last column the rhs."""

    def __init__(self, A, b, basis, max_pivots):
        m, n = A.shape
        self.T = np.zeros((m + 1, n + 1))
        self.T[:m, :n] = A
        self.T[:m, n] = b
        self.basis = list(basis)
        self.max_pivots = max_pivots
        self.pivots = 0

    @property
    def m(self):
        return self.T.shape[0] - 1

    def set_costs(self, c):
        n = self.T.shape[1] - 1
        row = np.zeros(n + 1)
        row[: c.size] = c
        cb = np.array([c[j] if j < c.size else 0.0 for j in self.basis])
        if self.m:
            row -= cb @ self.T[: self.m]
        self.T[-1] = row

    def pivot(self, r, e):
        self.pivots += 1
        if self.pivots > self.max_pivots:
            raise PivotLimitError(f"pivot limit {self.max_pivots} exceeded")
        T = self.T
        T[r] /= T[r, e]
        col = T[:, e].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        T[:, e] = 0.0
        T[r, e] = 1.0
        rhs = T[: self.m, -1]
        rhs[(rhs < 0) & (rhs > -1e-12)] = 0.0
        self.basis[r] = e

    def run(self, allowed: int) -> str:
        """Bland's rule over columns ``< allowed``; returns OPTIMAL or UNBOUNDED."""
        T = self.T
        m = self.m
        while True:
            costs = T[-1, :allowed]
            neg = np.flatnonzero(costs < -_COST_EPS)
            if neg.size == 0:
                return OPTIMAL
            e = int(neg[0])
            colv = T[:m, e]
            cand = np.flatnonzero(colv > _PIVOT_EPS)
            if cand.size == 0:
                return UNBOUNDED
            ratios = T[cand, -1] / colv[cand]
            best = ratios.min()
            ties = cand[ratios <= best + 1e-12 * (1.0 + abs(best))]
            r = int(min(ties, key=lambda k: self.basis[k]))
            self.pivot(r, e)


def solve_lp(lp: LinearProgram, feasibility_tolerance: float = 1e-9, max_pivots: int = 100_000) -> LpSolution:
    """Solve ``lp`` with the two-phase Bland simplex.

    Raises :class:`PivotLimitError` when ``max_pivots`` is exhausted; the three
    terminal statuses are returned in the :class:`LpSolution`.
    """
    sf = _standardize(lp)
    m, n_std = sf.A.shape
    n_art = len(sf.artificial_rows)
    A = np.zeros((m, n_std + n_art))
    A[:, :n_std] = sf.A
    basis = [-1] * m
    for r, col in sf.slack_basis.items():
        basis[r] = col
    for k, r in enumerate(sf.artificial_rows):
        A[r, n_std + k] = 1.0
        basis[r] = n_std + k
    tab = _Tableau(A, sf.b, basis, max_pivots)
    scale = max(1.0, float(np.max(np.abs(sf.b), initial=0.0)))

    phase1 = 0.0
    if n_art:
        c1 = np.zeros(n_std + n_art)
        c1[n_std:] = 1.0
        tab.set_costs(c1)
        tab.run(n_std + n_art)
        phase1 = float(-tab.T[-1, -1])
        if phase1 > feasibility_tolerance * scale:
            return LpSolution(INFEASIBLE, iterations=tab.pivots, phase1_value=phase1)
        # drive zero-level artificials out of the basis; drop redundant rows
        keep = []
        for r in range(tab.m):
            if tab.basis[r] >= n_std:
                row = tab.T[r, :n_std]
                nz = np.flatnonzero(np.abs(row) > _PIVOT_EPS)
                if nz.size:
                    tab.pivot(r, int(nz[0]))
                    keep.append(r)
            else:
                keep.append(r)
        if len(keep) < tab.m:
            tab.T = np.vstack([tab.T[keep], tab.T[-1:]])
            tab.basis = [tab.basis[r] for r in keep]
            sf_rows = keep
        else:
            sf_rows = list(range(m))
        tab.T = np.delete(tab.T, np.s_[n_std : n_std + n_art], axis=1)
    else:
        sf_rows = list(range(m))

    tab.set_costs(sf.c)
    status = tab.run(n_std)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, iterations=tab.pivots, phase1_value=phase1)

    y = np.zeros(n_std)
    y_b = tab.T[: tab.m, -1].copy()
    if tab.m:
        # refine basic values against the untouched standard-form data
        B = sf.A[np.ix_(sf_rows, tab.basis)]
        try:
            refined = np.linalg.solve(B, sf.b[sf_rows])
            if np.all(np.isfinite(refined)) and np.max(np.abs(refined - y_b), initial=0.0) < 1e-6 * scale:
                y_b = refined
        except np.linalg.LinAlgError:
            pass
    y[tab.basis] = y_b
    y = np.maximum(y, 0.0)
    x = sf.offset + sf.S @ y[: sf.n_struct]
    x = np.clip(x, lp.lower, lp.upper)
    value = float(lp.objective @ x)
    return LpSolution(OPTIMAL, x=x, objective_value=value, iterations=tab.pivots, phase1_value=phase1)


def format_lp(lp: LinearProgram, names: Sequence[str] | None = None, precision: int = 6) -> str:
    """Plain-text tabular dump of an instance, one row per constraint."""
    names = list(names) if names is not None else [f"x{j}" for j in range(lp.n_vars)]
    fmt = f"{{:.{precision}g}}"
    lines = [("maximize" if lp.maximize else "minimize") + "  " + "  ".join(
        f"{fmt.format(v)}*{nm}" for v, nm in zip(lp.objective, names) if v != 0.0)]
    lines.append("subject to")
    for k in range(lp.n_rows):
        terms = "  ".join(f"{fmt.format(v)}*{nm}" for v, nm in zip(lp.A[k], names) if v != 0.0)
        lines.append(f"  r{k}:\t{terms or '0'}\t{lp.relations[k]}\t{fmt.format(lp.rhs[k])}")
    lines.append("bounds")
    for nm, lo, hi in zip(names, lp.lower, lp.upper):
        if lo == 0.0 and hi == np.inf:
            continue
        lines.append(f"  {fmt.format(lo)} <= {nm} <= {fmt.format(hi)}")
    return "\n".join(lines)
