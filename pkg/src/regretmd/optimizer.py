"""Minimax-regret mechanism synthesis by constraint generation.

The master LP minimizes the designer's max regret ``δ`` over outcome
probabilities (and transfers). Two families of cuts are generated lazily:

* regret cuts ``value(q̂, θ̂) - value(p, θ̂) <= δ`` where ``q̂`` is the
  adversary's best mechanism at ``θ̂``. Exactly one type profile is active in
  the adversary's mixed-integer program, so it is solved exactly by
  enumerating ``θ ∈ T`` (a closed form per ``θ`` for the omniscient adversary,
  one IC-constrained LP loop per ``θ`` for the constrained one);
* IC cuts ``gain(i, θ_i, θ_{-i}, s'_i) <= ρ̄(i, θ_i)``, where the nonlinear
  right-hand side (the best randomized report's max regret) is frozen at the
  incumbent and refreshed every iteration.

A run is *certified* only if the final mechanism independently passes IC,
EPR, simplex/payment checks, and the post-hoc adversary pass.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from .lp import EQ, GE, LE, LinearProgram, LpError, solve_lp
from .mechanism import (
    Mechanism,
    VerificationReport,
    deviation_profiles,
    designer_values_truthful,
    ic_gap,
    omniscient_values,
    verify_epr,
    verify_ic,
    verify_simplex,
)
from .model import MechanismProblem, PaymentsConfig, profile_key, validate

log = logging.getLogger(__name__)

CERTIFIED = "certified"
ITER_LIMIT = "iter_limit"
OSCILLATION = "oscillation"


class OptimizerError(RuntimeError):
    pass


class MasterInfeasibleError(OptimizerError):
    def __init__(self, families: list[str]):
        super().__init__(f"master LP infeasible; conflicting constraint families: {', '.join(families) or 'unknown'}")
        self.families = families


@dataclass(frozen=True)
class SolveOptions:
    tolerance: float = 1e-6
    max_outer_iters: int = 100
    adversary: str | None = None
    payments: PaymentsConfig | None = None
    objective: str | None = None
    ic_cuts: str = "max"  # "max": worst pair per (i, θ_i); "all": every pair of a violated (i, θ_i)
    adversary_max_iters: int = 100
    polish: bool = True  # second-stage LP: keep the optimum, minimize positive deviation gains
    lp_options: Mapping = field(default_factory=dict)
    trace: Callable[[str], None] | None = None

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.ic_cuts not in ("max", "all"):
            raise ValueError("ic_cuts must be 'max' or 'all'")


def effective_problem(problem: MechanismProblem, opts: SolveOptions) -> MechanismProblem:
    changes = {}
    if opts.adversary is not None:
        changes["adversary"] = opts.adversary
    if opts.payments is not None:
        changes["payments"] = opts.payments
    if opts.objective is not None:
        changes["objective"] = opts.objective
    return replace(problem, **changes) if changes else problem


# ---------------------------------------------------------------------------
# variable layout


class Layout:
    """Column layout ``[p(s, o) ..., t(i, s) ..., δ]`` of master and adversary LPs."""

    def __init__(self, problem: MechanismProblem, with_delta: bool = True):
        self.problem = problem
        self.n_s = problem.n_profiles
        self.n_o = problem.n_outcomes
        self.n_p = self.n_s * self.n_o
        self.has_t = problem.payments.active
        self.n_t = problem.n_agents * self.n_s if self.has_t else 0
        self.delta = self.n_p + self.n_t if with_delta else None
        self.n = self.n_p + self.n_t + (1 if with_delta else 0)

    def p(self, k: int) -> slice:
        return slice(k * self.n_o, (k + 1) * self.n_o)

    def t(self, i: int, k: int) -> int:
        return self.n_p + i * self.n_s + k

    def agent_row(self, i: int, k: int, ti: int) -> np.ndarray:
        row = np.zeros(self.n)
        row[self.p(k)] = self.problem.utility[i][:, ti]
        if self.has_t:
            row[self.t(i, k)] = 1.0
        return row

    def designer_row(self, k: int, theta_row: int) -> np.ndarray:
        row = np.zeros(self.n)
        if self.problem.objective == "revenue":
            for i in range(self.problem.n_agents):
                row[self.t(i, k)] = -1.0
        else:
            row[self.p(k)] = self.problem.social_choice[theta_row]
        return row

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.zeros(self.n)
        hi = np.full(self.n, np.inf)
        if self.has_t:
            b = self.problem.payment_bound
            lo[self.n_p : self.n_p + self.n_t] = -b
            hi[self.n_p : self.n_p + self.n_t] = b
        return lo, hi

    def mechanism(self, x: np.ndarray) -> Mechanism:
        rule = np.clip(x[: self.n_p].reshape(self.n_s, self.n_o), 0.0, None)
        rule = rule / rule.sum(axis=1, keepdims=True)
        t = x[self.n_p : self.n_p + self.n_t].reshape(self.problem.n_agents, self.n_s) if self.has_t else None
        return Mechanism(rule, t)

    def names(self) -> list[str]:
        prob = self.problem
        out = [f"p[{profile_key(prob.profile_names(k))},{o}]" for k in range(self.n_s) for o in prob.outcomes]
        if self.has_t:
            out += [f"t[{a},{profile_key(prob.profile_names(k))}]" for a in prob.agents for k in range(self.n_s)]
        if self.delta is not None:
            out.append("delta")
        return out

    def pack(self, mech: Mechanism, delta: float = 0.0) -> np.ndarray:
        x = np.zeros(self.n)
        x[: self.n_p] = mech.outcome_rule.ravel()
        if self.has_t:
            x[self.n_p : self.n_p + self.n_t] = mech.transfers.ravel()
        if self.delta is not None:
            x[self.delta] = delta
        return x

    def base_rows(self) -> dict[str, list[tuple[np.ndarray, str, float]]]:
        """Simplex, payment-regime and EPR rows, grouped by family."""
        prob = self.problem
        simplex, payments, epr = [], [], []
        for k in range(self.n_s):
            row = np.zeros(self.n)
            row[self.p(k)] = 1.0
            simplex.append((row, EQ, 1.0))
        if prob.payments.mode in ("balanced", "no-deficit"):
            rel = EQ if prob.payments.mode == "balanced" else LE
            for k in range(self.n_s):
                row = np.zeros(self.n)
                for i in range(prob.n_agents):
                    row[self.t(i, k)] = 1.0
                payments.append((row, rel, 0.0))
        for r, k in enumerate(prob.truthful_profile):
            for i in range(prob.n_agents):
                epr.append((self.agent_row(i, int(k), int(prob.prior_idx[r, i])), GE, 0.0))
        return {"simplex": simplex, "payments": payments, "EPR": epr}


# ---------------------------------------------------------------------------
# IC linearization (shared by the master and the constrained adversary)


@dataclass(frozen=True)
class IcCut:
    agent: int
    own_type: int
    prior_row: int
    deviation: int


@dataclass
class IcCuts:
    cuts: list[IcCut] = field(default_factory=list)
    rhs: dict[tuple[int, int], float] = field(default_factory=dict)
    _keys: set = field(default_factory=set)

    def add(self, cut: IcCut) -> bool:
        if cut in self._keys:
            return False
        self._keys.add(cut)
        self.cuts.append(cut)
        return True

    def rows(self, layout: Layout) -> list[tuple[np.ndarray, str, float]]:
        prob = layout.problem
        out = []
        for c in self.cuts:
            profs = deviation_profiles(prob, c.agent, np.array([c.prior_row]))[0]
            truth = prob.report_of_type[c.agent][c.own_type]
            row = layout.agent_row(c.agent, int(profs[c.deviation]), c.own_type) - layout.agent_row(
                c.agent, int(profs[truth]), c.own_type
            )
            out.append((row, LE, self.rhs[(c.agent, c.own_type)]))
        return out


@dataclass(frozen=True)
class IcSeparation:
    new_cuts: int
    violated: bool
    max_violation: float
    max_rhs_change: float
    loosened: bool


def separate_ic(problem: MechanismProblem, ic: IcCuts, incumbent: Mechanism, opts: SolveOptions) -> IcSeparation:
    """Refresh every frozen ``ρ̄`` at ``incumbent`` and cut off IC violations.

    For each feasible ``(i, θ_i)`` the truthful max regret ``M̂`` is compared
    with the minimax report regret ``m̂``; if ``M̂ > m̂ + tol`` the worst
    deviation (or every deviation, with ``ic_cuts="all"``) becomes a cut with
    right-hand side ``m̂``.
    """
    tol = opts.tolerance
    added, worst, change, loosened = 0, 0.0, 0.0, False
    for i in range(problem.n_agents):
        if problem.n_reports[i] < 2:
            continue
        for ti in range(len(problem.types[i])):
            rows = problem.consistent_prior_rows(i, ti)
            if not len(rows):
                continue
            big, small, r, s = ic_gap(problem, incumbent, i, ti, opts.lp_options)
            key = (i, ti)
            if key in ic.rhs:
                delta_rhs = small - ic.rhs[key]
                change = max(change, abs(delta_rhs))
                loosened |= delta_rhs > tol
                ic.rhs[key] = small
            gap = big - small
            worst = max(worst, gap)
            if gap <= tol:
                continue
            ic.rhs[key] = small
            truth = problem.report_of_type[i][ti]
            if opts.ic_cuts == "max":
                added += ic.add(IcCut(i, ti, int(rows[r]), s))
            else:
                for row in rows:
                    for dev in range(problem.n_reports[i]):
                        if dev != truth:
                            added += ic.add(IcCut(i, ti, int(row), dev))
    return IcSeparation(added, worst > tol, worst, change, loosened)


def _solve_polished(
    objective: np.ndarray, fixed: list, ic_rows: list, lo: np.ndarray, hi: np.ndarray,
    maximize: bool, opts: SolveOptions,
):
    """Solve, then (optionally) re-solve with the optimum pinned, minimizing ``Σ max(0, gain_c)`` over IC cuts.

    Without the second stage the simplex may return a vertex where a cut is
    tight at a positive ``ρ̄``; each refresh then only shrinks that gain a
    little and the loop crawls towards its fixed point.
    """
    lp = LinearProgram.build(objective, fixed + ic_rows, lo, hi, maximize=maximize)
    sol = solve_lp(lp, **opts.lp_options)
    if not sol.optimal or not opts.polish or not ic_rows:
        return sol
    n, m = len(objective), len(ic_rows)
    pad = np.zeros(m)
    rows = [(np.concatenate([r, pad]), rel, b) for r, rel, b in fixed + ic_rows]
    for c, (r, _, _) in enumerate(ic_rows):
        e = np.zeros(m)
        e[c] = -1.0
        rows.append((np.concatenate([r, e]), LE, 0.0))
    v = sol.objective_value
    slack = 1e-9 * max(1.0, abs(v))
    pin = np.concatenate([objective, pad])
    rows.append((pin, GE, v - slack) if maximize else (pin, LE, v + slack))
    c2 = np.concatenate([np.zeros(n), np.ones(m)])
    second = solve_lp(
        LinearProgram.build(c2, rows, np.concatenate([lo, pad]), np.concatenate([hi, np.full(m, np.inf)])),
        **opts.lp_options,
    )
    if not second.optimal:
        log.debug("polish stage ended %s; keeping the first-stage vertex", second.status)
        return sol
    return replace(second, x=second.x[:n], objective_value=float(objective @ second.x[:n]))


# ---------------------------------------------------------------------------
# adversary


@dataclass(frozen=True)
class AdversaryResult:
    mechanism: Mechanism | None
    value: float
    iterations: int
    converged: bool


def constrained_adversary(problem: MechanismProblem, theta, opts: SolveOptions | None = None) -> AdversaryResult:
    """Best IC + EPR mechanism for the objective at the single profile ``θ̂``.

    IC is enforced by the same frozen-RHS linearization loop as the master.
    """
    opts = opts or SolveOptions()
    row_t = theta if isinstance(theta, (int, np.integer)) else problem.theta_index(theta)
    lay = Layout(problem, with_delta=False)
    base = [r for fam in lay.base_rows().values() for r in fam]
    lo, hi = lay.bounds()
    obj = lay.designer_row(int(problem.truthful_profile[row_t]), int(row_t))
    ic = IcCuts()
    q, value = None, -np.inf
    for it in range(1, opts.adversary_max_iters + 1):
        sol = _solve_polished(obj, base, ic.rows(lay), lo, hi, True, opts)
        if not sol.optimal:
            raise OptimizerError(f"constrained adversary LP at profile {problem.prior[row_t]} ended {sol.status}")
        q = lay.mechanism(sol.x)
        value = float(designer_values_truthful(problem, q)[row_t])
        sep = separate_ic(problem, ic, q, opts)
        if not sep.violated and sep.max_rhs_change <= opts.tolerance:
            return AdversaryResult(q, value, it, True)
    log.warning("constrained adversary at %s hit its iteration cap", problem.prior[row_t])
    return AdversaryResult(q, value, opts.adversary_max_iters, False)


def adversary_values(problem: MechanismProblem, opts: SolveOptions, cache: dict | None = None) -> np.ndarray:
    """Adversary objective value for every ``θ`` in the prior (independent of the incumbent)."""
    if problem.adversary == "omniscient":
        return omniscient_values(problem)
    cache = {} if cache is None else cache
    out = np.zeros(len(problem.prior))
    for r in range(len(problem.prior)):
        if r not in cache:
            cache[r] = constrained_adversary(problem, r, opts)
        out[r] = cache[r].value
    return out


def adversary_regrets(problem: MechanismProblem, mech: Mechanism, opts: SolveOptions, cache: dict | None = None) -> np.ndarray:
    """Per-``θ`` value of the adversary subproblem against ``mech``; the max is the mechanism's regret."""
    return adversary_values(problem, opts, cache) - designer_values_truthful(problem, mech)


# ---------------------------------------------------------------------------
# master


@dataclass(frozen=True)
class RegretCut:
    theta_row: int
    adversary_value: float


@dataclass
class MasterState:
    problem: MechanismProblem
    layout: Layout
    base: dict[str, list[tuple[np.ndarray, str, float]]]
    cut_pool: list[RegretCut] = field(default_factory=list)
    ic: IcCuts = field(default_factory=IcCuts)
    adversary_cache: dict[int, AdversaryResult] = field(default_factory=dict)

    @property
    def ic_rhs(self) -> dict[tuple[int, int], float]:
        return self.ic.rhs

    def regret_rows(self) -> list[tuple[np.ndarray, str, float]]:
        lay = self.layout
        out = []
        for c in self.cut_pool:
            k = int(self.problem.truthful_profile[c.theta_row])
            row = lay.designer_row(k, c.theta_row)
            row[lay.delta] = 1.0
            out.append((row, GE, c.adversary_value))
        return out

    def families(self) -> dict[str, list]:
        fams = dict(self.base)
        fams["regret cuts"] = self.regret_rows()
        fams["IC cuts"] = self.ic.rows(self.layout)
        return fams

    def objective(self) -> np.ndarray:
        c = np.zeros(self.layout.n)
        c[self.layout.delta] = 1.0
        return c

    def to_lp(self, skip: str | None = None) -> LinearProgram:
        rows = [r for name, fam in self.families().items() if name != skip for r in fam]
        lo, hi = self.layout.bounds()
        return LinearProgram.build(self.objective(), rows, lo, hi)


def build_master(problem: MechanismProblem, opts: SolveOptions | None = None) -> MasterState:
    """Master LP skeleton; the omniscient adversary's ``|T|`` cuts are added upfront."""
    opts = opts or SolveOptions()
    problem = effective_problem(problem, opts)
    problems = validate(problem)
    if problems:
        raise ValueError("invalid problem: " + "; ".join(problems))
    lay = Layout(problem)
    state = MasterState(problem, lay, lay.base_rows())
    if problem.adversary == "omniscient":
        vals = omniscient_values(problem)
        state.cut_pool.extend(RegretCut(r, float(v)) for r, v in enumerate(vals))
    return state


def separate_regret(problem: MechanismProblem, state: MasterState, incumbent: Mechanism, delta: float, opts: SolveOptions) -> list[RegretCut]:
    """Regret cuts violated by ``(incumbent, δ̂)``, one per offending ``θ`` (most violated first)."""
    regrets = adversary_regrets(problem, incumbent, opts, state.adversary_cache)
    vals = adversary_values(problem, opts, state.adversary_cache)
    present = {c.theta_row for c in state.cut_pool}
    order = np.argsort(-regrets, kind="stable")
    cuts = []
    for r in order:
        if regrets[r] <= delta + opts.tolerance:
            break
        if int(r) not in present:
            cuts.append(RegretCut(int(r), float(vals[r])))
    return cuts


@dataclass(frozen=True)
class Diagnostics:
    ic: VerificationReport
    epr: VerificationReport
    simplex: VerificationReport
    adversary_regret: float
    adversary_witness: tuple[str, ...]
    outer_iterations: int
    regret_cuts: int
    ic_cuts: int
    loop_converged: bool
    monotonicity_breaks: int
    trace: list[dict]

    def as_dict(self) -> dict:
        return {
            "ic": {"passed": self.ic.passed, "worstViolation": self.ic.worst_violation},
            "epr": {"passed": self.epr.passed, "worstViolation": self.epr.worst_violation},
            "simplex": {"passed": self.simplex.passed, "worstViolation": self.simplex.worst_violation},
            "adversaryRegret": self.adversary_regret,
            "adversaryWitness": list(self.adversary_witness),
            "outerIterations": self.outer_iterations,
            "regretCuts": self.regret_cuts,
            "icCuts": self.ic_cuts,
            "loopConverged": self.loop_converged,
            "monotonicityBreaks": self.monotonicity_breaks,
        }


@dataclass(frozen=True)
class SolveResult:
    problem: MechanismProblem
    mechanism: Mechanism
    delta: float
    status: str
    diagnostics: Diagnostics
    master: MasterState | None = field(default=None, repr=False, compare=False)

    @property
    def certified(self) -> bool:
        return self.status == CERTIFIED


def _diagnose_infeasible(state: MasterState, opts: SolveOptions) -> list[str]:
    culprits = []
    for name in state.families():
        if name == "simplex":
            continue
        if solve_lp(state.to_lp(skip=name), **opts.lp_options).optimal:
            culprits.append(name)
    return culprits


def solve_mechanism(problem: MechanismProblem, opts: SolveOptions | None = None) -> SolveResult:
    """Minimax-regret optimal IC/EPR mechanism for ``problem`` by constraint generation."""
    opts = opts or SolveOptions()
    state = build_master(problem, opts)
    problem = state.problem
    lay = state.layout
    tol = opts.tolerance
    trace, breaks = [], 0
    mech, delta, converged, status = None, 0.0, False, ITER_LIMIT
    prev_delta = None
    loosened = False
    it = 0
    for it in range(1, opts.max_outer_iters + 1):
        fixed = [r for name, fam in state.families().items() if name != "IC cuts" for r in fam]
        lo, hi = lay.bounds()
        sol = _solve_polished(state.objective(), fixed, state.ic.rows(lay), lo, hi, False, opts)
        if not sol.optimal:
            if sol.status == "infeasible":
                raise MasterInfeasibleError(_diagnose_infeasible(state, opts))
            raise OptimizerError(f"master LP ended {sol.status}")
        mech = lay.mechanism(sol.x)
        delta = float(sol.x[lay.delta])
        if prev_delta is not None and delta < prev_delta - tol:
            if not loosened:
                breaks += 1
                log.warning("master delta decreased without a loosened IC cut: %g -> %g", prev_delta, delta)
        prev_delta = delta
        ic = separate_ic(problem, state.ic, mech, opts)
        loosened = ic.loosened
        reg = separate_regret(problem, state, mech, delta, opts)
        state.cut_pool.extend(reg)
        regrets = adversary_regrets(problem, mech, opts, state.adversary_cache)
        row = {
            "iteration": it, "delta": delta, "cuts_added": ic.new_cuts + len(reg),
            "max_ic_violation": ic.max_violation, "max_regret_violation": max(0.0, float(regrets.max()) - delta),
        }
        trace.append(row)
        line = (f"iter {it:3d}  delta {delta:.6f}  cuts+ {row['cuts_added']:3d}  "
                f"ic-viol {ic.max_violation:.3e}  regret-viol {row['max_regret_violation']:.3e}")
        log.info(line)
        if opts.trace:
            opts.trace(line)
        if not ic.violated and not reg and ic.max_rhs_change <= tol:
            converged = True
            break
        if ic.violated and ic.new_cuts == 0 and not reg and ic.max_rhs_change == 0.0:
            status = OSCILLATION
            break

    ic_rep = verify_ic(problem, mech, tol)
    epr_rep = verify_epr(problem, mech, tol)
    simplex_rep = verify_simplex(problem, mech, max(tol, 1e-7))
    regrets = adversary_regrets(problem, mech, opts, state.adversary_cache)
    worst = int(np.argmax(regrets))
    diag = Diagnostics(
        ic_rep, epr_rep, simplex_rep, float(regrets[worst]), problem.prior[worst], it,
        len(state.cut_pool), len(state.ic.cuts), converged, breaks, trace,
    )
    if converged:
        ok = ic_rep.passed and epr_rep.passed and simplex_rep.passed and regrets[worst] <= delta + tol
        status = CERTIFIED if ok else OSCILLATION
    return SolveResult(problem, mech, delta, status, diag, state)
