"""Evaluation of direct partial-revelation (DPR) mechanisms.

A mechanism maps every report profile in the full product ``×S_i`` to a
distribution over outcomes, plus optional per-agent transfers (paid *to* the
agent; negative means the agent pays). Profiles are indexed row-major in
agent order, see :meth:`MechanismProblem.profile_index`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .model import MechanismProblem, ScenarioSemanticError, profile_key
from .regret import RegretReport, minimax_regret_mixture


@dataclass(frozen=True, eq=False)
class Mechanism:
    outcome_rule: np.ndarray  # (|S|, |O|)
    transfers: np.ndarray | None = None  # (N, |S|)

    def __post_init__(self):
        rule = np.array(self.outcome_rule, dtype=float)
        rule.setflags(write=False)
        object.__setattr__(self, "outcome_rule", rule)
        if self.transfers is not None:
            t = np.array(self.transfers, dtype=float)
            t.setflags(write=False)
            object.__setattr__(self, "transfers", t)

    def transfer(self, i: int, k: int) -> float:
        return 0.0 if self.transfers is None else float(self.transfers[i, k])


@dataclass(frozen=True)
class VerificationReport:
    passed: bool
    worst_violation: float
    witnesses: list[tuple[str, tuple, float]] = field(default_factory=list)
    tolerance: float = 0.0


def constant_mechanism(problem: MechanismProblem, dist: Sequence[float], transfers=None) -> Mechanism:
    rule = np.tile(np.asarray(dist, dtype=float), (problem.n_profiles, 1))
    return Mechanism(rule, transfers)


# ---------------------------------------------------------------------------
# index plumbing


def _profile(problem: MechanismProblem, s) -> int:
    if isinstance(s, (int, np.integer)):
        return int(s)
    idx = []
    for i, r in enumerate(s):
        name = r.name if hasattr(r, "name") else r
        names = problem.reports.names(i)
        if name not in names:
            raise KeyError(f"unknown report {name!r} for agent {problem.agents[i]!r}")
        idx.append(names.index(name))
    return problem.profile_index(idx)


def _report_pos(problem: MechanismProblem, i: int, report) -> int:
    if isinstance(report, (int, np.integer)):
        return int(report)
    name = report.name if hasattr(report, "name") else report
    names = problem.reports.names(i)
    if name not in names:
        raise KeyError(f"unknown report {name!r} for agent {problem.agents[i]!r}")
    return names.index(name)


def _theta_row(problem: MechanismProblem, theta) -> int:
    if isinstance(theta, (int, np.integer)):
        return int(theta)
    return problem.theta_index(theta)


def deviation_profiles(problem: MechanismProblem, i: int, prior_rows: np.ndarray) -> np.ndarray:
    """``(len(prior_rows), |S_i|)`` profile indices ``⟨s'_i, s_{-i}(θ_{-i})⟩``."""
    strides = problem._strides
    base = np.zeros(len(prior_rows), dtype=int)
    for j in range(problem.n_agents):
        if j != i:
            base += problem.report_of_type[j][problem.prior_idx[prior_rows, j]] * strides[j]
    return base[:, None] + np.arange(problem.n_reports[i])[None, :] * strides[i]


def report_value_matrix(problem: MechanismProblem, mech: Mechanism, i: int, ti: int):
    """Agent ``i``'s value for each report against truthful opponents.

    Returns ``(prior_rows, profiles, values)``: ``prior_rows`` indexes
    ``T(θ_i)`` into the prior, ``values[r, s']`` is the expected utility (plus
    transfer) of reporting ``s'`` when the opponents' types are those of
    ``prior_rows[r]``.
    """
    rows = problem.consistent_prior_rows(i, ti)
    profs = deviation_profiles(problem, i, rows)
    vals = mech.outcome_rule[profs] @ problem.utility[i][:, ti]
    if mech.transfers is not None:
        vals = vals + mech.transfers[i][profs]
    return rows, profs, vals


# ---------------------------------------------------------------------------
# values


def designer_value(problem: MechanismProblem, mech: Mechanism, s, theta) -> float:
    """Designer's objective at report profile ``s`` when the true types are ``theta``."""
    k = _profile(problem, s)
    if problem.objective == "revenue":
        if mech.transfers is None:
            raise ValueError("revenue objective needs a mechanism with transfers")
        return float(-np.sum(mech.transfers[:, k]))
    f = problem.social_choice[_theta_row(problem, theta)]
    return float(mech.outcome_rule[k] @ f)


def designer_values_truthful(problem: MechanismProblem, mech: Mechanism) -> np.ndarray:
    """``designer_value(s(θ), θ)`` for every ``θ`` in prior order."""
    ks = problem.truthful_profile
    if problem.objective == "revenue":
        if mech.transfers is None:
            raise ValueError("revenue objective needs a mechanism with transfers")
        return -mech.transfers[:, ks].sum(axis=0)
    return np.einsum("ko,ko->k", mech.outcome_rule[ks], problem.social_choice)


def agent_value(problem: MechanismProblem, mech: Mechanism, s, agent, own_type) -> float:
    """Quasi-linear value of agent ``i`` with type ``θ_i`` at report profile ``s``."""
    i = problem.agent_pos(agent)
    ti = problem.type_pos(i, own_type)
    k = _profile(problem, s)
    return float(mech.outcome_rule[k] @ problem.utility[i][:, ti] + mech.transfer(i, k))


def report_regret(problem: MechanismProblem, mech: Mechanism, agent, own_type, opponent_types, report) -> float:
    """Gain for agent ``i`` from reporting ``report`` instead of its truthful report (may be negative)."""
    i = problem.agent_pos(agent)
    ti = problem.type_pos(i, own_type)
    others = iter(opponent_types)
    theta = tuple(problem.types[i][ti] if j == i else next(others) for j in range(problem.n_agents))
    k = problem.theta_index(theta)
    rows = np.array([k])
    profs = deviation_profiles(problem, i, rows)[0]
    truth = problem.report_of_type[i][ti]
    dev = _report_pos(problem, i, report)
    u = problem.utility[i][:, ti]
    gain = (mech.outcome_rule[profs[dev]] - mech.outcome_rule[profs[truth]]) @ u
    return float(gain + mech.transfer(i, profs[dev]) - mech.transfer(i, profs[truth]))


def truthful_max_regret(problem: MechanismProblem, mech: Mechanism, agent, own_type) -> RegretReport:
    """Max regret of truthful reporting at ``θ_i``, floored at zero."""
    i = problem.agent_pos(agent)
    ti = problem.type_pos(i, own_type)
    rows, _, vals = report_value_matrix(problem, mech, i, ti)
    if not len(rows):
        raise ValueError(f"type infeasible under prior: agent {problem.agents[i]}, type {problem.types[i][ti]}")
    truth = problem.report_of_type[i][ti]
    gains = vals - vals[:, [truth]]
    r, s = np.unravel_index(int(np.argmax(gains)), gains.shape)
    value = float(gains[r, s])
    if value <= 0.0:
        return RegretReport(0.0, None)
    opp = tuple(problem.prior[rows[r]][j] for j in range(problem.n_agents) if j != i)
    return RegretReport(value, (opp, problem.reports.reports[i][s].name))


def min_report_regret(problem: MechanismProblem, mech: Mechanism, agent, own_type, lp_options=None) -> tuple[float, np.ndarray]:
    """Minimax-regret randomized report ``d*`` at ``θ_i`` and its max regret."""
    i = problem.agent_pos(agent)
    ti = problem.type_pos(i, own_type)
    rows, _, vals = report_value_matrix(problem, mech, i, ti)
    if not len(rows):
        raise ValueError(f"type infeasible under prior: agent {problem.agents[i]}, type {problem.types[i][ti]}")
    return minimax_regret_mixture(vals, lp_options)


def ic_gap(problem: MechanismProblem, mech: Mechanism, i: int, ti: int, lp_options=None):
    """``(M̂, m̂, r, s')``: truthful max regret, minimax report regret and the worst deviation."""
    rows, _, vals = report_value_matrix(problem, mech, i, ti)
    truth = problem.report_of_type[i][ti]
    gains = vals - vals[:, [truth]]
    r, s = np.unravel_index(int(np.argmax(gains)), gains.shape)
    big = max(float(gains[r, s]), 0.0)
    small = minimax_regret_mixture(vals, lp_options)[0] if big > 0 else 0.0
    return big, small, int(r), int(s)


# ---------------------------------------------------------------------------
# verification


def verify_ic(problem: MechanismProblem, mech: Mechanism, tol: float = 1e-6) -> VerificationReport:
    """Truthful reporting must be a minimax-regret best response for every feasible ``(i, θ_i)``."""
    worst, witnesses = 0.0, []
    for i in range(problem.n_agents):
        if problem.n_reports[i] < 2:
            continue
        for ti in range(len(problem.types[i])):
            rows = problem.consistent_prior_rows(i, ti)
            if not len(rows):
                continue
            big, small, r, s = ic_gap(problem, mech, i, ti)
            gap = big - small
            worst = max(worst, gap)
            if gap > tol:
                opp = tuple(problem.prior[rows[r]][j] for j in range(problem.n_agents) if j != i)
                binding = (problem.agents[i], problem.types[i][ti], opp, problem.reports.reports[i][s].name)
                witnesses.append(("IC", binding, gap))
    witnesses.sort(key=lambda w: -w[2])
    return VerificationReport(worst <= tol, worst, witnesses, tol)


def verify_epr(problem: MechanismProblem, mech: Mechanism, tol: float = 1e-6) -> VerificationReport:
    """Ex post rationality at truthful reports of every ``θ`` in the prior."""
    worst, witnesses = 0.0, []
    ks = problem.truthful_profile
    for i in range(problem.n_agents):
        ti = problem.prior_idx[:, i]
        vals = np.einsum("ko,ok->k", mech.outcome_rule[ks], problem.utility[i][:, ti])
        if mech.transfers is not None:
            vals = vals + mech.transfers[i, ks]
        for k in np.flatnonzero(vals < -tol):
            witnesses.append(("EPR", (problem.agents[i], problem.prior[k]), float(-vals[k])))
        worst = max(worst, float(np.max(-vals, initial=0.0)))
    witnesses.sort(key=lambda w: -w[2])
    return VerificationReport(worst <= tol, worst, witnesses, tol)


def verify_simplex(problem: MechanismProblem, mech: Mechanism, tol: float = 1e-7) -> VerificationReport:
    """Probability-simplex rows plus the payment regime's budget and box constraints."""
    witnesses = []
    rule = mech.outcome_rule
    if rule.shape != (problem.n_profiles, problem.n_outcomes):
        return VerificationReport(False, np.inf, [("shape", (rule.shape,), np.inf)], tol)
    for k in range(problem.n_profiles):
        key = profile_key(problem.profile_names(k))
        neg = float(max(0.0, -rule[k].min()))
        if neg > tol:
            witnesses.append(("nonnegativity", (key,), neg))
        off = abs(float(rule[k].sum()) - 1.0)
        if off > tol:
            witnesses.append(("simplex", (key,), off))
    pay = problem.payments
    t = mech.transfers
    if t is not None:
        if t.shape != (problem.n_agents, problem.n_profiles):
            witnesses.append(("shape", ("transfers", t.shape), np.inf))
        else:
            totals = t.sum(axis=0)
            for k in range(problem.n_profiles):
                key = profile_key(problem.profile_names(k))
                if not pay.active and np.max(np.abs(t[:, k])) > tol:
                    witnesses.append(("no-payments", (key,), float(np.max(np.abs(t[:, k])))))
                if pay.mode == "balanced" and abs(totals[k]) > tol:
                    witnesses.append(("budget-balance", (key,), float(abs(totals[k]))))
                if pay.mode == "no-deficit" and totals[k] > tol:
                    witnesses.append(("no-deficit", (key,), float(totals[k])))
                over = float(np.max(np.abs(t[:, k])) - problem.payment_bound)
                if pay.active and over > tol:
                    witnesses.append(("payment-bound", (key,), over))
    elif problem.objective == "revenue":
        witnesses.append(("transfers-missing", (), np.inf))
    worst = max((w[2] for w in witnesses), default=0.0)
    return VerificationReport(not witnesses, worst, witnesses, tol)


# ---------------------------------------------------------------------------
# designer regret


def mechanism_pairwise_regret(problem: MechanismProblem, p: Mechanism, q: Mechanism) -> tuple[float, tuple[str, ...]]:
    """Worst-case objective shortfall of ``p`` relative to ``q`` over the prior."""
    diff = designer_values_truthful(problem, q) - designer_values_truthful(problem, p)
    k = int(np.argmax(diff))
    return float(diff[k]), problem.prior[k]


def omniscient_values(problem: MechanismProblem) -> np.ndarray:
    """Best achievable objective per ``θ`` ignoring incentives (prior order)."""
    if problem.objective == "revenue":
        return problem.total_utility.max(axis=1)
    return problem.social_choice.max(axis=1)


def omniscient_value(problem: MechanismProblem, theta) -> float:
    return float(omniscient_values(problem)[_theta_row(problem, theta)])


def omniscient_mechanism(problem: MechanismProblem) -> Mechanism:
    """Per-profile argmax rule; in revenue mode every agent pays its full utility.

    Report profiles shared by several prior members follow the first of them;
    profiles outside ``S(T)`` get the first outcome.
    """
    rule = np.zeros((problem.n_profiles, problem.n_outcomes))
    rule[:, 0] = 1.0
    transfers = np.zeros((problem.n_agents, problem.n_profiles)) if problem.payments.active else None
    table = problem.total_utility if problem.objective == "revenue" else problem.social_choice
    seen = set()
    for row, k in enumerate(problem.truthful_profile):
        if k in seen:
            continue
        seen.add(k)
        o = int(np.argmax(table[row]))
        rule[k] = 0.0
        rule[k, o] = 1.0
        if transfers is not None and problem.objective == "revenue":
            for i in range(problem.n_agents):
                transfers[i, k] = -problem.utility[i][o, problem.prior_idx[row, i]]
    return Mechanism(rule, transfers)


# ---------------------------------------------------------------------------
# serialization


def mechanism_to_dict(problem: MechanismProblem, mech: Mechanism) -> dict:
    """JSON-ready form keyed by ``"/"``-joined report names in agent order.

    Values are written at full float precision so that a saved mechanism
    re-verifies exactly; tables round for display only.
    """
    doc = {"outcomeRule": {}}
    for k in range(problem.n_profiles):
        key = profile_key(problem.profile_names(k))
        doc["outcomeRule"][key] = {o: float(mech.outcome_rule[k, j]) for j, o in enumerate(problem.outcomes)}
    if mech.transfers is not None:
        doc["transfers"] = {
            profile_key(problem.profile_names(k)): {a: float(mech.transfers[i, k]) for i, a in enumerate(problem.agents)}
            for k in range(problem.n_profiles)
        }
    return doc


def mechanism_from_dict(problem: MechanismProblem, doc: Mapping) -> Mechanism:
    """Inverse of :func:`mechanism_to_dict`; shape mismatches raise ``ScenarioSemanticError``."""
    if not isinstance(doc, Mapping) or "outcomeRule" not in doc:
        raise ScenarioSemanticError(["mechanism document needs an 'outcomeRule' map"])
    keys = {profile_key(problem.profile_names(k)): k for k in range(problem.n_profiles)}
    rule_doc = doc["outcomeRule"]
    unknown = set(rule_doc) - set(keys)
    missing = set(keys) - set(rule_doc)
    if unknown or missing:
        raise ScenarioSemanticError(
            [f"outcomeRule: unknown report profile(s) {sorted(unknown)}"] * bool(unknown)
            + [f"outcomeRule: missing report profile(s) {sorted(missing)}"] * bool(missing)
        )
    rule = np.zeros((problem.n_profiles, problem.n_outcomes))
    for key, k in keys.items():
        row = rule_doc[key]
        bad = set(row) - set(problem.outcomes)
        if bad:
            raise ScenarioSemanticError([f"outcomeRule.{key}: unknown outcome(s) {sorted(bad)}"])
        for j, o in enumerate(problem.outcomes):
            rule[k, j] = float(row.get(o, 0.0))
    transfers = None
    if doc.get("transfers") is not None:
        tdoc = doc["transfers"]
        if set(tdoc) - set(keys):
            raise ScenarioSemanticError([f"transfers: unknown report profile(s) {sorted(set(tdoc) - set(keys))}"])
        transfers = np.zeros((problem.n_agents, problem.n_profiles))
        for key, k in keys.items():
            row = tdoc.get(key, {})
            if set(row) - set(problem.agents):
                raise ScenarioSemanticError([f"transfers.{key}: unknown agent(s) {sorted(set(row) - set(problem.agents))}"])
            for i, a in enumerate(problem.agents):
                transfers[i, k] = float(row.get(a, 0.0))
    elif problem.payments.active:
        transfers = np.zeros((problem.n_agents, problem.n_profiles))
    unknown_fields = set(doc) - {"outcomeRule", "transfers", "delta", "status", "diagnostics"}
    if unknown_fields:
        raise ScenarioSemanticError([f"unknown mechanism field(s) {sorted(unknown_fields)}"])
    return Mechanism(rule, transfers)


def dump_mechanism(problem: MechanismProblem, mech: Mechanism) -> str:
    return json.dumps(mechanism_to_dict(problem, mech), indent=2)
