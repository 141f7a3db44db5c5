"""Minimax-regret calculus for strict incomplete-information games.

Regret of a strategy at own type ``θ_i`` only depends on the mixture it plays at
``θ_i``; expected utility is linear in a deviation, so the best deviation is
always a pure action and every maximization below runs over actions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .lp import LinearProgram, LpError, solve_lp
from .model import StrictGame, Strategy

StrategyProfile = Mapping[str, Strategy]


@dataclass(frozen=True)
class RegretReport:
    """Max regret and the ``(opponent types, deviation)`` pair attaining it."""

    value: float
    witness: tuple[tuple[str, ...], str] | None


@dataclass(frozen=True)
class EquilibriumCertificate:
    is_equilibrium: bool
    slack: dict[tuple[str, str], float]
    tolerance: float

    @property
    def worst_slack(self) -> float:
        return max(self.slack.values(), default=0.0)


@dataclass(frozen=True)
class DominanceCertificate:
    """Outcome of checking minimax dominance against a finite list of pure opponent profiles.

    A pass is necessary for dominance over all mixed opponent strategies but
    is not proven sufficient, hence ``necessary_only``.
    """

    passed: bool
    worst_slack: float
    worst_profile: int | None
    n_profiles: int
    necessary_only: bool = True


@dataclass(frozen=True)
class DynamicsResult:
    status: str  # "converged" | "cycle" | "iter_limit"
    profile: dict[str, Strategy]
    iterations: int
    certificate: EquilibriumCertificate | None = None


def minimax_regret_mixture(values: np.ndarray, lp_options: Mapping | None = None) -> tuple[float, np.ndarray]:
    """Minimax-regret mixture over the columns of ``values``.

    ``values[r, a]`` is the payoff of option ``a`` in scenario ``r``. Returns
    ``(γ*, x*)`` minimizing ``max_r (max_a values[r, a] - values[r] @ x)``.
    """
    values = np.atleast_2d(np.asarray(values, dtype=float))
    n_rows, n = values.shape
    if n == 1 or n_rows == 0:
        x = np.zeros(n)
        x[0] = 1.0
        return 0.0, x
    best = values.max(axis=1)
    # only the best deviation per scenario can bind
    c = np.zeros(n + 1)
    c[-1] = 1.0
    rows = [(np.append(values[r], 1.0), ">=", best[r]) for r in range(n_rows)]
    rows.append((np.append(np.ones(n), 0.0), "==", 1.0))
    lp = LinearProgram.build(c, rows)
    sol = solve_lp(lp, **(lp_options or {}))
    if not sol.optimal:
        raise LpError(f"minimax mixture LP ended {sol.status}")
    x = np.clip(sol.x[:n], 0.0, None)
    x /= x.sum()
    gamma = float(np.max(best - values @ x))
    return max(gamma, 0.0), x


def _rows(profile: StrategyProfile, game: StrictGame, j: int) -> Mapping[str, np.ndarray]:
    return profile[game.players[j]].rows


def _action_values(game: StrictGame, i: int, ti: int, opp: Sequence[int], profile: StrategyProfile) -> np.ndarray:
    """Expected utility of each pure action of agent ``i`` against ``σ_{-i}(θ_{-i})``.

    ``opp`` lists the type index of every agent (entry ``i`` ignored).
    """
    x = game.utility[i][..., ti]
    for j in reversed(range(game.n_agents)):
        if j == i:
            continue
        row = _rows(profile, game, j)[game.types[j][opp[j]]]
        x = np.tensordot(x, row, axes=([j], [0]))
    return np.asarray(x, dtype=float)


def _opponent_profiles(game: StrictGame, i: int, ti: int, prior_independent: bool) -> list[tuple[int, ...]]:
    """Full type-index tuples ``⟨θ_i, θ_{-i}⟩`` over ``T(θ_i)`` (or all of ``Θ_{-i}``)."""
    if prior_independent:
        ranges = [range(len(ts)) if j != i else [ti] for j, ts in enumerate(game.types)]
        return [tuple(p) for p in itertools.product(*ranges)]
    return [tuple(int(v) for v in game.prior_idx[k]) for k in game.consistent_prior_rows(i, ti)]


def _value_matrix(game, i, ti, profile, prior_independent=False):
    profs = _opponent_profiles(game, i, ti, prior_independent)
    if not profs:
        return profs, np.zeros((0, len(game.actions[i])))
    return profs, np.array([_action_values(game, i, ti, p, profile) for p in profs])


def _opp_names(game: StrictGame, i: int, prof: Sequence[int]) -> tuple[str, ...]:
    return tuple(game.types[j][prof[j]] for j in range(game.n_agents) if j != i)


def strategy_regret(game: StrictGame, agent, own_type: str, opponent_types: Sequence[str], profile: StrategyProfile) -> float:
    """Regret of ``σ_i`` at ``θ_i`` when the opponents' types are ``opponent_types``."""
    i = game.agent_pos(agent)
    ti = game.type_pos(i, own_type)
    others = iter(opponent_types)
    opp = [ti if j == i else game.type_pos(j, next(others)) for j in range(game.n_agents)]
    v = _action_values(game, i, ti, opp, profile)
    mine = _rows(profile, game, i)[own_type]
    return float(v.max() - mine @ v)


def strategy_max_regret(
    game: StrictGame, agent, own_type: str, profile: StrategyProfile, prior_independent: bool = False
) -> RegretReport:
    """Worst-case regret of ``σ_i`` at ``θ_i`` over ``T(θ_i)``; ties go to the first profile."""
    i = game.agent_pos(agent)
    ti = game.type_pos(i, own_type)
    profs, V = _value_matrix(game, i, ti, profile, prior_independent)
    if not profs:
        raise ValueError(f"type infeasible under prior: agent {game.players[i]}, type {own_type}")
    mine = _rows(profile, game, i)[own_type]
    regrets = V.max(axis=1) - V @ mine
    r = int(np.argmax(regrets))
    dev = game.actions[i][int(np.argmax(V[r]))]
    return RegretReport(float(regrets[r]), (_opp_names(game, i, profs[r]), dev))


def minimax_best_response(
    game: StrictGame, agent, profile: StrategyProfile, prior_independent: bool = False,
    lp_options: Mapping | None = None,
) -> tuple[Strategy, dict[str, float]]:
    """Minimax best response of ``agent`` to the others in ``profile``.

    Each own type is an independent LP. Types with no consistent opponent
    profile keep their current row (uniform if ``agent`` has none yet) and are
    left out of the returned value map.
    """
    i = game.agent_pos(agent)
    name = game.players[i]
    n_a = len(game.actions[i])
    current = profile[name].rows if name in profile else {}
    rows: dict[str, np.ndarray] = {}
    values: dict[str, float] = {}
    for ti, t in enumerate(game.types[i]):
        profs, V = _value_matrix(game, i, ti, profile, prior_independent)
        if not profs:
            rows[t] = np.asarray(current.get(t, np.full(n_a, 1.0 / n_a)))
            continue
        try:
            gamma, x = minimax_regret_mixture(V, lp_options)
        except LpError as exc:
            raise LpError(f"best response LP for agent {name}, type {t}: {exc}") from exc
        rows[t] = x
        values[t] = gamma
    return Strategy(name, rows), values


def check_equilibrium(
    game: StrictGame, profile: StrategyProfile, tol: float = 1e-7, prior_independent: bool = False
) -> EquilibriumCertificate:
    """Minimax-regret equilibrium test: every ``σ_i`` must be a minimax best response."""
    slack = {}
    for i, a in enumerate(game.players):
        _, gammas = minimax_best_response(game, a, profile, prior_independent)
        for t, g in gammas.items():
            mr = strategy_max_regret(game, a, t, profile, prior_independent).value
            slack[(a, t)] = mr - g
    ok = all(s <= tol for s in slack.values())
    return EquilibriumCertificate(ok, slack, tol)


def pure_profile_count(game: StrictGame, agent) -> int:
    i = game.agent_pos(agent)
    return math.prod(len(game.actions[j]) ** len(game.types[j]) for j in range(game.n_agents) if j != i)


def pure_opponent_profiles(game: StrictGame, agent) -> list[dict[str, Strategy]]:
    """Every pure strategy profile of the opponents of ``agent`` (deterministic order)."""
    i = game.agent_pos(agent)
    per_agent = []
    for j, a in enumerate(game.players):
        if j == i:
            continue
        n_a = len(game.actions[j])
        choices = []
        for combo in itertools.product(range(n_a), repeat=len(game.types[j])):
            choices.append(Strategy(a, {t: np.eye(n_a)[c] for t, c in zip(game.types[j], combo)}))
        per_agent.append(choices)
    return [{s.owner: s for s in combo} for combo in itertools.product(*per_agent)]


def check_minimax_dominant(
    game: StrictGame,
    agent,
    strategy: Strategy,
    opponent_profiles: Sequence[StrategyProfile] | None = None,
    tol: float = 1e-7,
    cap: int = 10**6,
    prior_independent: bool = False,
) -> DominanceCertificate:
    """Is ``strategy`` a minimax best response against every listed opponent profile?"""
    i = game.agent_pos(agent)
    if opponent_profiles is None:
        count = pure_profile_count(game, agent)
        if count > cap:
            raise ValueError(f"{count} pure opponent profiles exceed cap {cap}; supply opponent_profiles")
        opponent_profiles = pure_opponent_profiles(game, agent)
    if not opponent_profiles:
        raise ValueError("opponent_profiles must be nonempty")
    worst, worst_k = -np.inf, None
    for k, opp in enumerate(opponent_profiles):
        prof = dict(opp)
        prof[game.players[i]] = strategy
        _, gammas = minimax_best_response(game, agent, prof, prior_independent)
        for t, g in gammas.items():
            s = strategy_max_regret(game, agent, t, prof, prior_independent).value - g
            if s > worst:
                worst, worst_k = s, k
    worst = max(float(worst), 0.0) if np.isfinite(worst) else 0.0
    return DominanceCertificate(worst <= tol, worst, worst_k, len(opponent_profiles))


def uniform_profile(game: StrictGame) -> dict[str, Strategy]:
    return {
        a: Strategy(a, {t: np.full(len(game.actions[i]), 1.0 / len(game.actions[i])) for t in game.types[i]})
        for i, a in enumerate(game.players)
    }


def _flat(game: StrictGame, profile: StrategyProfile) -> np.ndarray:
    return np.concatenate([profile[a].rows[t] for i, a in enumerate(game.players) for t in game.types[i]])


def _sticky_response(game: StrictGame, agent: str, profile: StrategyProfile, cert: EquilibriumCertificate, tol: float) -> Strategy:
    """Minimax best response that keeps every row already attaining ``γ*``."""
    new, _ = minimax_best_response(game, agent, profile)
    old = profile[agent].rows
    rows = {t: old[t] if cert.slack.get((agent, t), np.inf) <= tol else new.rows[t] for t in new.rows}
    return Strategy(agent, rows)


def best_response_dynamics(
    game: StrictGame, initial: StrategyProfile | None = None, max_iters: int = 200, tol: float = 1e-7
) -> DynamicsResult:
    """Simultaneous minimax best-response updates until an equilibrium, a revisit, or ``max_iters``.

    Rows that are already minimax best responses are kept, so indifferent
    agents do not drift between equally good actions.
    """
    profile = dict(initial) if initial is not None else uniform_profile(game)
    history = [_flat(game, profile)]
    for it in range(max_iters + 1):
        cert = check_equilibrium(game, profile, tol)
        if cert.is_equilibrium:
            return DynamicsResult("converged", profile, it, cert)
        if it == max_iters:
            break
        profile = {a: _sticky_response(game, a, profile, cert, tol) for a in game.players}
        flat = _flat(game, profile)
        if any(np.max(np.abs(flat - h)) <= tol for h in history):
            cert = check_equilibrium(game, profile, tol)
            if cert.is_equilibrium:
                return DynamicsResult("converged", profile, it + 1, cert)
            return DynamicsResult("cycle", profile, it + 1, cert)
        history.append(flat)
    return DynamicsResult("iter_limit", profile, max_iters, None)

