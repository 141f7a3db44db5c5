"""Built-in problems and their reference minimax-regret values."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import MechanismProblem, PaymentsConfig, Report, ReportSpace


@dataclass(frozen=True)
class GoldenRecord:
    scenario: str
    objective: str
    payments: str
    adversary: str
    delta: float
    tolerance: float
    source: str


# the welfare optimum has probabilities in 22nds, so the rounded 27.7 is 27.7272...
GOLDENS: tuple[GoldenRecord, ...] = (
    GoldenRecord("divorce", "welfare", "none", "omniscient", 27.73, 0.05, "divorce settlement, welfare, no payments (27.7)"),
    GoldenRecord("divorce", "welfare", "balanced", "omniscient", 0.0, 1e-6, "divorce settlement, welfare with payments"),
    GoldenRecord("divorce", "welfare", "no-deficit", "omniscient", 0.0, 1e-6, "divorce settlement, welfare with payments"),
    GoldenRecord("divorce", "welfare", "free", "omniscient", 0.0, 1e-6, "divorce settlement, welfare with payments"),
    GoldenRecord("divorce", "revenue", "no-deficit", "omniscient", 44.546, 0.01, "divorce settlement, revenue, no deficit"),
    GoldenRecord("divorce", "revenue", "free", "omniscient", 15.183, 0.01, "divorce settlement, revenue, deficit allowed"),
    GoldenRecord("auction5", "welfare", "no-deficit", "constrained", 0.0, 1e-6, "five-type auction, social welfare"),
    GoldenRecord("auction5", "revenue", "no-deficit", "constrained", 0.3264, 0.01, "five-type auction, revenue"),
    GoldenRecord("auction3", "welfare", "no-deficit", "constrained", 0.0, 1e-6, "three-type auction, social welfare"),
    GoldenRecord("auction3", "revenue", "no-deficit", "constrained", 0.1797, 0.01, "three-type auction, revenue"),
)

DIVORCE_OUTCOMES = ("husband", "wife", "museum", "burn")
AUCTION5_VALUES = (0.0, 0.25, 0.5, 0.75, 1.0)
AUCTION3_VALUES = (0.25, 0.5, 0.75)


def divorce_problem(
    objective: str = "welfare", payments: PaymentsConfig | None = None, adversary: str = "omniscient"
) -> MechanismProblem:
    """Two spouses, a painting, four outcomes; each spouse is ``low`` or ``high``."""
    agents = ("husband", "wife")
    types = (("low", "high"), ("low", "high"))
    # (gets it, other gets it, museum, burn)
    table = {"low": (2.0, 0.0, 1.0, -10.0), "high": (100.0, 0.0, 50.0, -10.0)}
    utility = []
    for i in range(2):
        u = np.zeros((4, 2))
        for t_i, t in enumerate(types[i]):
            own, other, museum, burn = table[t]
            u[:, t_i] = (own, other, museum, burn) if i == 0 else (other, own, museum, burn)
        utility.append(u)
    reports = ReportSpace(tuple((Report("L", ("low",)), Report("H", ("high",))) for _ in agents))
    prior = tuple(itertools.product(*types))
    return MechanismProblem(
        agents, DIVORCE_OUTCOMES, types, prior, reports, utility,
        objective, None, payments or PaymentsConfig(), adversary,
    )


def _value_name(v: float) -> str:
    return f"{v:g}"


def auction_problem(
    valuations, n_agents: int = 2, objective: str = "welfare",
    payments: PaymentsConfig | None = None, adversary: str = "omniscient",
) -> MechanismProblem:
    """Single-item auction with a finite valuation grid and a no-sale outcome."""
    vals = [float(v) for v in valuations]
    if not vals or len(set(vals)) != len(vals):
        raise ValueError("valuations must be nonempty and distinct")
    agents = tuple(f"bidder{i + 1}" for i in range(n_agents))
    names = tuple(_value_name(v) for v in vals)
    types = tuple(names for _ in agents)
    outcomes = tuple(f"win_{i + 1}" for i in range(n_agents)) + ("no-sale",)
    utility = []
    for i in range(n_agents):
        u = np.zeros((len(outcomes), len(vals)))
        u[i, :] = vals
        utility.append(u)
    prior = tuple(itertools.product(*types))
    return MechanismProblem(
        agents, outcomes, types, prior, ReportSpace.full_revelation(types), utility,
        objective, None, payments or PaymentsConfig(), adversary,
    )


def builtin(name: str, objective: str = "welfare", payments: PaymentsConfig | None = None, adversary: str = "omniscient") -> MechanismProblem:
    if name == "divorce":
        return divorce_problem(objective, payments, adversary)
    if name == "auction5":
        return auction_problem(AUCTION5_VALUES, 2, objective, payments, adversary)
    if name == "auction3":
        return auction_problem(AUCTION3_VALUES, 2, objective, payments, adversary)
    raise KeyError(f"unknown builtin scenario {name!r} (choose divorce, auction5, auction3)")


BUILTINS = ("divorce", "auction5", "auction3")


def golden_problem(g: GoldenRecord) -> MechanismProblem:
    return builtin(g.scenario, g.objective, PaymentsConfig(g.payments), g.adversary)
