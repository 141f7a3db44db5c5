"""Data model for strict games and strict mechanism design problems.

A *strict* prior is a set ``T`` of credible type profiles with no probabilities
attached. Identifiers are strings throughout; integer indices follow
declaration order so that every downstream LP has a reproducible column layout.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

PAYMENT_MODES = ("none", "balanced", "no-deficit", "free")
OBJECTIVES = ("welfare", "revenue", "explicit")
ADVERSARIES = ("omniscient", "constrained")

PROFILE_SEP = "/"


class ScenarioError(ValueError):
    """Base class for scenario loading failures."""


class ScenarioSyntaxError(ScenarioError):
    def __init__(self, msg: str, line: int, column: int):
        super().__init__(f"{msg} (line {line}, column {column})")
        self.line = line
        self.column = column


class ScenarioSemanticError(ScenarioError):
    def __init__(self, problems: Sequence[str]):
        super().__init__("; ".join(problems))
        self.problems = list(problems)


def profile_key(names: Iterable[str]) -> str:
    return PROFILE_SEP.join(names)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PaymentsConfig:
    """Transfer regime; ``bound=None`` means the optimizer picks a default box."""

    mode: str = "none"
    bound: float | None = None

    @property
    def active(self) -> bool:
        return self.mode != "none"


@dataclass(frozen=True)
class Report:
    """A partial type: the claim that the true type lies in ``types``."""

    name: str
    types: tuple[str, ...]


@dataclass(frozen=True)
class ReportSpace:
    reports: tuple[tuple[Report, ...], ...]

    @classmethod
    def full_revelation(cls, types: Sequence[Sequence[str]]) -> "ReportSpace":
        return cls(tuple(tuple(Report(t, (t,)) for t in ts) for ts in types))

    @classmethod
    def from_groups(cls, groups: Sequence[Sequence[Sequence[str]]], names=None) -> "ReportSpace":
        out = []
        for i, gs in enumerate(groups):
            labels = names[i] if names is not None else [default_report_name(g) for g in gs]
            out.append(tuple(Report(str(lbl), tuple(g)) for lbl, g in zip(labels, gs)))
        return cls(tuple(out))

    def names(self, i: int) -> tuple[str, ...]:
        return tuple(r.name for r in self.reports[i])

    def report_index(self, i: int, type_name: str) -> int:
        for k, r in enumerate(self.reports[i]):
            if type_name in r.types:
                return k
        raise KeyError(f"type {type_name!r} of agent #{i} is not covered by any report")


def default_report_name(types: Sequence[str]) -> str:
    return "+".join(types)


@dataclass(frozen=True, eq=False)
class Strategy:
    """Mixed strategy ``type -> distribution over actions`` for one agent."""

    owner: str
    rows: Mapping[str, np.ndarray]

    def __post_init__(self):
        object.__setattr__(self, "rows", {t: _frozen(v) for t, v in self.rows.items()})

    def row(self, type_name: str) -> np.ndarray:
        return self.rows[type_name]

    def __eq__(self, other):
        if not isinstance(other, Strategy) or self.owner != other.owner or self.rows.keys() != other.rows.keys():
            return NotImplemented if not isinstance(other, Strategy) else False
        return all(np.array_equal(self.rows[t], other.rows[t]) for t in self.rows)

    __hash__ = None


class _Indexed:
    """Index helpers shared by games and mechanism problems (needs agents/types/prior)."""

    @cached_property
    def type_index(self) -> tuple[dict[str, int], ...]:
        return tuple({t: k for k, t in enumerate(ts)} for ts in self.types)

    @cached_property
    def agent_index(self) -> dict[str, int]:
        return {a: k for k, a in enumerate(self.agents)}

    @cached_property
    def prior_idx(self) -> np.ndarray:
        """``(|T|, N)`` integer array of type indices, in prior declaration order."""
        rows = [[self.type_index[i][t] for i, t in enumerate(p)] for p in self.prior]
        return np.array(rows, dtype=int).reshape(len(self.prior), len(self.agents))

    @cached_property
    def _consistent(self) -> dict[tuple[int, int], np.ndarray]:
        out: dict[tuple[int, int], list[int]] = {}
        for k, row in enumerate(self.prior_idx):
            for i, t in enumerate(row):
                out.setdefault((i, int(t)), []).append(k)
        return {key: np.array(v, dtype=int) for key, v in out.items()}

    def agent_pos(self, agent: str | int) -> int:
        if isinstance(agent, (int, np.integer)):
            return int(agent)
        try:
            return self.agent_index[agent]
        except KeyError:
            raise KeyError(f"unknown agent {agent!r}") from None

    def type_pos(self, i: int, type_name: str | int) -> int:
        if isinstance(type_name, (int, np.integer)):
            return int(type_name)
        try:
            return self.type_index[i][type_name]
        except KeyError:
            raise KeyError(f"unknown type {type_name!r} for agent {self.agents[i]!r}") from None

    def consistent_prior_rows(self, i: int, ti: int) -> np.ndarray:
        """Indices into ``prior`` of profiles whose agent-``i`` component is ``ti``."""
        return self._consistent.get((i, ti), np.zeros(0, dtype=int))


@dataclass(frozen=True, eq=False)
class StrictGame(_Indexed):
    """Finite game with strict type uncertainty.

    ``utility[i]`` has shape ``(|A_1|, ..., |A_N|, |Θ_i|)``.
    """

    players: tuple[str, ...]
    actions: tuple[tuple[str, ...], ...]
    types: tuple[tuple[str, ...], ...]
    prior: tuple[tuple[str, ...], ...]
    utility: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "players", tuple(self.players))
        object.__setattr__(self, "actions", tuple(tuple(a) for a in self.actions))
        object.__setattr__(self, "types", tuple(tuple(t) for t in self.types))
        object.__setattr__(self, "prior", tuple(tuple(p) for p in self.prior))
        object.__setattr__(self, "utility", tuple(_frozen(u) for u in self.utility))

    @property
    def agents(self) -> tuple[str, ...]:
        return self.players

    @property
    def n_agents(self) -> int:
        return len(self.players)

    def __eq__(self, other):
        if not isinstance(other, StrictGame):
            return NotImplemented
        return (
            self.players == other.players and self.actions == other.actions and self.types == other.types
            and self.prior == other.prior and len(self.utility) == len(other.utility)
            and all(np.array_equal(a, b) for a, b in zip(self.utility, other.utility))
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class MechanismProblem(_Indexed):
    """Strict mechanism design problem over partial-revelation reports.

    ``utility[i]`` has shape ``(|O|, |Θ_i|)``. For an explicit objective,
    ``objective_table`` has shape ``(|T|, |O|)`` aligned with ``prior``.
    """

    agents: tuple[str, ...]
    outcomes: tuple[str, ...]
    types: tuple[tuple[str, ...], ...]
    prior: tuple[tuple[str, ...], ...]
    reports: ReportSpace
    utility: tuple[np.ndarray, ...]
    objective: str = "welfare"
    objective_table: np.ndarray | None = None
    payments: PaymentsConfig = field(default_factory=PaymentsConfig)
    adversary: str = "omniscient"

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        object.__setattr__(self, "types", tuple(tuple(t) for t in self.types))
        object.__setattr__(self, "prior", tuple(tuple(p) for p in self.prior))
        object.__setattr__(self, "utility", tuple(_frozen(u) for u in self.utility))
        if self.objective_table is not None:
            object.__setattr__(self, "objective_table", _frozen(self.objective_table))

    def __eq__(self, other):
        if not isinstance(other, MechanismProblem):
            return NotImplemented
        tables_equal = (self.objective_table is None and other.objective_table is None) or (
            self.objective_table is not None and other.objective_table is not None
            and np.array_equal(self.objective_table, other.objective_table)
        )
        return (
            self.agents == other.agents and self.outcomes == other.outcomes and self.types == other.types
            and self.prior == other.prior and self.reports == other.reports
            and len(self.utility) == len(other.utility)
            and all(np.array_equal(a, b) for a, b in zip(self.utility, other.utility))
            and self.objective == other.objective and tables_equal
            and self.payments == other.payments and self.adversary == other.adversary
        )

    __hash__ = None

    def replace(self, **changes) -> "MechanismProblem":
        from dataclasses import replace

        return replace(self, **changes)

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def n_outcomes(self) -> int:
        return len(self.outcomes)

    @cached_property
    def n_reports(self) -> tuple[int, ...]:
        return tuple(len(r) for r in self.reports.reports)

    @cached_property
    def n_profiles(self) -> int:
        return math.prod(self.n_reports)

    @cached_property
    def _strides(self) -> np.ndarray:
        strides = np.ones(self.n_agents, dtype=int)
        for i in range(self.n_agents - 2, -1, -1):
            strides[i] = strides[i + 1] * self.n_reports[i + 1]
        return strides

    def profile_index(self, report_idx: Sequence[int]) -> int:
        """Row-major index of a report profile in the full product ``×S_i``."""
        return int(np.dot(self._strides, report_idx))

    def report_profiles(self) -> list[tuple[int, ...]]:
        return list(itertools.product(*[range(n) for n in self.n_reports]))

    def profile_names(self, k: int) -> tuple[str, ...]:
        idx = np.unravel_index(k, self.n_reports)
        return tuple(self.reports.reports[i][int(r)].name for i, r in enumerate(idx))

    @cached_property
    def report_of_type(self) -> tuple[np.ndarray, ...]:
        """``report_of_type[i][t]`` is the index of the unique report containing type ``t``."""
        out = []
        for i, ts in enumerate(self.types):
            out.append(np.array([self.reports.report_index(i, t) for t in ts], dtype=int))
        return tuple(out)

    @cached_property
    def truthful_profile(self) -> np.ndarray:
        """Report-profile index ``s(θ)`` for every ``θ`` in the prior (prior order)."""
        reps = np.column_stack([self.report_of_type[i][self.prior_idx[:, i]] for i in range(self.n_agents)])
        return reps @ self._strides if len(self.prior) else np.zeros(0, dtype=int)

    @cached_property
    def social_choice(self) -> np.ndarray | None:
        """``(|T|, |O|)`` objective values f(o, θ); ``None`` in revenue mode."""
        if self.objective == "explicit":
            return self.objective_table
        if self.objective == "welfare":
            vals = np.zeros((len(self.prior), self.n_outcomes))
            for i in range(self.n_agents):
                vals += self.utility[i][:, self.prior_idx[:, i]].T
            vals.setflags(write=False)
            return vals
        return None

    @cached_property
    def total_utility(self) -> np.ndarray:
        """``(|T|, |O|)`` summed agent utilities, used by the revenue-mode omniscient bound."""
        vals = np.zeros((len(self.prior), self.n_outcomes))
        for i in range(self.n_agents):
            vals += self.utility[i][:, self.prior_idx[:, i]].T
        return vals

    @cached_property
    def payment_bound(self) -> float:
        if self.payments.bound is not None:
            return float(self.payments.bound)
        biggest = max((float(np.max(np.abs(u), initial=0.0)) for u in self.utility), default=0.0)
        return 10.0 * biggest if biggest > 0 else 1.0

    def theta_index(self, theta: Sequence[str]) -> int:
        theta = tuple(theta)
        try:
            return self.prior.index(theta)
        except ValueError:
            raise KeyError(f"type profile {theta!r} is not in the prior") from None


# ---------------------------------------------------------------------------
# report/type maps


def truthful_report(report_space: ReportSpace, theta: Sequence[str]) -> tuple[Report, ...]:
    """``s(θ)``: the unique report profile consistent with ``θ``."""
    out = []
    for i, t in enumerate(theta):
        matches = [r for r in report_space.reports[i] if t in r.types]
        if not matches:
            raise KeyError(f"unknown type {t!r} for agent #{i}")
        out.append(matches[0])
    return tuple(out)


def consistent_types(problem, agent: str | int, type_name: str) -> set[tuple[str, ...]]:
    """``T(θ_i)``: opponent type profiles compatible with agent ``i`` having ``type_name``."""
    i = problem.agent_pos(agent)
    return {p[:i] + p[i + 1 :] for p in problem.prior if p[i] == type_name}


def consistent_profiles(problem: MechanismProblem, reports: Sequence[Report]) -> list[tuple[str, ...]]:
    """``T(s)``: prior members whose components lie in the respective reports."""
    return [p for p in problem.prior if all(t in r.types for t, r in zip(p, reports))]


# ---------------------------------------------------------------------------
# validation


def validate(obj, game: StrictGame | None = None) -> list[str]:
    """List every broken invariant of ``obj``; an empty list means valid."""
    if isinstance(obj, MechanismProblem):
        return _validate_problem(obj)
    if isinstance(obj, StrictGame):
        return _validate_game(obj)
    if isinstance(obj, Strategy):
        return _validate_strategy(obj, game)
    if isinstance(obj, Mapping):  # strategy profile
        out = []
        for s in obj.values():
            out += _validate_strategy(s, game)
        return out
    raise TypeError(f"cannot validate {type(obj).__name__}")


def _validate_common(agents, types, prior) -> list[str]:
    out = []
    if not agents:
        out.append("no agents declared")
    if len(set(agents)) != len(agents):
        out.append("duplicate agent names")
    if len(types) != len(agents):
        out.append("type lists do not match agents")
        return out
    for a, ts in zip(agents, types):
        if not ts:
            out.append(f"agent {a} has no types")
        if len(set(ts)) != len(ts):
            out.append(f"agent {a} has duplicate type names")
    if not prior:
        out.append("prior T is empty")
    for p in prior:
        if len(p) != len(agents) or any(t not in ts for t, ts in zip(p, types)):
            out.append(f"prior profile {profile_key(map(str, p))} is not drawn from the type spaces")
    if len(set(prior)) != len(prior):
        out.append("prior T lists a profile twice")
    return out


def _validate_game(g: StrictGame) -> list[str]:
    out = _validate_common(g.players, g.types, g.prior)
    if len(g.actions) != len(g.players):
        return out + ["action lists do not match agents"]
    for a, acts in zip(g.players, g.actions):
        if not acts:
            out.append(f"agent {a} has no actions")
    shape = tuple(len(a) for a in g.actions)
    if len(g.utility) != len(g.players):
        return out + ["utility tables do not match agents"]
    for i, a in enumerate(g.players):
        u = g.utility[i]
        if u.shape != shape + (len(g.types[i]),):
            out.append(f"utility table for agent {a} has shape {u.shape}, expected {shape + (len(g.types[i]),)}")
        elif not np.all(np.isfinite(u)):
            out.append(f"non-finite utility for agent {a}")
    return out


def _validate_strategy(s: Strategy, game: StrictGame | None) -> list[str]:
    out = []
    n_actions = None
    if game is not None:
        if s.owner not in game.players:
            return [f"Strategy owner {s.owner} is not an agent"]
        i = game.players.index(s.owner)
        n_actions = len(game.actions[i])
        for t in game.types[i]:
            if t not in s.rows:
                out.append(f"Strategy row missing: agent {s.owner}, type {t}")
    for t, row in s.rows.items():
        if n_actions is not None and row.shape != (n_actions,):
            out.append(f"Strategy row has wrong length: agent {s.owner}, type {t}")
            continue
        if np.any(row < -1e-9) or not np.all(np.isfinite(row)):
            out.append(f"Strategy row has negative entries: agent {s.owner}, type {t}")
        if abs(float(np.sum(row)) - 1.0) > 1e-9:
            out.append(f"Strategy row not normalized: agent {s.owner}, type {t}")
    return out


def _validate_problem(p: MechanismProblem) -> list[str]:
    out = _validate_common(p.agents, p.types, p.prior)
    if not p.outcomes:
        out.append("no outcomes declared")
    if len(set(p.outcomes)) != len(p.outcomes):
        out.append("duplicate outcome names")
    if len(p.utility) != len(p.agents):
        out.append("utility tables do not match agents")
    else:
        for i, a in enumerate(p.agents):
            if i >= len(p.types):
                break
            u = p.utility[i]
            if u.shape != (len(p.outcomes), len(p.types[i])):
                out.append(f"utility table for agent {a} is not total over outcomes x types")
            elif not np.all(np.isfinite(u)):
                out.append(f"non-finite utility for agent {a}")
    reps = p.reports.reports
    if len(reps) != len(p.agents):
        out.append("report lists do not match agents")
    else:
        for i, a in enumerate(p.agents):
            if i >= len(p.types):
                break
            covered = [t for r in reps[i] for t in r.types]
            if (
                any(not r.types for r in reps[i]) or len(covered) != len(set(covered))
                or set(covered) != set(p.types[i])
            ):
                out.append(f"reports do not partition Θ_{a}")
            names = [r.name for r in reps[i]]
            if len(set(names)) != len(names):
                out.append(f"duplicate report names for agent {a}")
            if any(PROFILE_SEP in n for n in names):
                out.append(f"report names for agent {a} contain '{PROFILE_SEP}'")
    if p.objective not in OBJECTIVES:
        out.append(f"unknown objective {p.objective!r}")
    if p.objective == "explicit":
        tab = p.objective_table
        if tab is None or tab.shape != (len(p.prior), len(p.outcomes)):
            out.append("explicit objective table is not total over outcomes x prior")
        elif not np.all(np.isfinite(tab)):
            out.append("explicit objective table has non-finite entries")
    if p.payments.mode not in PAYMENT_MODES:
        out.append(f"unknown payments mode {p.payments.mode!r}")
    if p.payments.active and p.payments.bound is not None and not p.payments.bound > 0:
        out.append("payment bound must be positive")
    if p.objective == "revenue" and not p.payments.active:
        out.append("revenue objective requires payments mode other than none")
    if p.adversary not in ADVERSARIES:
        out.append(f"unknown adversary mode {p.adversary!r}")
    return out


# ---------------------------------------------------------------------------
# scenario documents

_PROBLEM_FIELDS = {"agents", "types", "outcomes", "utility", "prior", "reports", "objective", "payments", "adversary"}
_GAME_FIELDS = {"agents", "types", "actions", "utility", "prior"}


def _reject_constant(name):
    raise ValueError(f"non-finite number {name} is not allowed")


def _load_json(text: str) -> Any:
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ScenarioSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    except ValueError as exc:
        raise ScenarioSemanticError([str(exc)]) from None


def _num(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioSemanticError([f"{where}: expected a number, got {v!r}"])
    return float(v)


def _str_list(v, where: str) -> list[str]:
    if not isinstance(v, list) or not all(isinstance(x, str) for x in v):
        raise ScenarioSemanticError([f"{where}: expected a list of strings"])
    return v


def parse_scenario(text: str) -> MechanismProblem | StrictGame:
    """Parse and validate a JSON scenario document.

    Documents with an ``actions`` field describe a :class:`StrictGame`;
    everything else is a :class:`MechanismProblem`.
    """
    doc = _load_json(text)
    if not isinstance(doc, dict):
        raise ScenarioSemanticError(["scenario document must be a JSON object"])
    obj = _game_from_doc(doc) if "actions" in doc else _problem_from_doc(doc)
    problems = validate(obj)
    if problems:
        raise ScenarioSemanticError(problems)
    return obj


def load_scenario(path) -> MechanismProblem | StrictGame:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def _agents_and_types(doc) -> tuple[list[str], list[list[str]]]:
    for key in ("agents", "types", "utility"):
        if key not in doc:
            raise ScenarioSemanticError([f"missing required field {key!r}"])
    agents = _str_list(doc["agents"], "agents")
    tmap = doc["types"]
    if not isinstance(tmap, dict):
        raise ScenarioSemanticError(["types: expected a map agent -> list of type names"])
    unknown = set(tmap) - set(agents)
    if unknown:
        raise ScenarioSemanticError([f"types: unknown agent(s) {sorted(unknown)}"])
    missing = [a for a in agents if a not in tmap]
    if missing:
        raise ScenarioSemanticError([f"types: no type list for agent(s) {missing}"])
    return agents, [_str_list(tmap[a], f"types.{a}") for a in agents]


def _parse_prior(doc, agents, types) -> list[tuple[str, ...]]:
    if doc.get("prior") is None:
        return list(itertools.product(*types))
    prior = []
    for k, prof in enumerate(doc["prior"]):
        prof = _str_list(prof, f"prior[{k}]")
        if len(prof) != len(agents):
            raise ScenarioSemanticError([f"prior[{k}]: expected {len(agents)} type names"])
        for a, t, ts in zip(agents, prof, types):
            if t not in ts:
                raise ScenarioSemanticError([f"prior[{k}]: unknown type {t!r} for agent {a}"])
        prior.append(tuple(prof))
    return prior


def _problem_from_doc(doc: dict) -> MechanismProblem:
    unknown = set(doc) - _PROBLEM_FIELDS
    if unknown:
        raise ScenarioSemanticError([f"unknown field(s) {sorted(unknown)}"])
    agents, types = _agents_and_types(doc)
    if "outcomes" not in doc:
        raise ScenarioSemanticError(["missing required field 'outcomes'"])
    outcomes = _str_list(doc["outcomes"], "outcomes")
    umap = doc["utility"]
    utility = []
    for a, ts in zip(agents, types):
        table = umap.get(a) if isinstance(umap, dict) else None
        if not isinstance(table, dict):
            raise ScenarioSemanticError([f"utility: missing table for agent {a}"])
        extra = set(table) - set(ts)
        if extra:
            raise ScenarioSemanticError([f"utility.{a}: unknown type(s) {sorted(extra)}"])
        u = np.zeros((len(outcomes), len(ts)))
        for t_i, t in enumerate(ts):
            row = table.get(t)
            if not isinstance(row, dict):
                raise ScenarioSemanticError([f"utility.{a}.{t}: missing outcome map"])
            extra = set(row) - set(outcomes)
            if extra:
                raise ScenarioSemanticError([f"utility.{a}.{t}: unknown outcome(s) {sorted(extra)}"])
            for o_i, o in enumerate(outcomes):
                if o not in row:
                    raise ScenarioSemanticError([f"utility.{a}.{t}: no value for outcome {o!r}"])
                u[o_i, t_i] = _num(row[o], f"utility.{a}.{t}.{o}")
        utility.append(u)
    prior = _parse_prior(doc, agents, types)

    rdoc = doc.get("reports")
    if rdoc is None:
        reports = ReportSpace.full_revelation(types)
    else:
        if not isinstance(rdoc, dict) or set(rdoc) - set(agents):
            raise ScenarioSemanticError(["reports: expected a map agent -> report list"])
        per_agent = []
        for a, ts in zip(agents, types):
            spec = rdoc.get(a)
            if spec is None:
                per_agent.append(tuple(Report(t, (t,)) for t in ts))
                continue
            items = list(spec.items()) if isinstance(spec, dict) else [(None, g) for g in spec]
            group = []
            for name, g in items:
                g = _str_list(g, f"reports.{a}")
                bad = [t for t in g if t not in ts]
                if bad:
                    raise ScenarioSemanticError([f"reports.{a}: unknown type(s) {bad}"])
                group.append(Report(name if name is not None else default_report_name(g), tuple(g)))
            per_agent.append(tuple(group))
        reports = ReportSpace(tuple(per_agent))

    objective, table = "welfare", None
    odoc = doc.get("objective", "welfare")
    if isinstance(odoc, str):
        if odoc not in ("welfare", "revenue"):
            raise ScenarioSemanticError([f"objective: unknown mode {odoc!r}"])
        objective = odoc
    elif isinstance(odoc, dict):
        objective = "explicit"
        keys = {profile_key(p): k for k, p in enumerate(prior)}
        extra = set(odoc) - set(keys)
        if extra:
            raise ScenarioSemanticError([f"objective: unknown type profile(s) {sorted(extra)}"])
        table = np.zeros((len(prior), len(outcomes)))
        for key, k in keys.items():
            row = odoc.get(key)
            if not isinstance(row, dict) or set(row) != set(outcomes):
                raise ScenarioSemanticError([f"objective.{key}: must map every outcome to a number"])
            for o_i, o in enumerate(outcomes):
                table[k, o_i] = _num(row[o], f"objective.{key}.{o}")
    else:
        raise ScenarioSemanticError(["objective: expected 'welfare', 'revenue' or an explicit table"])

    pdoc = doc.get("payments", {"mode": "none"})
    if not isinstance(pdoc, dict) or set(pdoc) - {"mode", "bound"}:
        raise ScenarioSemanticError(["payments: expected {'mode': ..., 'bound': ...}"])
    mode = pdoc.get("mode", "none")
    if mode not in PAYMENT_MODES:
        raise ScenarioSemanticError([f"payments: unknown mode {mode!r}"])
    bound = pdoc.get("bound")
    payments = PaymentsConfig(mode, None if bound is None else _num(bound, "payments.bound"))

    adversary = doc.get("adversary", "omniscient")
    if adversary not in ADVERSARIES:
        raise ScenarioSemanticError([f"adversary: unknown mode {adversary!r}"])
    return MechanismProblem(agents, outcomes, types, prior, reports, utility, objective, table, payments, adversary)


def _game_from_doc(doc: dict) -> StrictGame:
    unknown = set(doc) - _GAME_FIELDS
    if unknown:
        raise ScenarioSemanticError([f"unknown field(s) {sorted(unknown)}"])
    agents, types = _agents_and_types(doc)
    amap = doc["actions"]
    if not isinstance(amap, dict) or set(amap) != set(agents):
        raise ScenarioSemanticError(["actions: expected a map agent -> list of action names"])
    actions = [_str_list(amap[a], f"actions.{a}") for a in agents]
    shape = tuple(len(a) for a in actions)
    profiles = list(itertools.product(*actions))
    umap = doc["utility"]
    utility = []
    for i, (a, ts) in enumerate(zip(agents, types)):
        table = umap.get(a) if isinstance(umap, dict) else None
        if not isinstance(table, dict) or set(table) != set(ts):
            raise ScenarioSemanticError([f"utility.{a}: expected one table per type"])
        u = np.zeros(shape + (len(ts),))
        for t_i, t in enumerate(ts):
            row = table[t]
            keys = {profile_key(p) for p in profiles}
            if not isinstance(row, dict) or set(row) != keys:
                raise ScenarioSemanticError([f"utility.{a}.{t}: must map every action profile to a number"])
            for idx in itertools.product(*[range(n) for n in shape]):
                key = profile_key(actions[j][k] for j, k in enumerate(idx))
                u[idx + (t_i,)] = _num(row[key], f"utility.{a}.{t}.{key}")
        utility.append(u)
    prior = _parse_prior(doc, agents, types)
    return StrictGame(agents, actions, types, prior, utility)


def scenario_dict(obj: MechanismProblem | StrictGame) -> dict:
    """Inverse of :func:`parse_scenario`, as a JSON-ready dict."""
    if isinstance(obj, StrictGame):
        return _game_dict(obj)
    p = obj
    doc: dict[str, Any] = {
        "agents": list(p.agents),
        "types": {a: list(ts) for a, ts in zip(p.agents, p.types)},
        "outcomes": list(p.outcomes),
        "utility": {
            a: {t: {o: float(p.utility[i][o_i, t_i]) for o_i, o in enumerate(p.outcomes)} for t_i, t in enumerate(p.types[i])}
            for i, a in enumerate(p.agents)
        },
        "prior": [list(x) for x in p.prior],
    }
    if p.reports != ReportSpace.full_revelation(p.types):
        rdoc = {}
        for a, reps in zip(p.agents, p.reports.reports):
            if all(r.name == default_report_name(r.types) for r in reps):
                rdoc[a] = [list(r.types) for r in reps]
            else:
                rdoc[a] = {r.name: list(r.types) for r in reps}
        doc["reports"] = rdoc
    if p.objective == "explicit":
        doc["objective"] = {
            profile_key(th): {o: float(p.objective_table[k, o_i]) for o_i, o in enumerate(p.outcomes)}
            for k, th in enumerate(p.prior)
        }
    else:
        doc["objective"] = p.objective
    doc["payments"] = {"mode": p.payments.mode}
    if p.payments.bound is not None:
        doc["payments"]["bound"] = p.payments.bound
    doc["adversary"] = p.adversary
    return doc


def _game_dict(g: StrictGame) -> dict:
    shape = tuple(len(a) for a in g.actions)
    util = {}
    for i, a in enumerate(g.players):
        util[a] = {}
        for t_i, t in enumerate(g.types[i]):
            util[a][t] = {
                profile_key(g.actions[j][k] for j, k in enumerate(idx)): float(g.utility[i][idx + (t_i,)])
                for idx in itertools.product(*[range(n) for n in shape])
            }
    return {
        "agents": list(g.players),
        "types": {a: list(ts) for a, ts in zip(g.players, g.types)},
        "actions": {a: list(acts) for a, acts in zip(g.players, g.actions)},
        "utility": util,
        "prior": [list(x) for x in g.prior],
    }


def dump_scenario(obj: MechanismProblem | StrictGame) -> str:
    return json.dumps(scenario_dict(obj), indent=2)


# ---------------------------------------------------------------------------
# strategy profile documents: {agent: {type: {action: prob}}}


def parse_strategy_profile(game: StrictGame, doc: Mapping) -> dict[str, Strategy]:
    if set(doc) != set(game.players):
        raise ScenarioSemanticError(["strategy profile must give one strategy per agent"])
    out = {}
    for i, a in enumerate(game.players):
        rows = {}
        for t in game.types[i]:
            row = doc[a].get(t)
            if not isinstance(row, Mapping) or set(row) - set(game.actions[i]):
                raise ScenarioSemanticError([f"strategy {a}.{t}: expected a map action -> probability"])
            rows[t] = np.array([_num(row.get(act, 0.0), f"strategy {a}.{t}") for act in game.actions[i]])
        out[a] = Strategy(a, rows)
    problems = validate(out, game)
    if problems:
        raise ScenarioSemanticError(problems)
    return out


def strategy_profile_dict(game: StrictGame, profile: Mapping[str, Strategy]) -> dict:
    return {
        a: {t: {act: float(profile[a].rows[t][k]) for k, act in enumerate(game.actions[i])} for t in game.types[i]}
        for i, a in enumerate(game.players)
    }
