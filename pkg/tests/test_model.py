import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regretmd.model import (
    MechanismProblem,
    PaymentsConfig,
    Report,
    ReportSpace,
    ScenarioSemanticError,
    ScenarioSyntaxError,
    Strategy,
    StrictGame,
    consistent_profiles,
    consistent_types,
    dump_scenario,
    parse_scenario,
    parse_strategy_profile,
    truthful_report,
    validate,
)
from regretmd.scenarios import auction_problem, divorce_problem

DIVORCE_DOC = {
    "agents": ["husband", "wife"],
    "types": {"husband": ["low", "high"], "wife": ["low", "high"]},
    "outcomes": ["husband", "wife", "museum", "burn"],
    "utility": {
        "husband": {
            "low": {"husband": 2, "wife": 0, "museum": 1, "burn": -10},
            "high": {"husband": 100, "wife": 0, "museum": 50, "burn": -10},
        },
        "wife": {
            "low": {"husband": 0, "wife": 2, "museum": 1, "burn": -10},
            "high": {"husband": 0, "wife": 100, "museum": 50, "burn": -10},
        },
    },
}


def _one_agent_doc(**extra):
    doc = {
        "agents": ["1"],
        "types": {"1": ["t1", "t2"]},
        "outcomes": ["o1", "o2"],
        "utility": {"1": {"t1": {"o1": 1, "o2": 0}, "t2": {"o1": 1, "o2": 0}}},
    }
    doc.update(extra)
    return doc


def test_minimal_document_defaults():
    p = parse_scenario(json.dumps(_one_agent_doc()))
    assert p.prior == (("t1",), ("t2",))
    assert [r.types for r in p.reports.reports[0]] == [("t1",), ("t2",)]
    assert p.payments.mode == "none"
    assert p.objective == "welfare"
    assert p.adversary == "omniscient"


def test_divorce_document_matches_builtin():
    p = parse_scenario(json.dumps(DIVORCE_DOC))
    assert p.n_agents == 2 and p.n_outcomes == 4
    assert [len(t) for t in p.types] == [2, 2]
    ref = divorce_problem()
    for i in range(2):
        assert np.array_equal(p.utility[i], ref.utility[i])


def test_reports_must_partition():
    doc = _one_agent_doc(reports={"1": [["t1"]]})
    with pytest.raises(ScenarioSemanticError) as exc:
        parse_scenario(json.dumps(doc))
    assert "reports do not partition Θ_1" in exc.value.problems


def test_overlapping_reports_rejected():
    doc = _one_agent_doc(reports={"1": [["t1", "t2"], ["t2"]]})
    with pytest.raises(ScenarioSemanticError):
        parse_scenario(json.dumps(doc))


def test_named_reports_accepted():
    doc = _one_agent_doc(reports={"1": {"both": ["t1", "t2"]}})
    p = parse_scenario(json.dumps(doc))
    assert p.reports.names(0) == ("both",)


def test_revenue_without_payments_rejected():
    with pytest.raises(ScenarioSemanticError) as exc:
        parse_scenario(json.dumps(_one_agent_doc(objective="revenue")))
    assert "revenue objective requires payments mode other than none" in exc.value.problems


def test_syntax_error_has_position():
    with pytest.raises(ScenarioSyntaxError) as exc:
        parse_scenario('{"agents": ["a",\n  ]}')
    assert exc.value.line == 2


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.update(extra=1),
        lambda d: d["utility"]["1"]["t1"].update(o3=1),
        lambda d: d.update(prior=[["t9"]]),
        lambda d: d.update(payments={"mode": "sometimes"}),
        lambda d: d["utility"]["1"]["t1"].update(o1="high"),
        lambda d: d.update(adversary="lazy"),
    ],
)
def test_semantic_errors(mutate):
    doc = _one_agent_doc()
    mutate(doc)
    with pytest.raises(ScenarioSemanticError):
        parse_scenario(json.dumps(doc))


def test_non_finite_numbers_rejected():
    text = json.dumps(_one_agent_doc()).replace('"o1": 1', '"o1": NaN', 1)
    with pytest.raises(ScenarioSemanticError):
        parse_scenario(text)


def test_validate_examples():
    assert validate(divorce_problem()) == []
    s = Strategy("1", {"low": np.array([0.5, 0.4])})
    assert validate(s) == ["Strategy row not normalized: agent 1, type low"]
    empty = divorce_problem().replace(prior=())
    assert "prior T is empty" in validate(empty)


def test_validate_mutations_name_the_invariant():
    base = divorce_problem()
    cases = {
        "duplicate outcome names": base.replace(outcomes=("husband", "husband", "museum", "burn")),
        "unknown adversary mode 'x'": base.replace(adversary="x"),
        "payment bound must be positive": base.replace(payments=PaymentsConfig("free", -1.0)),
        "explicit objective table is not total over outcomes x prior": base.replace(objective="explicit"),
    }
    for expected, prob in cases.items():
        assert validate(prob) == [expected]


def test_truthful_report():
    space = ReportSpace.full_revelation((("low", "high"), ("low", "high")))
    assert [r.types for r in truthful_report(space, ("low", "high"))] == [("low",), ("high",)]
    coarse = ReportSpace.from_groups([[["t1", "t2"], ["t3"]]])
    assert truthful_report(coarse, ("t2",))[0].types == ("t1", "t2")
    assert [r.name for r in truthful_report(divorce_problem().reports, ("high", "low"))] == ["H", "L"]
    with pytest.raises(KeyError):
        truthful_report(space, ("low", "medium"))


def test_consistent_types():
    full = divorce_problem()
    assert consistent_types(full, "husband", "low") == {("low",), ("high",)}
    corr = auction_problem([1, 2, 3]).replace(prior=(("1", "1"), ("2", "2")))
    assert consistent_types(corr, "bidder1", "1") == {("1",)}
    assert consistent_types(corr, "bidder1", "3") == set()


def test_report_round_trip_property():
    p = divorce_problem()
    for theta in p.prior:
        assert theta in consistent_profiles(p, truthful_report(p.reports, theta))


def test_full_product_includes_profiles_outside_prior():
    p = auction_problem([0, 1]).replace(prior=(("0", "0"), ("1", "1")))
    assert p.n_profiles == 4
    assert sorted(set(p.truthful_profile.tolist())) == [0, 3]


@st.composite
def problems(draw):
    n_agents = draw(st.integers(1, 2))
    types = tuple(tuple(f"t{k}" for k in range(draw(st.integers(1, 3)))) for _ in range(n_agents))
    outcomes = tuple(f"o{k}" for k in range(draw(st.integers(1, 3))))
    vals = st.integers(-20, 20).map(float)
    utility = [np.array([[draw(vals) for _ in ts] for _ in outcomes]) for ts in types]
    groups = []
    for ts in types:
        cut = draw(st.integers(1, len(ts)))
        groups.append(tuple(g for g in (ts[:cut], ts[cut:]) if g))
    reports = ReportSpace(tuple(tuple(Report("+".join(g), g) for g in gs) for gs in groups))
    full = list(itertools.product(*types))
    keep = draw(st.lists(st.booleans(), min_size=len(full), max_size=len(full)))
    prior = tuple(th for th, k in zip(full, keep) if k) or (full[0],)
    mode = draw(st.sampled_from(["none", "balanced", "no-deficit", "free"]))
    objective = draw(st.sampled_from(["welfare", "explicit"] + (["revenue"] if mode != "none" else [])))
    table = np.array([[draw(vals) for _ in outcomes] for _ in prior]) if objective == "explicit" else None
    bound = draw(st.one_of(st.none(), st.floats(0.5, 50)))
    return MechanismProblem(
        tuple(f"a{i}" for i in range(n_agents)), outcomes, types, prior, reports, utility,
        objective, table, PaymentsConfig(mode, bound if mode != "none" else None),
        draw(st.sampled_from(["omniscient", "constrained"])),
    )


@settings(max_examples=60)
@given(problems())
def test_scenario_round_trip(p):
    assert validate(p) == []
    assert parse_scenario(dump_scenario(p)) == p


def test_game_round_trip_and_strategy_parse():
    u = (np.arange(8, dtype=float).reshape(2, 2, 2), -np.arange(4, dtype=float).reshape(2, 2, 1))
    g = StrictGame(("r", "c"), (("u", "d"), ("l", "m")), (("x", "y"), ("z",)), (("x", "z"), ("y", "z")), u)
    again = parse_scenario(dump_scenario(g))
    assert again == g
    prof = parse_strategy_profile(g, {"r": {"x": {"u": 1}, "y": {"d": 1}}, "c": {"z": {"l": 0.5, "m": 0.5}}})
    assert prof["c"].rows["z"].tolist() == [0.5, 0.5]
    with pytest.raises(ScenarioSemanticError):
        parse_strategy_profile(g, {"r": {"x": {"u": 1}, "y": {"d": 0.5}}, "c": {"z": {"l": 1}}})
