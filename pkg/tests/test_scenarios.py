import pytest

from regretmd.model import PaymentsConfig, validate
from regretmd.scenarios import (
    AUCTION5_VALUES,
    BUILTINS,
    GOLDENS,
    auction_problem,
    builtin,
    divorce_problem,
    golden_problem,
)


def test_divorce_utilities():
    p = divorce_problem()
    h, w = p.agent_pos("husband"), p.agent_pos("wife")
    assert p.utility[h][p.outcomes.index("husband"), 0] == 2
    assert p.utility[w][p.outcomes.index("burn"), 1] == -10
    assert p.utility[w][p.outcomes.index("wife"), 1] == 100
    assert p.utility[h][p.outcomes.index("wife"), 1] == 0
    f = p.social_choice
    assert f[p.theta_index(("high", "high")), p.outcomes.index("museum")] == 100
    assert len(p.prior) == 4


def test_auction_shapes():
    p = auction_problem(AUCTION5_VALUES)
    assert len(p.prior) == 25 and p.outcomes == ("win_1", "win_2", "no-sale")
    assert p.utility[0][1].tolist() == [0.0] * 5
    assert p.utility[0][0].tolist() == list(AUCTION5_VALUES)
    three = auction_problem([0.25, 0.5, 0.75])
    assert set(three.types[0]) <= set(p.types[0])
    f = p.social_choice
    assert f[p.theta_index(("0.25", "1")), 1] == 1.0
    assert f[:, 2].tolist() == [0.0] * 25


def test_auction_rejects_duplicates():
    with pytest.raises(ValueError):
        auction_problem([1, 1])
    with pytest.raises(ValueError):
        auction_problem([])


def test_builtins_validate():
    for name in BUILTINS:
        assert validate(builtin(name)) == []
    with pytest.raises(KeyError):
        builtin("nope")


def test_golden_registry():
    assert all(g.tolerance > 0 for g in GOLDENS)
    values = {(g.scenario, g.objective, g.payments): g.delta for g in GOLDENS}
    assert values[("divorce", "welfare", "none")] == 27.73
    assert values[("divorce", "revenue", "no-deficit")] == 44.546
    assert values[("divorce", "revenue", "free")] == 15.183
    assert values[("auction5", "revenue", "no-deficit")] == 0.3264
    assert values[("auction3", "revenue", "no-deficit")] == 0.1797
    for mode in ("balanced", "no-deficit", "free"):
        assert values[("divorce", "welfare", mode)] == 0.0
    for g in GOLDENS:
        assert validate(golden_problem(g)) == []


def test_revenue_builtin_needs_payments():
    assert validate(builtin("auction3", "revenue", PaymentsConfig("no-deficit"))) == []
    assert validate(builtin("auction3", "revenue")) != []
