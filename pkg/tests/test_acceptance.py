"""End-to-end acceptance checks; each test prints one PASS/FAIL line per criterion."""

import json
import subprocess
import sys
import time

import pytest

from conftest import CRITERIA
from regretmd.mechanism import mechanism_to_dict
from regretmd.model import PaymentsConfig, dump_scenario
from regretmd.optimizer import CERTIFIED, SolveOptions, solve_mechanism
from regretmd.scenarios import builtin

TOL = 1e-6
_runs: dict[tuple, tuple] = {}


def solved(scenario, objective, payments, adversary):
    """Solve once per configuration; returns (result, seconds)."""
    key = (scenario, objective, payments, adversary)
    if key not in _runs:
        problem = builtin(scenario, objective, PaymentsConfig(payments), adversary)
        start = time.perf_counter()
        result = solve_mechanism(problem, SolveOptions(tolerance=TOL))
        _runs[key] = (result, time.perf_counter() - start)
    return _runs[key]


def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    CRITERIA.append(line)
    print(line)
    assert ok, line


def test_criterion_1_divorce_welfare():
    res, secs = solved("divorce", "welfare", "none", "omniscient")
    ok = abs(res.delta - 27.73) <= 0.05 and res.status == CERTIFIED and secs < 10
    report(1, ok, f"delta {res.delta:.6f} (27.73 ± 0.05), {res.status}, {secs:.1f}s")


def test_criterion_2_divorce_welfare_with_payments():
    parts, ok = [], True
    for mode in ("balanced", "no-deficit", "free"):
        res, secs = solved("divorce", "welfare", mode, "omniscient")
        ok &= res.delta <= 1e-6 and secs < 30
        parts.append(f"{mode} {res.delta:.2e} {secs:.1f}s")
    report(2, ok, "; ".join(parts))


def _payments_at_high_profiles(res):
    """Payments (negated transfers) at deterministic report profiles containing a high type."""
    p = res.problem
    out = {}
    for theta in p.prior:
        if "high" not in theta:
            continue
        k = p.truthful_profile[p.theta_index(theta)]
        row = res.mechanism.outcome_rule[k]
        if row.max() < 1 - 1e-6:
            continue
        out["/".join(theta)] = float(-res.mechanism.transfers[:, k].sum())
    return out


def test_criterion_3_divorce_revenue_no_deficit():
    res, secs = solved("divorce", "revenue", "no-deficit", "omniscient")
    ok = abs(res.delta - 44.546) <= 0.01 and secs < 30
    pays = _payments_at_high_profiles(res)
    matched = all(abs(v - 55.4545) <= 0.01 for v in pays.values())
    # the payment check only binds when the optimum matches the reference one
    info = "payments " + ", ".join(f"{k} {v:.4f}" for k, v in pays.items())
    info += " (match)" if matched else " (alternative optimum, informative)"
    report(3, ok, f"delta {res.delta:.6f} (44.546 ± 0.01), {secs:.1f}s; {info}")


def test_criterion_4_divorce_revenue_free():
    res, secs = solved("divorce", "revenue", "free", "omniscient")
    ok = abs(res.delta - 15.183) <= 0.01 and secs < 30
    report(4, ok, f"delta {res.delta:.6f} (15.183 ± 0.01), {secs:.1f}s")


def test_criterion_5_auctions():
    parts, ok = [], True
    for scen in ("auction5", "auction3"):
        res, secs = solved(scen, "welfare", "no-deficit", "constrained")
        ok &= res.delta <= 1e-6 and secs < 300
        parts.append(f"{scen} welfare {res.delta:.2e} {secs:.0f}s")
    for scen, target in (("auction5", 0.3264), ("auction3", 0.1797)):
        res, secs = solved(scen, "revenue", "no-deficit", "constrained")
        hit = abs(res.delta - target) <= 0.01
        # a miss is acceptable only with a certified-feasible mechanism and a reported gap
        ok &= secs < 300 and (hit or res.status == CERTIFIED)
        tag = "on target" if hit else f"MISS gap {res.delta - target:+.4f}, {res.status}"
        parts.append(f"{scen} revenue {res.delta:.4f} vs {target} {tag} {secs:.0f}s")
    report(5, ok, "; ".join(parts))


CONFIGS = (
    ("divorce", "welfare", "none"),
    ("divorce", "welfare", "balanced"),
    ("divorce", "revenue", "no-deficit"),
    ("divorce", "revenue", "free"),
    ("auction3", "welfare", "no-deficit"),
    ("auction3", "revenue", "no-deficit"),
    ("auction5", "welfare", "no-deficit"),
    ("auction5", "revenue", "no-deficit"),
)


def test_criterion_6_adversary_modes_agree():
    worst, where = 0.0, None
    for cfg in CONFIGS:
        a, _ = solved(*cfg, "omniscient")
        b, _ = solved(*cfg, "constrained")
        gap = abs(a.delta - b.delta)
        if gap >= worst:
            worst, where = gap, "/".join(cfg)
    report(6, worst <= 2 * TOL, f"max |omniscient - constrained| {worst:.2e} at {where} over {len(CONFIGS)} configurations")


def test_criterion_7_oracle_suites():
    suites = [
        "tests/test_lp.py::test_matches_vertex_enumeration",
        "tests/test_regret.py::test_regret_values_match_enumeration",
        "tests/test_optimizer.py::test_solve_trivial_and_grid_oracle",
        "tests/test_optimizer.py::test_decomposition_equals_mip_bruteforce",
    ]
    start = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *suites],
                          capture_output=True, text=True, timeout=600)
    secs = time.perf_counter() - start
    summary = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    report(7, proc.returncode == 0 and secs < 120, f"{summary} ({secs:.1f}s)")


def test_criterion_8_certified_runs_reverify(tmp_path):
    if not _runs:
        pytest.skip("no runs to re-verify")
    failures, checked = [], 0
    for (scen, obj, pay, adv), (res, _) in sorted(_runs.items()):
        if res.status != CERTIFIED:
            continue
        name = f"{scen}-{obj}-{pay}-{adv}"
        scenario = tmp_path / f"{name}.scenario.json"
        scenario.write_text(dump_scenario(res.problem))
        doc = mechanism_to_dict(res.problem, res.mechanism)
        doc["delta"] = res.delta
        mech = tmp_path / f"{name}.mechanism.json"
        mech.write_text(json.dumps(doc))
        proc = subprocess.run(
            [sys.executable, "-m", "regretmd", "verify", "--scenario", str(scenario), "--mechanism", str(mech),
             "--tolerance", str(TOL)],
            capture_output=True, text=True, timeout=600,
        )
        checked += 1
        if proc.returncode != 0:
            failures.append(f"{name}: exit {proc.returncode}")
    detail = f"{checked} certified runs re-verified in a separate process"
    report(8, checked > 0 and not failures, detail + ("" if not failures else "; " + "; ".join(failures)))
