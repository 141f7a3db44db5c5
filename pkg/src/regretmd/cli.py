"""Command-line driver.

Exit codes: 0 success / certified, 1 checks failed, 2 input error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .lp import LpError, format_lp
from .mechanism import (
    Mechanism,
    mechanism_from_dict,
    mechanism_to_dict,
    verify_epr,
    verify_ic,
    verify_simplex,
)
from .model import (
    ADVERSARIES,
    PAYMENT_MODES,
    MechanismProblem,
    PaymentsConfig,
    ScenarioError,
    StrictGame,
    dump_scenario,
    load_scenario,
    parse_strategy_profile,
    profile_key,
    strategy_profile_dict,
    validate,
)
from .optimizer import OptimizerError, SolveOptions, adversary_regrets, solve_mechanism
from .regret import (
    best_response_dynamics,
    check_equilibrium,
    minimax_best_response,
    strategy_max_regret,
    uniform_profile,
)
from .scenarios import BUILTINS, GOLDENS, builtin

EXIT_OK, EXIT_CHECKS, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", required=True, help="scenario file or builtin name (" + ", ".join(BUILTINS) + ")")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.add_argument("--out", type=Path, help="also write the primary output to this file")


def _overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--objective", choices=("welfare", "revenue", "custom"))
    p.add_argument("--payments", choices=PAYMENT_MODES)
    p.add_argument("--payment-bound", type=float)
    p.add_argument("--adversary", choices=ADVERSARIES)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--max-iters", type=int, default=100)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="regretmd", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="compute a minimax-regret mechanism")
    _common(solve)
    _overrides(solve)
    solve.add_argument("--ic-cuts", choices=("max", "all"), default="max")
    solve.add_argument("--no-polish", action="store_true", help="skip the second-stage tie-break LP")
    solve.add_argument("--trace", action="store_true", help="print one line per outer iteration to stderr")
    solve.add_argument("--dump-lp", type=Path, help="write the final master LP as text")
    solve.add_argument("--seed", type=int, help="accepted for interface uniformity; the solver is deterministic")

    verify = sub.add_parser("verify", help="check a mechanism file against a scenario")
    _common(verify)
    _overrides(verify)
    verify.add_argument("--mechanism", required=True, type=Path)

    game = sub.add_parser("game", help="minimax-regret analysis of a strict-uncertainty game")
    gsub = game.add_subparsers(dest="game_command", required=True)
    for name in ("regret", "best-response", "equilibrium"):
        g = gsub.add_parser(name)
        _common(g)
        g.add_argument("--strategy", type=Path, help="strategy profile file {agent: {type: {action: prob}}}")
        g.add_argument("--tolerance", type=float, default=1e-7)
        g.add_argument("--prior-independent", action="store_true", help="range opponent types over the full product")
        if name == "best-response":
            g.add_argument("--agent", required=True, help="agent name or 1-based position")
        if name == "equilibrium":
            mode = g.add_mutually_exclusive_group(required=True)
            mode.add_argument("--check", action="store_true")
            mode.add_argument("--search", action="store_true")
            g.add_argument("--max-iters", type=int, default=200)
            g.add_argument("--seed", type=int, help="random initial profile for --search (default: uniform)")

    export = sub.add_parser("export", help="write a scenario (e.g. a builtin) in the scenario file format")
    export.add_argument("--scenario", required=True)
    export.add_argument("--out", type=Path)
    _overrides(export)
    return parser


# ---------------------------------------------------------------------------
# scenario resolution


def load(source: str):
    if source in BUILTINS:
        return builtin(source)
    path = Path(source)
    if not path.exists():
        raise InputError(f"scenario {source!r} is neither a file nor a builtin ({', '.join(BUILTINS)})")
    return load_scenario(path)


def apply_overrides(problem: MechanismProblem, args) -> MechanismProblem:
    changes = {}
    if args.objective is not None:
        if args.objective == "custom":
            if problem.objective_table is None:
                raise InputError("--objective custom needs a scenario with an explicit objective table")
            changes["objective"] = "explicit"
        else:
            changes["objective"] = args.objective
    if args.payments is not None or args.payment_bound is not None:
        mode = args.payments if args.payments is not None else problem.payments.mode
        bound = args.payment_bound if args.payment_bound is not None else problem.payments.bound
        changes["payments"] = PaymentsConfig(mode, bound)
    if args.adversary is not None:
        changes["adversary"] = args.adversary
    out = problem.replace(**changes) if changes else problem
    problems = validate(out)
    if problems:
        raise InputError("; ".join(problems))
    return out


def load_problem(args) -> MechanismProblem:
    obj = load(args.scenario)
    if not isinstance(obj, MechanismProblem):
        raise InputError("scenario describes a game, not a mechanism design problem")
    return apply_overrides(obj, args)


def _emit(text: str, args) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")
    if getattr(args, "out", None) is not None:
        args.out.write_text(text if text.endswith("\n") else text + "\n")


def _json(doc) -> str:
    return json.dumps(doc, indent=2)


def _f(x: float, digits: int) -> str:
    # avoid printing -0.0000
    v = round(float(x), digits)
    return f"{v + 0.0:.{digits}f}"


# ---------------------------------------------------------------------------
# tables


def _table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(r[c]) for r in [header] + rows) for c in range(len(header))]
    lines = ["  ".join(cell.rjust(w) if c else cell.ljust(w) for c, (cell, w) in enumerate(zip(r, widths))) for r in [header] + rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def profile_regrets(problem: MechanismProblem, regrets: np.ndarray) -> dict[int, float]:
    """Worst adversary regret over the prior members reporting each profile."""
    out: dict[int, float] = {}
    for r, k in enumerate(problem.truthful_profile):
        out[int(k)] = max(out.get(int(k), -np.inf), float(regrets[r]))
    return out


def mechanism_table(problem: MechanismProblem, mech: Mechanism, regrets: np.ndarray | None, tol: float) -> str:
    per_profile = profile_regrets(problem, regrets) if regrets is not None else {}
    worst = max(per_profile.values(), default=None)
    header = ["profile"] + list(problem.outcomes) + (["regret"] if regrets is not None else [])
    rows = []
    for k in range(problem.n_profiles):
        row = [profile_key(problem.profile_names(k))] + [_f(v, 6) for v in mech.outcome_rule[k]]
        if regrets is not None:
            if k in per_profile:
                mark = "*" if per_profile[k] >= worst - tol else " "
                row.append(_f(per_profile[k], 4) + mark)
            else:
                row.append("- ")
        rows.append(row)
    text = "outcome rule\n" + _table(header, rows)
    if mech.transfers is not None:
        trows = [[profile_key(problem.profile_names(k))] + [_f(mech.transfers[i, k], 4) for i in range(problem.n_agents)]
                 for k in range(problem.n_profiles)]
        text += "\n\ntransfers (paid to the agent; negative means the agent pays)\n" + _table(["profile"] + list(problem.agents), trows)
    if regrets is not None:
        text += "\n\n* profile where the worst-case regret is incurred; '-' marks profiles outside S(T)"
    return text


def _report_line(name: str, rep, digits: int = 4) -> list[str]:
    lines = [f"{name:<10} {'pass' if rep.passed else 'FAIL'}  worst violation {rep.worst_violation:.3e}"]
    for kind, where, amount in rep.witnesses[:5]:
        lines.append(f"    {kind} {where}: {_f(amount, digits)}")
    if len(rep.witnesses) > 5:
        lines.append(f"    ... {len(rep.witnesses) - 5} more")
    return lines


def _witness_doc(rep) -> dict:
    return {
        "passed": rep.passed,
        "worstViolation": rep.worst_violation,
        "witnesses": [{"kind": k, "where": _plain(w), "amount": a} for k, w, a in rep.witnesses],
    }


def _plain(x):
    if isinstance(x, (tuple, list)):
        return [_plain(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    return x


def reference_for(args, problem: MechanismProblem):
    if args.scenario not in BUILTINS:
        return None
    for g in GOLDENS:
        if (g.scenario, g.objective, g.payments) == (args.scenario, problem.objective, problem.payments.mode):
            return g
    return None


# ---------------------------------------------------------------------------
# commands


def cmd_solve(args) -> int:
    problem = load_problem(args)
    trace = (lambda line: print(line, file=sys.stderr)) if args.trace else None
    opts = SolveOptions(
        tolerance=args.tolerance, max_outer_iters=args.max_iters, ic_cuts=args.ic_cuts,
        polish=not args.no_polish, trace=trace,
    )
    result = solve_mechanism(problem, opts)
    problem = result.problem
    diag = result.diagnostics
    if args.dump_lp is not None and result.master is not None:
        args.dump_lp.write_text(format_lp(result.master.to_lp(), result.master.layout.names()) + "\n")
    ref = reference_for(args, problem)
    if args.format == "json":
        doc = mechanism_to_dict(problem, result.mechanism)
        doc["delta"] = result.delta
        doc["status"] = result.status
        doc["diagnostics"] = diag.as_dict()
        if ref is not None:
            doc["diagnostics"]["reference"] = {"delta": ref.delta, "gap": result.delta - ref.delta}
        _emit(_json(doc), args)
    else:
        regrets = adversary_regrets(problem, result.mechanism, opts, result.master.adversary_cache if result.master else None)
        head = [
            f"scenario {args.scenario}  objective {problem.objective}  payments {problem.payments.mode}  adversary {problem.adversary}",
            f"delta {_f(result.delta, 4)}  status {result.status}  iterations {diag.outer_iterations}"
            f"  regret cuts {diag.regret_cuts}  IC cuts {diag.ic_cuts}",
        ]
        if ref is not None:
            head.append(f"reference delta {ref.delta:g} (±{ref.tolerance:g})  gap {result.delta - ref.delta:+.4f}")
        body = mechanism_table(problem, result.mechanism, regrets, args.tolerance)
        checks = (
            _report_line("IC", diag.ic) + _report_line("EPR", diag.epr) + _report_line("simplex", diag.simplex)
            + [f"adversary  max regret {_f(diag.adversary_regret, 4)} at {profile_key(diag.adversary_witness)}"]
        )
        _emit("\n".join(head) + "\n\n" + body + "\n\n" + "\n".join(checks), args)
    return EXIT_OK if result.certified else EXIT_CHECKS


def cmd_verify(args) -> int:
    problem = load_problem(args)
    try:
        doc = json.loads(args.mechanism.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read mechanism file: {exc}") from exc
    try:
        mech = mechanism_from_dict(problem, doc)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise InputError(f"mechanism file: {exc}") from exc
    tol = args.tolerance
    ic = verify_ic(problem, mech, tol)
    epr = verify_epr(problem, mech, tol)
    simplex = verify_simplex(problem, mech, max(tol, 1e-7))
    opts = SolveOptions(tolerance=tol, max_outer_iters=args.max_iters)
    regrets = adversary_regrets(problem, mech, opts)
    worst = int(np.argmax(regrets))
    regret = float(regrets[worst])
    claimed = doc.get("delta") if isinstance(doc, dict) else None
    tight = True
    if claimed is not None:
        tight = abs(max(regret, 0.0) - float(claimed)) <= tol
    passed = ic.passed and epr.passed and simplex.passed and tight
    if args.format == "json":
        out = {
            "passed": passed,
            "ic": _witness_doc(ic),
            "epr": _witness_doc(epr),
            "simplex": _witness_doc(simplex),
            "adversary": {
                "maxRegret": regret,
                "witness": list(problem.prior[worst]),
                "claimedDelta": claimed,
                "tight": tight,
            },
        }
        _emit(_json(out), args)
    else:
        lines = _report_line("IC", ic) + _report_line("EPR", epr) + _report_line("simplex", simplex)
        adv = f"adversary  max regret {_f(regret, 4)} at {profile_key(problem.prior[worst])}"
        if claimed is not None:
            adv += f"  claimed delta {_f(claimed, 4)}  {'tight' if tight else 'NOT TIGHT'}"
        lines.append(adv)
        lines.append("all checks passed" if passed else "checks FAILED")
        _emit("\n".join(lines), args)
    return EXIT_OK if passed else EXIT_CHECKS


def _load_game(args) -> StrictGame:
    obj = load(args.scenario)
    if not isinstance(obj, StrictGame):
        raise InputError("scenario is a mechanism design problem; game commands need a file with 'actions'")
    return obj


def _load_profile(game: StrictGame, path: Path | None):
    if path is None:
        raise InputError("--strategy is required for this command")
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read strategy file: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError("strategy file must be a JSON object")
    return parse_strategy_profile(game, doc)


def _agent_arg(game: StrictGame, value: str) -> str:
    if value in game.players:
        return value
    if value.isdigit() and 1 <= int(value) <= game.n_agents:
        return game.players[int(value) - 1]
    raise InputError(f"unknown agent {value!r}")


def _strategy_rows(game: StrictGame, i: int, strategy) -> list[list[str]]:
    return [[t] + [_f(v, 6) for v in strategy.rows[t]] for t in game.types[i]]


def cmd_game(args) -> int:
    game = _load_game(args)
    pi = args.prior_independent
    if args.game_command == "regret":
        profile = _load_profile(game, args.strategy)
        doc, rows = {}, []
        for i, a in enumerate(game.players):
            doc[a] = {}
            for t in game.types[i]:
                rep = strategy_max_regret(game, a, t, profile, prior_independent=pi)
                wit = None if rep.witness is None else {"opponents": list(rep.witness[0]), "action": rep.witness[1]}
                doc[a][t] = {"maxRegret": rep.value, "witness": wit}
                w = "-" if rep.witness is None else f"{profile_key(rep.witness[0]) or '()'} -> {rep.witness[1]}"
                rows.append([a, t, _f(rep.value, 4), w])
        text = _json(doc) if args.format == "json" else _table(["agent", "type", "max regret", "witness (opponent types -> deviation)"], rows)
        _emit(text, args)
        return EXIT_OK

    if args.game_command == "best-response":
        agent = _agent_arg(game, args.agent)
        i = game.agent_pos(agent)
        profile = _load_profile(game, args.strategy) if args.strategy else uniform_profile(game)
        strat, gammas = minimax_best_response(game, agent, profile, prior_independent=pi)
        if args.format == "json":
            text = _json({
                "agent": agent,
                "strategy": {t: {act: float(strat.rows[t][k]) for k, act in enumerate(game.actions[i])} for t in game.types[i]},
                "gamma": {t: gammas.get(t) for t in game.types[i]},
            })
        else:
            rows = [r + [_f(gammas[r[0]], 4) if gammas.get(r[0]) is not None else "-"] for r in _strategy_rows(game, i, strat)]
            text = f"minimax best response of {agent}\n" + _table(["type"] + list(game.actions[i]) + ["gamma*"], rows)
        _emit(text, args)
        return EXIT_OK

    if args.check:
        profile = _load_profile(game, args.strategy)
        cert = check_equilibrium(game, profile, tol=args.tolerance, prior_independent=pi)
        if args.format == "json":
            text = _json({
                "isEquilibrium": cert.is_equilibrium,
                "tolerance": cert.tolerance,
                "slack": [{"agent": a, "type": t, "slack": v} for (a, t), v in cert.slack.items()],
            })
        else:
            rows = [[a, t, _f(v, 4)] for (a, t), v in cert.slack.items()]
            text = f"isEquilibrium {str(cert.is_equilibrium).lower()}\n" + _table(["agent", "type", "slack"], rows)
        _emit(text, args)
        return EXIT_OK if cert.is_equilibrium else EXIT_CHECKS

    initial = None
    if args.strategy is not None:
        initial = _load_profile(game, args.strategy)
    elif args.seed is not None:
        initial = random_profile(game, args.seed)
    res = best_response_dynamics(game, initial, max_iters=args.max_iters, tol=args.tolerance)
    if args.format == "json":
        text = _json({"status": res.status, "iterations": res.iterations, "profile": strategy_profile_dict(game, res.profile)})
    else:
        parts = [f"status {res.status}  iterations {res.iterations}"]
        for i, a in enumerate(game.players):
            parts.append(f"\n{a}\n" + _table(["type"] + list(game.actions[i]), _strategy_rows(game, i, res.profile[a])))
        text = "\n".join(parts)
    _emit(text, args)
    return EXIT_OK if res.status == "converged" else EXIT_CHECKS


def random_profile(game: StrictGame, seed: int):
    from .model import Strategy

    rng = np.random.default_rng(seed)
    return {
        a: Strategy(a, {t: rng.dirichlet(np.ones(len(game.actions[i]))) for t in game.types[i]})
        for i, a in enumerate(game.players)
    }


def cmd_export(args) -> int:
    obj = load(args.scenario)
    if isinstance(obj, MechanismProblem):
        obj = apply_overrides(obj, args)
    _emit(dump_scenario(obj), args)
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "game": cmd_game, "export": cmd_export}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (LpError, OptimizerError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
