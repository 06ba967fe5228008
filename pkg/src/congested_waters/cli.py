"""Command-line driver: ``congested-waters <command> [--preset NAME | --scenario FILE] ...``.

Results are rows of (scenario, quantity, key, value), written as CSV or JSON.
Exit codes: 0 success, 1 usage error, 2 solver did not converge, 3 invalid
scenario or sweep file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .model import ScenarioError, player_utility
from .scenario import SchemaError, emit_scenario, parse_scenario, preset, preset_names

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGED, EXIT_SCHEMA = 0, 1, 2, 3
COLUMNS = ("scenario", "quantity", "key", "value")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, float, np.floating, np.integer)):
        return f"{float(v):.6g}"
    return str(v)


def render(rows: list[tuple], fmt: str) -> str:
    if fmt == "json":
        out = [dict(zip(COLUMNS, (r[0], r[1], r[2], _jsonable(r[3])))) for r in rows]
        return json.dumps(out, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([r[0], r[1], r[2], _fmt(r[3])])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (np.floating, np.integer, int, float)):
        return float(v)
    return v


def _pairs(text: str, what: str) -> dict[str, float]:
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        if "=" not in item:
            raise UsageError(f"{what} entries must look like KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise UsageError(f"{what} value for {k!r} is not a number") from None
    return out


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"{what} must be comma-separated numbers") from None


def _load(args):
    if (args.preset is None) == (args.scenario is None):
        raise UsageError("give exactly one of --preset or --scenario")
    if args.preset is not None:
        try:
            return preset(args.preset)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
    return parse_scenario(Path(args.scenario))


# commands


def cmd_legal(sc, args):
    from .response import legal_strategy

    rows = []
    for k, pl in enumerate(sc.players):
        strat, u = legal_strategy(sc, k)
        for f, q in zip(pl.fisheries, strat.quotas):
            rows.append(("quota", f.id, q))
            rows.append(("biomass", f.id, f.Z * (1 - f.q * q / f.r)))
        rows.append(("mcs", pl.name, strat.m))
        rows.append(("utility", pl.name, u))
    return rows, EXIT_OK


def cmd_subgame(sc, args):
    from .subgame import solve_subgame, verify_sge

    if not args.quotas:
        raise UsageError("subgame needs --quotas FISHERY=VALUE,...")
    quotas = sc.quota_vector(_pairs(args.quotas, "--quotas"))
    mcs = sc.mcs_vector(_pairs(args.mcs, "--mcs")) if args.mcs else np.zeros(sc.n_players)
    sol = solve_subgame(sc, quotas, mcs, seed=args.seed)
    rows = []
    for i, f in enumerate(sc.fishery_ids):
        for t, ft in enumerate(sol.types):
            rows.append(("effort", f"{f}:{sc.fishery_ids[ft.licensed]}", sol.F[i, t]))
    rows += [("biomass", f, x) for f, x in zip(sc.fishery_ids, sol.biomass)]
    rows += [("utility", p, u) for p, u in zip(sc.player_names, player_utility(sc, sol.F, mcs=mcs))]
    rows.append(("status", "verified", verify_sge(sc, quotas, mcs, sol).ok))
    return rows, EXIT_OK


def _equilibrium_rows(sc, res):
    rows = [("quota", f, q) for f, q in zip(sc.fishery_ids, res.quotas)]
    rows += [("biomass", f, x) for f, x in zip(sc.fishery_ids, res.allocation.biomass)]
    rows += [("utility", p, u) for p, u in zip(sc.player_names, res.utilities)]
    rows += [("mcs", p, m) for p, m in zip(sc.player_names, res.mcs)]
    rows += [("status", "converged", res.converged), ("status", "rounds", res.rounds),
             ("status", "epsilon", res.epsilon)]
    return rows


def cmd_equilibrium(sc, args):
    from .equilibrium import find_equilibrium

    res = find_equilibrium(sc, tol=args.tol if args.tol is not None else 0.5, max_rounds=args.max_rounds,
                           free_mcs=args.free_mcs)
    if not res.converged:
        print(f"warning: best responses did not converge (epsilon {res.epsilon:.3g})", file=sys.stderr)
    return _equilibrium_rows(sc, res), EXIT_OK if res.converged else EXIT_NONCONVERGED


def cmd_check_legal_eq(sc, args):
    from .legal_analysis import AnalysisError, check_legal_equilibrium

    try:
        rep = check_legal_equilibrium(sc, deviation_tol=args.tol if args.tol is not None else 1e-4)
    except AnalysisError as exc:
        raise UsageError(str(exc)) from None
    rows = [("condition1", f"{c.fishermen}->{c.waters}", c.passed) for c in rep.condition1]
    for c in rep.condition2:
        if c.applicable:
            rows += [("condition2", c.deviator, c.passed), ("best_deviation_quota", c.deviator, c.best_quota),
                     ("best_deviation_utility", c.deviator, c.best_utility),
                     ("legal_utility", c.deviator, c.legal_utility)]
    for name, th in rep.thresholds.items():
        for target, F in th.F_direct.items():
            rows.append(("threshold_quota", f"{name}->{target}", F))
    rows += [("hypothesis", k, v) for k, v in rep.hypothesis.items()]
    verdict = rep.verdict
    rows.append(("verdict", "equilibrium", "inapplicable" if verdict is None else verdict))
    if rep.engine_verdict is not None:
        rows.append(("verdict", "best_response_check", rep.engine_verdict))
    if not args.quiet:
        print(f"equilibrium: {'inapplicable' if verdict is None else str(verdict).lower()}", file=sys.stderr)
    return rows, EXIT_OK


def cmd_bargain(sc, args):
    from .bargaining import BargainSpec, NPConfig, nash_bargain, normalize_alpha

    if not args.alpha:
        raise UsageError("bargain needs --alpha A1,A2,...")
    alpha = normalize_alpha(_floats(args.alpha, "--alpha"))
    if len(alpha) != sc.n_players:
        raise UsageError(f"--alpha needs {sc.n_players} values")
    status = EXIT_OK
    if args.threat:
        threat = np.array(_floats(args.threat, "--threat"))
        if len(threat) != sc.n_players:
            raise UsageError(f"--threat needs {sc.n_players} values")
    else:
        from .equilibrium import find_equilibrium

        res = find_equilibrium(sc)
        threat = res.utilities
        if not res.converged:
            print("warning: threat values come from a non-converged best-response run", file=sys.stderr)
    seed = args.seed if args.seed is not None else 0
    out = nash_bargain(sc, BargainSpec(threat, alpha), NPConfig(budget=args.budget, seed=seed), mode=args.mode)
    rows = [("threat", p, t) for p, t in zip(sc.player_names, threat)]
    rows.append(("status", "feasible", out.feasible))
    if out.feasible:
        d = out.decision
        for k, p in enumerate(sc.player_names):
            for i, f in enumerate(sc.fishery_ids):
                rows.append(("licensed_quota", f"{f}:{p}", d.cross[i, k]))
        rows += [("mcs", p, m) for p, m in zip(sc.player_names, d.mcs)]
        rows += [("mcs_spend", p, a1 * m ** a2) for p, m, a1, a2 in
                 zip(sc.player_names, d.mcs, sc.arrays["a1"], sc.arrays["a2"])]
        rows += [("utility", p, u) for p, u in zip(sc.player_names, out.utilities)]
        rows.append(("nash_product", "value", out.nash_product))
    else:
        print(f"infeasible: {out.message}", file=sys.stderr)
        rows += [("shortfall", p, s) for p, s in zip(sc.player_names, out.shortfall)]
        status = EXIT_NONCONVERGED
    rows += [("status", "evaluations", out.evaluations), ("status", "seed", seed)]
    return rows, status


def cmd_sweep(sc, args):
    from .sweep import SweepSpec, run_sweep

    spec = SweepSpec.from_document(Path(args.spec))
    result = run_sweep(sc, spec)
    rows = [(r["quantity"], f"{spec.path}={_fmt(r['value'])}:{r['key']}", r["result"]) for r in result]
    status = EXIT_OK
    if any(r["quantity"] == "status" and r["key"] == "converged" and not r["result"] for r in result):
        status = EXIT_NONCONVERGED
    return rows, status


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    src = common.add_argument_group("scenario")
    src.add_argument("--preset", help="built-in parameter set (see `preset --list`)")
    src.add_argument("--scenario", help="scenario JSON file")
    out = common.add_argument_group("output")
    out.add_argument("--out", help="write results here instead of stdout")
    out.add_argument("--format", choices=("csv", "json"), default="csv")
    out.add_argument("--seed", type=int, help="random seed (bargaining search, subgame flow splitting)")
    out.add_argument("--tol", type=float, help="convergence / verification tolerance")
    out.add_argument("--quiet", action="store_true", help="suppress diagnostics on stderr")

    p = _Parser(prog="congested-waters", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("legal", parents=[common], help="legal optimum of every player")
    s = sub.add_parser("subgame", parents=[common], help="fishermen's allocation for fixed quotas")
    s.add_argument("--quotas", help="FISHERY=QUOTA,...")
    s.add_argument("--mcs", help="PLAYER=LEVEL,...")
    s = sub.add_parser("equilibrium", parents=[common], help="noncooperative equilibrium by best responses")
    s.add_argument("--max-rounds", type=int, default=50)
    s.add_argument("--free-mcs", action="store_true", help="let players choose MCS levels too")
    sub.add_parser("check-legal-eq", parents=[common], help="is the legal profile an equilibrium?")
    s = sub.add_parser("bargain", parents=[common], help="Nash bargaining over licensed quotas and MCS")
    s.add_argument("--alpha", help="bargaining powers, comma-separated (normalized to sum 1)")
    s.add_argument("--threat", help="threat utilities; default: computed equilibrium utilities")
    s.add_argument("--budget", type=int, default=20_000, help="objective evaluations")
    s.add_argument("--mode", choices=("subgame", "direct"), default="subgame")
    s = sub.add_parser("sweep", parents=[common], help="one-parameter sweep from a JSON spec")
    s.add_argument("spec", help="sweep spec JSON file")
    s = sub.add_parser("preset", parents=[common], help="list presets or print one as JSON")
    s.add_argument("name", nargs="?")
    s.add_argument("--list", action="store_true")
    return p


COMMANDS = {"legal": cmd_legal, "subgame": cmd_subgame, "equilibrium": cmd_equilibrium,
            "check-legal-eq": cmd_check_legal_eq, "bargain": cmd_bargain, "sweep": cmd_sweep}


def _emit(text: str, args):
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        if args.command == "preset":
            if args.list or not args.name:
                _emit("\n".join(preset_names()) + "\n", args)
            else:
                try:
                    _emit(json.dumps(emit_scenario(preset(args.name)), indent=1) + "\n", args)
                except KeyError as exc:
                    raise UsageError(exc.args[0]) from None
            return EXIT_OK
        sc = _load(args)
        rows, status = COMMANDS[args.command](sc, args)
        name = sc.name or (Path(args.scenario).stem if args.scenario else "")
        _emit(render([(name, *r) for r in rows], args.format), args)
        return status
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SchemaError, ScenarioError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
