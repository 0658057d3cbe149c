"""Command-line entry point: ``intermodal <subcommand> <input> [flags]``.

Exit codes: 0 success, 1 solver stopped short of optimality (artifacts are
still written), 2 input or parameter error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
from pathlib import Path

from .errors import InputError, NumericalBreakdown, PlannerError
from .experiments import SweepSpec, cost_breakdown, run_capacity_grid, run_emissions_grid, run_risk_grid
from .io import RunManifest, load, resolve_input, to_document, write_json
from .model import RiskParams, build_milp, to_lp_text
from .pipeline import solve_instance
from .risk import stochastic_values, write_stochastic_values_csv
from .solver import SolverConfig

log = logging.getLogger("intermodal")

COMMANDS = ("validate", "solve", "sweep-risk", "sweep-emissions", "sweep-capacity", "metrics", "breakdown",
            "gen-scenarios", "export-lp")

EXIT_OK, EXIT_NOT_OPTIMAL, EXIT_INPUT = 0, 1, 2


def _configure_logging() -> None:
    level = os.environ.get("PLANNER_LOG", "WARNING").strip().upper()
    value = int(level) if level.isdigit() else getattr(logging, level, logging.WARNING)
    logging.basicConfig(level=value, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="intermodal", description="Risk-aware container planning on intermodal trains")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("input", help="instance JSON path, or a bundled name (tiny, medium, capacity)")
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="CVaR weight in [0, 1]")
    p.add_argument("--alpha", type=float, default=None, help="CVaR confidence level in [0, 1)")
    p.add_argument("--epsilon", type=float, default=None, help="emission cap override (instance units)")
    p.add_argument("--gap", type=float, default=1e-6, help="relative optimality gap")
    p.add_argument("--time-limit", type=float, default=None, help="seconds per MILP solve")
    p.add_argument("--seed", type=int, default=None, help="scenario sampling and tie-break seed")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1, help="parallel sweep cells")
    p.add_argument("--use-transfer", action="store_true", help="add transfer times and costs to dispatch arcs")
    p.add_argument("--output", default="out", help="output directory")
    p.add_argument("--no-linking", action="store_true", help="omit the route-activation binaries")
    return p


def _check_args(args) -> None:
    if args.lam is not None:
        RiskParams(args.lam, 0.5)
    if args.alpha is not None:
        RiskParams(0.0, args.alpha)
    if args.epsilon is not None and args.epsilon < 0:
        raise PlannerError("BAD_EPSILON", "--epsilon must be >= 0")
    if args.gap <= 0:
        raise PlannerError("BAD_GAP", "--gap must be > 0")
    if args.time_limit is not None and args.time_limit <= 0:
        raise PlannerError("BAD_TIME_LIMIT", "--time-limit must be > 0")
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        raise PlannerError("BAD_SEED", "--seed must be an unsigned 64-bit integer")
    if args.workers < 1:
        raise PlannerError("BAD_WORKERS", "--workers must be >= 1")


def _write_node_log(path: Path):
    fh = open(path, "w", newline="", encoding="utf-8")
    writer = csv.writer(fh)
    writer.writerow(("node", "bound", "incumbent", "gap", "time"))
    return fh, lambda row: writer.writerow(row)


def run(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    out_dir = Path(args.output)
    config = {k: v for k, v in vars(args).items()}
    config["lambda"] = config.pop("lam")
    manifest = RunManifest(command=args.command, config=config)
    try:
        _check_args(args)
        path = resolve_input(args.input)
        manifest.add_input(path)
        with manifest.stage("load"):
            inst, scen = load(path, seed=args.seed)
    except (InputError, PlannerError) as exc:
        _report_input_error(exc)
        return EXIT_INPUT

    if args.command == "validate":
        print(f"ok: {len(inst.origins)} origins, {len(inst.hubs)} hubs, {len(inst.trains)} trains, "
              f"{inst.periods} periods, {len(scen)} scenarios")
        return EXIT_OK

    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = SolverConfig(gap=args.gap, time_limit=args.time_limit, seed=args.seed or 0)
    lam = 0.0 if args.lam is None else args.lam
    alpha = 0.75 if args.alpha is None else args.alpha
    code = EXIT_OK
    node_fh = None
    try:
        if args.command == "solve":
            if log.isEnabledFor(logging.DEBUG):
                node_fh, cfg.node_log = _write_node_log(out_dir / "node_log.csv")
                manifest.outputs.append("node_log.csv")
            with manifest.stage("solve"):
                res = solve_instance(inst, scen, RiskParams(lam, alpha), cfg, epsilon=args.epsilon,
                                     use_transfer=args.use_transfer, linking=not args.no_linking)
            r = res.result
            payload = {"status": r.status, "objective": r.objective, "bound": r.bound, "gap": r.gap,
                       "nodes": r.nodes, "wall_time": r.wall_time,
                       "plan": res.plan.to_dict() if res.plan else None}
            write_json(out_dir / "plan.json", payload)
            manifest.outputs.append("plan.json")
            print(f"{r.status}: objective {r.objective:.6f} (bound {r.bound:.6f}, {r.nodes} nodes)")
            code = EXIT_OK if r.status == "optimal" else EXIT_NOT_OPTIMAL

        elif args.command in ("sweep-risk", "sweep-emissions", "sweep-capacity"):
            kw = dict(use_transfer=args.use_transfer, linking=not args.no_linking, workers=args.workers)
            if args.command == "sweep-risk":
                spec = SweepSpec("risk-grid", epsilon=args.epsilon, **kw)
                fn, name = run_risk_grid, "risk_grid"
            elif args.command == "sweep-emissions":
                spec = SweepSpec.emissions(**kw)
                fn, name = run_emissions_grid, "emissions_grid"
            else:
                spec = SweepSpec("capacity-grid", epsilon=args.epsilon, **kw)
                fn, name = run_capacity_grid, "capacity_grid"
            if args.lam is not None:
                spec.lambdas = (args.lam,)
            if args.alpha is not None:
                spec.alphas = (args.alpha,)
            if args.command == "sweep-emissions" and args.epsilon is not None:
                spec.epsilons = (args.epsilon,)
            with manifest.stage("sweep"):
                table = fn(inst, scen, spec, cfg)
            table.to_csv(out_dir / f"{name}.csv")
            table.write_sidecar(out_dir / f"{name}.json")
            manifest.outputs += [f"{name}.csv", f"{name}.json"]
            print(f"{len(table.rows)} rows written to {out_dir / (name + '.csv')}")
            code = EXIT_OK if not table.failures else EXIT_NOT_OPTIMAL

        elif args.command == "metrics":
            with manifest.stage("metrics"):
                rep = stochastic_values(inst, scen, cfg, alpha=alpha, workers=args.workers,
                                        use_transfer=args.use_transfer, epsilon=args.epsilon)
            write_stochastic_values_csv(out_dir / "stochastic_values.csv", [rep])
            manifest.outputs.append("stochastic_values.csv")
            print(f"EEV {rep.eev:.4f}  SS {rep.ss:.4f}  WS {rep.ws:.4f}  VSS {rep.vss:.4f}  EVPI {rep.evpi:.4f}")
            code = EXIT_OK if not rep.unavailable else EXIT_NOT_OPTIMAL

        elif args.command == "breakdown":
            with manifest.stage("solve"):
                res = solve_instance(inst, scen, RiskParams(lam, alpha), cfg, epsilon=args.epsilon,
                                     use_transfer=args.use_transfer, linking=not args.no_linking)
            if res.plan is not None:
                rep = cost_breakdown(res.plan)
                rep.to_csv(out_dir / "breakdown.csv")
                manifest.outputs.append("breakdown.csv")
                print(", ".join(f"{k} {v:.1f}%" for k, v in rep.shares.items()))
            code = EXIT_OK if res.status == "optimal" else EXIT_NOT_OPTIMAL

        elif args.command == "gen-scenarios":
            write_json(out_dir / "scenarios.json", to_document(inst, scen))
            manifest.outputs.append("scenarios.json")
            print(f"{len(scen)} scenarios written to {out_dir / 'scenarios.json'}")

        elif args.command == "export-lp":
            model = build_milp(inst, scen, RiskParams(lam, alpha), epsilon_override=args.epsilon,
                               use_transfer=args.use_transfer, linking=not args.no_linking)
            (out_dir / "model.lp").write_text(to_lp_text(model), encoding="utf-8")
            manifest.outputs.append("model.lp")
            print(f"{model.n_vars} variables, {model.n_rows} rows written to {out_dir / 'model.lp'}")
    except NumericalBreakdown as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        code = EXIT_NOT_OPTIMAL
    except PlannerError as exc:
        _report_input_error(exc)
        return EXIT_INPUT
    finally:
        if node_fh is not None:
            node_fh.close()

    manifest.exit_code = code
    manifest.wall_time = time.perf_counter() - t0
    manifest.write(out_dir)
    return code


def _report_input_error(exc: PlannerError) -> None:
    print(f"error: {exc}", file=sys.stderr)
    for v in getattr(exc, "violations", [])[:50]:
        print(f"  {v}", file=sys.stderr)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
