"""Command-line entry point: simulate, calibrate, audit, report, sweep."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import analysis, calibration
from .config import ConfigBundle, apply_overrides, config_from_dict, default_config_path, load_config
from .curriculum import CurriculumError
from .engine import ConfigError, run_experiment, write_config_effective
from .population import ArchetypeTableError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_AUDIT_FAILED = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; 2 is reserved for audit failures here.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=default_config_path(), help="experiment config JSON")
    p.add_argument("--seed", type=int, default=None, help="override master_seed")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="dotted-path config override (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cohortsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the full experiment and write all output files")
    _add_config_args(p)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for replications")

    p = sub.add_parser("calibrate", help="fit the historical scenario to the empirical dropout curve")
    _add_config_args(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--tolerance", type=float, default=None, help="acceptance RMSE (default from config, 0.05)")

    p = sub.add_parser("audit", help="run consistency checks over a run directory")
    p.add_argument("run_dir", type=Path)

    p = sub.add_parser("report", help="recompute summary/curves from agent_outcomes_all_runs.csv")
    p.add_argument("run_dir", type=Path)
    p.add_argument("--svg", action="store_true", help="also render the standard figures as SVG")

    p = sub.add_parser("sweep", help="re-run reduced-replication experiments over a parameter grid")
    _add_config_args(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--param", required=True, metavar="KEY=V1,V2,...", help="parameter values to sweep")
    p.add_argument("--jobs", type=int, default=1)
    return parser


def _cmd_simulate(args) -> int:
    bundle = load_config(args.config, overrides=args.overrides, seed=args.seed)
    run_experiment(bundle.experiment, output_dir=args.out, jobs=args.jobs)
    print(f"wrote run to {args.out}")
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    bundle = load_config(args.config, overrides=args.overrides, seed=args.seed)
    tolerance = args.tolerance if args.tolerance is not None else bundle.tolerance
    result = calibration.calibrate(
        bundle.search_space,
        bundle.experiment,
        bundle.target,
        tolerance=tolerance,
        early_exit=bundle.early_exit,
        prune_margin=bundle.prune_margin,
    )
    args.out.mkdir(parents=True, exist_ok=True)
    calibration.write_calibration_report(result, args.out / "calibration_report.json")
    calibrated = calibration.apply_candidate(bundle.experiment, result.params)
    write_config_effective(calibrated, args.out / "config_effective.json")
    status = "accepted" if result.accepted else "REJECTED"
    print(f"calibration {status}: rmse={result.achieved_rmse:.4f} (tolerance {tolerance}) params={result.params}")
    return EXIT_OK if result.accepted else EXIT_VALIDATION


def _cmd_audit(args) -> int:
    report = analysis.audit(args.run_dir)
    analysis.write_audit_report(report, args.run_dir / "audit_report.json")
    for check in report.checks:
        print(f"[{'PASS' if check.passed else 'FAIL'}] {check.name}: observed={check.observed} expected={check.expected}")
    return EXIT_OK if report.passed else EXIT_AUDIT_FAILED


def _cmd_report(args) -> int:
    run_dir: Path = args.run_dir
    config_path = run_dir / "config_effective.json"
    agents_path = run_dir / "agent_outcomes_all_runs.csv"
    if not config_path.exists() or not agents_path.exists():
        raise ConfigError(f"{run_dir} is not a run directory (missing config/agent files)")
    config = json.loads(config_path.read_text(encoding="utf-8"))
    replications = analysis.load_agent_outcomes(agents_path, horizon=config["horizon_semesters"])
    analysis.write_summary_csv(replications, run_dir / "policy_tradeoff_summary.csv")

    # The psych columns are not derivable from final snapshots; keep them.
    overlay: dict[tuple[str, int], tuple[str, str]] = {}
    curves_path = run_dir / "dropout_curves.csv"
    if curves_path.exists():
        with curves_path.open(newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                overlay[(row["scenario"], int(row["semester"]))] = (
                    row["mean_stress_active"],
                    row["mean_belonging_active"],
                )
    analysis.write_curves_csv(replications, curves_path, stress_overlay=overlay)
    print(f"recomputed summary and curves in {run_dir}")
    if args.svg:
        for path in analysis.render_figures(run_dir):
            print(f"wrote {path}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    if "=" not in args.param:
        raise ConfigError(f"malformed --param {args.param!r}; expected key=v1,v2,...")
    param_path, raw_values = args.param.split("=", 1)
    values = []
    for token in raw_values.split(","):
        try:
            values.append(json.loads(token))
        except json.JSONDecodeError:
            values.append(token)
    if not values:
        raise ConfigError("no sweep values given")

    # A scenario-scoped parameter only needs its own scenario re-run.
    scenario_scope = None
    parts = param_path.split(".")
    if parts[0] == "scenarios" and len(parts) >= 2:
        scenario_scope = parts[1]

    base = load_config(args.config, overrides=args.overrides, seed=args.seed)
    reduced = max(5, base.experiment.replications_per_scenario // 4)
    lines = ["param,value,fidelity," + ",".join(analysis.SUMMARY_COLUMNS)]
    for value in values:
        data = json.loads(json.dumps(base.raw))  # deep copy of the resolved raw config
        apply_overrides(data, [f"{param_path}={json.dumps(value)}"])
        data["replications_per_scenario"] = reduced
        if scenario_scope is not None:
            data["scenarios"] = {scenario_scope: data["scenarios"][scenario_scope]}
        cfg = config_from_dict(data, base_dir=Path(args.config).parent)
        experiment = run_experiment(cfg, jobs=args.jobs)
        for kind, reps in experiment.replications.items():
            summary = analysis.summarize_scenario(reps)
            row = ",".join(analysis._fmt(getattr(summary, col)) for col in analysis.SUMMARY_COLUMNS)
            lines.append(f"{param_path},{json.dumps(value)},reduced,{row}")
    args.out.mkdir(parents=True, exist_ok=True)
    out_path = args.out / "sweep_summary.csv"
    out_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {out_path} ({len(lines) - 1} rows at {reduced} replications each)")
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "calibrate": _cmd_calibrate,
    "audit": _cmd_audit,
    "report": _cmd_report,
    "sweep": _cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, CurriculumError, ArchetypeTableError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
