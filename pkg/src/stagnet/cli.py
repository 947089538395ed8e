"""Command line entry point.

Exit codes: 0 success, 1 usage or validation error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .dynamics import run_to_convergence
from .experiments import (
    ConfigError,
    ExperimentConfig,
    load_config,
    make_population,
    run_h1,
    run_h2,
    stream,
    write_h1,
    write_h2,
    _csv,
)
from .interventions import InterventionKind, InterventionSpec, evaluate_intervention
from .metrics import FitResult, ImpactUndefinedError, cyclist_count
from .population import load_population, save_population
from .shocks import ShockKind, ShockSpec, measure_resilience

log = logging.getLogger("stagnet")

# stream tags for the single-shot subcommands
_SIMULATE, _SHOCK, _INTERVENE = 11, 12, 13


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="experiment config JSON (defaults built in)")
    p.add_argument("--seed", type=int, help="overrides base_seed")
    p.add_argument("--out", type=Path, help="output directory (overrides output_dir)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=int, help="worker threads (overrides config)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stagnet", description="Stag-hunt commuter simulator: energy, stability and resilience.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="build one population and run it to convergence")
    _common(p)

    p = sub.add_parser("h1", help="stability vs resilience over random configurations")
    _common(p)

    p = sub.add_parser("h2", help="vanilla vs stable CPI on one converged state")
    _common(p)

    p = sub.add_parser("shock", help="apply one shock to a saved state and measure resilience")
    _common(p)
    p.add_argument("--state", type=Path, required=True, help="saved population JSON")
    p.add_argument("--kind", required=True, choices=[k.value for k in ShockKind])
    p.add_argument("--attack-magnitude", type=int, default=30)
    p.add_argument("--new-strategy", type=float, default=0.3)
    p.add_argument("--acceptance-probability", type=float, default=0.15)
    p.add_argument("--perturbation-magnitude", type=float, default=0.1)

    p = sub.add_parser("intervene", help="apply one intervention to a saved state")
    _common(p)
    p.add_argument("--state", type=Path, required=True, help="saved population JSON")
    p.add_argument("--kind", required=True, choices=[k.value for k in InterventionKind])
    p.add_argument("--acceptance-probability", type=float, default=0.15)

    p = sub.add_parser("validate-config", help="check a config file and exit")
    p.add_argument("--config", type=Path, required=True)
    return parser


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    over = {}
    if getattr(args, "seed", None) is not None:
        over["base_seed"] = args.seed
    if getattr(args, "threads", None) is not None:
        over["threads"] = args.threads
    if getattr(args, "out", None) is not None:
        over["output_dir"] = str(args.out)
    return cfg.with_overrides(**over) if over else cfg


def _write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def _cmd_simulate(args, cfg: ExperimentConfig) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    pop = make_population(cfg, cfg.base_seed)
    state, trace = run_to_convergence(pop, cfg.model, stream(cfg.base_seed, _SIMULATE))
    if args.format == "csv":
        (out / "trace.csv").write_text(trace.to_csv())
    else:
        _write_json(out / "trace.json", trace.to_dict())
    save_population(pop, out / "initial_state.json")
    save_population(state.population, out / "state.json")
    print(
        f"epochs={trace.final_epoch} converged={trace.converged} "
        f"cyclists={cyclist_count(state.strategies)}/{pop.n} stability={trace.stability[-1]:.6f}"
    )
    return 0


def _cmd_h1(args, cfg: ExperimentConfig) -> int:
    result = run_h1(cfg)
    out = Path(cfg.output_dir)
    if args.format == "csv":
        write_h1(result, cfg, out)
    else:
        write_h1(result, cfg, out)
        for p in ("h1_records.csv", "h1_fits.csv"):
            (out / p).unlink()
        _write_json(out / "h1_records.json", [r.row() for r in result.records])
        _write_json(
            out / "h1_fits.json",
            {k: (vars(f) if isinstance(f, FitResult) else {"error": f}) for k, f in result.fits.items()},
        )
    for label, f in result.fits.items():
        if isinstance(f, FitResult):
            print(f"{label}: slope={f.slope:.4g} intercept={f.intercept:.4g} r2={f.r_squared:.3f}")
        else:
            print(f"{label}: {f}")
    return 0


def _cmd_h2(args, cfg: ExperimentConfig) -> int:
    result = run_h2(cfg)
    out = Path(cfg.output_dir)
    if args.format == "csv":
        write_h2(result, out)
    else:
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "h2_table3.json", [vars(r) for r in result.records])
        _write_json(out / "h2_table4.json", result.table4())
    for row in result.table4()[-1:]:
        print("table4 average:", {k: v for k, v in row.items() if k != "simulation"})
    return 0


def _emit_rows(path_stem: Path, fmt: str, header, rows) -> Path:
    if fmt == "csv":
        path = path_stem.with_suffix(".csv")
        path.write_text(_csv(header, rows))
        return path
    return _write_json(path_stem.with_suffix(".json"), rows)


def _cmd_shock(args, cfg: ExperimentConfig) -> int:
    pop = load_population(args.state)
    shock = ShockSpec(
        ShockKind(args.kind),
        attack_magnitude=args.attack_magnitude,
        new_strategy=args.new_strategy,
        acceptance_probability=args.acceptance_probability,
        perturbation_magnitude=args.perturbation_magnitude,
    )
    if shock.attack_magnitude > pop.n:
        raise ConfigError("attack magnitude exceeds population size")
    res, post = measure_resilience(pop, shock, cfg.model, stream(cfg.base_seed, _SHOCK))
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    row = {
        "kind": shock.kind.value,
        "params": json.dumps({k: v for k, v in shock.to_dict().items() if k not in ("kind", "label")}, sort_keys=True),
        "resilience": res,
        "cyclists_before": cyclist_count(pop.strategies),
        "cyclists_after": cyclist_count(post.strategies),
        "converged": post.converged,
    }
    _emit_rows(out / "shock_log", args.format, tuple(row), [row])
    save_population(post.population, out / "post_shock_state.json")
    print(f"{shock.label}: resilience={res:.4f}")
    return 0


def _cmd_intervene(args, cfg: ExperimentConfig) -> int:
    pop = load_population(args.state)
    spec = InterventionSpec(InterventionKind(args.kind), args.acceptance_probability)
    report = evaluate_intervention(pop, spec, cfg.model, [], stream(cfg.base_seed, _INTERVENE), assume_converged=True)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    row = {k: v for k, v in report.to_dict().items() if k not in ("resilience", "cyclists_after_shock", "post_state")}
    _emit_rows(out / "intervention_report", args.format, tuple(row), [row])
    save_population(report.post_state, out / "post_intervention_state.json")
    print(f"{spec.kind.value}: impact={report.impact:.4f} edges_added={report.edges_added}")
    return 0


COMMANDS = {
    "simulate": _cmd_simulate,
    "h1": _cmd_h1,
    "h2": _cmd_h2,
    "shock": _cmd_shock,
    "intervene": _cmd_intervene,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING)
    try:
        if args.command == "validate-config":
            load_config(args.config)
            print(f"{args.config}: ok")
            return 0
        cfg = _load(args)
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, ImpactUndefinedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        kind = "invalid input" if isinstance(exc, ValueError) else "i/o error"
        print(f"{kind}: {exc}", file=sys.stderr)
        return 1 if isinstance(exc, ValueError) else 2
    except Exception as exc:  # noqa: BLE001
        log.exception("runtime failure")
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
