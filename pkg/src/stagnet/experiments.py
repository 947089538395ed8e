"""Config-driven H1 (stability vs resilience) and H2 (vanilla vs stable CPI) runs."""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .dynamics import ModelParams, PayoffMatrix, run_to_convergence
from .interventions import InterventionKind, InterventionSpec, evaluate_intervention
from .metrics import (
    DegenerateFitError,
    FitResult,
    ImpactUndefinedError,
    cyclist_count,
    fit_least_squares,
    stability,
    system_energy,
)
from .population import PlacementParams, Population, build_population
from .shocks import ShockKind, ShockSpec, measure_resilience
from .svg import emit_scatter_svg

log = logging.getLogger(__name__)

# spawn-key tags keep the H1/H2 streams apart from each other
_H1, _H2_INITIAL, _H2_PAIR = 1, 2, 3


class ConfigError(ValueError):
    pass


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, key...)``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


# Harness defaults. The model-level defaults in ModelParams/PlacementParams are
# the published ones; these three are calibrated so a 500-agent run settles in
# a mixed state instead of collapsing to one mode (see README).
DEFAULT_MODEL = ModelParams(radius=0.04, revision_epsilon=3e-3)
DEFAULT_PLACEMENT = PlacementParams(layout="uniform")


def default_shocks() -> tuple[ShockSpec, ...]:
    return (
        ShockSpec(ShockKind.ATTACK_HUBS, attack_magnitude=30, new_strategy=0.3),
        ShockSpec(ShockKind.CONNECT_DEFECTORS, acceptance_probability=0.15),
        ShockSpec(ShockKind.CONNECTION_BREAKS, perturbation_magnitude=0.1),
        ShockSpec(ShockKind.AGENTS_DROP_OUT, perturbation_magnitude=0.1),
    )


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelParams = DEFAULT_MODEL
    placement: PlacementParams = DEFAULT_PLACEMENT
    n_agents: int = 500
    social_m: int = 2
    n_configs: int = 25
    base_seed: int = 0
    shocks: tuple[ShockSpec, ...] = field(default_factory=default_shocks)
    interventions: tuple[InterventionSpec, ...] = (
        InterventionSpec(InterventionKind.VANILLA_CPI, 0.15),
        InterventionSpec(InterventionKind.STABLE_CPI, 0.15),
    )
    h2_attack: ShockSpec = ShockSpec(ShockKind.ATTACK_HUBS, attack_magnitude=30, new_strategy=0.3)
    h2_perturbations: tuple[ShockSpec, ...] = (
        ShockSpec(ShockKind.CONNECTION_BREAKS, perturbation_magnitude=0.1),
        ShockSpec(ShockKind.AGENTS_DROP_OUT, perturbation_magnitude=0.1),
    )
    h2_replicates: int = 10
    table4_runs: int = 5
    output_dir: str = "out"
    threads: int = 1

    def __post_init__(self):
        if self.n_agents < 1:
            raise ConfigError("n_agents must be >= 1")
        if not 1 <= self.social_m < self.n_agents:
            raise ConfigError("social_m must satisfy 1 <= m < n_agents")
        if self.n_configs < 2:
            raise ConfigError("n_configs must be >= 2 to fit a line")
        if self.model.alpha <= 0.5:
            raise ConfigError("alpha must exceed 0.5 for a conforming population")
        if not 1 <= self.table4_runs <= self.h2_replicates:
            raise ConfigError("table4_runs must lie in [1, h2_replicates]")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        for s in (*self.shocks, self.h2_attack, *self.h2_perturbations):
            if s.attack_magnitude > self.n_agents:
                raise ConfigError("attack_magnitude exceeds n_agents")
        labels = [s.label for s in self.shocks]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"duplicate shock labels {labels}")

    def with_overrides(self, **kw) -> "ExperimentConfig":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(kw)
        return ExperimentConfig(**values)

    def to_dict(self) -> dict:
        m = self.model
        return {
            "n_agents": self.n_agents,
            "social_m": self.social_m,
            "n_configs": self.n_configs,
            "base_seed": self.base_seed,
            "model": {
                "alpha": m.alpha,
                "gamma": m.gamma,
                "delta": m.delta,
                "radius": m.radius,
                "payoff": {"cc": list(m.payoff.cc), "cd": list(m.payoff.cd), "dc": list(m.payoff.dc), "dd": list(m.payoff.dd)},
                "max_epochs": m.max_epochs,
                "quiet_epochs": m.quiet_epochs,
                "revision_epsilon": m.revision_epsilon,
                "expected_payoff": m.expected_payoff,
                "deviation": m.deviation,
            },
            "placement": {
                "n_clusters": self.placement.n_clusters,
                "cluster_sigma": self.placement.cluster_sigma,
                "layout": self.placement.layout,
            },
            "shocks": [s.to_dict() for s in self.shocks],
            "interventions": [i.to_dict() for i in self.interventions],
            "h2": {
                "attack": self.h2_attack.to_dict(),
                "perturbations": [s.to_dict() for s in self.h2_perturbations],
                "replicates": self.h2_replicates,
                "table4_runs": self.table4_runs,
            },
            "output_dir": self.output_dir,
            "threads": self.threads,
        }


def _config_schema() -> dict:
    return json.loads(resources.files("stagnet").joinpath("schemas/config.schema.json").read_text())


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Validate against the shipped schema (unknown keys are errors) and build the config."""
    try:
        jsonschema.validate(doc, _config_schema())
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"{'/'.join(map(str, exc.absolute_path)) or '<root>'}: {exc.message}") from None
    kw = {}
    try:
        if "model" in doc:
            md = dict(doc["model"])
            if "payoff" in md:
                md["payoff"] = PayoffMatrix(**{k: tuple(v) for k, v in md["payoff"].items()})
            kw["model"] = replace(DEFAULT_MODEL, **md)
        if "placement" in doc:
            kw["placement"] = replace(DEFAULT_PLACEMENT, **doc["placement"])
        for key in ("n_agents", "social_m", "n_configs", "base_seed", "output_dir", "threads"):
            if key in doc:
                kw[key] = doc[key]
        if "shocks" in doc:
            kw["shocks"] = tuple(ShockSpec(**s) for s in doc["shocks"])
        if "interventions" in doc:
            kw["interventions"] = tuple(InterventionSpec(**s) for s in doc["interventions"])
        h2 = doc.get("h2", {})
        if "attack" in h2:
            kw["h2_attack"] = ShockSpec(**h2["attack"])
        if "perturbations" in h2:
            kw["h2_perturbations"] = tuple(ShockSpec(**s) for s in h2["perturbations"])
        if "replicates" in h2:
            kw["h2_replicates"] = h2["replicates"]
        if "table4_runs" in h2:
            kw["table4_runs"] = h2["table4_runs"]
        return ExperimentConfig(**kw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return config_from_dict(doc)


def make_population(config: ExperimentConfig, seed: int) -> Population:
    return build_population(config.n_agents, config.model.radius, config.social_m, config.placement, seed)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r[h]) for h in header])
    return buf.getvalue()


# --------------------------------------------------------------------------
# H1
# --------------------------------------------------------------------------

H1_RECORD_HEADER = (
    "config", "seed", "stability", "energy", "converged", "shock", "kind",
    "resilience", "cyclists_before", "cyclists_after",
)
H1_FIT_HEADER = ("shock", "kind", "n", "slope", "intercept", "r_squared", "error")


@dataclass
class H1Record:
    config: int
    seed: int
    stability: float
    energy: float
    converged: bool
    shock: str
    kind: str
    resilience: float
    cyclists_before: int
    cyclists_after: int

    def row(self) -> dict:
        return {h: getattr(self, h) for h in H1_RECORD_HEADER}


@dataclass
class H1Result:
    records: list[H1Record]
    fits: dict[str, FitResult | str]

    def records_csv(self) -> str:
        return _csv(H1_RECORD_HEADER, [r.row() for r in self.records])

    def fits_csv(self, shocks) -> str:
        rows = []
        for s in shocks:
            f = self.fits[s.label]
            if isinstance(f, FitResult):
                rows.append({"shock": s.label, "kind": s.kind.value, "n": f.n, "slope": f.slope,
                             "intercept": f.intercept, "r_squared": f.r_squared, "error": ""})
            else:
                rows.append({"shock": s.label, "kind": s.kind.value, "n": "", "slope": None,
                             "intercept": None, "r_squared": None, "error": f})
        return _csv(H1_FIT_HEADER, rows)

    def points(self, label: str) -> list[tuple[float, float]]:
        return [(r.stability, r.resilience) for r in self.records if r.shock == label]


def _h1_config(config: ExperimentConfig, c: int) -> list[H1Record]:
    seed = config.base_seed + c
    pop = make_population(config, seed)
    conv_rng, *shock_rngs = stream(seed, _H1).spawn(1 + len(config.shocks))
    state, _ = run_to_convergence(pop, config.model, conv_rng)
    base = state.population
    mode = config.model.deviation
    stab = stability(base, base, mode)
    energy = system_energy(base, base, mode)
    out = []
    for shock, srng in zip(config.shocks, shock_rngs):
        res, post = measure_resilience(base, shock, config.model, srng)
        out.append(H1Record(c, seed, stab, energy, state.converged, shock.label, shock.kind.value, res,
                            cyclist_count(base.strategies), cyclist_count(post.strategies)))
    log.info("h1 config %d: stability=%.6f", c, stab)
    return out


def run_h1(config: ExperimentConfig) -> H1Result:
    """Converge ``n_configs`` random systems, shock each, fit resilience against stability per shock."""
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        per_config = list(pool.map(lambda c: _h1_config(config, c), range(config.n_configs)))
    records = [r for rs in per_config for r in rs]
    fits: dict[str, FitResult | str] = {}
    for shock in config.shocks:
        pts = [(r.stability, r.resilience) for r in records if r.shock == shock.label]
        try:
            fits[shock.label] = fit_least_squares([p[0] for p in pts], [p[1] for p in pts])
        except DegenerateFitError as exc:
            fits[shock.label] = f"degenerate fit: {exc}"
    return H1Result(records, fits)


def write_h1(result: H1Result, config: ExperimentConfig, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "h1_records.csv", out / "h1_fits.csv"]
    written[0].write_text(result.records_csv())
    written[1].write_text(result.fits_csv(config.shocks))
    for shock in config.shocks:
        fit = result.fits[shock.label]
        path = out / f"h1_{shock.label}.svg"
        emit_scatter_svg(
            result.points(shock.label),
            fit if isinstance(fit, FitResult) else None,
            path,
            title=f"Resilience to {shock.label} ({shock.kind.value}) vs stability",
            xlabel="stability",
            ylabel="resilience",
        )
        written.append(path)
    return written


# --------------------------------------------------------------------------
# H2
# --------------------------------------------------------------------------

TABLE3_HEADER = (
    "replicate", "intervention", "cyclists_before", "cyclists_after", "impact", "edges_added",
    "stability_before", "stability_after", "cyclists_after_attack", "resilience_attack", "error",
)


@dataclass
class H2Record:
    replicate: int
    intervention: str
    cyclists_before: float
    cyclists_after: float | None
    impact: float | None
    edges_added: int | None
    stability_before: float
    stability_after: float | None
    cyclists_after_attack: float | None
    resilience: dict[str, float] = field(default_factory=dict)
    error: str = ""


@dataclass
class H2Result:
    records: list[H2Record]
    attack_label: str
    perturbation_labels: tuple[str, ...]
    table4_runs: int
    initial_cyclists: float
    initial_stability: float

    def by(self, intervention: str) -> list[H2Record]:
        return [r for r in self.records if r.intervention == intervention]

    def table3_csv(self) -> str:
        header = TABLE3_HEADER + tuple(f"resilience_{p}" for p in self.perturbation_labels)
        rows = []
        for r in self.records:
            row = {
                "replicate": r.replicate,
                "intervention": r.intervention,
                "cyclists_before": r.cyclists_before,
                "cyclists_after": r.cyclists_after,
                "impact": "undefined" if r.error else r.impact,
                "edges_added": r.edges_added,
                "stability_before": r.stability_before,
                "stability_after": r.stability_after,
                "cyclists_after_attack": r.cyclists_after_attack,
                "resilience_attack": r.resilience.get(self.attack_label),
                "error": r.error,
            }
            for p in self.perturbation_labels:
                row[f"resilience_{p}"] = r.resilience.get(p)
            rows.append(row)
        return _csv(header, rows)

    def table4(self) -> list[dict]:
        """Per-run perturbation resilience for each intervention plus an average row."""
        kinds = sorted({r.intervention for r in self.records}, key=lambda k: k != InterventionKind.VANILLA_CPI.value)
        cols = [(p, k) for p in self.perturbation_labels for k in kinds]
        rows = []
        for run in range(self.table4_runs):
            row: dict = {"simulation": str(run + 1)}
            for p, k in cols:
                rec = next(r for r in self.records if r.replicate == run and r.intervention == k)
                row[f"{p}_{k}"] = rec.resilience.get(p)
            rows.append(row)
        avg: dict = {"simulation": "average"}
        for p, k in cols:
            vals = [row[f"{p}_{k}"] for row in rows if row[f"{p}_{k}"] is not None]
            avg[f"{p}_{k}"] = float(np.mean(vals)) if vals else None
        rows.append(avg)
        return rows

    def table4_csv(self) -> str:
        rows = self.table4()
        return _csv(tuple(rows[0].keys()), rows)


def run_h2(config: ExperimentConfig) -> H2Result:
    """Evaluate every intervention on one converged state with paired seeds per replicate."""
    pop = make_population(config, config.base_seed)
    state, _ = run_to_convergence(pop, config.model, stream(config.base_seed, _H2_INITIAL))
    base = state.population
    mode = config.model.deviation
    n = base.n
    shocks = [config.h2_attack, *config.h2_perturbations]
    stab0 = stability(base, base, mode)

    def one(job):
        rep, spec = job
        # same stream for every intervention in a replicate: the pairing
        rng = stream(config.base_seed, _H2_PAIR, rep)
        try:
            rep_ = evaluate_intervention(base, spec, config.model, shocks, rng, assume_converged=True)
        except ImpactUndefinedError as exc:
            return H2Record(rep, spec.kind.value, cyclist_count(base.strategies) / n, None, None, None,
                            stab0, None, None, {}, f"impact undefined: {exc}")
        return H2Record(
            rep, spec.kind.value, rep_.cyclists_before, rep_.cyclists_after, rep_.impact, rep_.edges_added,
            rep_.stability_before, rep_.stability_after, rep_.cyclists_after_shock[config.h2_attack.label],
            dict(rep_.resilience),
        )

    jobs = [(rep, spec) for rep in range(config.h2_replicates) for spec in config.interventions]
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        records = list(pool.map(one, jobs))
    return H2Result(
        records,
        config.h2_attack.label,
        tuple(s.label for s in config.h2_perturbations),
        config.table4_runs,
        cyclist_count(base.strategies) / n,
        stab0,
    )


def write_h2(result: H2Result, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t3, t4 = out / "h2_table3.csv", out / "h2_table4.csv"
    t3.write_text(result.table3_csv())
    t4.write_text(result.table4_csv())
    return [t3, t4]
