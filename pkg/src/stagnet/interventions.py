"""Connect-People interventions: the plain version and the stability-constrained one."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dynamics import ModelParams, SimulationState, run_to_convergence
from .metrics import StateSnapshot, cyclist_count, impact_score, stability, system_energy, _penalty
from .population import Population
from .shocks import ShockSpec, measure_resilience, two_hop_pairs


class InterventionKind(str, enum.Enum):
    VANILLA_CPI = "VanillaCPI"
    STABLE_CPI = "StableCPI"


@dataclass(frozen=True)
class InterventionSpec:
    kind: InterventionKind
    acceptance_probability: float = 0.15

    def __post_init__(self):
        object.__setattr__(self, "kind", InterventionKind(self.kind))
        if not 0.0 <= self.acceptance_probability <= 1.0:
            raise ValueError("acceptance_probability must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "acceptance_probability": self.acceptance_probability}


@dataclass
class InterventionReport:
    kind: str
    cyclists_before: float
    cyclists_after: float
    impact: float | None
    edges_added: int
    stability_before: float
    stability_after: float
    energy_before: float
    energy_after: float
    converged_after: bool
    resilience: dict[str, float] = field(default_factory=dict)
    cyclists_after_shock: dict[str, float] = field(default_factory=dict)
    post_state: Population | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        d = {f: getattr(self, f) for f in self.__dataclass_fields__ if f != "post_state"}
        d["resilience"] = dict(self.resilience)
        d["cyclists_after_shock"] = dict(self.cyclists_after_shock)
        return d


def cpi_candidates(pop: Population) -> list[tuple[int, int]]:
    """Non-adjacent cyclist pairs joined through a cyclist middle agent."""
    cyc = pop.strategies > 0.5
    return two_hop_pairs(pop.social, cyc, cyc)


def vanilla_cpi(pop: Population, acceptance_probability: float, rng: np.random.Generator) -> int:
    cands = cpi_candidates(pop)
    draws = rng.random(len(cands))
    added = 0
    for (i, k), u in zip(cands, draws):
        if u < acceptance_probability:
            added += pop.social.add_edge(i, k)
    return added


def _neighbour_totals(pop: Population) -> tuple[np.ndarray, np.ndarray]:
    indptr, indices = pop.merged_csr()
    return kernels.neighbour_sums(indptr, indices, pop.strategies), np.diff(indptr).astype(float)


def _opt(s_own, total, count):
    return total / count if count > 0 else s_own


def _delta(s, sums, counts, i, k, mode):
    si, sk = s[i], s[k]
    before = _penalty(si - _opt(si, sums[i], counts[i]), mode) + _penalty(sk - _opt(sk, sums[k], counts[k]), mode)
    after = _penalty(si - (sums[i] + sk) / (counts[i] + 1), mode) + _penalty(sk - (sums[k] + si) / (counts[k] + 1), mode)
    return float(before - after)


def stability_delta(pop: Population, i: int, k: int, mode: str = "squared") -> float:
    """Drop in the endpoints' deviation from their optimal strategies if edge (i, k) were added.

    Positive means the edge pulls both optima closer to the endpoints' strategies.
    """
    if i == k or pop.social.has_edge(i, k):
        raise ValueError(f"({i}, {k}) is already a social edge or a self-pair")
    sums, counts = _neighbour_totals(pop)
    return _delta(pop.strategies, sums, counts, i, k, mode)


def stable_cpi(
    pop: Population, acceptance_probability: float, rng: np.random.Generator, mode: str = "squared"
) -> int:
    """Vanilla CPI that only keeps edges with positive stability delta.

    Deltas see edges accepted earlier in the same pass. Uses the same draw per
    candidate as :func:`vanilla_cpi` would.
    """
    cands = cpi_candidates(pop)
    draws = rng.random(len(cands))
    s = pop.strategies
    sums, counts = _neighbour_totals(pop)
    added = 0
    for (i, k), u in zip(cands, draws):
        if u >= acceptance_probability:
            continue
        if _delta(s, sums, counts, i, k, mode) > 0 and pop.social.add_edge(i, k):
            sums[i] += s[k]
            sums[k] += s[i]
            counts[i] += 1
            counts[k] += 1
            added += 1
    return added


def apply_intervention(
    pop: Population, spec: InterventionSpec, rng: np.random.Generator, mode: str = "squared"
) -> int:
    if spec.kind is InterventionKind.VANILLA_CPI:
        return vanilla_cpi(pop, spec.acceptance_probability, rng)
    return stable_cpi(pop, spec.acceptance_probability, rng, mode)


def evaluate_intervention(
    initial: Population,
    spec: InterventionSpec,
    params: ModelParams,
    shocks: list[ShockSpec],
    rng: np.random.Generator,
    assume_converged: bool = False,
) -> InterventionReport:
    """converge -> intervene -> converge -> impact -> resilience per shock.

    Child streams are spawned in a fixed order, so two calls with equally
    seeded generators see the same acceptance draws and dynamics noise.
    Raises :class:`ImpactUndefinedError` when nobody cycles before the intervention.
    """
    conv_rng, cpi_rng, post_rng, *shock_rngs = rng.spawn(3 + len(shocks))
    mode = params.deviation
    if assume_converged:
        base = initial.copy()
    else:
        base = run_to_convergence(initial, params, conv_rng)[0].population
    before = StateSnapshot.capture(base)

    treated = base.copy()
    edges = apply_intervention(treated, spec, cpi_rng, mode)
    if edges:
        state, _ = run_to_convergence(treated, params, post_rng)
    else:
        # nothing changed, the state is still converged
        state = SimulationState(treated, converged=True)
    after_pop = state.population
    after = StateSnapshot.capture(after_pop)
    impact = impact_score(before, after)

    n = base.n
    report = InterventionReport(
        kind=spec.kind.value,
        cyclists_before=cyclist_count(before) / n,
        cyclists_after=cyclist_count(after) / n,
        impact=impact,
        edges_added=edges,
        stability_before=stability(before, base, mode),
        stability_after=stability(after, after_pop, mode),
        energy_before=system_energy(before, base, mode),
        energy_after=system_energy(after, after_pop, mode),
        converged_after=state.converged,
        post_state=after_pop,
    )
    for shock, srng in zip(shocks, shock_rngs):
        res, post = measure_resilience(after_pop, shock, params, srng)
        report.resilience[shock.label] = res
        report.cyclists_after_shock[shock.label] = cyclist_count(post.strategies) / n
    return report
