"""Targeted attacks and random perturbations, and the resilience protocol."""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass

import numpy as np

from .dynamics import ModelParams, SimulationState, run_to_convergence
from .metrics import StateSnapshot, resilience_score
from .population import Population, SocialNetwork, rank_hubs


class ShockKind(str, enum.Enum):
    ATTACK_HUBS = "AttackHubs"
    CONNECT_DEFECTORS = "ConnectDefectors"
    CONNECTION_BREAKS = "ConnectionBreaks"
    AGENTS_DROP_OUT = "AgentsDropOut"


DEFAULT_LABELS = {
    ShockKind.ATTACK_HUBS: "T1",
    ShockKind.CONNECT_DEFECTORS: "T2",
    ShockKind.CONNECTION_BREAKS: "R1",
    ShockKind.AGENTS_DROP_OUT: "R2",
}


@dataclass(frozen=True)
class ShockSpec:
    kind: ShockKind
    attack_magnitude: int = 30
    new_strategy: float = 0.3
    acceptance_probability: float = 0.15
    perturbation_magnitude: float = 0.1
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "kind", ShockKind(self.kind))
        if not self.label:
            object.__setattr__(self, "label", DEFAULT_LABELS[self.kind])
        if self.attack_magnitude < 0:
            raise ValueError("attack_magnitude must be >= 0")
        for name in ("new_strategy", "acceptance_probability", "perturbation_magnitude"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        return d


def two_hop_pairs(social: SocialNetwork, end_ok: np.ndarray, mid_ok: np.ndarray | None = None) -> list[tuple[int, int]]:
    """Unordered non-adjacent pairs ``i < k`` joined by some path ``i - j - k``.

    Both ends must satisfy ``end_ok``; the middle must satisfy ``mid_ok`` when
    given. Pairs come out in first-encounter order scanning i, then j, then k
    ascending, each exactly once.
    """
    seen: set[tuple[int, int]] = set()
    out = []
    for i in range(social.n):
        if not end_ok[i]:
            continue
        for j in social.neighbors(i):
            if mid_ok is not None and not mid_ok[j]:
                continue
            for k in social.neighbors(j):
                if k <= i or not end_ok[k] or social.has_edge(i, k) or (i, k) in seen:
                    continue
                seen.add((i, k))
                out.append((i, k))
    return out


def attack_hubs(pop: Population, magnitude: int, new_strategy: float) -> np.ndarray:
    """Force the top ``magnitude`` hubs to ``new_strategy``; returns their ids."""
    if magnitude > pop.n:
        raise ValueError("attack_magnitude exceeds population size")
    targets = rank_hubs(pop.social)[:magnitude]
    pop.strategies[targets] = new_strategy
    return targets


def connect_defectors(pop: Population, acceptance_probability: float, rng: np.random.Generator) -> int:
    """Link car users (s < 0.5) two hops apart, each candidate pair accepted once with the given probability."""
    cands = two_hop_pairs(pop.social, pop.strategies < 0.5)
    draws = rng.random(len(cands))
    added = 0
    for (i, k), u in zip(cands, draws):
        if u < acceptance_probability:
            added += pop.social.add_edge(i, k)
    return added


def break_connections(pop: Population, perturbation_magnitude: float, rng: np.random.Generator) -> int:
    edges = pop.social.edges()
    draws = rng.random(len(edges))
    removed = 0
    for (i, j), u in zip(edges, draws):
        if u < perturbation_magnitude:
            removed += pop.social.remove_edge(i, j)
    return removed


def drop_agents(pop: Population, perturbation_magnitude: float, rng: np.random.Generator) -> np.ndarray:
    """Cut every social tie of randomly chosen agents. They stay in the physical layer."""
    chosen = np.flatnonzero(rng.random(pop.n) < perturbation_magnitude)
    for i in chosen:
        pop.social.isolate(int(i))
    return chosen


def apply_shock(pop: Population, shock: ShockSpec, rng: np.random.Generator) -> dict:
    """Mutate ``pop`` in place; returns a small summary for logging."""
    if shock.kind is ShockKind.ATTACK_HUBS:
        hit = attack_hubs(pop, shock.attack_magnitude, shock.new_strategy)
        return {"agents_forced": len(hit)}
    if shock.kind is ShockKind.CONNECT_DEFECTORS:
        return {"edges_added": connect_defectors(pop, shock.acceptance_probability, rng)}
    if shock.kind is ShockKind.CONNECTION_BREAKS:
        return {"edges_removed": break_connections(pop, shock.perturbation_magnitude, rng)}
    return {"agents_dropped": len(drop_agents(pop, shock.perturbation_magnitude, rng))}


def measure_resilience(
    converged: Population | SimulationState,
    shock: ShockSpec,
    params: ModelParams,
    rng: np.random.Generator,
) -> tuple[float, SimulationState]:
    """Shock a copy of a converged state, let it re-converge, score the displacement.

    Every agent, including directly attacked ones, counts towards the displacement.
    A shock that changes nothing leaves the state converged, so no re-run happens.
    """
    pop = converged.population if isinstance(converged, SimulationState) else converged
    shock_rng, dyn_rng = rng.spawn(2)
    before = StateSnapshot.capture(pop)
    shocked = pop.copy()
    apply_shock(shocked, shock, shock_rng)
    if shocked.social == pop.social and np.array_equal(shocked.strategies, pop.strategies):
        return 1.0, SimulationState(shocked, converged=True)
    post, _ = run_to_convergence(shocked, params, dyn_rng)
    return resilience_score(before, StateSnapshot.capture(post.population)), post
