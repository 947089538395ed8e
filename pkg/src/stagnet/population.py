"""Agents, their placement, and the two network layers they live on."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable

import jsonschema
import numpy as np
from scipy.spatial import cKDTree

SCHEMA_VERSION = 1


class Profile(enum.Enum):
    HIGHLY_DISTRUSTING = "HighlyDistrusting"
    DISTRUSTING = "Distrusting"
    TRUSTING = "Trusting"
    HIGHLY_TRUSTING = "HighlyTrusting"


_PROFILE_EDGES = (0.25, 0.5, 0.75)
_PROFILES = tuple(Profile)


def profile_of(s: float) -> Profile:
    """Trust profile of a strategy; bands are closed on the left, 1.0 is HighlyTrusting."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"strategy {s!r} outside [0, 1]")
    return _PROFILES[int(np.searchsorted(_PROFILE_EDGES, s, side="right"))]


def profile_counts(strategies: np.ndarray) -> dict[Profile, int]:
    idx = np.searchsorted(_PROFILE_EDGES, strategies, side="right")
    counts = np.bincount(idx, minlength=4)
    return {p: int(c) for p, c in zip(_PROFILES, counts)}


@dataclass(frozen=True)
class PlacementParams:
    n_clusters: int = 5
    cluster_sigma: float = 0.05
    layout: str = "clustered"  # or "uniform"

    def __post_init__(self):
        if self.n_clusters < 1:
            raise ValueError("n_clusters must be >= 1")
        if not self.cluster_sigma > 0:
            raise ValueError("cluster_sigma must be > 0")
        if self.layout not in ("clustered", "uniform"):
            raise ValueError(f"unknown layout {self.layout!r}")


def place_agents_clustered(n: int, params: PlacementParams, rng: np.random.Generator) -> np.ndarray:
    """(n, 2) positions in the unit square, Gaussian blobs around uniform centres."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if params.layout == "uniform":
        return rng.random((n, 2))
    centres = rng.random((params.n_clusters, 2))
    labels = rng.integers(params.n_clusters, size=n)
    pos = centres[labels] + rng.normal(0.0, params.cluster_sigma, size=(n, 2))
    return np.clip(pos, 0.0, 1.0)


def euclidean_distance(p, q) -> float:
    dx = p[0] - q[0]
    dy = p[1] - q[1]
    return math.sqrt(dx * dx + dy * dy)


@dataclass
class PhysicalNetwork:
    """Fixed radius graph stored as CSR plus the unordered pair list.

    ``pairs_i < pairs_j`` elementwise; ``pair_dist`` is the cached distance.
    CSR rows are sorted by neighbour id.
    """

    n: int
    radius: float
    pairs_i: np.ndarray
    pairs_j: np.ndarray
    pair_dist: np.ndarray
    indptr: np.ndarray = field(init=False, repr=False)
    indices: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.indptr, self.indices = _csr_from_pairs(self.n, self.pairs_i, self.pairs_j)

    @property
    def n_edges(self) -> int:
        return int(self.pairs_i.shape[0])

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)


def _csr_from_pairs(n, pi, pj):
    rows = np.concatenate([pi, pj]).astype(np.int64)
    cols = np.concatenate([pj, pi]).astype(np.int64)
    order = np.lexsort((cols, rows))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return indptr, cols[order]


def build_physical_network(positions: np.ndarray, radius: float) -> PhysicalNetwork:
    """All pairs within ``radius`` (inclusive)."""
    if not radius > 0:
        raise ValueError("radius must be > 0")
    positions = np.asarray(positions, dtype=float)
    n = positions.shape[0]
    # tree gives a superset; the exact test below decides membership
    cand = cKDTree(positions).query_pairs(radius * (1 + 1e-9) + 1e-15, output_type="ndarray")
    if cand.size == 0:
        cand = np.empty((0, 2), dtype=np.int64)
    cand = cand[np.lexsort((cand[:, 1], cand[:, 0]))].astype(np.int64)
    d = positions[cand[:, 0]] - positions[cand[:, 1]]
    dist = np.sqrt(d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1])
    keep = dist <= radius
    return PhysicalNetwork(n, float(radius), cand[keep, 0], cand[keep, 1], dist[keep])


class SocialNetwork:
    """Undirected simple graph on ``range(n)`` that shocks and interventions mutate."""

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        self.n = n
        self._adj: list[set[int]] = [set() for _ in range(n)]
        self.version = 0
        for i, j in edges:
            self.add_edge(int(i), int(j))

    def add_edge(self, i: int, j: int) -> bool:
        if i == j:
            raise ValueError(f"self-loop on {i}")
        if j in self._adj[i]:
            return False
        self._adj[i].add(j)
        self._adj[j].add(i)
        self.version += 1
        return True

    def remove_edge(self, i: int, j: int) -> bool:
        if j not in self._adj[i]:
            return False
        self._adj[i].discard(j)
        self._adj[j].discard(i)
        self.version += 1
        return True

    def isolate(self, i: int) -> int:
        nbrs = list(self._adj[i])
        for j in nbrs:
            self._adj[j].discard(i)
        self._adj[i].clear()
        if nbrs:
            self.version += 1
        return len(nbrs)

    def has_edge(self, i: int, j: int) -> bool:
        return j in self._adj[i]

    def neighbors(self, i: int) -> list[int]:
        return sorted(self._adj[i])

    def degree(self, i: int) -> int:
        return len(self._adj[i])

    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self._adj], dtype=np.int64)

    @property
    def n_edges(self) -> int:
        return sum(len(a) for a in self._adj) // 2

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.n) for j in sorted(self._adj[i]) if i < j]

    def to_csr(self) -> tuple[np.ndarray, np.ndarray]:
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum([len(a) for a in self._adj], out=indptr[1:])
        indices = np.fromiter(
            (j for a in self._adj for j in sorted(a)), dtype=np.int64, count=int(indptr[-1])
        )
        return indptr, indices

    def copy(self) -> "SocialNetwork":
        new = SocialNetwork(self.n)
        new._adj = [set(a) for a in self._adj]
        new.version = self.version
        return new

    def __eq__(self, other):
        return isinstance(other, SocialNetwork) and self._adj == other._adj


def generate_ba_network(n: int, m: int, rng: np.random.Generator) -> SocialNetwork:
    """Preferential attachment grown from a complete graph on ``m + 1`` nodes."""
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    g = SocialNetwork(n)
    # each node appears once per incident edge end
    ends: list[int] = []
    for i in range(m + 1):
        for j in range(i + 1, m + 1):
            g.add_edge(i, j)
            ends += (i, j)
    for v in range(m + 1, n):
        targets: set[int] = set()
        while len(targets) < m:
            targets.add(ends[int(rng.integers(len(ends)))])
        for t in sorted(targets):
            g.add_edge(v, t)
            ends += (v, t)
    return g


def assign_initial_strategies(n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    return rng.random(n)


def hub_scores(social: SocialNetwork) -> np.ndarray:
    """Hub score is the social degree."""
    return social.degrees()


def rank_hubs(social: SocialNetwork) -> np.ndarray:
    """Agent ids by descending hub score, ties by ascending id."""
    return np.argsort(-hub_scores(social), kind="stable")


@dataclass
class Population:
    positions: np.ndarray
    physical: PhysicalNetwork
    social: SocialNetwork
    strategies: np.ndarray
    seed: int | None = None
    meta: dict = field(default_factory=dict)
    _merged: tuple | None = field(default=None, init=False, repr=False, compare=False)

    @property
    def n(self) -> int:
        return int(self.strategies.shape[0])

    def copy(self) -> "Population":
        # physical layer and positions are never mutated, so they are shared
        return Population(
            self.positions, self.physical, self.social.copy(), self.strategies.copy(), self.seed, dict(self.meta)
        )

    def merged_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical then social neighbours per agent; a peer in both layers appears twice."""
        if self._merged is not None and self._merged[0] is self.social and self._merged[1] == self.social.version:
            return self._merged[2]
        sp, si = self.social.to_csr()
        pp, pi = self.physical.indptr, self.physical.indices
        n = self.n
        rows = np.concatenate([np.repeat(np.arange(n), np.diff(pp)), np.repeat(np.arange(n), np.diff(sp))])
        cols = np.concatenate([pi, si])
        order = np.argsort(rows, kind="stable")
        indptr = np.zeros(n + 1, dtype=np.int64)
        indptr[1:] = np.cumsum(np.diff(pp) + np.diff(sp))
        out = (indptr, cols[order])
        self._merged = (self.social, self.social.version, out)
        return out

    def cyclist_count(self) -> int:
        return int(np.count_nonzero(self.strategies > 0.5))


def build_population(
    n: int,
    radius: float,
    m: int,
    placement: PlacementParams = PlacementParams(),
    seed: int = 0,
) -> Population:
    """Positions, both layers and uniform strategies from one seed.

    The three random components draw from independent child streams.
    """
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    place_ss, social_ss, strat_ss = np.random.SeedSequence(seed).spawn(3)
    positions = place_agents_clustered(n, placement, np.random.default_rng(place_ss))
    social = generate_ba_network(n, m, np.random.default_rng(social_ss))
    strategies = assign_initial_strategies(n, np.random.default_rng(strat_ss))
    meta = {
        "m": m,
        "placement": {
            "n_clusters": placement.n_clusters,
            "cluster_sigma": placement.cluster_sigma,
            "layout": placement.layout,
        },
    }
    return Population(positions, build_physical_network(positions, radius), social, strategies, seed, meta)


# --------------------------------------------------------------------------
# persistence
# --------------------------------------------------------------------------


def _schema() -> dict:
    return json.loads(resources.files("stagnet").joinpath("schemas/population.schema.json").read_text())


def population_to_dict(pop: Population) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "n": pop.n,
        "seed": pop.seed,
        "radius": pop.physical.radius,
        "params": pop.meta,
        "positions": pop.positions.tolist(),
        "strategies": pop.strategies.tolist(),
        "physical_edges": np.column_stack([pop.physical.pairs_i, pop.physical.pairs_j]).tolist(),
        "social_edges": [list(e) for e in pop.social.edges()],
    }


def population_from_dict(doc: dict) -> Population:
    try:
        jsonschema.validate(doc, _schema())
    except jsonschema.ValidationError as exc:
        raise ValueError(f"invalid saved state: {exc.message}") from None
    n = doc["n"]
    positions = np.asarray(doc["positions"], dtype=float).reshape(n, 2)
    strategies = np.asarray(doc["strategies"], dtype=float)
    if strategies.shape != (n,):
        raise ValueError("strategies length does not match n")
    physical = build_physical_network(positions, doc["radius"])
    stored = {tuple(e) for e in doc["physical_edges"]}
    if stored != set(zip(physical.pairs_i.tolist(), physical.pairs_j.tolist())):
        raise ValueError("physical_edges inconsistent with positions and radius")
    social = SocialNetwork(n, (tuple(e) for e in doc["social_edges"]))
    return Population(positions, physical, social, strategies, doc.get("seed"), doc.get("params", {}))


def save_population(pop: Population, path: str | Path) -> None:
    Path(path).write_text(json.dumps(population_to_dict(pop)))


def load_population(path: str | Path) -> Population:
    return population_from_dict(json.loads(Path(path).read_text()))
