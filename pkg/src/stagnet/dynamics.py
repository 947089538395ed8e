"""Stag-hunt play on the physical layer and belief revision on both layers."""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .metrics import DEVIATION_MODES, _mode_code
from .population import Population


class Action(enum.IntEnum):
    COOPERATE = 0  # cycle
    DEFECT = 1  # car


@dataclass(frozen=True)
class PayoffMatrix:
    """(row, column) payoffs; cooperate = cycle, defect = car."""

    cc: tuple[float, float] = (3.0, 3.0)
    cd: tuple[float, float] = (0.0, 2.0)
    dc: tuple[float, float] = (2.0, 0.0)
    dd: tuple[float, float] = (2.0, 2.0)

    def __post_init__(self):
        if not (self.cc[0] > self.dc[0] and self.dd[0] > self.cd[0]):
            raise ValueError("payoffs do not have stag-hunt ordering")

    def table(self) -> np.ndarray:
        return np.array([[self.cc, self.cd], [self.dc, self.dd]], dtype=float)

    def lookup(self, a_row: Action, a_col: Action) -> tuple[float, float]:
        t = self.table()[int(a_row), int(a_col)]
        return float(t[0]), float(t[1])


@dataclass(frozen=True)
class ModelParams:
    alpha: float = 0.7
    gamma: float = 0.8
    delta: float = 0.01
    radius: float = 0.1
    payoff: PayoffMatrix = PayoffMatrix()
    max_epochs: int = 1500
    quiet_epochs: int = 20
    revision_epsilon: float = 1e-4
    expected_payoff: bool = False
    deviation: str = "squared"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if not self.delta > 0:
            raise ValueError("delta must be > 0")
        if not self.radius > 0:
            raise ValueError("radius must be > 0")
        if self.max_epochs < 1 or self.quiet_epochs < 1:
            raise ValueError("epoch limits must be >= 1")
        if self.revision_epsilon < 0:
            raise ValueError("revision_epsilon must be >= 0")
        if self.deviation not in DEVIATION_MODES:
            raise ValueError(f"deviation must be one of {DEVIATION_MODES}")


@dataclass
class SimulationState:
    population: Population
    epoch: int = 0
    epoch_payoff: np.ndarray | None = None
    quiet_streak: int = 0
    converged: bool = False

    def __post_init__(self):
        if self.epoch_payoff is None:
            self.epoch_payoff = np.zeros(self.population.n)

    @property
    def strategies(self) -> np.ndarray:
        return self.population.strategies


TRACE_HEADER = ("epoch", "cyclists", "energy", "stability", "revised")


@dataclass
class SimulationTrace:
    epochs: list[int] = field(default_factory=list)
    cyclists: list[int] = field(default_factory=list)
    energy: list[float] = field(default_factory=list)
    stability: list[float] = field(default_factory=list)
    revised: list[int] = field(default_factory=list)
    converged: bool = False
    final_epoch: int = 0

    def __len__(self):
        return len(self.epochs)

    def append(self, epoch, cyclists, energy, stability, revised):
        self.epochs.append(int(epoch))
        self.cyclists.append(int(cyclists))
        self.energy.append(float(energy))
        self.stability.append(float(stability))
        self.revised.append(int(revised))

    def rows(self):
        return zip(self.epochs, self.cyclists, self.energy, self.stability, self.revised)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for e, c, en, st, r in self.rows():
            w.writerow([e, c, repr(en), repr(st), r])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "final_epoch": self.final_epoch,
            "rows": [dict(zip(TRACE_HEADER, row)) for row in self.rows()],
        }


def sample_action(s: float, rng: np.random.Generator) -> Action:
    return Action.COOPERATE if rng.random() < s else Action.DEFECT


def attenuated_payoff(raw: float, d: float, gamma: float) -> float:
    return raw * gamma**d


def play_epoch(state: SimulationState, params: ModelParams, rng: np.random.Generator) -> np.ndarray:
    """One game per physical pair; fills and returns ``state.epoch_payoff``.

    Consumes ``2 * n_pairs`` uniforms (none in expected-payoff mode).
    """
    pop = state.population
    phys = pop.physical
    if params.expected_payoff:
        u = np.empty((2, 0))
    else:
        u = rng.random((2, phys.n_edges))
    state.epoch_payoff = kernels.play_pairs(
        pop.strategies,
        phys.pairs_i,
        phys.pairs_j,
        params.gamma**phys.pair_dist,
        u[0],
        u[1],
        params.payoff.table(),
        params.expected_payoff,
        pop.n,
    )
    return state.epoch_payoff


def optimal_strategy(i: int, state: SimulationState) -> float:
    """Mean over physical and social neighbours; own strategy when there are none."""
    pop = state.population
    s = pop.strategies
    peers = list(pop.physical.neighbors(i)) + pop.social.neighbors(i)
    if not peers:
        return float(s[i])
    return float(np.mean(s[peers]))


def conformity_update(s: float, s_opt: float, delta: float) -> float:
    return min(1.0, max(0.0, s + delta * (s_opt - s)))


def utility_update(i: int, state: SimulationState, delta: float) -> float:
    """Step towards the physical neighbour with the largest payoff this epoch (lowest id on ties)."""
    pop = state.population
    s = pop.strategies
    nbrs = pop.physical.neighbors(i)
    if len(nbrs) == 0:
        return float(s[i])
    pay = state.epoch_payoff[nbrs]
    k = int(nbrs[int(np.argmax(pay))])
    return min(1.0, max(0.0, float(s[i] + delta * (s[k] - s[i]))))


def revise_beliefs(
    state: SimulationState, params: ModelParams, rng: np.random.Generator, u: np.ndarray | None = None
) -> tuple[np.ndarray, int]:
    """Synchronous revision; returns the new strategy vector and how many agents moved.

    Each agent draws one uniform: below ``alpha`` it conforms, otherwise it imitates.
    Pass ``u`` to supply those draws explicitly.
    """
    pop = state.population
    if u is None:
        u = rng.random(pop.n)
    indptr, indices = pop.merged_csr()
    opt = kernels.neighbour_means(indptr, indices, pop.strategies)
    best = kernels.best_neighbour(pop.physical.indptr, pop.physical.indices, state.epoch_payoff)
    return kernels.revise(
        pop.strategies, opt, best, u, params.alpha, params.delta, params.revision_epsilon
    )


def run_to_convergence(
    population: Population, params: ModelParams, rng: np.random.Generator
) -> tuple[SimulationState, SimulationTrace]:
    """Play and revise until ``quiet_epochs`` consecutive epochs see no revision, or ``max_epochs``.

    Works on a copy; the input population is left untouched.
    """
    state = SimulationState(population.copy())
    pop = state.population
    trace = SimulationTrace()
    indptr, indices = pop.merged_csr()
    mode = _mode_code(params.deviation)
    n = pop.n
    for epoch in range(1, params.max_epochs + 1):
        state.epoch = epoch
        play_epoch(state, params, rng)
        new, revised = revise_beliefs(state, params, rng)
        pop.strategies = new
        opt = kernels.neighbour_means(indptr, indices, new)
        energy, dev = kernels.deviation_terms(indptr, indices, new, opt, mode)
        trace.append(epoch, np.count_nonzero(new > 0.5), energy, 1.0 - dev / n, revised)
        state.quiet_streak = state.quiet_streak + 1 if revised == 0 else 0
        if state.quiet_streak >= params.quiet_epochs:
            state.converged = True
            break
    trace.converged = state.converged
    trace.final_epoch = state.epoch
    return state, trace
