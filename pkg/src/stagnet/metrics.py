"""Energy, stability, impact, resilience and the line fit used for H1."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .population import Population

DEVIATION_MODES = ("squared", "absolute")


class ImpactUndefinedError(ValueError):
    """Impact is a ratio over the pre-intervention cyclist count, which was zero."""


class DegenerateFitError(ValueError):
    pass


def _mode_code(mode: str) -> int:
    if mode == "squared":
        return kernels.SQUARED
    if mode == "absolute":
        return kernels.ABSOLUTE
    raise ValueError(f"unknown deviation mode {mode!r}")


def _penalty(d, mode: str):
    return d * d if _mode_code(mode) == kernels.SQUARED else np.abs(d)


@dataclass(frozen=True)
class StateSnapshot:
    """Read-only copy of a strategy vector."""

    strategies: np.ndarray

    @classmethod
    def capture(cls, pop_or_strategies) -> "StateSnapshot":
        s = pop_or_strategies.strategies if isinstance(pop_or_strategies, Population) else pop_or_strategies
        s = np.array(s, dtype=float, copy=True)
        s.setflags(write=False)
        return cls(s)

    @property
    def n(self) -> int:
        return int(self.strategies.shape[0])

    def cyclists(self) -> int:
        return cyclist_count(self.strategies)


def _strategies(x) -> np.ndarray:
    if isinstance(x, (StateSnapshot, Population)):
        return x.strategies
    return np.asarray(x, dtype=float)


def cyclist_count(strategies) -> int:
    """Agents strictly inclined to cycle (s > 0.5)."""
    return int(np.count_nonzero(_strategies(strategies) > 0.5))


def optimal_strategies(population: Population, strategies=None) -> np.ndarray:
    """Mean strategy over the physical and social neighbour multiset, per agent."""
    s = population.strategies if strategies is None else _strategies(strategies)
    indptr, indices = population.merged_csr()
    return kernels.neighbour_means(indptr, indices, s)


def agent_stress(i: int, snapshot, population: Population, mode: str = "squared") -> float:
    s = _strategies(snapshot)
    phys = s[population.physical.neighbors(i)] - s[i]
    soc = s[population.social.neighbors(i)] - s[i]
    return float(_penalty(phys, mode).sum() + _penalty(soc, mode).sum())


def system_energy(snapshot, population: Population, mode: str = "squared") -> float:
    s = _strategies(snapshot)
    indptr, indices = population.merged_csr()
    energy, _ = kernels.deviation_terms(indptr, indices, s, s, _mode_code(mode))
    return float(energy)


def stability(snapshot, population: Population, mode: str = "squared") -> float:
    """One minus the mean deviation of each agent from its optimal strategy."""
    s = _strategies(snapshot)
    if s.shape[0] < 1:
        raise ValueError("empty population")
    opt = optimal_strategies(population, s)
    d = opt - s
    return float(1.0 - _penalty(d, mode).sum() / s.shape[0])


def impact_score(before, after) -> float:
    c0 = cyclist_count(before)
    c1 = cyclist_count(after)
    if c0 == 0:
        raise ImpactUndefinedError("no cyclists before the intervention")
    return (c1 - c0) / c0


def strategy_displacement(before, after) -> float:
    a = _strategies(before)
    b = _strategies(after)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    d = a - b
    return float(np.sqrt(np.dot(d, d)))


def resilience_score(before, after) -> float:
    """exp(-||S - S'||) for the strategy vectors before and after a shock."""
    return float(np.exp(-strategy_displacement(before, after)))


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    n: int = 0


def fit_least_squares(xs, ys) -> FitResult:
    """Ordinary least squares line ``y = slope * x + intercept`` with r² = Pearson r squared."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DegenerateFitError("xs and ys must be 1-d and of equal length")
    if x.shape[0] < 2:
        raise DegenerateFitError("need at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    if sxx == 0.0:
        raise DegenerateFitError("all x values are equal")
    sxy = float(np.dot(dx, dy))
    syy = float(np.dot(dy, dy))
    slope = sxy / sxx
    intercept = float(y.mean() - slope * x.mean())
    r2 = 0.0 if syy == 0.0 else min(1.0, sxy * sxy / (sxx * syy))
    return FitResult(slope, intercept, r2, int(x.shape[0]))
