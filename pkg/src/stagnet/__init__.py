"""Stag-hunt commuter simulation on a physical + social network.

Agents choose between cycling and driving, revise beliefs by conformity or
imitation, and are hit by interventions and shocks. The package measures
energy, stability, impact and resilience of the resulting states.
"""

__version__ = "0.1.0"

from ._accel import get_backend, set_backend
from .dynamics import ModelParams, PayoffMatrix, SimulationState, SimulationTrace, run_to_convergence
from .experiments import ExperimentConfig, load_config, run_h1, run_h2
from .interventions import InterventionKind, InterventionSpec, evaluate_intervention
from .metrics import (
    FitResult,
    StateSnapshot,
    fit_least_squares,
    impact_score,
    resilience_score,
    stability,
    system_energy,
)
from .population import PlacementParams, Population, build_population
from .shocks import ShockKind, ShockSpec, measure_resilience

__all__ = [
    "ExperimentConfig",
    "FitResult",
    "InterventionKind",
    "InterventionSpec",
    "ModelParams",
    "PayoffMatrix",
    "PlacementParams",
    "Population",
    "ShockKind",
    "ShockSpec",
    "SimulationState",
    "SimulationTrace",
    "StateSnapshot",
    "build_population",
    "evaluate_intervention",
    "fit_least_squares",
    "get_backend",
    "impact_score",
    "load_config",
    "measure_resilience",
    "resilience_score",
    "run_h1",
    "run_h2",
    "run_to_convergence",
    "set_backend",
    "stability",
    "system_energy",
]
