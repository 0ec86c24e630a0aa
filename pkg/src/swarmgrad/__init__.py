"""Swarm gradient dynamics: a density-dependent generalisation of simulated annealing.

The package offers a finite-volume solver for the nonlinear Fokker-Planck
equation on the circle (:mod:`swarmgrad.pde1d`), an interacting-particle
simulator on flat tori (:mod:`swarmgrad.swarm`) and numerical checks of the
inequalities behind its convergence (:mod:`swarmgrad.diagnostics`).
"""

__version__ = "0.1.0"

from .diagnostics import (
    check_functional_inequality,
    check_talagrand,
    entropy_production,
    lyapunov_bound,
    reduced_cost,
    w2_circle,
)
from .landscape import Landscape, builtin, oscillation
from .pde1d import GridDensity, evolve, step, step_implicit, suggest_dt
from .potentials import PotentialSpec
from .schedules import Schedule, validate_schedule
from .stationary import StationaryMeasure, gap, solve_stationary
from .swarm import Kernel, SwarmState, em_step, kde_at, run_swarm

__all__ = [
    "PotentialSpec",
    "Landscape",
    "builtin",
    "oscillation",
    "StationaryMeasure",
    "solve_stationary",
    "gap",
    "Schedule",
    "validate_schedule",
    "GridDensity",
    "step",
    "step_implicit",
    "suggest_dt",
    "evolve",
    "Kernel",
    "SwarmState",
    "kde_at",
    "em_step",
    "run_swarm",
    "reduced_cost",
    "entropy_production",
    "check_functional_inequality",
    "w2_circle",
    "check_talagrand",
    "lyapunov_bound",
]
