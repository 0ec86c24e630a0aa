"""Stationary density ``mu_beta = psi(c* - beta U)`` on a circle grid.

Densities are stored against the normalised measure (the uniform density is
1 and an integral is the arithmetic mean over cells).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .landscape import Landscape
from .potentials import PotentialSpec, phi, psi

__all__ = [
    "StationaryMeasure",
    "solve_stationary",
    "penalized_cost",
    "gap",
    "mu_bounds",
    "BracketError",
]


class BracketError(RuntimeError):
    """The normalisation constant could not be bracketed or did not converge."""


@dataclass(frozen=True)
class StationaryMeasure:
    beta: float
    c_star: float
    x: np.ndarray
    u: np.ndarray
    values: np.ndarray
    mu_min: float
    mu_max: float
    grid_n: int
    L: float

    @property
    def mass(self):
        return float(np.mean(self.values))


def solve_stationary(spec: PotentialSpec, land: Landscape, beta: float, grid_n: int = 2048,
                     tol: float = 1e-12, max_iter: int = 200) -> StationaryMeasure:
    """Solve for the unique stationary density at inverse temperature ``beta``.

    The normalisation constant is found by bisection on
    ``c -> mean(psi(c - beta U)) - 1``, which is increasing and changes sign
    on ``[beta min U, beta max U]``.

    Parameters
    ----------
    tol : float
        Target for ``|mean(mu) - 1|``; bisection also stops once the bracket
        has collapsed to adjacent floats.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if grid_n < 16:
        raise ValueError("grid_n must be at least 16")
    if land.dim != 1:
        raise ValueError("stationary grids are one-dimensional")
    x = land.grid(grid_n)
    u = land.u(x)
    bu = beta * u

    def excess(c):
        return float(np.mean(psi(spec, c - bu))) - 1.0

    lo, hi = float(bu.min()), float(bu.max())
    f_lo, f_hi = excess(lo), excess(hi)
    if f_lo > tol or f_hi < -tol:
        raise BracketError(f"normalisation not bracketed: f({lo})={f_lo}, f({hi})={f_hi}")
    c, f_c = (lo, f_lo) if abs(f_lo) <= abs(f_hi) else (hi, f_hi)
    for _ in range(max_iter):
        if abs(f_c) <= tol and hi - lo <= 4 * np.spacing(max(abs(lo), abs(hi), 1.0)):
            break
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            break
        f_mid = excess(mid)
        if f_mid < 0:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
        c, f_c = (lo, f_lo) if abs(f_lo) <= abs(f_hi) else (hi, f_hi)
    if abs(f_c) > max(tol, 1e-10):
        raise BracketError(f"bisection did not converge: residual {f_c:.3e}")
    values = psi(spec, c - bu)
    return StationaryMeasure(float(beta), float(c), x, u, values, float(values.min()),
                             float(values.max()), int(grid_n), float(land.period))


def penalized_cost(spec: PotentialSpec, u, rho, beta: float) -> float:
    """``beta * int U rho + int phi(rho)`` by the midpoint rule."""
    rho = np.asarray(rho, dtype=float)
    return float(beta * np.mean(np.asarray(u) * rho) + np.mean(phi(spec, rho)))


def gap(spec: PotentialSpec, land: Landscape, beta: float, grid_n: int = 2048) -> float:
    """Relaxation error ``(1/beta) min U_beta - min U`` on the grid."""
    mu = solve_stationary(spec, land, beta, grid_n)
    val = penalized_cost(spec, mu.u, mu.values, beta) / beta - float(mu.u.min())
    return max(val, 0.0)


def mu_bounds(spec: PotentialSpec, beta: float, osc: float):
    """A priori bounds ``(lower, upper)`` on the stationary density."""
    b = beta * osc
    if spec.boltzmann:
        return float(np.exp(-b)), float(np.exp(b))
    m = spec.m
    return (1.0 + (1.0 - m) * b) ** (1.0 / (m - 1.0)), b + 1.0
