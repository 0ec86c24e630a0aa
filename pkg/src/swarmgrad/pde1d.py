"""Finite-volume integrator for the nonlinear Fokker-Planck equation on a circle.

    d rho / dt = d/dx ( rho * d/dx ( beta U + phi'(rho) ) )

The flux across the face between cells ``i`` and ``i+1`` is written as a
mobility times the difference of the chemical potential
``xi = beta U + phi'(rho)``.  This form conserves mass exactly (telescoping
fluxes), dissipates the discrete penalised cost, and keeps the grid
stationary density from :func:`~swarmgrad.stationary.solve_stationary` as an
exact fixed point, since ``xi`` is constant there.

Two time steppers are provided:

* :func:`step` -- explicit Euler with upwind mobility, stable under
  :func:`suggest_dt`.
* :func:`step_implicit` -- backward Euler in ``rho`` with the mobility frozen
  at the start of the step.  Each step is the minimiser of a strictly convex
  problem, so it exists, stays positive and decreases the penalised cost for
  every ``dt``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_banded

from .landscape import Landscape
from .potentials import PotentialSpec, phi_prime, phi_second, psi, psi_prime
from .schedules import Schedule
from .stationary import penalized_cost, solve_stationary

__all__ = [
    "GridDensity",
    "StabilityError",
    "DtPolicy",
    "uniform",
    "step",
    "step_implicit",
    "suggest_dt",
    "evolve",
    "Trajectory",
]

log = logging.getLogger(__name__)

FLOOR_EPS = 1e-14
CFL_SAFETY = 0.4


class StabilityError(RuntimeError):
    """Raised when a step produces NaN or non-positive mass."""


@dataclass(frozen=True)
class GridDensity:
    """Density on ``n`` uniform cells of a circle of perimeter ``L``."""

    rho: np.ndarray
    L: float = 1.0
    t: float = 0.0

    @property
    def n(self):
        return self.rho.size

    @property
    def dx(self):
        return self.L / self.rho.size

    @property
    def mass(self):
        return float(np.mean(self.rho))

    @property
    def x(self):
        return (np.arange(self.n) + 0.5) * self.dx


def uniform(n: int, L: float = 1.0, t: float = 0.0) -> GridDensity:
    return GridDensity(np.ones(n), float(L), float(t))


def _chemical_potential(spec, u, rho, beta):
    return beta * u + phi_prime(spec, rho)


def _floor(rho, mass):
    bad = ~np.isfinite(rho)
    if np.any(bad):
        raise StabilityError("non-finite density; reduce dt (see suggest_dt)")
    if np.any(rho < -1e-10 * mass):
        raise StabilityError(f"negative density {rho.min():.3e}; reduce dt (see suggest_dt)")
    if np.any(rho < FLOOR_EPS):
        rho = np.maximum(rho, FLOOR_EPS)
        rho = rho * (mass / np.mean(rho))
    return rho


def _face_velocity(xi, dx):
    # velocity on face i+1/2 between cell i and cell i+1
    return -(np.roll(xi, -1) - xi) / dx


def step(state: GridDensity, spec: PotentialSpec, land: Landscape, beta: float, dt: float) -> GridDensity:
    """One explicit finite-volume step with upwind face mobility."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    rho = state.rho
    dx = state.dx
    u = land.u(state.x)
    v = _face_velocity(_chemical_potential(spec, u, rho, beta), dx)
    mob = np.where(v > 0, rho, np.roll(rho, -1))
    flux = mob * v
    new = rho - (dt / dx) * (flux - np.roll(flux, 1))
    new = _floor(new, state.mass)
    return replace(state, rho=new, t=state.t + dt)


def suggest_dt(state: GridDensity, spec: PotentialSpec, land: Landscape, beta: float) -> float:
    """Largest explicit step allowed by the advective and diffusive CFL bounds."""
    rho = state.rho
    dx = state.dx
    u = land.u(state.x)
    v = np.abs(_face_velocity(_chemical_potential(spec, u, rho, beta), dx))
    d2 = phi_second(spec, rho)
    right = np.roll(rho, -1)
    diff = np.maximum(rho, right) * np.maximum(d2, np.roll(d2, -1))
    candidates = [dx * dx / (2.0 * float(diff.max()))]
    vmax = float(v.max())
    if vmax > 0:
        candidates.append(dx / vmax)
    return CFL_SAFETY * min(candidates)


def _cyclic_solve(lower, diag, upper, rhs):
    """Solve a periodic tridiagonal system.

    Row ``i`` reads ``lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]``
    with indices taken modulo ``n``.
    """
    n = diag.size
    a_corner = lower[0]   # coefficient of x[n-1] in row 0
    b_corner = upper[-1]  # coefficient of x[0] in row n-1
    gamma = -diag[0]
    d = diag.copy()
    d[0] -= gamma
    d[-1] -= a_corner * b_corner / gamma
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1] = d
    ab[2, :-1] = lower[1:]
    w = np.zeros(n)
    w[0] = gamma
    w[-1] = b_corner
    sol = solve_banded((1, 1), ab, np.column_stack([rhs, w]), check_finite=False)
    y, z = sol[:, 0], sol[:, 1]
    vy = y[0] + a_corner * y[-1] / gamma
    vz = z[0] + a_corner * z[-1] / gamma
    return y - z * (vy / (1.0 + vz))


def _shift_left(a):
    # a[i+1] with periodic wrap
    return np.concatenate([a[1:], a[:1]])


def _shift_right(a):
    # a[i-1] with periodic wrap
    return np.concatenate([a[-1:], a[:-1]])


def step_implicit(state: GridDensity, spec: PotentialSpec, land: Landscape, beta: float, dt: float,
                  newton_tol: float = 1e-12, max_newton: int = 50) -> GridDensity:
    """One backward-Euler step with frozen centred face mobility.

    The unknown is ``w = phi'(rho)``, so ``rho = psi(w)`` stays positive.  The
    residual ``psi(w) - rho_old - k A (beta U + w)`` is convex in each
    component and its Jacobian is an M-matrix, hence plain Newton converges
    monotonically after the first iterate.  Raises :class:`StabilityError`
    if it does not converge; :func:`evolve` then retries with a smaller ``dt``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    old = state.rho
    u = land.u(state.x)
    k = dt / (state.dx * state.dx)
    m_plus = 0.5 * (old + _shift_left(old))
    m_minus = _shift_right(m_plus)
    bu = beta * u

    def residual(w, rho):
        xi = bu + w
        return rho - old - k * (m_plus * (_shift_left(xi) - xi) - m_minus * (xi - _shift_right(xi)))

    w = phi_prime(spec, old)
    rho = old
    scale = float(np.max(old))
    # round-off floor of the residual: k A xi is a difference of large terms
    floor = 64.0 * np.finfo(float).eps * k * float(np.max(m_plus)) * float(np.max(np.abs(bu + w)))
    tol = newton_tol * scale + floor
    err = np.inf
    for it in range(max_newton):
        res = residual(w, rho)
        err = float(np.max(np.abs(res)))
        if not np.isfinite(err):
            break
        if err <= tol:
            break
        diag = psi_prime(spec, w) + k * (m_plus + m_minus)
        w = w + _cyclic_solve(-k * m_minus, diag, -k * m_plus, -res)
        new = psi(spec, w)
        change = float(np.max(np.abs(new - rho)))
        rho = new
        if it > 0 and change <= newton_tol * scale:
            # quadratic convergence: the next correction is far below this one
            err = float(np.max(np.abs(residual(w, rho))))
            if err <= max(tol, 1e3 * floor):
                break
    if not err <= max(tol, 1e3 * floor):
        raise StabilityError(f"Newton did not converge (residual {err:.3e}) at dt={dt:.3e}")
    # drift of the mean is at round-off level; remove it so mass is exact
    rho = _floor(rho, state.mass)
    rho = rho * (state.mass / np.mean(rho))
    return replace(state, rho=rho, t=state.t + dt)


@dataclass(frozen=True)
class DtPolicy:
    """Time-step control for :func:`evolve`.

    ``method="explicit"`` uses ``suggest_dt`` at every step (``dt`` ignored).
    ``method="implicit"`` starts at ``dt`` and grows it by ``growth`` after
    every accepted step up to ``dt_max``; failed Newton solves halve it.
    """

    method: str = "implicit"
    dt: float = 1e-6
    growth: float = 1.05
    dt_max: float = 0.05

    def __post_init__(self):
        if self.method not in ("explicit", "implicit"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.dt <= 0 or self.dt_max <= 0 or self.growth < 1:
            raise ValueError("dt and dt_max must be positive, growth >= 1")


@dataclass
class Trajectory:
    """Diagnostics recorded by :func:`evolve`; one entry per checkpoint."""

    t: list = field(default_factory=list)
    beta: list = field(default_factory=list)
    I: list = field(default_factory=list)
    J: list = field(default_factory=list)
    mean_u: list = field(default_factory=list)
    l1_to_mu: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    profiles: dict = field(default_factory=dict)
    final: GridDensity | None = None
    steps: int = 0
    max_energy_increase: float = 0.0

    def rows(self):
        for i in range(len(self.t)):
            yield (self.t[i], self.beta[i], self.I[i], self.J[i], self.mean_u[i], self.l1_to_mu[i])


def _record(traj, state, spec, u, mu):
    from .diagnostics import entropy_production, reduced_cost

    traj.t.append(state.t)
    traj.beta.append(mu.beta)
    traj.I.append(reduced_cost(state.rho, mu, spec))
    traj.J.append(entropy_production(state.rho, mu, spec, state.L))
    traj.mean_u.append(float(np.mean(u * state.rho)))
    traj.l1_to_mu.append(float(np.mean(np.abs(state.rho - mu.values))))
    traj.mass.append(state.mass)


def evolve(state: GridDensity, spec: PotentialSpec, land: Landscape, schedule: Schedule, t_end: float,
           policy: DtPolicy | None = None, record_times=None, record_every: int | None = None,
           profile_times=()) -> Trajectory:
    """Integrate from ``state.t`` to ``t_end`` with ``beta = schedule.beta_at(t)``.

    Parameters
    ----------
    record_times : sequence of float, optional
        Checkpoints at which diagnostics are recorded (the integrator lands
        on them exactly).  The initial and final states are always recorded.
    record_every : int, optional
        Additionally record every this many steps.
    profile_times : sequence of float
        Checkpoints at which a copy of the full profile is stored.

    Returns
    -------
    Trajectory
        Diagnostics per checkpoint; ``max_energy_increase`` is the largest
        per-step increase of the penalised cost over steps taken at constant
        ``beta`` (it should be <= 0 up to round-off).
    """
    if t_end <= state.t:
        raise ValueError("t_end must exceed the current time")
    policy = policy or DtPolicy()
    n = state.n
    u = land.u(state.x)
    record_times = () if record_times is None else record_times
    targets = sorted({float(t) for t in record_times if state.t < t <= t_end} | {float(t_end)})
    profile_times = {float(t) for t in profile_times}
    mu_cache = {}

    def mu_at(beta):
        mu = mu_cache.get(beta)
        if mu is None:
            mu = solve_stationary(spec, land, beta, n)
            if len(mu_cache) > 8:
                mu_cache.clear()
            mu_cache[beta] = mu
        return mu

    traj = Trajectory()
    _record(traj, state, spec, u, mu_at(schedule.beta_at(state.t)))
    dt = policy.dt
    k = 0
    for target in targets:
        while state.t < target * (1 - 1e-15):
            beta = schedule.beta_at(state.t)
            if policy.method == "explicit":
                h = min(suggest_dt(state, spec, land, beta), target - state.t)
                new = step(state, spec, land, beta, h)
            else:
                h = min(dt, target - state.t)
                beta = schedule.beta_at(state.t + h)
                try:
                    new = step_implicit(state, spec, land, beta, h)
                except StabilityError:
                    dt = 0.5 * h
                    if dt < 1e-14:
                        raise
                    log.debug("Newton failed, dt -> %g", dt)
                    continue
                if h == dt:
                    dt = min(dt * policy.growth, policy.dt_max)
            if schedule.beta_at(state.t) == schedule.beta_at(new.t):
                e_old = penalized_cost(spec, u, state.rho, beta)
                e_new = penalized_cost(spec, u, new.rho, beta)
                traj.max_energy_increase = max(traj.max_energy_increase, e_new - e_old)
            state = new
            k += 1
            if record_every and k % record_every == 0 and state.t < target:
                _record(traj, state, spec, u, mu_at(schedule.beta_at(state.t)))
        state = replace(state, t=target)
        _record(traj, state, spec, u, mu_at(schedule.beta_at(state.t)))
        if target in profile_times:
            traj.profiles[target] = state.rho.copy()
    traj.final = state
    traj.steps = k
    return traj
