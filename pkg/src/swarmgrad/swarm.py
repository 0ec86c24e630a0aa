"""Interacting-particle form of the swarm gradient flow on flat tori.

Each particle follows

    dX = -beta grad U(X) dt + sqrt(2 alpha(rho_hat(X))) dB

where ``rho_hat`` is a kernel density estimate built from the whole swarm.
The factor 2 makes the generator ``alpha(rho) Laplacian - beta grad U . grad``
and matches the Fokker-Planck solver in :mod:`swarmgrad.pde1d`; it is
exposed as ``diffusion_factor``.

Densities are taken against the normalised measure, so a uniform swarm has
``rho_hat = 1`` whatever the period.  Kernel arguments and bandwidths are in
unit-period coordinates.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate
from scipy.spatial import cKDTree

from .landscape import Landscape, wrap
from .potentials import PotentialSpec, alpha
from .schedules import Schedule
from .stationary import solve_stationary

__all__ = [
    "Kernel",
    "SwarmState",
    "BandwidthPolicy",
    "DuplicationPolicy",
    "init_uniform",
    "kde_at",
    "em_step",
    "run_swarm",
    "SwarmTrajectory",
    "basin_fraction",
]

log = logging.getLogger(__name__)

RHO_FLOOR = 1e-12
ALPHA_CAP = 1e3
SUPPORT = 0.25


def _bump(u):
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) < SUPPORT
    s = np.where(inside, 1.0 - (4.0 * u) ** 2, 1.0)
    return np.where(inside, np.exp(-1.0 / s), 0.0)


@dataclass(frozen=True)
class Kernel:
    """Product bump kernel ``prod_i c exp(-1 / (1 - (4 u_i)^2))`` on ``[-1/4, 1/4]^d``."""

    dim: int = 1
    norm: float = field(init=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        z, _ = integrate.quad(lambda u: float(_bump(u)), -SUPPORT, SUPPORT, epsabs=1e-14, epsrel=1e-13)
        object.__setattr__(self, "norm", 1.0 / z)

    def __call__(self, u):
        """Kernel value at displacements ``u`` of shape ``(..., dim)``."""
        u = np.asarray(u, dtype=float)
        return np.prod(self.norm * _bump(u), axis=-1)

    def profile(self, u):
        """One-axis factor ``c exp(-1 / (1 - (4u)^2))``."""
        return self.norm * _bump(u)


@dataclass(frozen=True)
class SwarmState:
    """Particle positions (physical coordinates, shape ``(N, dim)``) and bookkeeping.

    ``rng`` is advanced in place by :func:`em_step`; the counters are cumulative.
    """

    positions: np.ndarray
    period: float
    h: float
    rng: np.random.Generator = field(repr=False)
    t: float = 0.0
    alpha_cap_hits: int = 0
    floor_hits: int = 0

    def __post_init__(self):
        if self.positions.ndim != 2:
            raise ValueError("positions must have shape (N, dim)")
        if self.positions.shape[0] < 2:
            raise ValueError("need at least two particles")
        if not 0.0 < self.h < 1.0:
            raise ValueError("bandwidth h must lie in (0, 1)")

    @property
    def n(self):
        return self.positions.shape[0]

    @property
    def dim(self):
        return self.positions.shape[1]


def init_uniform(n: int, dim: int = 1, period: float = 1.0, h: float = 0.02, seed: int = 0) -> SwarmState:
    """Independent uniform positions; the same generator then drives the noise."""
    rng = np.random.default_rng(seed)
    pos = rng.random((n, dim)) * period
    return SwarmState(wrap(pos, period), float(period), float(h), rng)


@dataclass(frozen=True)
class BandwidthPolicy:
    """``h(t) = h0 (1 + t)**(-q)``; ``q = 0`` keeps the bandwidth constant."""

    h0: float = 0.02
    q: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.h0 < 1.0:
            raise ValueError("h0 must lie in (0, 1)")
        if self.q < 0:
            raise ValueError("q must be non-negative")

    def at(self, t):
        return self.h0 * (1.0 + t) ** (-self.q)


@dataclass(frozen=True)
class DuplicationPolicy:
    """Every ``every`` steps, copy ``fraction * N`` randomly chosen particles, up to ``max_n``."""

    every: int = 1000
    fraction: float = 0.1
    max_n: int = 100_000

    def __post_init__(self):
        if self.every < 1 or not 0 < self.fraction <= 1 or self.max_n < 2:
            raise ValueError("invalid duplication policy")


def _unit(points, period, dim):
    y = np.asarray(points, dtype=float) / period
    if dim == 1 and (y.ndim == 0 or y.shape[-1] != 1):
        y = y.reshape(-1, 1)
    return y.reshape(-1, dim)


def _min_image(d):
    return d - np.round(d)


def _kde_direct(yq, yp, h, kernel):
    out = np.empty(yq.shape[0])
    for i in range(yq.shape[0]):
        out[i] = kernel(_min_image(yq[i] - yp) / h).sum()
    return out


def _kde_sorted_1d(yq, yp, h, kernel):
    # exact: only particles within h/4 of a query contribute
    r = SUPPORT * h
    p = np.sort(yp[:, 0])
    p = np.concatenate([p[p > 1.0 - r] - 1.0, p, p[p < r] + 1.0])
    q = yq[:, 0]
    lo = np.searchsorted(p, q - r, side="left")
    hi = np.searchsorted(p, q + r, side="right")
    counts = hi - lo
    total = int(counts.sum())
    if total == 0:
        return np.zeros(q.size)
    owner = np.repeat(np.arange(q.size), counts)
    starts = np.repeat(lo - np.concatenate([[0], np.cumsum(counts)[:-1]]), counts)
    idx = starts + np.arange(total)
    vals = kernel.norm * _bump_inside((q[owner] - p[idx]) / h)
    return np.bincount(owner, weights=vals, minlength=q.size)


def _bump_inside(u):
    # bump for |u| <= 1/4; vanishes (exp(-1e300) = 0) outside
    s = np.maximum(1.0 - 16.0 * u * u, 1e-300)
    return np.exp(-1.0 / s)


def _kde_sorted_self_1d(yp, h, kernel):
    # queries are the particles: each unordered pair is evaluated once, by
    # sweeping over the offset between sorted neighbours
    r = SUPPORT * h
    order = np.argsort(yp[:, 0], kind="stable")
    p = yp[order, 0]
    n = p.size
    ext = np.concatenate([p, p + 1.0])
    hi = np.searchsorted(ext, p + r, side="right")
    reach = int(np.max(hi - np.arange(n) - 1))
    acc = np.zeros(n + reach)
    for o in range(1, reach + 1):
        v = _bump_inside((ext[o:o + n] - p) / h)
        acc[:n] += v
        acc[o:o + n] += v
    res = acc[:n]
    res[:reach] += acc[n:]
    res = kernel.norm * (res + np.exp(-1.0))
    out = np.empty(n)
    out[order] = res
    return out


def _kde_tree(yq, yp, h, kernel):
    r = SUPPORT * h
    tree_p = cKDTree(yp, boxsize=1.0)
    tree_q = cKDTree(yq, boxsize=1.0)
    pairs = tree_q.sparse_distance_matrix(tree_p, r, p=np.inf, output_type="ndarray")
    i = pairs["i"].astype(np.intp)
    j = pairs["j"].astype(np.intp)
    vals = kernel(_min_image(yq[i] - yp[j]) / h)
    return np.bincount(i, weights=vals, minlength=yq.shape[0])


def kde_at(state: SwarmState, kernel: Kernel, x=None, method: str = "auto") -> np.ndarray:
    """Kernel density estimate ``(1/N) sum_n h^-d K((x - X_n) / h)``.

    Parameters
    ----------
    x : array_like, optional
        Query points in physical coordinates, shape ``(M, dim)`` (or ``(M,)``
        on the circle).  Defaults to the particle positions.
    method : {"auto", "direct", "sorted", "tree"}
        ``direct`` loops over all pairs; ``sorted`` (circle only) and
        ``tree`` restrict to neighbours within the kernel support and give
        the same sums.  ``auto`` picks ``sorted`` in one dimension and
        ``tree`` otherwise.
    """
    if kernel.dim != state.dim:
        raise ValueError("kernel and swarm dimensions differ")
    h = state.h
    if not h < 0.5:
        raise ValueError("h must be below 1/2 so the kernel support does not wrap onto itself")
    d = state.dim
    yp = wrap(state.positions / state.period, 1.0)
    yq = yp if x is None else wrap(_unit(x, state.period, d), 1.0)
    if method == "auto":
        method = "sorted" if d == 1 else "tree"
    if method == "direct":
        s = _kde_direct(yq, yp, h, kernel)
    elif method == "sorted":
        if d != 1:
            raise ValueError("the sorted method is for the circle only")
        s = _kde_sorted_self_1d(yp, h, kernel) if x is None else _kde_sorted_1d(yq, yp, h, kernel)
    elif method == "tree":
        s = _kde_tree(yq, yp, h, kernel)
    else:
        raise ValueError(f"unknown method {method!r}")
    return s / (state.n * h**d)


def em_step(state: SwarmState, spec: PotentialSpec, land: Landscape, kernel: Kernel, beta: float, dt: float,
            growth_policy: DuplicationPolicy | None = None, step_index: int = 0, noise=None,
            diffusion_factor: float = 2.0, alpha_cap: float = ALPHA_CAP) -> SwarmState:
    """One synchronous Euler-Maruyama step.

    The density estimate is frozen at the pre-step positions.  The generator
    draws one ``(N, dim)`` standard normal block per step (row-major, so
    particle by particle).  ``noise`` overrides the draw: an array of that
    shape or ``0`` for a drift-only step (nothing is drawn then).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if land.dim != state.dim:
        raise ValueError("landscape and swarm dimensions differ")
    if land.period != state.period:
        raise ValueError("landscape and swarm periods differ")
    x = state.positions
    floor_hits = cap_hits = 0
    if spec.boltzmann:
        # alpha is identically 1: classical Langevin dynamics, no density needed
        a = np.ones(state.n)
    else:
        rho_hat = kde_at(state, kernel)
        low = rho_hat < RHO_FLOOR
        floor_hits = int(low.sum())
        rho_hat = np.where(low, RHO_FLOOR, rho_hat)
        a = np.atleast_1d(alpha(spec, rho_hat))
        capped = a > alpha_cap
        cap_hits = int(capped.sum())
        if cap_hits:
            log.debug("alpha capped for %d particles at t=%g", cap_hits, state.t)
            a = np.where(capped, alpha_cap, a)

    if noise is None:
        xi = state.rng.standard_normal(x.shape)
    elif np.isscalar(noise) and noise == 0:
        xi = np.zeros(x.shape)
    else:
        xi = np.asarray(noise, dtype=float)
        if xi.shape != x.shape:
            raise ValueError(f"noise must have shape {x.shape}")

    drift = -beta * land.grad_u(x) * dt
    diffusion = np.sqrt(diffusion_factor * a * dt)[:, None] * xi
    new = wrap(x + drift + diffusion, state.period)

    if growth_policy is not None and (step_index + 1) % growth_policy.every == 0:
        room = growth_policy.max_n - new.shape[0]
        k = min(int(np.ceil(growth_policy.fraction * new.shape[0])), room)
        if k > 0:
            pick = state.rng.choice(new.shape[0], size=k, replace=False)
            new = np.concatenate([new, new[np.sort(pick)]], axis=0)

    return replace(state, positions=new, t=state.t + dt, alpha_cap_hits=state.alpha_cap_hits + cap_hits,
                   floor_hits=state.floor_hits + floor_hits)


def basin_fraction(state: SwarmState, land: Landscape) -> float:
    """Share of particles within ``land.basin_radius`` of the global minimiser (max-norm)."""
    if land.argmin is None or land.basin_radius is None:
        return float("nan")
    d = state.positions - np.asarray(land.argmin)
    d = d - state.period * np.round(d / state.period)
    dist = np.max(np.abs(d), axis=1)
    return float(np.mean(dist <= land.basin_radius))


@dataclass
class SwarmTrajectory:
    t: list = field(default_factory=list)
    beta: list = field(default_factory=list)
    h: list = field(default_factory=list)
    n: list = field(default_factory=list)
    mean_u: list = field(default_factory=list)
    basin_fraction: list = field(default_factory=list)
    kde_l1_to_mu: list = field(default_factory=list)
    alpha_cap_hits: list = field(default_factory=list)
    kde_profiles: dict = field(default_factory=dict)
    dumps: dict = field(default_factory=dict)
    final: SwarmState | None = None

    HEADER = ("t", "beta", "h", "N", "mean_U", "basin_fraction", "kde_l1_to_mu", "alpha_cap_hits")

    def rows(self):
        for i in range(len(self.t)):
            yield (self.t[i], self.beta[i], self.h[i], self.n[i], self.mean_u[i], self.basin_fraction[i],
                   self.kde_l1_to_mu[i], self.alpha_cap_hits[i])


def run_swarm(init: SwarmState, spec: PotentialSpec, land: Landscape, kernel: Kernel, schedule: Schedule,
              t_end: float, dt: float, h_policy: BandwidthPolicy | None = None, record_times=None,
              growth_policy: DuplicationPolicy | None = None, mu_grid_n: int = 1024, compare_mu: bool = True,
              kde_times=(), dump_times=(), diffusion_factor: float = 2.0,
              alpha_cap: float = ALPHA_CAP) -> SwarmTrajectory:
    """Iterate :func:`em_step` from ``init.t`` to ``t_end``.

    Steps have size ``dt`` except the last one before each record time,
    which is shortened to land on it.  ``beta`` and ``h`` are read at the
    start of each step.  At record times the trajectory stores mean ``U``,
    the basin fraction and (on the circle, if ``compare_mu``) the mean
    absolute difference between the estimate on an ``mu_grid_n`` grid and
    the stationary density at the current ``beta``.
    """
    if t_end <= init.t:
        raise ValueError("t_end must exceed the current time")
    if dt <= 0:
        raise ValueError("dt must be positive")
    record_times = () if record_times is None else record_times
    targets = sorted({float(t) for t in record_times if init.t < t <= t_end} | {float(t_end)})
    kde_times = {float(t) for t in kde_times}
    dump_times = {float(t) for t in dump_times}
    traj = SwarmTrajectory()
    mu_cache = {}

    def record(state):
        beta = schedule.beta_at(state.t)
        traj.t.append(state.t)
        traj.beta.append(beta)
        traj.h.append(state.h)
        traj.n.append(state.n)
        traj.mean_u.append(float(np.mean(land.u(state.positions))))
        traj.basin_fraction.append(basin_fraction(state, land))
        l1 = float("nan")
        if state.dim == 1 and (compare_mu or state.t in kde_times):
            grid = land.grid(mu_grid_n)
            est = kde_at(state, kernel, grid)
            if compare_mu:
                mu = mu_cache.get(beta)
                if mu is None:
                    mu = mu_cache[beta] = solve_stationary(spec, land, beta, mu_grid_n)
                l1 = float(np.mean(np.abs(est - mu.values)))
            if state.t in kde_times:
                traj.kde_profiles[state.t] = est
        traj.kde_l1_to_mu.append(l1)
        traj.alpha_cap_hits.append(state.alpha_cap_hits)
        if state.t in dump_times:
            traj.dumps[state.t] = state.positions.copy()

    state = init
    if h_policy is not None:
        state = replace(state, h=h_policy.at(state.t))
    record(state)
    k = 0
    for target in targets:
        while state.t < target:
            h = min(dt, target - state.t)
            if h <= 1e-12 * max(1.0, target):
                break
            if h_policy is not None:
                state = replace(state, h=h_policy.at(state.t))
            state = em_step(state, spec, land, kernel, schedule.beta_at(state.t), h, growth_policy, k,
                            diffusion_factor=diffusion_factor, alpha_cap=alpha_cap)
            k += 1
        state = replace(state, t=target)
        record(state)
    traj.final = state
    return traj
