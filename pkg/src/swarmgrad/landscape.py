"""Periodic objective functions on circles and flat tori.

Points are arrays whose last axis has length ``dim``.  A landscape of period
``L`` is the function ``f(x / L)`` for a 1-periodic ``f``; on the circle
``L`` is the perimeter.  Every builtin is shifted so that its minimum is 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

__all__ = ["Landscape", "builtin", "oscillation", "wrap", "BUILTINS"]

TWO_PI = 2.0 * np.pi


def wrap(x, period=1.0):
    """Reduce coordinates to ``[0, period)``; idempotent."""
    y = np.mod(x, period)
    # np.mod can return `period` itself for tiny negative inputs
    return np.where(y >= period, 0.0, y)


@dataclass(frozen=True)
class Landscape:
    """A C^2 periodic objective ``U >= 0`` with analytic gradient.

    ``f`` and ``grad_f`` act on unit-period coordinates of shape ``(..., dim)``
    and return shapes ``(...)`` and ``(..., dim)``.
    """

    name: str
    dim: int
    period: float
    f: Callable = field(repr=False)
    grad_f: Callable = field(repr=False)
    params: dict = field(default_factory=dict)
    argmin: np.ndarray | None = field(default=None, repr=False)
    basin_radius: float | None = None
    offset: float = 0.0

    def _coords(self, x):
        x = np.asarray(x, dtype=float)
        if self.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected trailing axis of length {self.dim}, got shape {x.shape}")
        return x / self.period

    def u(self, x):
        """Objective value.  For ``dim == 1`` a bare array of coordinates is accepted."""
        return np.maximum(self.f(self._coords(x)) - self.offset, 0.0)

    def grad_u(self, x):
        """Gradient with respect to physical coordinates, shape ``(..., dim)``."""
        return self.grad_f(self._coords(x)) / self.period

    def du(self, x):
        """Derivative on the circle, same shape as ``x`` (``dim == 1`` only)."""
        if self.dim != 1:
            raise ValueError("du is only defined on the circle")
        return self.grad_u(x)[..., 0]

    def grid(self, n):
        """Cell centres of the uniform ``n``-cell grid on the circle."""
        if self.dim != 1:
            raise ValueError("grid is only defined on the circle")
        return (np.arange(n) + 0.5) * (self.period / n)

    @property
    def osc(self):
        return oscillation(self)


_OSC_CACHE: dict = {}


def oscillation(land: Landscape, grid_n: int | None = None) -> float:
    """``max U - min U`` over the uniform ``grid_n**dim`` lattice (a lower bound)."""
    if grid_n is None:
        grid_n = 2**16 if land.dim == 1 else max(8, int(round(2 ** (16 / land.dim))))
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    key = (id(land), grid_n)
    hit = _OSC_CACHE.get(key)
    if hit is not None and hit[0] is land:
        return hit[1]
    axes = [np.arange(grid_n) / grid_n] * land.dim
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, land.dim)
    vals = land.f(pts)
    val = float(vals.max() - vals.min())
    _OSC_CACHE[key] = (land, val)
    return val


# ---------------------------------------------------------------------------
# builtin landscapes, written in unit-period coordinates y


def _separable(f1, g1):
    def f(y):
        return f1(y).sum(axis=-1)

    def grad(y):
        return g1(y)

    return f, grad


def _constant(dim, u0=1.0):
    if u0 < 0:
        raise ValueError("u0 must be non-negative")

    def f(y):
        return np.full(np.shape(y)[:-1], float(u0))

    def grad(y):
        return np.zeros(np.shape(y))

    return f, grad, {"u0": float(u0)}


def _single_cos(dim, a=1.0):
    f, g = _separable(lambda y: a * (1.0 - np.cos(TWO_PI * y)), lambda y: a * TWO_PI * np.sin(TWO_PI * y))
    return f, g, {"a": float(a)}


def _two_well(dim, a=1.0, b=0.55):
    if not (a > 0 and 4 * b > a):
        raise ValueError("two_well needs a > 0 and 4b > a for a second well")

    def f1(y):
        return a * (1.0 - np.cos(TWO_PI * y)) + b * (1.0 - np.cos(2 * TWO_PI * y))

    def g1(y):
        return a * TWO_PI * np.sin(TWO_PI * y) + 2 * b * TWO_PI * np.sin(2 * TWO_PI * y)

    f, g = _separable(f1, g1)
    return f, g, {"a": float(a), "b": float(b)}


_THREE_WELLS = (
    # centre, depth, concentration: narrow deep global well, wide shallower decoy
    (0.0, 1.0, 60.0),
    (0.45, 0.8, 2.5),
    (0.75, 0.6, 12.0),
)


def _three_well_asym(dim):
    wells = _THREE_WELLS

    def f1(y):
        out = np.zeros_like(y)
        for c, depth, kappa in wells:
            out = out - depth * np.exp(kappa * (np.cos(TWO_PI * (y - c)) - 1.0))
        return out

    def g1(y):
        out = np.zeros_like(y)
        for c, depth, kappa in wells:
            e = np.exp(kappa * (np.cos(TWO_PI * (y - c)) - 1.0))
            out = out + depth * e * kappa * TWO_PI * np.sin(TWO_PI * (y - c))
        return out

    f, g = _separable(f1, g1)
    return f, g, {}


def _random_trig(dim, seed=0, order=3, terms=None):
    rng = np.random.default_rng(seed)
    order = int(order)
    if dim == 1:
        freqs = np.arange(1, order + 1)[:, None]
    else:
        n_terms = int(terms) if terms is not None else 2 * order * dim
        freqs = rng.integers(-order, order + 1, size=(n_terms, dim))
        freqs = freqs[np.any(freqs != 0, axis=1)]
    scale = 1.0 / np.linalg.norm(freqs, axis=1)
    ca = rng.standard_normal(len(freqs)) * scale
    cb = rng.standard_normal(len(freqs)) * scale

    def f(y):
        ph = TWO_PI * (y @ freqs.T)
        return np.cos(ph) @ ca + np.sin(ph) @ cb

    def grad(y):
        ph = TWO_PI * (y @ freqs.T)
        w = -np.sin(ph) * ca + np.cos(ph) * cb
        return TWO_PI * (w @ freqs)

    return f, grad, {"seed": int(seed), "order": order}


BUILTINS = {
    "constant": _constant,
    "single_cos": _single_cos,
    "two_well": _two_well,
    "three_well_asym": _three_well_asym,
    "random_trig": _random_trig,
}


_SEPARABLE = ("single_cos", "two_well", "three_well_asym")


def _locate_minimum(f, dim, n=None):
    """Global minimiser of a 1-periodic function by grid scan plus local polish."""
    if n is None:
        n = 2**16 if dim == 1 else max(8, int(round(2 ** (16 / dim))))
    axes = [np.arange(n) / n] * dim
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    vals = f(pts)
    x0 = pts[int(np.argmin(vals))]
    res = optimize.minimize(
        lambda z: float(f(z[None, :])[0]),
        x0,
        method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000},
    )
    x = res.x if res.fun <= vals.min() else x0
    return np.mod(x, 1.0), float(min(res.fun, vals.min()))


def _basin_radius_1d(f, xmin, n=2**14):
    # distance from the global minimiser to the nearest local maximum
    off = np.arange(n) / n
    dists = []
    for sign in (1.0, -1.0):
        v = f(((xmin + sign * off) % 1.0)[:, None])
        down = np.flatnonzero(np.diff(v) < 0)
        dists.append(off[down[0]] if down.size else 0.5)
    return float(min(dists))


def builtin(name: str, dim: int = 1, period: float = 1.0, **params) -> Landscape:
    """Build one of the registered landscapes.

    Parameters
    ----------
    name : {"constant", "single_cos", "two_well", "three_well_asym", "random_trig"}
    dim : int
        Dimension of the torus.
    period : float
        Period per axis (the perimeter when ``dim == 1``).
    **params
        Landscape parameters, e.g. ``a``/``b`` for ``two_well``, ``u0`` for
        ``constant``, ``seed``/``order`` for ``random_trig``.
    """
    if name not in BUILTINS:
        raise ValueError(f"unknown landscape {name!r}; choose from {sorted(BUILTINS)}")
    if dim < 1:
        raise ValueError("dim must be positive")
    if period <= 0:
        raise ValueError("period must be positive")
    f, grad, used = BUILTINS[name](dim, **params)

    if name == "constant":
        return Landscape(name, dim, float(period), f, grad, used, None, 0.5, 0.0)

    xmin, fmin = _locate_minimum(f, dim)
    if name in ("single_cos", "two_well"):
        # analytic minimum at the origin
        xmin, fmin = np.zeros(dim), 0.0
    if dim == 1:
        radius = _basin_radius_1d(f, float(xmin[0]))
    elif name in _SEPARABLE:
        # per-axis basin of the one-dimensional factor, used with the max-norm
        f1, _, _ = BUILTINS[name](1, **params)
        radius = _basin_radius_1d(f1, float(xmin[0]))
    else:
        radius = None
    return Landscape(name, dim, float(period), f, grad, used, xmin * period,
                     None if radius is None else radius * period, fmin)
