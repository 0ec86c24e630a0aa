"""Convex penalty potentials and the scalar functions derived from them.

The working potential glues the power-like function

    phi_m(r) = (r**m - 1 - m*(r - 1)) / (m*(m - 1))

on ``(0, 1]`` to the quadratic ``(r - 1)**2 / 2`` on ``(1, inf)``.  The two
pieces agree to second order at ``r = 1``.  A Boltzmann reference mode
(``phi(r) = r log r - (r - 1)``) is available for simulated-annealing
baselines; it does not support the inequality constants.

All functions are vectorised over numpy arrays and return floats for scalar
input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import integrate

__all__ = [
    "PotentialSpec",
    "phi",
    "phi_prime",
    "phi_second",
    "psi",
    "psi_prime",
    "alpha",
    "pressure",
    "theta",
    "LowerBoundConstants",
    "lower_bound_constants",
    "omega_big",
    "omega_small",
]


@dataclass(frozen=True)
class PotentialSpec:
    """Parameters of the penalty potential.

    Parameters
    ----------
    m : float
        Exponent of the fast-diffusion branch, in ``(0, 1/2)``.
    boltzmann : bool
        Use the entropy ``r log r - (r - 1)`` instead.  In this mode ``m`` is
        ignored and ``alpha`` is identically one.
    """

    m: float = 0.25
    boltzmann: bool = False
    eta: float = field(init=False, repr=False)
    gamma: float = field(init=False, repr=False)

    def __post_init__(self):
        if self.boltzmann:
            object.__setattr__(self, "eta", float("nan"))
            object.__setattr__(self, "gamma", float("nan"))
            return
        m = float(self.m)
        if not (0.0 < m < 0.5):
            raise ValueError(f"m must lie in (0, 1/2), got {self.m!r}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "eta", (1.0 - 2.0 * m) / (2.0 * (1.0 - m)))
        object.__setattr__(self, "gamma", 3.0 * (2.0 - m) / (1.0 - 2.0 * m))

    @classmethod
    def boltzmann_mode(cls) -> "PotentialSpec":
        return cls(m=1.0, boltzmann=True)

    def _require_power(self, what):
        if self.boltzmann:
            raise ValueError(f"{what} is only defined for the glued power potential")


def _pow(x, p):
    # every fractional power goes through here so results do not depend on call site
    with np.errstate(divide="ignore"):
        return np.exp(p * np.log(x))


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _check(r, strict):
    r = np.asarray(r, dtype=float)
    bad = (r <= 0) if strict else (r < 0)
    if np.any(bad) or np.any(np.isnan(r)):
        raise ValueError("r must be positive" if strict else "r must be non-negative")
    return r


def phi(spec: PotentialSpec, r):
    """Penalty potential; non-negative, zero only at ``r = 1``."""
    r = _check(r, strict=False)
    if spec.boltzmann:
        with np.errstate(divide="ignore", invalid="ignore"):
            v = np.where(r > 0, r * np.log(np.where(r > 0, r, 1.0)), 0.0) - (r - 1.0)
        return _out(v)
    m = spec.m
    low = np.minimum(r, 1.0)
    v_low = (_pow(low, m) - 1.0 - m * (low - 1.0)) / (m * (m - 1.0))
    v_high = 0.5 * (r - 1.0) ** 2
    return _out(np.where(r <= 1.0, v_low, v_high))


def phi_prime(spec: PotentialSpec, r):
    """First derivative; strictly increasing and concave, ``-inf`` at ``0+``."""
    r = _check(r, strict=True)
    if spec.boltzmann:
        return _out(np.log(r))
    m = spec.m
    low = np.minimum(r, 1.0)
    return _out(np.where(r <= 1.0, (_pow(low, m - 1.0) - 1.0) / (m - 1.0), r - 1.0))


def phi_second(spec: PotentialSpec, r):
    r = _check(r, strict=True)
    if spec.boltzmann:
        return _out(1.0 / r)
    low = np.minimum(r, 1.0)
    return _out(np.where(r <= 1.0, _pow(low, spec.m - 2.0), 1.0))


def psi(spec: PotentialSpec, tau):
    """Inverse of :func:`phi_prime`, defined on the whole real line."""
    tau = np.asarray(tau, dtype=float)
    if spec.boltzmann:
        return _out(np.exp(tau))
    m = spec.m
    neg = np.minimum(tau, 0.0)
    return _out(np.where(tau <= 0.0, _pow(1.0 + (m - 1.0) * neg, 1.0 / (m - 1.0)), 1.0 + tau))


def psi_prime(spec: PotentialSpec, tau):
    """Derivative of :func:`psi`; takes values in ``(0, 1]``."""
    tau = np.asarray(tau, dtype=float)
    if spec.boltzmann:
        return _out(np.exp(tau))
    m = spec.m
    neg = np.minimum(tau, 0.0)
    return _out(np.where(tau < 0.0, _pow(1.0 + (m - 1.0) * neg, (2.0 - m) / (m - 1.0)), 1.0))


def alpha(spec: PotentialSpec, r):
    """Diffusion coefficient ``(1/r) * int_0^r s phi''(s) ds`` of the particle SDE."""
    r = _check(r, strict=True)
    if spec.boltzmann:
        return _out(np.ones_like(r))
    m = spec.m
    low = np.minimum(r, 1.0)
    return _out(np.where(r <= 1.0, _pow(low, m - 1.0) / m, (1.0 / m + 0.5 * (r * r - 1.0)) / r))


def pressure(spec: PotentialSpec, r):
    """``P(r) = r * alpha(r)``, the primitive of ``r phi''(r)`` vanishing at 0."""
    r = _check(r, strict=False)
    if spec.boltzmann:
        return _out(r)
    m = spec.m
    low = np.minimum(r, 1.0)
    return _out(np.where(r <= 1.0, _pow(low, m) / m, 1.0 / m + 0.5 * (r * r - 1.0)))


def _sqrt_psi_primitive(m, tau):
    # antiderivative of sqrt(psi) continuous at 0
    tau = np.asarray(tau, dtype=float)
    eta = (1.0 - 2.0 * m) / (2.0 * (1.0 - m))
    neg = np.minimum(tau, 0.0)
    pos = np.maximum(tau, 0.0)
    left = -2.0 / (1.0 - 2.0 * m) * _pow(1.0 + (1.0 - m) * (-neg), eta)
    right = (2.0 / 3.0) * (_pow(1.0 + pos, 1.5) - 1.0) - 2.0 / (1.0 - 2.0 * m)
    return np.where(tau <= 0.0, left, right)


def theta(spec: PotentialSpec, r, mu_min, method="exact"):
    """``theta(r) = int_0^r sqrt(psi(s + phi'(mu_min))) ds``.

    ``method="exact"`` uses the closed-form primitive and is vectorised;
    ``method="quad"`` runs adaptive quadrature point by point (absolute
    tolerance 1e-10) with the kink of ``psi`` placed on a panel boundary.
    """
    spec._require_power("theta")
    if mu_min <= 0:
        raise ValueError("mu_min must be positive")
    shift = phi_prime(spec, mu_min)
    r = np.asarray(r, dtype=float)
    if method == "exact":
        return _out(_sqrt_psi_primitive(spec.m, r + shift) - _sqrt_psi_primitive(spec.m, shift))
    if method != "quad":
        raise ValueError(f"unknown method {method!r}")

    def integrand(s):
        return np.sqrt(psi(spec, s + shift))

    def one(x):
        if x == 0.0:
            return 0.0
        lo, hi = min(0.0, x), max(0.0, x)
        kink = -shift
        pts = [kink] if lo < kink < hi else None
        val, _ = integrate.quad(integrand, lo, hi, points=pts, epsabs=1e-10, epsrel=1e-12, limit=200)
        return val if x > 0 else -val

    return _out(np.vectorize(one, otypes=[float])(r))


class LowerBoundConstants(NamedTuple):
    C0: float
    C1: float
    C2: float
    c: float


def lower_bound_constants(spec: PotentialSpec, mu_min: float, L: float = 1.0) -> LowerBoundConstants:
    """Constants of the functional inequality on a circle of perimeter ``L``.

    Returns ``C0 = 1 - (1-m) phi'(mu_min)``, ``C1`` (the inverse of the
    lower-bound constant for ``theta``), ``C2 = C1**(2/eta)`` and the
    inequality constant ``c = (2/L) * C2**(-3/2)``.
    """
    spec._require_power("lower_bound_constants")
    mu_min = float(mu_min)
    if not (0.0 < mu_min <= 1.0):
        raise ValueError(f"mu_min must lie in (0, 1], got {mu_min!r}")
    m = spec.m
    dphi = phi_prime(spec, mu_min)
    C0 = 1.0 - (1.0 - m) * dphi
    first = float(_pow(1.0 + (1.0 - m) * (1.0 - dphi), (2.0 - m) / (2.0 * (1.0 - m))))
    second = float(np.sqrt(phi_second(spec, mu_min)))
    C1 = 1.5 * max(first, second)
    C2 = float(_pow(C1, 2.0 / spec.eta))
    c = (2.0 / L) * float(_pow(C2, -1.5))
    return LowerBoundConstants(C0, C1, C2, c)


def omega_big(spec: PotentialSpec, r):
    """Rate function of the functional inequality: ``r**1.5`` below 1, ``r**eta`` above."""
    spec._require_power("omega_big")
    r = _check(r, strict=False)
    return _out(np.where(r < 1.0, _pow(r, 1.5), _pow(r, spec.eta)))


def omega_small(spec: PotentialSpec, r):
    """Rate function of the transport inequality (not continuous at 1)."""
    spec._require_power("omega_small")
    r = _check(r, strict=False)
    m = spec.m
    p = (3.0 - 2.0 * m) / (4.0 * (1.0 - m))
    return _out(np.where(r < 1.0, 1.6 * _pow(r, 0.625), 4.0 * (1.0 - m) / (3.0 - 2.0 * m) * _pow(r, p)))
