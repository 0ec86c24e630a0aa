"""Inverse-temperature schedules and checks of the cooling conditions.

A cooling schedule ``beta(t)`` drives the flow to the global minimum when

1. ``beta'(t) / c(beta(t)) -> 0``, and
2. ``int_1^inf c(beta(t)) dt = inf``,

where ``c(beta)`` is the constant of the functional inequality.  With
``c(beta) ~ kappa * beta**-gamma`` a power schedule ``beta = k t**a`` meets
both conditions exactly when ``a < 1/(1 + gamma)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .potentials import PotentialSpec, lower_bound_constants
from .stationary import mu_bounds

__all__ = [
    "Schedule",
    "constant",
    "power",
    "default_exponent",
    "c_of_beta_bound",
    "power_law_c",
    "ScheduleReport",
    "validate_schedule",
]


@dataclass(frozen=True)
class Schedule:
    """``beta(t) = k * max(t, t0)**exponent`` (``kind="power"``) or ``beta(t) = k``.

    ``exponent`` is ``1/gamma`` in the power-law notation ``k t**(1/gamma)``.
    """

    kind: str = "power"
    k: float = 1.0
    exponent: float = 0.0
    t0: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "power"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.k <= 0:
            raise ValueError("k must be positive")
        if self.kind == "power" and not self.exponent > 0:
            raise ValueError("power schedules need a positive exponent")
        if self.t0 <= 0:
            raise ValueError("t0 must be positive")

    @property
    def gamma(self):
        return 1.0 / self.exponent if self.kind == "power" else float("inf")

    def beta_at(self, t):
        if self.kind == "constant":
            return self.k if np.ndim(t) == 0 else np.full(np.shape(t), self.k)
        t = np.maximum(np.asarray(t, dtype=float), self.t0)
        out = self.k * t**self.exponent
        return float(out) if out.ndim == 0 else out

    def beta_dot_at(self, t):
        if self.kind == "constant":
            return 0.0 if np.ndim(t) == 0 else np.zeros(np.shape(t))
        t = np.asarray(t, dtype=float)
        safe = np.maximum(t, self.t0)
        out = np.where(t > self.t0, self.k * self.exponent * safe ** (self.exponent - 1.0), 0.0)
        return float(out) if out.ndim == 0 else out


def constant(beta: float) -> Schedule:
    return Schedule("constant", float(beta))


def power(k: float = 1.0, exponent: float | None = None, gamma: float | None = None, t0: float = 1.0) -> Schedule:
    """Power schedule; give either ``exponent`` or ``gamma = 1/exponent``."""
    if (exponent is None) == (gamma is None):
        raise ValueError("give exactly one of exponent and gamma")
    if exponent is None:
        exponent = 1.0 / gamma
    return Schedule("power", float(k), float(exponent), float(t0))


def default_exponent(spec: PotentialSpec) -> float:
    """``0.9 / (1 + gamma)``: inside the admissible range ``(0, 1/(1+gamma))``."""
    return 0.9 / (1.0 + spec.gamma)


def c_of_beta_bound(spec: PotentialSpec, osc: float, L: float = 1.0) -> Callable[[float], float]:
    """Conservative inequality constant ``c(beta)``.

    ``mu_min`` is replaced by its a priori lower bound at each ``beta``, so the
    constant is refreshed as the schedule cools.
    """

    def c(beta):
        lo, _ = mu_bounds(spec, float(beta), osc)
        return lower_bound_constants(spec, min(lo, 1.0), L).c

    return c


def power_law_c(kappa: float, gamma: float) -> Callable[[float], float]:
    """``c(beta) = kappa * beta**-gamma``."""
    if kappa <= 0 or gamma <= 0:
        raise ValueError("kappa and gamma must be positive")

    def c(beta):
        return kappa * np.asarray(beta, dtype=float) ** (-gamma)

    return c


@dataclass(frozen=True)
class ScheduleReport:
    times: np.ndarray
    ratio: np.ndarray
    ratio_slope: float
    partial_times: np.ndarray
    partial_integrals: np.ndarray
    increment_slope: float
    condition1: bool
    condition2: bool
    verdict: str
    flag: str = ""

    @property
    def passed(self):
        return self.verdict.startswith("pass")


def _loglog_slope(x, y):
    return float((np.log(y[-1]) - np.log(y[-2])) / (np.log(x[-1]) - np.log(x[-2])))


def validate_schedule(schedule: Schedule, c_of_beta: Callable[[float], float], horizon: float = 1e9,
                      points: int = 40, slope_tol: float = 1e-3) -> ScheduleReport:
    """Sample both cooling conditions up to ``horizon``.

    Condition 1 passes when ``beta'/c(beta)`` is zero on the tail or its
    log-log slope there is below ``-slope_tol``.  Condition 2 passes when the
    increments ``I(2T) - I(T)`` of ``I(T) = int_1^T c(beta) dt`` do not decay,
    i.e. their log-log slope is at least ``-slope_tol``.
    """
    if horizon <= 10:
        raise ValueError("horizon must exceed 10")
    times = np.geomspace(max(schedule.t0, 1.0) * 1.5, horizon, points)
    betas = np.array([schedule.beta_at(t) for t in times])
    cs = np.array([float(c_of_beta(b)) for b in betas])
    ratio = np.array([schedule.beta_dot_at(t) for t in times]) / cs

    if np.all(ratio[-2:] == 0):
        ratio_slope = -np.inf
        cond1 = True
    else:
        ratio_slope = _loglog_slope(times, ratio)
        cond1 = ratio_slope < -slope_tol

    def c_t(s):
        return float(c_of_beta(schedule.beta_at(np.exp(s)))) * np.exp(s)

    # I(T) = int_0^{log T} c(beta(e^s)) e^s ds
    pts = np.geomspace(2.0, horizon, points)
    logs = np.concatenate([[0.0], np.log(pts)])
    pieces = [integrate.quad(c_t, a, b, epsrel=1e-10, epsabs=0.0, limit=200)[0] for a, b in zip(logs[:-1], logs[1:])]
    partial = np.cumsum(pieces)
    inc = np.array([integrate.quad(c_t, np.log(T), np.log(2 * T), epsrel=1e-10, epsabs=0.0)[0] for T in pts[-2:]])
    inc_slope = _loglog_slope(pts[-2:] if len(pts) >= 2 else pts, inc)
    cond2 = inc_slope >= -slope_tol

    flag = ""
    if cond1 and cond2:
        verdict = "pass"
        if schedule.kind == "constant":
            verdict = "pass-with-flag"
            flag = "no cooling: converges only to mu_beta, not to min U"
    else:
        verdict = "fail"
    return ScheduleReport(times, ratio, ratio_slope, pts, partial, inc_slope, cond1, cond2, verdict, flag)
