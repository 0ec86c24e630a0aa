"""
Cooling the deterministic flow
==============================

With a cooling schedule ``beta(t)`` the density should pile up on the global
minimum.  First the two cooling conditions are checked numerically for a few
power schedules, then the one-dimensional finite-volume solver is run under
cooling on the two-well landscape and compared with ``gap(beta_t)``.

Run with ``python3 demos/03_cooling_pde.py`` (about ten seconds).
"""

import numpy as np

from swarmgrad import PotentialSpec, builtin, gap
from swarmgrad.pde1d import DtPolicy, evolve, uniform
from swarmgrad.schedules import default_exponent, power, power_law_c, validate_schedule

spec = PotentialSpec(0.25)
land = builtin("two_well")
g = spec.gamma

# %%
# Power schedules beta = k t^a against the model constant c(beta) = beta^-gamma.
# Only exponents below 1/(1 + gamma) keep beta'/c(beta) going to zero.
c = power_law_c(1.0, g)
for a in (default_exponent(spec), 1.0 / (1.0 + g), 1.0 / g):
    rep = validate_schedule(power(k=1.0, exponent=a), c)
    print(f"a = {a:.5f}: slope of beta'/c = {rep.ratio_slope:+.4f}, "
          f"condition 1 {rep.condition1}, condition 2 {rep.condition2} -> {rep.verdict}")

# %%
# The solver itself, with the schedule shape beta = k t^(1/gamma).
sched = power(k=5.0, gamma=g)
times = np.geomspace(1.0, 1e3, 7)
traj = evolve(uniform(1024), spec, land, sched, 1e3, DtPolicy("implicit", 1e-5, 1.1, 1.0), record_times=times)
u_min = float(land.u(np.asarray(land.argmin)))
print("\n      t     beta   E[U]-min U   gap(beta)")
for t, beta, mu in zip(traj.t, traj.beta, traj.mean_u):
    print(f"{t:7.1f}  {beta:6.2f}   {mu - u_min:9.5f}   {gap(spec, land, beta, 1024):9.5f}")
print(f"{traj.steps} implicit steps, mass {traj.final.mass:.15f}")
