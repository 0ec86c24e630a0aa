"""
Stationary densities and the relaxation gap
===========================================

The flow at a fixed inverse temperature ``beta`` settles on the density
``mu = psi(c - beta U)``.  This walk-through builds it on the two-well
landscape, checks it against the a priori bounds and shows how the
relaxation error ``gap(beta)`` shrinks as ``beta`` grows.

Run with ``python3 demos/01_stationary_and_gap.py``.
"""

import numpy as np

from swarmgrad import PotentialSpec, builtin, gap, oscillation, solve_stationary
from swarmgrad.potentials import alpha, phi, phi_prime, psi
from swarmgrad.stationary import mu_bounds

# %%
# The potential glues a fast-diffusion power below 1 to a quadratic above 1.
spec = PotentialSpec(m=0.25)
r = np.array([0.01, 0.1, 0.5, 1.0, 2.0])
print("m =", spec.m, " eta =", spec.eta, " gamma =", spec.gamma)
print("r       ", r)
print("phi     ", np.round(phi(spec, r), 6))
print("phi'    ", np.round(phi_prime(spec, r), 6))
print("psi(phi'(r))", psi(spec, phi_prime(spec, r)))
# alpha is the diffusion coefficient seen by a particle in a region of density r:
# sparse regions diffuse fast, crowded regions slowly
print("alpha   ", np.round(alpha(spec, r), 4))

# %%
# Two wells of unequal depth: the deep one sits at x = 0.
land = builtin("two_well")
osc = oscillation(land)
print(f"\ntwo_well: argmin {land.argmin}, basin radius {land.basin_radius:.4f}, oscillation {osc:.6f}")

for beta in (1.0, 10.0, 100.0):
    mu = solve_stationary(spec, land, beta, 2048)
    lo, hi = mu_bounds(spec, beta, osc)
    in_basin = np.abs((mu.x + 0.5) % 1.0 - 0.5) <= land.basin_radius
    print(f"beta={beta:6.1f}  c*={mu.c_star:9.4f}  mu in [{mu.mu_min:.3e}, {mu.mu_max:8.3f}]"
          f"  bounds [{lo:.3e}, {hi:8.1f}]  mass in deep basin {np.mean(mu.values * in_basin):.3f}")

# %%
# The gap is the price of the penalty: the best penalised density is not yet a
# point mass.  It tends to zero, but more slowly than 1/beta here: beta*gap grows.
print("\nbeta      gap(beta)   beta*gap   local slope")
prev = None
for beta in (1.0, 10.0, 100.0, 1000.0):
    g = gap(spec, land, beta, 4096)
    slope = "" if prev is None else f"{np.log10(g / prev):+.3f}"
    print(f"{beta:7.0f}   {g:.6f}    {beta * g:8.4f}   {slope}")
    prev = g
