"""
The functional inequality and its constant
==========================================

Convergence hinges on an inequality between the entropy production ``J`` and
the reduced cost ``I`` of a density, ``J >= c(beta) Omega(I)``.  This script
tests it on random densities, follows the constant ``c(beta)`` as ``beta``
grows and runs the transport (Talagrand-type) companion inequality.

Run with ``python3 demos/02_functional_inequality.py``.
"""

import numpy as np

from swarmgrad import PotentialSpec, builtin, oscillation, solve_stationary
from swarmgrad.diagnostics import (
    asymptotic_slope,
    check_functional_inequality,
    check_talagrand,
    random_perturbation,
    sweep_functional_inequality,
)
from swarmgrad.potentials import lower_bound_constants

spec = PotentialSpec(0.25)
land = builtin("two_well")
osc = oscillation(land)

# %%
# One random density: a smooth multiplicative bump on top of mu.
mu = solve_stationary(spec, land, 5.0, 2048)
rho = random_perturbation(np.random.default_rng(3)).density(mu)
res = check_functional_inequality(rho, mu, spec, osc=osc)
print(f"I = {res.I:.4e}  J = {res.J:.4e}  c Omega(I) = {res.rhs:.4e}  J / rhs = {res.ratio:.3g}")
print("proof chain holds:", res.chain_passed)

# %%
# A small sweep.  The ratio stays far above 1: the constant is conservative.
recs = sweep_functional_inequality(spec, land, 5.0, range(200), n=1024)
ratios = np.array([r.result.ratio for r in recs])
print(f"\n200 random densities: all pass = {all(r.passed for r in recs)}, "
      f"J/rhs from {ratios.min():.3g} to {ratios.max():.3g}")

# %%
# The constant decays like a power of beta once mu_min is replaced by its a
# priori bound.  The fitted slope approaches -gamma.
print(f"\ngamma = {spec.gamma}")
for beta in (1.0, 10.0, 100.0, 1000.0):
    c = lower_bound_constants(spec, min(1.0, (1 + (1 - spec.m) * beta * osc) ** (1 / (spec.m - 1))), 1.0).c
    print(f"beta={beta:7.0f}  c(beta) = {c:.3e}")
print(f"log-log slope over beta in [1e2, 1e4]: {asymptotic_slope(spec, osc):.3f}")

# %%
# Transport form: W2 on the circle against the reduced cost.
tal = [check_talagrand(random_perturbation(np.random.default_rng(s)).density(mu), mu, spec) for s in range(20)]
print(f"\ntransport inequality on 20 densities: all pass = {all(t.passed for t in tal)}")
