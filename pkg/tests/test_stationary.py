import numpy as np
import pytest

from swarmgrad.landscape import builtin
from swarmgrad.potentials import PotentialSpec, phi_prime
from swarmgrad.stationary import BracketError, gap, mu_bounds, penalized_cost, solve_stationary

SPEC = PotentialSpec(0.25)
LANDS = [builtin("single_cos"), builtin("two_well"), builtin("three_well_asym")]


def test_constant_landscape_exact():
    land = builtin("constant", u0=3.0)
    for beta in (1.0, 7.0, 1000.0):
        mu = solve_stationary(SPEC, land, beta, 256)
        assert np.all(mu.values == 1.0)
        assert abs(mu.c_star - beta * 3.0) <= 1e-12 * beta * 3.0
        assert gap(SPEC, land, beta, 256) == 0.0


def test_a_priori_bounds_example():
    lo, hi = mu_bounds(SPEC, 10.0, 1.0)
    assert lo == pytest.approx(8.5 ** (-4 / 3), rel=1e-14)
    assert lo == pytest.approx(0.057646741768193484654, rel=1e-14)
    assert hi == 11.0


def test_lower_bound_hits_phi_prime_exactly():
    # phi'(lower bound) = -beta osc: the bound is psi(-beta osc)
    for m in (0.1, 0.25, 0.4):
        s = PotentialSpec(m)
        lo, _ = mu_bounds(s, 3.0, 2.0)
        assert phi_prime(s, lo) == pytest.approx(-6.0, rel=1e-12)


@pytest.mark.parametrize("m", [0.1, 0.25, 0.4])
@pytest.mark.parametrize("beta", [1.0, 10.0, 100.0, 1000.0])
@pytest.mark.parametrize("land", LANDS, ids=lambda l: l.name)
def test_invariants(m, beta, land):
    s = PotentialSpec(m)
    mu = solve_stationary(s, land, beta, 2048)
    assert abs(mu.mass - 1.0) <= 1e-10
    assert np.all(mu.values > 0)
    resid = np.abs(phi_prime(s, mu.values) + beta * mu.u - mu.c_star)
    assert resid.max() <= 1e-9 * max(1.0, abs(mu.c_star))
    lo, hi = mu_bounds(s, beta, land.osc)
    assert lo <= mu.mu_min and mu.mu_max <= hi
    assert beta * mu.u.min() <= mu.c_star <= beta * mu.u.max()


def test_mu_anti_monotone_in_u():
    land = builtin("single_cos")
    mu = solve_stationary(SPEC, land, 5.0, 1024)
    assert np.argmax(mu.values) == np.argmin(mu.u)
    order = np.argsort(mu.u)
    assert np.all(np.diff(mu.values[order]) <= 0)


def test_gap_decreases_to_zero():
    land = builtin("single_cos")
    gaps = [gap(SPEC, land, b) for b in (1.0, 10.0, 100.0, 1000.0)]
    assert all(g >= 0 for g in gaps)
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.02


def test_gap_regression_anchor():
    # frozen grid value; an adaptive-quadrature continuum evaluation gives 0.33328610
    assert gap(SPEC, builtin("single_cos"), 10.0, 2048) == pytest.approx(0.33328492405164034, rel=1e-9)


def test_stationary_minimises_penalised_cost():
    land = builtin("two_well")
    mu = solve_stationary(SPEC, land, 5.0, 512)
    base = penalized_cost(SPEC, mu.u, mu.values, 5.0)
    rng = np.random.default_rng(0)
    for _ in range(20):
        pert = mu.values * np.exp(0.3 * rng.standard_normal(mu.values.size))
        pert /= pert.mean()
        assert penalized_cost(SPEC, mu.u, pert, 5.0) > base


def test_boltzmann_mode_gibbs():
    land = builtin("single_cos")
    b = PotentialSpec.boltzmann_mode()
    mu = solve_stationary(b, land, 2.0, 1024)
    gibbs = np.exp(-2.0 * mu.u)
    assert np.allclose(mu.values, gibbs / gibbs.mean(), rtol=1e-10)
    lo, hi = mu_bounds(b, 2.0, 2.0)
    assert lo <= mu.mu_min and mu.mu_max <= hi


def test_errors():
    land = builtin("single_cos")
    with pytest.raises(ValueError):
        solve_stationary(SPEC, land, 0.0)
    with pytest.raises(ValueError):
        solve_stationary(SPEC, land, 1.0, 8)
    with pytest.raises(ValueError):
        solve_stationary(SPEC, builtin("single_cos", dim=2), 1.0)
    with pytest.raises(BracketError):
        solve_stationary(SPEC, land, 1.0, 64, max_iter=3)
