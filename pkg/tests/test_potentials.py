import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from swarmgrad.potentials import (
    PotentialSpec,
    alpha,
    lower_bound_constants,
    omega_big,
    omega_small,
    phi,
    phi_prime,
    phi_second,
    pressure,
    psi,
    psi_prime,
    theta,
)

SPEC = PotentialSpec(0.25)

# reference values computed with mpmath at 40 digits
PHI_HALF = 0.18188578531352243717
DPHI_HALF = -0.90905710734323878142
D2PHI_HALF = 3.3635856610148581721
PSI_M2 = 0.29472251989123092846
DPSI_M2 = 0.11788900795649237138


def test_spec_rejects_bad_m():
    for m in (0.0, 0.5, -0.1, 0.7):
        with pytest.raises(ValueError):
            PotentialSpec(m)


def test_eta_gamma():
    assert SPEC.eta == pytest.approx(1.0 / 3.0, rel=1e-15)
    assert SPEC.gamma == pytest.approx(10.5, rel=1e-15)
    for m in np.linspace(0.01, 0.49, 25):
        s = PotentialSpec(float(m))
        assert 0 < s.eta < 0.5
        assert s.gamma >= 6


@pytest.mark.parametrize("m", [0.1, 0.25, 0.4])
def test_gluing_values(m):
    s = PotentialSpec(m)
    assert phi(s, 1.0) == 0.0
    assert phi_prime(s, 1.0) == 0.0
    assert phi_second(s, 1.0) == 1.0
    assert psi(s, 0.0) == 1.0
    assert alpha(s, 1.0) == pytest.approx(1.0 / m, rel=1e-15)


def test_point_values_against_high_precision():
    assert phi(SPEC, 0.5) == pytest.approx(PHI_HALF, rel=1e-14)
    assert phi(SPEC, 2.0) == 0.5
    assert phi_prime(SPEC, 0.5) == pytest.approx(DPHI_HALF, rel=1e-14)
    assert phi_second(SPEC, 0.5) == pytest.approx(D2PHI_HALF, rel=1e-14)
    assert phi_prime(SPEC, 3.0) == 2.0 and phi_second(SPEC, 3.0) == 1.0
    assert psi(SPEC, -2.0) == pytest.approx(PSI_M2, rel=1e-14)
    assert psi_prime(SPEC, -2.0) == pytest.approx(DPSI_M2, rel=1e-14)
    assert psi(SPEC, 2.5) == 3.5 and psi_prime(SPEC, 2.5) == 1.0


def test_scalar_in_scalar_out():
    assert isinstance(phi(SPEC, 0.3), float)
    assert phi(SPEC, np.array([0.3, 2.0])).shape == (2,)


def test_domain_errors():
    with pytest.raises(ValueError):
        phi(SPEC, -1.0)
    for f in (phi_prime, phi_second, alpha):
        with pytest.raises(ValueError):
            f(SPEC, 0.0)


def test_phi_nonnegative_zero_only_at_one():
    r = np.concatenate([np.geomspace(1e-8, 1e4, 500), [1.0]])
    v = phi(SPEC, r)
    assert np.all(v >= 0)
    assert np.all((v == 0) == (r == 1.0))
    assert phi(SPEC, 0.0) == pytest.approx(1.0 / (SPEC.m * (1 - SPEC.m)) - 1.0 / (1 - SPEC.m))


def test_round_trip_ten_thousand():
    rng = np.random.default_rng(1)
    r = np.exp(rng.uniform(np.log(1e-6), np.log(1e3), 10_000))
    for m in (0.1, 0.25, 0.4):
        s = PotentialSpec(m)
        err = np.abs(psi(s, phi_prime(s, r)) - r) / np.maximum(1.0, r)
        assert err.max() <= 1e-9


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e6, 1e6), st.sampled_from([0.1, 0.25, 0.4]))
def test_psi_inverts_phi_prime(tau, m):
    s = PotentialSpec(m)
    r = psi(s, tau)
    assert r > 0
    assert phi_prime(s, r) == pytest.approx(tau, rel=1e-10, abs=1e-10)


def _fd_order(f, df, r):
    errs = [abs(df(r) - (f(r + h) - f(r - h)) / (2 * h)) for h in (1e-3, 1e-4)]
    return errs


@pytest.mark.parametrize("r", [0.05, 0.3, 0.7, 1.5, 4.0])
def test_finite_difference_second_order(r):
    pairs = [
        (lambda x: phi(SPEC, x), lambda x: phi_prime(SPEC, x)),
        (lambda x: phi_prime(SPEC, x), lambda x: phi_second(SPEC, x)),
    ]
    for f, df in pairs:
        e3, e4 = _fd_order(f, df, r)
        # quadratic decay: a tenfold smaller step cuts the error about a hundredfold
        assert e4 <= max(e3 / 30.0, 1e-9)


@pytest.mark.parametrize("tau", [-20.0, -3.0, -0.4, 0.5, 3.0])
def test_psi_prime_finite_difference(tau):
    e3, e4 = _fd_order(lambda x: psi(SPEC, x), lambda x: psi_prime(SPEC, x), tau)
    assert e4 <= max(e3 / 30.0, 1e-9)


def test_phi_prime_increasing_concave():
    r = np.geomspace(1e-4, 50, 2000)
    d = phi_prime(SPEC, r)
    assert np.all(np.diff(d) > 0)
    assert np.all(phi_second(SPEC, r) > 0)
    h = 1e-4
    rr = r[r > 2 * h]
    curv = (phi_prime(SPEC, rr + h) + phi_prime(SPEC, rr - h) - 2 * phi_prime(SPEC, rr)) / h**2
    assert np.all(curv <= 1e-6)
    assert phi_prime(SPEC, 1e-12) < -1e6


def test_psi_increasing_convex_in_unit_slope():
    tau = np.linspace(-50, 50, 4001)
    p = psi(SPEC, tau)
    dp = psi_prime(SPEC, tau)
    assert np.all(np.diff(p) > 0)
    assert np.all(np.diff(dp) >= 0)
    assert np.all((dp > 0) & (dp <= 1))


@pytest.mark.parametrize("m", [0.1, 0.25, 0.4])
@pytest.mark.parametrize("r", [0.1, 1.0, 2.0, 10.0])
def test_alpha_matches_defining_integral(m, r):
    s = PotentialSpec(m)
    # (1/r) int_0^r s phi''(s) ds, split at the kink
    pts = [0.0, min(r, 1.0)] + ([r] if r > 1 else [])
    total = sum(integrate.quad(lambda x: x * phi_second(s, x), a, b, epsabs=1e-14, epsrel=1e-13)[0]
                for a, b in zip(pts[:-1], pts[1:]))
    assert alpha(s, r) == pytest.approx(total / r, rel=1e-8)


def test_alpha_examples():
    assert alpha(SPEC, 1.0) == 4.0
    assert alpha(SPEC, 2.0) == pytest.approx(2.75, rel=1e-15)
    boltz = PotentialSpec.boltzmann_mode()
    assert np.all(alpha(boltz, np.array([1e-3, 1.0, 7.0])) == 1.0)


def test_pressure_derivative():
    r = np.array([0.2, 0.9, 1.3, 5.0])
    h = 1e-6
    dp = (pressure(SPEC, r + h) - pressure(SPEC, r - h)) / (2 * h)
    assert np.allclose(dp, r * phi_second(SPEC, r), rtol=1e-7)


def test_boltzmann_mode_functions():
    b = PotentialSpec.boltzmann_mode()
    assert psi(b, 0.3) == pytest.approx(np.exp(0.3))
    assert phi_prime(b, 2.0) == pytest.approx(np.log(2.0))
    with pytest.raises(ValueError):
        lower_bound_constants(b, 0.5)


def test_theta_examples():
    assert theta(SPEC, 0.0, 1.0) == 0.0
    assert theta(SPEC, 1.0, 1.0) == pytest.approx(1.21895141649746006507, rel=1e-13)
    assert theta(SPEC, 0.5, 0.3) > 0 > theta(SPEC, -0.5, 0.3)


@pytest.mark.parametrize(
    "mu_min,r,expected",
    [
        (0.3, -3.0, -1.3035155681523752918),
        (0.3, 2.0, 1.4493592163501827556),
        (0.3, 0.5, 0.28904348839392175007),
        (0.05, -3.0, -0.62370283361720890432),
        (0.05, 2.0, 0.47319000488999382690),
    ],
)
def test_theta_against_high_precision(mu_min, r, expected):
    assert theta(SPEC, r, mu_min) == pytest.approx(expected, rel=1e-12)
    assert theta(SPEC, r, mu_min, method="quad") == pytest.approx(expected, abs=1e-9)


def test_theta_increasing():
    r = np.linspace(-40, 40, 801)
    for mu_min in (0.05, 0.3, 1.0):
        assert np.all(np.diff(theta(SPEC, r, mu_min)) > 0)


def test_constants_against_high_precision():
    c = lower_bound_constants(SPEC, 1.0)
    assert c.C0 == 1.0
    assert c.C1 == pytest.approx(2.8816129631755236920, rel=1e-13)
    assert c.C2 == pytest.approx(572.55062770843505859, rel=1e-12)
    assert c.c == pytest.approx(1.4598530883518247031e-4, rel=1e-12)
    c = lower_bound_constants(SPEC, 0.5)
    assert c.C0 == pytest.approx(1.6817928305074290861, rel=1e-13)
    assert c.C1 == pytest.approx(4.2299859845234919185, rel=1e-13)
    c = lower_bound_constants(SPEC, 0.1)
    assert c.C2 == pytest.approx(4865775.9508271508423, rel=1e-12)


def test_constants_circle_length():
    assert lower_bound_constants(SPEC, 0.5, L=2.0).c == pytest.approx(lower_bound_constants(SPEC, 0.5).c / 2)


def test_c1_above_one_and_decreasing():
    for m in (0.1, 0.25, 0.4):
        s = PotentialSpec(m)
        mus = np.geomspace(1e-4, 1.0, 60)
        c1 = np.array([lower_bound_constants(s, x).C1 for x in mus])
        assert np.all(c1 > 1)
        assert np.all(np.diff(c1) < 0)


def test_constants_reject_mu_min_out_of_range():
    for x in (0.0, 1.5):
        with pytest.raises(ValueError):
            lower_bound_constants(SPEC, x)


def test_c1_lower_bound_on_theta():
    rng = np.random.default_rng(7)
    r = rng.uniform(-50, 50, 1000)
    for m in (0.1, 0.25, 0.4):
        s = PotentialSpec(m)
        for mu_min in (0.05, 0.3, 1.0):
            c1 = lower_bound_constants(s, mu_min).C1
            lhs = c1 * np.abs(theta(s, r, mu_min))
            rhs = np.minimum(np.abs(r) ** 1.5, np.abs(r) ** s.eta)
            assert np.all(lhs >= rhs)


def test_c1_matches_raw_min_form():
    # the bound before it is merged into C1:
    # |theta| >= (2/3) min((C0 + 1 - m)^-(3/2 - eta), sqrt(psi'(phi'(mu_min)))) min(|r|^{3/2}, |r|^eta)
    rng = np.random.default_rng(3)
    r = rng.uniform(-50, 50, 1000)
    m, eta = SPEC.m, SPEC.eta
    for mu_min in (0.05, 0.3, 1.0):
        c0 = 1 - (1 - m) * phi_prime(SPEC, mu_min)
        k = (2 / 3) * min((c0 + 1 - m) ** -(1.5 - eta), np.sqrt(psi_prime(SPEC, phi_prime(SPEC, mu_min))))
        assert k == pytest.approx(1 / lower_bound_constants(SPEC, mu_min).C1, rel=1e-13)
        h = np.abs(theta(SPEC, r, mu_min))
        assert np.all(h >= k * np.minimum(np.abs(r) ** 1.5, np.abs(r) ** eta))


def test_omega_values():
    assert omega_big(SPEC, 1.0) == 1.0
    assert omega_big(SPEC, 0.25) == pytest.approx(0.125, rel=1e-15)
    assert omega_big(SPEC, 8.0) == pytest.approx(2.0, rel=1e-14)
    assert omega_big(SPEC, 0.0) == 0.0
    assert omega_small(SPEC, 0.999999) == pytest.approx(1.6, rel=1e-5)
    assert omega_small(SPEC, 1.0) == pytest.approx(4 * 0.75 / 2.5, rel=1e-15)


def test_omega_increasing():
    r = np.linspace(0, 20, 4001)
    assert np.all(np.diff(omega_big(SPEC, r)) > 0)


@settings(max_examples=300, deadline=None)
@given(st.floats(1.0, 1e3, exclude_min=True), st.floats(1e-6, 1e3), st.sampled_from([0.1, 0.25, 0.4]))
def test_omega_multiplicative_bound(x, y, m):
    s = PotentialSpec(m)
    assert omega_big(s, x * y) <= x**1.5 * omega_big(s, y) * (1 + 1e-12)
