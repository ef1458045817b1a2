import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qbackflow import states
from qbackflow.eigen import max_probability, quadratic_form
from qbackflow.exceptions import ParameterError
from qbackflow.grid import build_grid, quadrature_norm
from qbackflow.params import (
    BackflowParams,
    ReentryParams,
    alpha_from,
    beta_from,
    match_reentry_to_backflow,
)
from qbackflow.wavepacket import (
    backflow_kernel,
    backflow_kernel_diagonal,
    equivalence_check,
    f_from_phi,
    f_from_psi,
    flux_backflow,
    flux_reentry,
    flux_series,
    phi_from_f,
    prob_backflow,
    prob_backflow_time,
    prob_reentry,
    prob_reentry_time,
    psi_from_f,
    reentry_kernel,
    reentry_kernel_diagonal,
)

from oracles import (
    backflow_flux_by_propagation,
    chopped_beam_flux,
    cquad,
    reentry_flux_by_propagation,
)

BF = BackflowParams(1.3, 0.7, 0.4, 0.2, 2.0)
RE = ReentryParams(0.9, 1.1, 0.5, 0.8, 2.5)


# -- fluxes against independent propagation -------------------------------------

def test_near_plane_wave_has_positive_flux():
    s = states.momentum_gaussian(20.0, 0.2)
    j = flux_backflow(s, BackflowParams.natural(), 0.0)
    assert j > 0
    # |Phi(0,0)|^2 * p0 / m for a narrow packet
    assert j == pytest.approx(20.0 * 0.2 * math.sqrt(8 * math.pi) / (2 * math.pi), rel=1e-2)


@pytest.mark.parametrize("t", [0.0, 0.3, 1.0, 2.0])
def test_backflow_flux_matches_propagation(t):
    sigma = 1.0
    s = states.momentum_exponential(sigma, n=800)
    ref = backflow_flux_by_propagation(lambda p: math.sqrt(2 / sigma) * math.exp(-p / sigma),
                                       BF, t, p_max=40.0)
    assert flux_backflow(s, BF, t) == pytest.approx(ref, rel=1e-4)


def _gaussian_psi(x0, sigma, p0, hbar=1.0):
    norm = math.sqrt(cquad(lambda x: math.exp(-(x - x0) ** 2 / (2 * sigma ** 2)),
                           x0 - 15 * sigma, 0.0, points=[x0]).real)
    return lambda x: cmath.exp(-(x - x0) ** 2 / (4 * sigma ** 2) + 1j * p0 * x / hbar) / norm


@pytest.mark.parametrize("t", [0.3, 1.0, 1.75, 3.0])
def test_reentry_flux_matches_propagation(t):
    x0, sigma, p0 = -3.0, 0.7, 2.0
    s = states.position_gaussian(x0, sigma, p0, planck=RE.planck, n=1500)
    ref = reentry_flux_by_propagation(_gaussian_psi(x0, sigma, p0, RE.planck), RE, t,
                                      x0 - 12 * sigma, points=[x0])
    assert flux_reentry(s, RE, t) == pytest.approx(ref, rel=1e-4)


def test_two_peak_superposition_flows_backward():
    s = states.momentum_mixture([1.0, 2.0], 0.05)
    params = BackflowParams.natural(0.0, 0.0, 30.0)
    values = [flux_backflow(s, params, t) for t in np.linspace(0.0, 30.0, 601)]
    assert min(values) < 0


def test_far_left_packet_has_no_early_flux():
    s = states.position_gaussian(-30.0, 1.0, 1.0, n=8000)
    assert abs(flux_reentry(s, ReentryParams.natural(0.0), 0.5)) < 1e-10


def test_classical_arrival_flux_is_positive():
    x0, p0 = -5.0, 3.0
    s = states.position_gaussian(x0, 1.0, p0)
    params = ReentryParams.natural(1.0)
    t_arrival = (1.0 - x0) / p0
    assert flux_reentry(s, params, t_arrival) > 0.1


def test_moshinsky_reference_matches_direct_propagation():
    k, length = 1.0, 5.0
    params = ReentryParams.natural(1.0)
    psi = lambda x: cmath.exp(1j * k * x) / math.sqrt(length)
    for t in (0.5, 2.0):
        ref = reentry_flux_by_propagation(psi, params, t, -length)
        assert chopped_beam_flux(1.0, k, length, t) == pytest.approx(ref, rel=1e-6)


def test_chopped_beam_diffraction_in_time():
    k, length, ell = 1.0, 50.0, 1.0
    s = states.chopped_beam(k, length)
    params = ReentryParams.natural(ell)
    times = np.linspace(0.1, 10.0, 200)
    series = flux_series(s, params, times)
    ref = np.array([chopped_beam_flux(ell, k, length, t) for t in times])
    np.testing.assert_allclose(series.values, ref, rtol=1e-6, atol=1e-10)
    # fringes: repeated local maxima after the classical arrival t = ell m / (hbar k)
    j = series.values
    peaks = np.flatnonzero((j[1:-1] > j[:-2]) & (j[1:-1] > j[2:])) + 1
    assert np.count_nonzero(times[peaks] > ell / k) >= 3


def test_chopped_beam_agreement_improves_with_resolution():
    params = ReentryParams.natural(1.0)
    ref = chopped_beam_flux(1.0, 1.0, 50.0, 0.1)
    coarse = abs(flux_reentry(states.chopped_beam(1.0, 50.0, n=20000), params, 0.1) - ref)
    fine = abs(flux_reentry(states.chopped_beam(1.0, 50.0, n=40000), params, 0.1) - ref)
    assert fine < coarse


def test_flux_domain_errors():
    s = states.position_gaussian(-5.0, 1.0, 3.0)
    with pytest.raises(ParameterError):
        flux_reentry(s, RE, 0.0)
    with pytest.raises(ParameterError):
        flux_backflow(states.momentum_exponential(1.0), BF, -1.0)


def test_separable_sum_equals_dense_sum():
    s = states.momentum_gaussian(2.0, 0.5, n=300)
    for t in (0.0, 0.7):
        assert flux_backflow(s, BF, t) == pytest.approx(flux_backflow(s, BF, t, dense=True), rel=1e-12)
    s = states.position_gaussian(-3.0, 0.7, 2.0, n=300)
    assert flux_reentry(s, RE, 1.2) == pytest.approx(flux_reentry(s, RE, 1.2, dense=True), rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), t=st.floats(0.05, 5.0))
def test_flux_is_real(seed, t):
    f = states.random_dimensionless_state(build_grid(300, 10.0), seed)
    for state, params, fn in ((phi_from_f(f, BF), BF, flux_backflow),
                              (psi_from_f(f, RE), RE, flux_reentry)):
        value = fn(state, params, t, dense=True, return_complex=True)
        assert abs(value.imag) < 1e-8 * max(abs(value), 1e-300)


# -- kernels -------------------------------------------------------------------------

def _naive_backflow_kernel(p, pp, params):
    m, hbar, g = params.mass, params.planck, params.acceleration

    def e(t):
        return cmath.exp(1j * t / (2 * hbar * m) * (p + pp + m * g * t) * (p - pp))

    return 1j / (2 * math.pi) * (e(params.window_end) - e(params.window_start)) / (p - pp)


def _naive_reentry_kernel(x, xp, params):
    m, hbar, ell = params.mass, params.planck, params.observation_point

    def e(t):
        return cmath.exp(1j * m / (2 * hbar * t) * (2 * ell - x - xp) * (x - xp))

    return 1j / (2 * math.pi) * (e(params.window_start) - e(params.window_end)) / (x - xp)


@pytest.mark.parametrize("p, pp", [(0.3, 1.7), (2.0, 2.5), (5.0, 0.1)])
def test_backflow_kernel_matches_closed_form(p, pp):
    assert backflow_kernel(p, pp, BF) == pytest.approx(_naive_backflow_kernel(p, pp, BF), rel=1e-12)
    assert backflow_kernel(p, pp, BF) == pytest.approx(np.conj(backflow_kernel(pp, p, BF)), rel=1e-14)


@pytest.mark.parametrize("x, xp", [(-0.3, -1.7), (-2.0, -2.5), (-5.0, -0.1)])
def test_reentry_kernel_matches_closed_form(x, xp):
    assert reentry_kernel(x, xp, RE) == pytest.approx(_naive_reentry_kernel(x, xp, RE), rel=1e-12)


@pytest.mark.parametrize("p", [0.0, 0.5, 3.0])
def test_backflow_diagonal_limit_by_finite_differences(p):
    limit = backflow_kernel_diagonal(p, BF)
    for delta in (1e-3, 1e-4):
        approx = _naive_backflow_kernel(p + delta, p - delta, BF)
        assert approx.real == pytest.approx(limit, rel=10 * delta)
        assert abs(approx.imag) < 10 * delta * abs(limit) + 1e-12
    assert backflow_kernel(p, p, BF) == pytest.approx(limit, rel=1e-15)


@pytest.mark.parametrize("x", [0.0, -0.5, -3.0])
def test_reentry_diagonal_limit_by_finite_differences(x):
    limit = reentry_kernel_diagonal(x, RE)
    for delta in (1e-3, 1e-4):
        approx = _naive_reentry_kernel(x + delta, x - delta, RE)
        assert approx.real == pytest.approx(limit, rel=10 * delta)
    assert reentry_kernel(x, x, RE) == pytest.approx(limit, rel=1e-15)


def test_equal_window_endpoints_give_zero():
    s = states.momentum_gaussian(2.0, 0.5)
    assert prob_backflow(s, BF, window=(1.0, 1.0)) == 0.0
    s = states.position_gaussian(-3.0, 0.7, 2.0)
    assert prob_reentry(s, RE, window=(1.5, 1.5)) == 0.0


# -- probability routes ---------------------------------------------------------------

def test_backflow_kernel_route_equals_time_route():
    s = states.momentum_gaussian(2.0, 0.5)
    assert prob_backflow(s, BF) == pytest.approx(prob_backflow_time(s, BF), rel=1e-4)


def test_reentry_kernel_route_equals_time_route():
    s = states.position_gaussian(-3.0, 0.7, 2.0, planck=RE.planck)
    assert prob_reentry(s, RE) == pytest.approx(prob_reentry_time(s, RE), rel=1e-4)


def test_window_sign_convention_gives_backflowing_transfer(optimal_small, small_grid):
    # the optimal state transfers probability right-to-left on both routes
    re = ReentryParams.natural(0.0, 1.0, 2.0)
    psi = psi_from_f(optimal_small[0.0].state, re)
    assert prob_reentry(psi, re) > 0
    assert prob_reentry_time(psi, re) == pytest.approx(prob_reentry(psi, re), rel=1e-6)


def test_physical_states_respect_rayleigh_bound():
    bf = BackflowParams.natural(0.3, 0.0, 1.0)
    re = ReentryParams.natural(0.4, 1.0, 2.0)
    for s in (states.momentum_gaussian(2.0, 0.5), states.momentum_exponential(1.0),
              states.momentum_mixture([1.0, 2.0], 0.2)):
        f = f_from_phi(s, bf)
        bound = max_probability(alpha_from(bf), f.grid).lambda_max
        assert prob_backflow(s, bf) <= bound + 1e-12
    for s in (states.position_gaussian(-3.0, 0.7, 2.0), states.position_exponential(1.0)):
        f = f_from_psi(s, re)
        bound = max_probability(beta_from(re), f.grid).lambda_max
        assert prob_reentry(s, re) <= bound + 1e-12


def test_classical_packet_cannot_reenter():
    s = states.position_gaussian(-20.0, 2.0, 10.0, n=4000)
    params = ReentryParams.natural(0.0, 1.0, 3.0)
    values = np.array([flux_reentry(s, params, t) for t in np.linspace(1.0, 3.0, 201)])
    assert values.min() > -1e-8 * values.max()
    assert prob_reentry(s, params) < 1e-8


# -- dimensionless maps -----------------------------------------------------------------

def test_f_from_phi_preserves_norm_and_modulus():
    s = states.momentum_gaussian(2.0, 0.5, x0=-1.0)
    f = f_from_phi(s, BF)
    assert quadrature_norm(f.f, f.grid) == pytest.approx(1.0, abs=1e-10)
    scale = (4 * BF.planck * BF.mass / BF.width) ** 0.25
    np.testing.assert_allclose(np.abs(f.f), scale * np.abs(s.amplitude), rtol=1e-14)
    np.testing.assert_allclose(f.z, 0.5 * math.sqrt(BF.width / (BF.planck * BF.mass)) * s.p,
                               rtol=1e-14)


def test_f_from_phi_free_phase():
    params = BackflowParams(1.3, 0.7, 0.0, 0.0, 2.0)
    s = states.momentum_gaussian(2.0, 0.5)
    f = f_from_phi(s, params)
    expected = ((4 * 0.7 * 1.3 / 2.0) ** 0.25 * np.exp(-1j * 2.0 * s.p ** 2 / (4 * 0.7 * 1.3))
                * s.amplitude)
    np.testing.assert_allclose(f.f, expected, rtol=1e-13)


def test_f_from_psi_geometry_and_phase():
    params = ReentryParams(1.3, 0.7, 0.0, 0.5, 2.0)
    s = states.position_gaussian(-3.0, 0.7, 2.0)
    f = f_from_psi(s, params)
    assert quadrature_norm(f.f, f.grid) == pytest.approx(1.0, abs=1e-10)
    # x -> 0 maps to z -> 0, the leftmost point to the largest z
    assert np.argmax(f.z) == np.argmin(s.x)
    assert np.argmin(f.z) == np.argmax(s.x)
    nu = 1 / 0.5 + 1 / 2.0
    expected = ((4 * 0.7 / 1.3) ** 0.25 * params.inverse_time_width ** -0.25
                * np.exp(1j * 1.3 / (4 * 0.7) * nu * s.x ** 2) * s.amplitude)
    np.testing.assert_allclose(f.f, expected, rtol=1e-13)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_round_trips(seed):
    f = states.random_dimensionless_state(build_grid(200, 10.0), seed)
    back = f_from_phi(phi_from_f(f, BF), BF)
    np.testing.assert_allclose(back.f, f.f, rtol=0, atol=1e-12)
    np.testing.assert_allclose(back.z, f.z, rtol=1e-14)
    back = f_from_psi(psi_from_f(f, RE), RE)
    np.testing.assert_allclose(back.f, f.f, rtol=0, atol=1e-12)
    assert quadrature_norm(phi_from_f(f, BF).amplitude, phi_from_f(f, BF).grid) == \
        pytest.approx(1.0, abs=1e-10)


def test_optimal_state_attains_lambda(optimal_free):
    bf = BackflowParams.natural(0.0, 0.0, 1.0)
    phi = phi_from_f(optimal_free.state, bf)
    assert prob_backflow(phi, bf) == pytest.approx(optimal_free.lambda_max, rel=1e-3)


# -- equivalence ----------------------------------------------------------------------------

def _pair(alpha):
    bf = BackflowParams(1.0, 1.0, 2.0 * alpha, 0.0, 1.0)
    return bf, match_reentry_to_backflow(bf, 1.0, 2.0)


@pytest.mark.parametrize("family", ["gaussian", "exponential", "random"])
def test_equivalence_for_generic_states(small_grid, family):
    f = {"gaussian": states.dimensionless_gaussian(small_grid, 1.0, 0.5, 0.3),
         "exponential": states.dimensionless_exponential(small_grid, 1.0),
         "random": states.random_dimensionless_state(small_grid, 3)}[family]
    report = equivalence_check(f, *_pair(0.5))
    assert report.passed
    assert report.rel_diff < 1e-6
    assert report.backflow == pytest.approx(quadratic_form(f.f, small_grid, 0.5), rel=1e-10)


def test_equivalence_for_optimal_state(optimal_small):
    res = optimal_small[0.5]
    report = equivalence_check(res.state, *_pair(0.5))
    assert report.passed
    assert report.backflow == pytest.approx(res.lambda_max, rel=1e-10)
    assert report.reentry == pytest.approx(res.lambda_max, rel=1e-10)


def test_equivalence_preconditions(small_grid):
    zero = states.DimensionlessState(small_grid, np.zeros(small_grid.n))
    with pytest.raises(ParameterError):
        equivalence_check(zero, *_pair(0.5))
    f = states.dimensionless_exponential(small_grid)
    bf, _ = _pair(0.5)
    with pytest.raises(ParameterError):
        equivalence_check(f, bf, ReentryParams.natural(3.0))
