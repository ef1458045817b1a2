"""Time-domain side of both problems.

Fluxes at the observation point, the probability transferred over a time
window (as a quadratic form with a closed-form kernel, and by integrating
the flux in time), the maps between physical and dimensionless states and
the backflow/reentry equivalence check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, simpson

from .exceptions import ParameterError, TruncationError
from .grid import quadrature_norm
from .params import BackflowParams, ReentryParams, alpha_from, beta_from
from .states import DimensionlessState, MomentumState, PositionState, NORM_TOL

__all__ = [
    "FluxSeries",
    "EquivalenceReport",
    "TAIL_TOL",
    "flux_backflow",
    "flux_reentry",
    "flux_series",
    "backflow_kernel",
    "backflow_kernel_diagonal",
    "reentry_kernel",
    "reentry_kernel_diagonal",
    "prob_backflow",
    "prob_reentry",
    "prob_backflow_time",
    "prob_reentry_time",
    "f_from_phi",
    "f_from_psi",
    "phi_from_f",
    "psi_from_f",
    "equivalence_check",
]

TAIL_TOL = 1e-10


def _check_tail(state):
    if state.tail_mass > TAIL_TOL:
        raise TruncationError("state grid truncates its support", state.tail_mass)


# -- fluxes -----------------------------------------------------------------

def _hermitian_sum(v, a, phase, dense):
    """sum_jk conj(v_j) v_k (a_j + a_k) exp(i(phase_j - phase_k))."""
    if dense:
        e = np.exp(1j * (phase[:, None] - phase[None, :]))
        return np.conj(v) @ (((a[:, None] + a[None, :]) * e) @ v)
    b = np.sum(v * np.exp(-1j * phase))
    c = np.sum(a * v * np.exp(-1j * phase))
    return np.conj(c) * b + np.conj(b) * c


def flux_backflow(state: MomentumState, params: BackflowParams, t, *, dense=False,
                  return_complex=False):
    """Probability current J(0, t) of a non-negative-momentum packet under force m g.

    The double momentum integral is evaluated on the state's grid. Its
    exponent separates into single-momentum phases, so by default it is
    summed in O(n); ``dense=True`` forms the full n x n sum instead.
    """
    _check_tail(state)
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")
    m, hbar, g = params.mass, params.planck, params.acceleration
    p = state.p
    v = state.grid.weights * state.amplitude
    phase = t * (p * p + m * g * t * p) / (2.0 * hbar * m)
    s = _hermitian_sum(v, p + m * g * t, phase, dense) / (4.0 * math.pi * hbar * m)
    return complex(s) if return_complex else float(s.real)


def flux_reentry(state: PositionState, params: ReentryParams, t, *, dense=False,
                 return_complex=False):
    """Probability current at x = ell and time t > 0 of a packet released from x <= 0."""
    _check_tail(state)
    if t <= 0:
        raise ParameterError(f"t must be > 0, got {t}")
    m, hbar, ell = params.mass, params.planck, params.observation_point
    b = ell - state.x
    v = state.grid.weights * state.amplitude
    phase = -m * b * b / (2.0 * hbar * t)
    s = _hermitian_sum(v, b, phase, dense) * m / (4.0 * math.pi * hbar * t * t)
    return complex(s) if return_complex else float(s.real)


@dataclass(frozen=True, eq=False)
class FluxSeries:
    times: np.ndarray
    values: np.ndarray
    scenario: str
    transfer: float
    imag_residue: float


def flux_series(state, params, times, *, dense=False) -> FluxSeries:
    """Flux sampled at ``times``; ``transfer`` is -int J dt over the sampled span (Simpson)."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
        raise ParameterError("times must be a strictly increasing 1-d array of length >= 2")
    if isinstance(state, MomentumState):
        scenario, fn = "backflow", flux_backflow
    elif isinstance(state, PositionState):
        scenario, fn = "reentry", flux_reentry
    else:
        raise TypeError(f"unsupported state type {type(state).__name__}")
    raw = np.array([fn(state, params, t, dense=dense, return_complex=True) for t in times])
    scale = max(float(np.max(np.abs(raw))), np.finfo(float).tiny)
    values = raw.real.copy()
    return FluxSeries(times, values, scenario, float(-simpson(values, x=times)),
                      float(np.max(np.abs(raw.imag)) / scale))


# -- kernels ----------------------------------------------------------------

def _sinc_kernel(width, d, mean_phase):
    # (i/2pi) [e^{i th_hi} - e^{i th_lo}] / d written as a sinc so the
    # diagonal needs no special case: th_hi - th_lo = 2 width d.
    return -np.exp(1j * mean_phase) * width * np.sinc(width * d / np.pi) / np.pi


def backflow_kernel(p, p_prime, params: BackflowParams, window=None):
    """Kernel K(p, p') whose quadratic form is the backflow probability.

    ``window`` overrides ``(T1, T2)``; equal endpoints give a zero kernel.
    """
    t1, t2 = window if window is not None else (params.window_start, params.window_end)
    m, hbar, g = params.mass, params.planck, params.acceleration
    p, pp = np.asarray(p, dtype=float), np.asarray(p_prime, dtype=float)
    s, d = p + pp, p - pp
    width = ((t2 - t1) * s + m * g * (t2 * t2 - t1 * t1)) / (4.0 * hbar * m)
    mean_phase = d * ((t1 + t2) * s + m * g * (t1 * t1 + t2 * t2)) / (4.0 * hbar * m)
    return _sinc_kernel(width, d, mean_phase)


def backflow_kernel_diagonal(p, params: BackflowParams):
    """Limit of K(p, p') as p' -> p."""
    t1, t2 = params.window_start, params.window_end
    m, hbar, g = params.mass, params.planck, params.acceleration
    p = np.asarray(p, dtype=float)
    return -(t2 * (2 * p + m * g * t2) - t1 * (2 * p + m * g * t1)) / (4.0 * math.pi * hbar * m)


def reentry_kernel(x, x_prime, params: ReentryParams, window=None):
    """Kernel of the reentry probability; the exponential bracket is taken
    as its value at tau1 minus its value at tau2."""
    tau1, tau2 = window if window is not None else (params.window_start, params.window_end)
    m, hbar, ell = params.mass, params.planck, params.observation_point
    x, xp = np.asarray(x, dtype=float), np.asarray(x_prime, dtype=float)
    q, d = 2.0 * ell - x - xp, x - xp
    nu1, nu2 = 1.0 / tau1, 1.0 / tau2
    width = m * q * (nu1 - nu2) / (4.0 * hbar)
    mean_phase = m * q * d * (nu1 + nu2) / (4.0 * hbar)
    return _sinc_kernel(width, d, mean_phase)


def reentry_kernel_diagonal(x, params: ReentryParams):
    """Limit of the reentry kernel as x' -> x."""
    m, hbar, ell = params.mass, params.planck, params.observation_point
    x = np.asarray(x, dtype=float)
    return -m * (2.0 * ell - 2.0 * x) * params.inverse_time_width / (4.0 * math.pi * hbar)


def _form(kernel, state):
    v = state.grid.weights * state.amplitude
    return float(np.real(np.vdot(v, kernel @ v)))


def prob_backflow(state: MomentumState, params: BackflowParams, window=None) -> float:
    """Probability carried from x > 0 to x < 0 during the window (kernel route)."""
    _check_tail(state)
    p = state.p
    return _form(backflow_kernel(p[:, None], p[None, :], params, window), state)


def prob_reentry(state: PositionState, params: ReentryParams, window=None) -> float:
    """Probability carried from x > ell to x < ell during the window (kernel route)."""
    _check_tail(state)
    x = state.x
    return _form(reentry_kernel(x[:, None], x[None, :], params, window), state)


def prob_backflow_time(state: MomentumState, params: BackflowParams, epsrel=1e-11) -> float:
    """-int_{T1}^{T2} J(0, t) dt by adaptive quadrature."""
    val, _ = quad(lambda t: flux_backflow(state, params, t), params.window_start,
                  params.window_end, epsabs=0.0, epsrel=epsrel, limit=1000)
    return -val


def prob_reentry_time(state: PositionState, params: ReentryParams, epsrel=1e-11) -> float:
    """-int_{tau1}^{tau2} J(ell, t) dt, integrated in nu = 1/t."""
    def integrand(nu):
        return flux_reentry(state, params, 1.0 / nu) / (nu * nu)

    val, _ = quad(integrand, 1.0 / params.window_end, 1.0 / params.window_start,
                  epsabs=0.0, epsrel=epsrel, limit=1000)
    return -val


# -- dimensionless maps -------------------------------------------------------

def _backflow_scale(params):
    return 0.5 * math.sqrt(params.width / (params.planck * params.mass))


def _backflow_phase(p, params):
    t1, t2 = params.window_start, params.window_end
    m, hbar, g = params.mass, params.planck, params.acceleration
    return (t1 + t2) * p * p / (4.0 * hbar * m) + g * (t1 * t1 + t2 * t2) * p / (4.0 * hbar)


def _reentry_scale(params):
    return 0.5 * math.sqrt(params.mass / params.planck * params.inverse_time_width)


def _reentry_phase(x, params):
    m, hbar, ell = params.mass, params.planck, params.observation_point
    nu_sum = 1.0 / params.window_start + 1.0 / params.window_end
    return m * nu_sum * (x - 2.0 * ell) * x / (4.0 * hbar)


def f_from_phi(state: MomentumState, params: BackflowParams) -> DimensionlessState:
    """Rescale p -> z and strip the window phase from phi; |f|^2 dz = |phi|^2 dp."""
    scale = _backflow_scale(params)
    f = scale ** -0.5 * np.exp(-1j * _backflow_phase(state.p, params)) * state.amplitude
    return DimensionlessState(state.grid.scaled(scale), f)


def phi_from_f(state: DimensionlessState, params: BackflowParams) -> MomentumState:
    scale = _backflow_scale(params)
    grid = state.grid.scaled(1.0 / scale)
    phi = scale ** 0.5 * np.exp(1j * _backflow_phase(grid.nodes, params)) * state.f
    return MomentumState(grid, phi)


def f_from_psi(state: PositionState, params: ReentryParams) -> DimensionlessState:
    """Rescale x -> z = -c x (c > 0) and attach the window phase; norm is preserved."""
    scale = _reentry_scale(params)
    f = scale ** -0.5 * np.exp(1j * _reentry_phase(state.x, params)) * state.amplitude
    return DimensionlessState(state.grid.scaled(scale), f)


def psi_from_f(state: DimensionlessState, params: ReentryParams) -> PositionState:
    scale = _reentry_scale(params)
    grid = state.grid.scaled(1.0 / scale)
    psi = scale ** 0.5 * np.exp(-1j * _reentry_phase(-grid.nodes, params)) * state.f
    return PositionState(grid, psi)


# -- equivalence --------------------------------------------------------------

@dataclass(frozen=True)
class EquivalenceReport:
    alpha: float
    beta: float
    backflow: float
    reentry: float
    abs_diff: float
    rel_diff: float
    rtol: float
    passed: bool


def equivalence_check(state: DimensionlessState, bf: BackflowParams, re: ReentryParams,
                      rtol=1e-6) -> EquivalenceReport:
    """Push one dimensionless state into both scenarios and compare the transfers."""
    alpha, beta = alpha_from(bf), beta_from(re)
    if abs(alpha - beta) > 1e-10 * max(1.0, abs(alpha)):
        raise ParameterError(f"alpha ({alpha!r}) and beta ({beta!r}) must match")
    norm = quadrature_norm(state.f, state.grid)
    if abs(norm - 1.0) > NORM_TOL:
        raise ParameterError(f"state must have unit norm, got {norm:.12g}")
    p_bf = prob_backflow(phi_from_f(state, bf), bf)
    p_re = prob_reentry(psi_from_f(state, re), re)
    diff = abs(p_bf - p_re)
    rel = diff / max(abs(p_bf), abs(p_re), 1e-12)
    return EquivalenceReport(alpha, beta, p_bf, p_re, diff, rel, rtol, rel < rtol)
