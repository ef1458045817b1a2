"""Sampled wave functions for the two scenarios and the shared dimensionless form.

A state is a set of complex samples on a quadrature grid. Momentum states
live on p in (0, p_max); position states live on x in (-x_max, 0) and store
their grid in the depth variable y = -x, so both reuse :class:`Grid`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .exceptions import ParameterError, ShapeError
from .grid import Grid, build_grid, quadrature_norm

__all__ = [
    "MomentumState",
    "PositionState",
    "DimensionlessState",
    "NORM_TOL",
    "momentum_gaussian",
    "momentum_exponential",
    "momentum_mixture",
    "position_gaussian",
    "position_exponential",
    "chopped_beam",
    "dimensionless_gaussian",
    "dimensionless_exponential",
    "random_dimensionless_state",
]

NORM_TOL = 1e-8


def _check_samples(amplitude, grid):
    amplitude = np.array(amplitude, dtype=complex)
    if amplitude.shape != (grid.n,):
        raise ShapeError(f"samples have shape {amplitude.shape}, grid has {grid.n} nodes")
    amplitude.flags.writeable = False
    return amplitude


def _check_norm(amplitude, grid, what):
    norm = quadrature_norm(amplitude, grid)
    if abs(norm - 1.0) > NORM_TOL:
        raise ParameterError(f"{what} must have unit norm, got {norm:.12g}")


@dataclass(frozen=True, eq=False)
class MomentumState:
    """phi(p) sampled on a momentum grid; ``tail_mass`` is the probability beyond p_max."""

    grid: Grid
    amplitude: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "amplitude", _check_samples(self.amplitude, self.grid))
        _check_norm(self.amplitude, self.grid, "momentum state")

    @property
    def p(self):
        return self.grid.nodes

    @property
    def norm(self):
        return quadrature_norm(self.amplitude, self.grid)


@dataclass(frozen=True, eq=False)
class PositionState:
    """psi(x) sampled for x <= 0; ``grid`` holds the depth y = -x."""

    grid: Grid
    amplitude: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "amplitude", _check_samples(self.amplitude, self.grid))
        _check_norm(self.amplitude, self.grid, "position state")

    @property
    def x(self):
        return -self.grid.nodes

    @property
    def norm(self):
        return quadrature_norm(self.amplitude, self.grid)


@dataclass(frozen=True, eq=False)
class DimensionlessState:
    """f(z) on the half-line grid shared by both problems."""

    grid: Grid
    f: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "f", _check_samples(self.f, self.grid))

    @property
    def z(self):
        return self.grid.nodes

    @property
    def norm(self):
        return quadrature_norm(self.f, self.grid)

    def normalized(self):
        norm = self.norm
        if norm == 0:
            raise ParameterError("cannot normalise the zero state")
        return DimensionlessState(self.grid, self.f / math.sqrt(norm))


def _sample(func, upper, n, rule, center=None):
    """Sample ``func`` on [0, upper], renormalise on the grid, estimate lost mass."""
    grid = build_grid(n, upper, rule)
    values = np.asarray(func(grid.nodes), dtype=complex)
    norm = quadrature_norm(values, grid)
    if norm == 0:
        raise ParameterError("state vanishes on its grid")

    def density(s):
        return abs(func(np.array([s]))[0]) ** 2

    points = [center] if center is not None and 0 < center < upper else None
    inside = quad(density, 0.0, upper, points=points, limit=500,
                  epsabs=0.0, epsrel=1e-12)[0]
    outside = quad(density, upper, np.inf, limit=500, epsabs=0.0, epsrel=1e-8)[0]
    tail = outside / (inside + outside)
    return grid, values / math.sqrt(norm), float(tail)


def momentum_gaussian(p0, sigma, x0=0.0, *, planck=1.0, n=600, p_max=None,
                      rule="gauss-legendre-composite"):
    """Gaussian momentum distribution of width ``sigma`` cut to p >= 0.

    ``x0`` displaces the packet in position space via the phase exp(-i p x0 / hbar).
    """
    if sigma <= 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    if p_max is None:
        p_max = max(p0, 0.0) + 9.0 * sigma

    def func(p):
        return np.exp(-((p - p0) ** 2) / (4.0 * sigma ** 2) - 1j * p * x0 / planck)

    return MomentumState(*_sample(func, p_max, n, rule, center=p0))


def momentum_exponential(sigma, *, n=600, p_max=None, rule="gauss-legendre-composite"):
    """phi(p) = sqrt(2/sigma) exp(-p/sigma)."""
    if sigma <= 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    if p_max is None:
        p_max = 25.0 * sigma

    def func(p):
        return math.sqrt(2.0 / sigma) * np.exp(-p / sigma)

    return MomentumState(*_sample(func, p_max, n, rule))


def momentum_mixture(momenta, width, coefficients=None, *, n=800, p_max=None,
                     rule="gauss-legendre-composite"):
    """Superposition of narrow Gaussians centred on ``momenta``."""
    momenta = np.asarray(momenta, dtype=float)
    if np.any(momenta < 0) or width <= 0:
        raise ParameterError("momenta must be >= 0 and width > 0")
    if coefficients is None:
        coefficients = np.ones(momenta.size)
    coefficients = np.asarray(coefficients, dtype=complex)
    if p_max is None:
        p_max = momenta.max() + 9.0 * width

    def func(p):
        p = np.asarray(p, dtype=float)[..., None]
        return np.sum(coefficients * np.exp(-((p - momenta) ** 2) / (4.0 * width ** 2)), axis=-1)

    return MomentumState(*_sample(func, p_max, n, rule, center=float(momenta.mean())))


def position_gaussian(x0, sigma, p0=0.0, *, planck=1.0, n=600, x_max=None,
                      rule="gauss-legendre-composite"):
    """Gaussian packet centred at ``x0`` with mean momentum ``p0``, cut to x <= 0."""
    if sigma <= 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    if x_max is None:
        x_max = max(-x0, 0.0) + 9.0 * sigma

    def func(y):
        x = -y
        return np.exp(-((x - x0) ** 2) / (4.0 * sigma ** 2) + 1j * p0 * x / planck)

    return PositionState(*_sample(func, x_max, n, rule, center=-x0))


def position_exponential(sigma, *, n=600, x_max=None, rule="gauss-legendre-composite"):
    """psi(x) = sqrt(2/sigma) exp(x/sigma) for x <= 0."""
    if sigma <= 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    if x_max is None:
        x_max = 25.0 * sigma

    def func(y):
        return math.sqrt(2.0 / sigma) * np.exp(-y / sigma)

    return PositionState(*_sample(func, x_max, n, rule))


def chopped_beam(k, length, *, n=None, rule="gauss-legendre-composite"):
    """Plane wave exp(i k x) / sqrt(L) on [-L, 0]: a finite chopped beam.

    The default node count gives 800 nodes per unit length, enough to
    resolve the free propagator chirp down to t ~ 0.1 for L ~ 50 in
    natural units.
    """
    if length <= 0:
        raise ParameterError(f"length must be > 0, got {length}")
    if n is None:
        n = max(2000, int(math.ceil(800 * length)))
    grid = build_grid(n, length, rule)
    values = np.exp(-1j * k * grid.nodes) / math.sqrt(length)
    values /= math.sqrt(quadrature_norm(values, grid))
    return PositionState(grid, values, 0.0)


def dimensionless_gaussian(grid: Grid, center=1.0, width=0.5, momentum=0.0):
    f = np.exp(-((grid.nodes - center) ** 2) / (4.0 * width ** 2) + 1j * momentum * grid.nodes)
    return DimensionlessState(grid, f).normalized()


def dimensionless_exponential(grid: Grid, decay=1.0):
    return DimensionlessState(grid, np.exp(-grid.nodes / decay)).normalized()


def random_dimensionless_state(grid: Grid, rng=None, modes=4, reach=4.0):
    """Random smooth state: a few complex Gaussian bumps within ``reach`` of the origin."""
    rng = np.random.default_rng(rng)
    centers = rng.uniform(0.0, reach, modes)
    widths = rng.uniform(0.3, 1.5, modes)
    coeffs = rng.normal(size=modes) + 1j * rng.normal(size=modes)
    kicks = rng.uniform(-2.0, 2.0, modes)
    z = grid.nodes[:, None]
    f = np.sum(coeffs * np.exp(-((z - centers) ** 2) / (4.0 * widths ** 2) + 1j * kicks * z), axis=1)
    return DimensionlessState(grid, f).normalized()
