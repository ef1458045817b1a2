"""Nystrom discretisation of the half-line eigenproblem

    -(1/pi) int_0^inf dz' sin[(z + z' + a)(z - z')] / (z - z') f(z') = lambda f(z)

whose largest eigenvalue is the maximal probability transfer, for both the
backflow (a = alpha) and reentry (a = beta) scenarios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import brentq

from .exceptions import ExtrapolationError, ParameterError, ShapeError, SolverError
from .grid import Grid, build_grid, DEFAULT_N, DEFAULT_Z_MAX
from .params import BackflowParams, ReentryParams, alpha_from, beta_from

__all__ = [
    "KernelMatrix",
    "EigenResult",
    "CbmEstimate",
    "ExponentialFit",
    "kernel_entry",
    "build_kernel",
    "solve_largest",
    "max_probability",
    "max_backflow_probability",
    "max_reentry_probability",
    "quadratic_form",
    "estimate_cbm",
    "sweep_alpha",
    "fit_exponential",
    "DEFAULT_CBM_GRIDS",
    "DIAG_EPS",
    "RESIDUAL_TOL",
]

DIAG_EPS = 1e-9
RESIDUAL_TOL = 1e-9
DEFAULT_CBM_GRIDS = ((750, 20.0), (1500, 30.0), (3000, 40.0))


def kernel_entry(z, z_prime, alpha):
    """Kernel value -(1/pi) sin[(z + z' + alpha)(z - z')] / (z - z').

    Vectorised over broadcastable inputs. Within ``1e-9 * (1 + max(z, z'))``
    of the diagonal the limit -(z + z' + alpha)/pi is returned instead; it
    equals -(2z + alpha)/pi on the diagonal and keeps the kernel exactly
    symmetric.
    """
    z = np.asarray(z, dtype=float)
    zp = np.asarray(z_prime, dtype=float)
    d = z - zp
    s = z + zp + alpha
    near = np.abs(d) < DIAG_EPS * (1.0 + np.maximum(np.abs(z), np.abs(zp)))
    safe_d = np.where(near, 1.0, d)
    value = np.where(near, -s / np.pi,
                     -np.sin(s * safe_d) / (np.pi * safe_d))
    return value[()] if value.ndim == 0 else value


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """Weight-symmetrised kernel A_ij = sqrt(w_i) K(z_i, z_j) sqrt(w_j)."""

    alpha: float
    grid: Grid
    entries: np.ndarray


@dataclass(frozen=True, eq=False)
class EigenResult:
    """Largest eigenpair; ``f`` is normalised so sum_i w_i |f_i|^2 = 1."""

    lambda_max: float
    f: np.ndarray
    alpha: float
    grid: Grid
    residual: float = 0.0

    @property
    def z(self):
        return self.grid.nodes

    @property
    def state(self):
        from .states import DimensionlessState

        return DimensionlessState(self.grid, self.f)

    def metadata(self):
        return {"alpha": self.alpha, "lambda_max": self.lambda_max,
                "residual": self.residual, **self.grid.describe()}


def build_kernel(grid: Grid, alpha: float) -> KernelMatrix:
    if alpha < 0:
        raise ParameterError(f"alpha must be >= 0, got {alpha}")
    z = grid.nodes
    K = kernel_entry(z[:, None], z[None, :], alpha)
    s = np.sqrt(grid.weights)
    A = s[:, None] * K * s[None, :]
    A.flags.writeable = False
    return KernelMatrix(float(alpha), grid, A)


def _fix_sign(v):
    k = int(np.argmax(np.abs(v)))
    return v * (np.conj(v[k]) / abs(v[k])) if v[k] != 0 else v


def solve_largest(matrix: KernelMatrix) -> EigenResult:
    """Algebraically largest eigenpair of a symmetric kernel matrix.

    The eigenvector v is mapped back to samples f_i = v_i / sqrt(w_i),
    normalised in the quadrature norm and signed so that its largest
    component is positive.
    """
    A = matrix.entries
    n = A.shape[0]
    if A.shape != (n, n):
        raise ShapeError(f"kernel must be square, got {A.shape}")
    try:
        vals, vecs = scipy.linalg.eigh(A, subset_by_index=[n - 1, n - 1],
                                       driver="evr")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"symmetric eigensolve failed: {exc}") from exc
    lam = float(vals[0])
    v = vecs[:, 0]
    scale = max(abs(lam), np.finfo(float).tiny)
    residual = float(np.linalg.norm(A @ v - lam * v) / np.linalg.norm(v) / scale)
    if not np.isfinite(residual) or residual > RESIDUAL_TOL:
        raise SolverError(f"eigenpair residual {residual:.3e} exceeds {RESIDUAL_TOL:g}")
    w = matrix.grid.weights
    f = _fix_sign(v / np.sqrt(w))
    f = f / math.sqrt(np.sum(w * f * f))
    f.flags.writeable = False
    return EigenResult(lam, f, matrix.alpha, matrix.grid, residual)


def max_probability(alpha: float, grid: Grid | None = None) -> EigenResult:
    """Maximal transfer probability at dimensionless parameter ``alpha``."""
    if grid is None:
        grid = build_grid(DEFAULT_N, DEFAULT_Z_MAX)
    return solve_largest(build_kernel(grid, alpha))


def max_backflow_probability(params: BackflowParams, grid: Grid | None = None) -> EigenResult:
    return max_probability(alpha_from(params), grid)


def max_reentry_probability(params: ReentryParams, grid: Grid | None = None) -> EigenResult:
    return max_probability(beta_from(params), grid)


def quadratic_form(f, grid: Grid, alpha: float) -> float:
    """Dimensionless probability sum_ij w_i w_j f_i^* K(z_i, z_j) f_j."""
    f = np.asarray(f)
    if f.shape != (grid.n,):
        raise ShapeError(f"samples have shape {f.shape}, grid has {grid.n} nodes")
    u = np.sqrt(grid.weights) * f
    A = build_kernel(grid, alpha).entries
    return float(np.real(np.vdot(u, A @ u)))


@dataclass(frozen=True)
class CbmEstimate:
    value: float
    error: float
    exponent: float
    amplitude: float
    trend: str
    degenerate: bool
    table: list = field(default_factory=list)


def _richardson(lam_coarse, lam_fine, ratio, order):
    return lam_fine + (lam_fine - lam_coarse) / (ratio ** order - 1.0)


def _three_point_power_law(zs, lams):
    """Exact fit of lam(Z) = lam_inf + c * Z**-q through three points."""
    (z1, z2, z3), (l1, l2, l3) = zs, lams
    d1, d2 = l2 - l1, l3 - l2
    if d1 == 0 or d2 == 0 or np.sign(d1) != np.sign(d2):
        raise ExtrapolationError("non-monotone sequence", lams)
    ratio = d2 / d1

    def g(q):
        return (z3 ** -q - z2 ** -q) / (z2 ** -q - z1 ** -q) - ratio

    lo, hi = 1e-3, 50.0
    if g(lo) * g(hi) > 0:
        raise ExtrapolationError(
            f"increment ratio {ratio:.4g} admits no positive power-law exponent", lams)
    q = brentq(g, lo, hi, xtol=1e-14)
    c = d1 / (z2 ** -q - z1 ** -q)
    return l3 - c * z3 ** -q, c, q


def estimate_cbm(grid_sequence=DEFAULT_CBM_GRIDS, rule="gauss-legendre-composite",
                 alpha=0.0, solver=None) -> CbmEstimate:
    """Extrapolate the largest eigenvalue to infinite resolution and cutoff.

    Each ``(n, z_max)`` configuration is solved. Configurations sharing a
    cutoff are first combined by Richardson extrapolation in ``n`` using the
    rule's order; the per-cutoff values are then fitted by
    ``lam(Z) = lam_inf + c * Z**-q`` with the exponent ``q`` estimated from
    the data (exactly through the last three cutoffs, by least squares when
    more are available).

    The reported error is the larger of the fit residual and the last raw
    increment. A sequence whose values do not change is returned as is and
    flagged ``degenerate``.
    """
    if solver is None:
        def solver(n, z_max):
            return max_probability(alpha, build_grid(n, z_max, rule)).lambda_max
    configs = [(int(n), float(z)) for n, z in grid_sequence]
    if len(configs) < 3:
        raise ParameterError(f"need at least 3 grid configurations, got {len(configs)}")
    raw = [solver(n, z) for n, z in configs]
    table = [{"n": n, "z_max": z, "lambda_max": lam} for (n, z), lam in zip(configs, raw)]
    increments = np.diff(raw)
    last_increment = float(abs(increments[-1]))

    if np.all(increments == 0):
        return CbmEstimate(raw[-1], 0.0, float("nan"), 0.0, "constant", True, table)

    order = build_grid(max(n for n, _ in configs), 1.0, rule).order
    by_cutoff = {}
    for (n, z), lam in zip(configs, raw):
        by_cutoff.setdefault(z, []).append((n, lam))
    zs, lams = [], []
    for z in sorted(by_cutoff):
        runs = sorted(by_cutoff[z])
        if len(runs) >= 2 and runs[-1][0] > runs[-2][0]:
            (n1, l1), (n2, l2) = runs[-2], runs[-1]
            lam = _richardson(l1, l2, n2 / n1, order)
        else:
            lam = runs[-1][1]
        zs.append(z)
        lams.append(lam)
        for row in table:
            if row["z_max"] == z:
                row["lambda_n_extrapolated"] = lam
    if len(zs) < 3:
        raise ExtrapolationError("need at least 3 distinct cutoffs", raw)

    diffs = np.diff(lams)
    if np.any(diffs == 0) or not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ExtrapolationError("non-monotone sequence in z_max", raw)
    trend = "increasing" if diffs[0] > 0 else "decreasing"

    value, amp, q = _three_point_power_law(zs[-3:], lams[-3:])
    residual = 0.0
    if len(zs) > 3:
        from scipy.optimize import curve_fit

        zarr, larr = np.array(zs), np.array(lams)
        popt, _ = curve_fit(lambda zz, l0, c, qq: l0 + c * zz ** -qq, zarr, larr,
                            p0=(value, amp, q), maxfev=20000)
        value, amp, q = (float(x) for x in popt)
        residual = float(np.max(np.abs(value + amp * zarr ** -q - larr)))
    # the extrapolant must lie beyond the last value in the direction of travel
    if (value - lams[-1]) * (lams[-1] - lams[0]) < 0:
        raise ExtrapolationError("extrapolant contradicts the observed trend", raw)
    error = max(residual, last_increment)
    return CbmEstimate(float(value), float(error), float(q), float(amp), trend, False, table)


def sweep_alpha(alphas, grid: Grid | None = None) -> np.ndarray:
    """Largest eigenvalue for each ``alpha``; returns rows ``(alpha, lambda_max)``."""
    alphas = np.asarray(alphas, dtype=float)
    if alphas.ndim != 1 or alphas.size == 0:
        raise ParameterError("alphas must be a non-empty 1-d sequence")
    if np.any(alphas < 0):
        raise ParameterError("alphas must be >= 0")
    if np.any(np.diff(alphas) < 0):
        raise ParameterError("alphas must be sorted ascending")
    if grid is None:
        grid = build_grid(DEFAULT_N, DEFAULT_Z_MAX)
    lams = [max_probability(a, grid).lambda_max for a in alphas]
    return np.column_stack([alphas, lams])


@dataclass(frozen=True)
class ExponentialFit:
    prefactor: float
    rate: float
    residual: float

    def __call__(self, alpha):
        return self.prefactor * np.exp(-self.rate * np.asarray(alpha, dtype=float))


def fit_exponential(table) -> ExponentialFit:
    """Least-squares fit of ln(lambda) = ln(c) - r * alpha."""
    table = np.asarray(table, dtype=float)
    if table.ndim != 2 or table.shape[1] != 2:
        raise ShapeError("table must have rows (alpha, lambda_max)")
    if table.shape[0] < 3:
        raise ParameterError(f"need at least 3 rows, got {table.shape[0]}")
    a, lam = table[:, 0], table[:, 1]
    if np.any(lam <= 0):
        raise ParameterError("all lambda_max must be > 0 for a logarithmic fit")
    design = np.column_stack([np.ones_like(a), -a])
    coef, *_ = np.linalg.lstsq(design, np.log(lam), rcond=None)
    residual = float(np.linalg.norm(design @ coef - np.log(lam)))
    return ExponentialFit(float(np.exp(coef[0])), float(coef[1]), residual)
