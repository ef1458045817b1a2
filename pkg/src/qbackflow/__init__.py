"""Maximal quantum backflow and quantum reentry probabilities."""

__version__ = "0.1.0"

from .exceptions import (
    BackflowError,
    ExtrapolationError,
    ParameterError,
    ShapeError,
    SolverError,
    TruncationError,
)
from .params import (
    BackflowParams,
    ReentryParams,
    alpha_from,
    beta_from,
    match_reentry_to_backflow,
)
from .grid import Grid, build_grid, quadrature_norm
from .eigen import (
    EigenResult,
    KernelMatrix,
    build_kernel,
    estimate_cbm,
    fit_exponential,
    kernel_entry,
    max_probability,
    solve_largest,
    sweep_alpha,
)
from .states import DimensionlessState, MomentumState, PositionState
from .wavepacket import (
    equivalence_check,
    f_from_phi,
    f_from_psi,
    flux_backflow,
    flux_reentry,
    phi_from_f,
    prob_backflow,
    prob_reentry,
    psi_from_f,
)
