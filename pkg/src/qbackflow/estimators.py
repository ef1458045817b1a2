"""scikit-learn style wrappers around the eigenproblem.

These let the maximal-probability computation sit inside pipelines, grid
searches and ``clone``/``get_params`` machinery. The functional API in
:mod:`qbackflow.eigen` remains the primary interface.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .eigen import DEFAULT_CBM_GRIDS, estimate_cbm, fit_exponential, max_probability, sweep_alpha
from .grid import DEFAULT_N, DEFAULT_Z_MAX, build_grid

__all__ = ["MaxProbabilityRegressor", "BackflowConstantEstimator"]


def _alphas(X):
    X = check_array(X, ensure_2d=False, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected a single alpha column, got {X.shape[1]} columns")
        X = X[:, 0]
    if np.any(X < 0):
        raise ValueError("alpha must be >= 0")
    return X


class MaxProbabilityRegressor(RegressorMixin, BaseEstimator):
    """Exponential decay law of the maximal transfer probability in alpha.

    ``fit`` solves the eigenproblem at every training alpha and fits
    ``lambda_max ~ prefactor * exp(-rate * alpha)``; ``predict`` evaluates
    the fitted law. ``y`` is ignored: the targets are computed, not observed.

    Parameters
    ----------
    n_nodes : int
        Quadrature nodes of the discretisation.
    z_max : float
        Truncation of the half-line.
    rule : str
        Quadrature rule, see :func:`qbackflow.grid.build_grid`.
    """

    def __init__(self, n_nodes=DEFAULT_N, z_max=DEFAULT_Z_MAX, rule="gauss-legendre-composite"):
        self.n_nodes = n_nodes
        self.z_max = z_max
        self.rule = rule

    def _grid(self):
        return build_grid(self.n_nodes, self.z_max, self.rule)

    def fit(self, X, y=None):
        alphas = np.unique(_alphas(X))
        if alphas.size < 3:
            raise ValueError("need at least 3 distinct alpha values to fit the decay law")
        table = sweep_alpha(alphas, self._grid())
        law = fit_exponential(table)
        self.alphas_ = table[:, 0]
        self.lambdas_ = table[:, 1]
        self.prefactor_ = law.prefactor
        self.rate_ = law.rate
        self.residual_ = law.residual
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, ["prefactor_", "rate_"])
        return self.prefactor_ * np.exp(-self.rate_ * _alphas(X))

    def solve(self, alpha):
        """Exact largest eigenpair at ``alpha`` on this estimator's grid."""
        return max_probability(float(alpha), self._grid())


class BackflowConstantEstimator(BaseEstimator):
    """Extrapolated free-space maximum (alpha = 0) from a grid sequence."""

    def __init__(self, grid_sequence=DEFAULT_CBM_GRIDS, rule="gauss-legendre-composite"):
        self.grid_sequence = grid_sequence
        self.rule = rule

    def fit(self, X=None, y=None):
        est = estimate_cbm(self.grid_sequence, self.rule)
        self.c_bm_ = est.value
        self.error_ = est.error
        self.exponent_ = est.exponent
        self.degenerate_ = est.degenerate
        self.table_ = est.table
        return self
