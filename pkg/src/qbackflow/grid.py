"""Quadrature grids on a truncated half-line [0, upper]."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .exceptions import ParameterError, ShapeError

__all__ = [
    "Grid",
    "build_grid",
    "quadrature_norm",
    "RULES",
    "PANEL_NODES",
    "DEFAULT_N",
    "DEFAULT_Z_MAX",
]

RULES = ("gauss-legendre-composite", "uniform-midpoint")
PANEL_NODES = 10
DEFAULT_N = 1500
DEFAULT_Z_MAX = 30.0


@dataclass(frozen=True, eq=False)
class Grid:
    """Open quadrature rule on ``(0, z_max)``: neither endpoint is a node."""

    nodes: np.ndarray
    weights: np.ndarray
    z_max: float
    rule: str = "gauss-legendre-composite"
    panel_nodes: int = PANEL_NODES

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise ShapeError("nodes and weights must be 1-d arrays of equal length")
        nodes.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def n(self):
        return self.nodes.size

    @property
    def order(self):
        """Algebraic convergence order of the rule on smooth integrands."""
        if self.rule == "uniform-midpoint":
            return 2
        return 2 * min(_panel_counts(self.n, self.panel_nodes))

    def integrate(self, values):
        values = np.asarray(values)
        if values.shape[-1] != self.n:
            raise ShapeError(f"expected {self.n} samples, got {values.shape[-1]}")
        return values @ self.weights

    def scaled(self, factor):
        """Grid for the variable ``factor * z``: nodes and weights scale together."""
        factor = float(factor)
        if factor <= 0:
            raise ParameterError(f"scale factor must be > 0, got {factor}")
        return Grid(self.nodes * factor, self.weights * factor,
                    self.z_max * factor, self.rule, self.panel_nodes)

    def describe(self):
        return {"n": self.n, "z_max": self.z_max, "rule": self.rule}


def _panel_counts(n, panel_nodes=PANEL_NODES):
    # n // p panels; the remainder is spread over the last panels so every
    # panel keeps at least ``panel_nodes`` nodes and the total stays n.
    if n < panel_nodes:
        return [n]
    panels = n // panel_nodes
    counts = [panel_nodes] * panels
    for i in range(n - panels * panel_nodes):
        counts[-1 - (i % panels)] += 1
    return counts


def _gauss_legendre_composite(n, z_max, panel_nodes):
    counts = _panel_counts(n, panel_nodes)
    edges = np.linspace(0.0, z_max, len(counts) + 1)
    nodes, weights = [], []
    cache = {}
    for k, count in enumerate(counts):
        if count not in cache:
            cache[count] = leggauss(count)
        x, w = cache[count]
        a, b = edges[k], edges[k + 1]
        half = 0.5 * (b - a)
        nodes.append(a + half * (x + 1.0))
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _uniform_midpoint(n, z_max):
    h = z_max / n
    return (np.arange(n) + 0.5) * h, np.full(n, h)


def build_grid(n=DEFAULT_N, z_max=DEFAULT_Z_MAX, rule="gauss-legendre-composite",
               panel_nodes=PANEL_NODES, *, allow_degenerate=False):
    """Build an open quadrature grid on ``[0, z_max]``.

    Parameters
    ----------
    n : int
        Total number of nodes. For the composite Gauss-Legendre rule the
        interval is split into ``n // panel_nodes`` equal panels; leftover
        nodes are added to the last panels.
    z_max : float
        Truncation point of the half-line.
    rule : {"gauss-legendre-composite", "uniform-midpoint"}
    panel_nodes : int
        Nodes per Gauss-Legendre panel.
    allow_degenerate : bool
        Accept ``n == 1`` (a single-node rule). Only meant for diagnostic runs.

    Returns
    -------
    Grid
    """
    if isinstance(n, bool) or int(n) != n:
        raise ParameterError(f"n must be an integer, got {n!r}")
    n = int(n)
    if n < (1 if allow_degenerate else 2):
        raise ParameterError(f"n must be >= 2, got {n}")
    if not np.isfinite(z_max) or z_max <= 0:
        raise ParameterError(f"z_max must be > 0, got {z_max}")
    if panel_nodes < 1:
        raise ParameterError(f"panel_nodes must be >= 1, got {panel_nodes}")
    if rule == "gauss-legendre-composite":
        nodes, weights = _gauss_legendre_composite(n, float(z_max), int(panel_nodes))
    elif rule == "uniform-midpoint":
        nodes, weights = _uniform_midpoint(n, float(z_max))
    else:
        raise ParameterError(f"unknown rule {rule!r}; choose from {RULES}")
    return Grid(nodes, weights, float(z_max), rule, int(panel_nodes))


def quadrature_norm(f, grid: Grid) -> float:
    """Discrete squared norm sum_i w_i |f(z_i)|^2."""
    f = np.asarray(f)
    if f.shape != (grid.n,):
        raise ShapeError(f"samples have shape {f.shape}, grid has {grid.n} nodes")
    return float(np.sum(grid.weights * np.abs(f) ** 2))
