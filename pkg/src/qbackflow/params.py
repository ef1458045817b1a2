"""Physical scenario parameters and their reduction to a single dimensionless number.

Both problems depend on their physical inputs only through one number:
``alpha`` for backflow against a constant force and ``beta`` for reentry
through an observation point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .exceptions import ParameterError

__all__ = [
    "BackflowParams",
    "ReentryParams",
    "alpha_from",
    "beta_from",
    "alpha_from_midpoint",
    "beta_from_midpoint",
    "match_reentry_to_backflow",
]


def _require(condition, message):
    if not condition:
        raise ParameterError(message)


@dataclass(frozen=True)
class BackflowParams:
    """Particle of mass ``mass`` accelerated by ``acceleration`` (force m*g).

    Probability transfer across x = 0 is collected over the window
    ``window_start < t < window_end``.
    """

    mass: float = 1.0
    planck: float = 1.0
    acceleration: float = 0.0
    window_start: float = 0.0
    window_end: float = 1.0

    def __post_init__(self):
        _require(self.mass > 0, f"mass must be > 0, got {self.mass}")
        _require(self.planck > 0, f"planck must be > 0, got {self.planck}")
        _require(self.acceleration >= 0,
                 f"acceleration must be >= 0, got {self.acceleration}")
        _require(self.window_start >= 0,
                 f"window_start must be >= 0, got {self.window_start}")
        _require(self.window_end > self.window_start,
                 f"window_end must exceed window_start, got "
                 f"[{self.window_start}, {self.window_end}]")

    @classmethod
    def natural(cls, acceleration=0.0, window_start=0.0, window_end=1.0):
        """Parameters in units where m = hbar = 1."""
        return cls(1.0, 1.0, acceleration, window_start, window_end)

    @property
    def midpoint(self):
        return 0.5 * (self.window_start + self.window_end)

    @property
    def width(self):
        return self.window_end - self.window_start


@dataclass(frozen=True)
class ReentryParams:
    """Free particle released from x <= 0 and observed at ``observation_point``.

    Probability transfer across x = ell is collected over
    ``window_start < t < window_end``; the window must start after t = 0.
    """

    mass: float = 1.0
    planck: float = 1.0
    observation_point: float = 0.0
    window_start: float = 1.0
    window_end: float = 2.0

    def __post_init__(self):
        _require(self.mass > 0, f"mass must be > 0, got {self.mass}")
        _require(self.planck > 0, f"planck must be > 0, got {self.planck}")
        _require(self.observation_point >= 0,
                 f"observation_point must be >= 0, got {self.observation_point}")
        _require(self.window_start > 0,
                 f"window_start must be > 0, got {self.window_start}")
        _require(self.window_end > self.window_start,
                 f"window_end must exceed window_start, got "
                 f"[{self.window_start}, {self.window_end}]")

    @classmethod
    def natural(cls, observation_point=0.0, window_start=1.0, window_end=2.0):
        """Parameters in units where m = hbar = 1."""
        return cls(1.0, 1.0, observation_point, window_start, window_end)

    @property
    def midpoint(self):
        return 0.5 * (self.window_start + self.window_end)

    @property
    def width(self):
        return self.window_end - self.window_start

    @property
    def inverse_time_width(self):
        """1/tau1 - 1/tau2, the width of the window in nu = 1/t."""
        return 1.0 / self.window_start - 1.0 / self.window_end


def alpha_from(params: BackflowParams) -> float:
    """Dimensionless force parameter g * sqrt(m (T2 - T1) / hbar) * (T1 + T2) / 2."""
    p = params
    return (p.acceleration
            * math.sqrt(p.mass * (p.window_end - p.window_start) / p.planck)
            * (p.window_start + p.window_end) / 2.0)


def alpha_from_midpoint(params: BackflowParams) -> float:
    """Same number written via the window midpoint T and width dT: g sqrt(m/hbar) T sqrt(dT)."""
    return (params.acceleration * math.sqrt(params.mass / params.planck)
            * params.midpoint * math.sqrt(params.width))


def beta_from(params: ReentryParams) -> float:
    """Dimensionless observation-point parameter ell * sqrt(m (1/tau1 - 1/tau2) / hbar)."""
    p = params
    return p.observation_point * math.sqrt(p.mass / p.planck * p.inverse_time_width)


def beta_from_midpoint(params: ReentryParams) -> float:
    """Same number via tau and dtau: ell sqrt(m/hbar) sqrt(dtau / (tau^2 - (dtau/2)^2))."""
    tau, dtau = params.midpoint, params.width
    return (params.observation_point * math.sqrt(params.mass / params.planck)
            * math.sqrt(dtau / (tau * tau - (dtau / 2.0) ** 2)))


def match_reentry_to_backflow(bf: BackflowParams, tau1: float, tau2: float) -> ReentryParams:
    """Reentry scenario with the same m, hbar whose beta equals the backflow alpha.

    Only the observation point is solved for; the time window is given.
    """
    _require(tau1 > 0, f"tau1 must be > 0, got {tau1}")
    _require(tau2 > tau1, f"tau2 must exceed tau1, got [{tau1}, {tau2}]")
    alpha = alpha_from(bf)
    ell = alpha / math.sqrt(bf.mass * (1.0 / tau1 - 1.0 / tau2) / bf.planck)
    return ReentryParams(bf.mass, bf.planck, ell, tau1, tau2)
