"""Domain types shared by every module: the consumption-date grid, market and
preference parameters, and the extended positive reals used to reason about
utility after death.

Times are held internally as step indices on the grid; real-valued times only
appear at construction and output boundaries, so the grid never accumulates
floating-point drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConfigurationError",
    "DivergenceError",
    "TimeGrid",
    "make_time_grid",
    "MarketParams",
    "Preferences",
    "Finite",
    "Eps",
]


class ConfigurationError(ValueError):
    """Invalid parameters, grids, tables or config files."""


class DivergenceError(RuntimeError):
    """A value recursion produced a non-finite or out-of-range quantity."""


@dataclass(frozen=True)
class TimeGrid:
    """Consumption dates t0, t0+dt, ..., T-dt.

    T is the horizon by which death is certain; it is not itself a
    consumption date.  ``n_steps`` is the number of grid points.
    """

    t0: float
    dt: float
    n_steps: int

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ConfigurationError(f"grid dt must be > 0, got {self.dt}")
        if self.n_steps < 1:
            raise ConfigurationError("grid needs at least one point")

    @property
    def T(self) -> float:
        return self.t0 + self.dt * self.n_steps

    @property
    def points(self) -> np.ndarray:
        """Grid times as floats, for I/O only."""
        return self.t0 + self.dt * np.arange(self.n_steps)

    def __len__(self) -> int:
        return self.n_steps


def make_time_grid(t0: float, dt: float, T: float) -> TimeGrid:
    """Build the grid t0, t0+dt, ..., T-dt.

    (T - t0) must be a positive integer multiple of dt (tolerance 1e-9 on
    the step count, then rounded).
    """
    if dt <= 0.0:
        raise ConfigurationError(f"grid dt must be > 0, got {dt}")
    ratio = (T - t0) / dt
    n = round(ratio)
    if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, abs(ratio)):
        raise ConfigurationError(
            f"horizon is not an integer number of steps: (T - t0)/dt = {ratio!r}"
        )
    return TimeGrid(t0=float(t0), dt=float(dt), n_steps=int(n))


@dataclass(frozen=True)
class MarketParams:
    """Black-Scholes market: one risky asset with drift mu and volatility
    sigma, and a riskless rate r.  Rates are per year."""

    mu: float
    r: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise ConfigurationError(f"sigma must be > 0, got {self.sigma}")


@dataclass(frozen=True)
class Preferences:
    """Recursive-preference parameters.

    alpha  monetary risk aversion exponent, in (-inf, 1) excluding 0
    rho    intertemporal substitution exponent, same range
    b      subjective discount rate >= 0; the per-step discount factor is
           beta = exp(-b * dt), applied to exactly one step of
           continuation utility
    """

    alpha: float
    rho: float
    b: float = 0.0

    def __post_init__(self):
        if not (self.alpha < 1.0) or self.alpha == 0.0:
            raise ConfigurationError(f"alpha must be in (-inf,1) \\ {{0}}, got {self.alpha}")
        if not (self.rho < 1.0) or self.rho == 0.0:
            raise ConfigurationError(f"rho must be in (-inf,1) \\ {{0}}, got {self.rho}")
        if self.b < 0.0:
            raise ConfigurationError(f"discount rate b must be >= 0, got {self.b}")

    def beta(self, dt: float) -> float:
        """Per-step discount factor exp(-b * dt), in (0, 1]."""
        return math.exp(-self.b * dt)


# ---------------------------------------------------------------------------
# Extended positive reals
# ---------------------------------------------------------------------------
#
# The algebra adjoins symbols eps^a (a != 0) for infinitesimal (a > 0) and
# infinite (a < 0) values to the non-negative reals.  It exists to express
# and unit-test the utility-after-death convention; the production value
# recursions never run on it (the terminal step is resolved analytically).


@dataclass(frozen=True)
class Finite:
    """A non-negative real number in the extended algebra."""

    value: float

    def __post_init__(self):
        if not self.value >= 0.0:
            raise ConfigurationError(f"Finite value must be >= 0, got {self.value}")

    def __add__(self, other):
        if isinstance(other, Finite):
            return Finite(self.value + other.value)
        if isinstance(other, Eps):
            # x + eps^a = x for a > 0, else the infinite value dominates
            return self if other.exponent > 0 else other
        return NotImplemented

    __radd__ = __add__

    def __mul__(self, other):
        if isinstance(other, Finite):
            return Finite(self.value * other.value)
        if isinstance(other, Eps):
            if self.value == 0.0:
                # 0 * eps^a is left undefined by the algebra
                raise ConfigurationError("0 * eps^a is undefined")
            return other
        return NotImplemented

    __rmul__ = __mul__

    def __pow__(self, exponent: float):
        if self.value == 0.0 and exponent < 0.0:
            raise ConfigurationError("0 raised to a negative power is not a positive real")
        return Finite(self.value ** exponent)


@dataclass(frozen=True)
class Eps:
    """The symbol eps^exponent; exponent must be nonzero."""

    exponent: float

    def __post_init__(self):
        if self.exponent == 0.0:
            raise ConfigurationError("eps^0 is not an element of the algebra")

    def __add__(self, other):
        if isinstance(other, Eps):
            return Eps(min(self.exponent, other.exponent))
        if isinstance(other, Finite):
            return other + self
        return NotImplemented

    __radd__ = __add__

    def __mul__(self, other):
        if isinstance(other, Eps):
            if self.exponent + other.exponent == 0.0:
                raise ConfigurationError("eps^a * eps^-a is undefined (eps^0 is excluded)")
            return Eps(self.exponent + other.exponent)
        if isinstance(other, Finite):
            return other * self
        return NotImplemented

    __rmul__ = __mul__

    def __pow__(self, exponent: float):
        if exponent == 0.0:
            raise ConfigurationError("eps^a raised to 0 would give eps^0, which is excluded")
        return Eps(self.exponent * exponent)
