"""Closed-form distributions of wealth and consumption along the optimal
strategy, the direction of consumption over time, and the elasticity of
intertemporal substitution.

For the individual and infinite-collective modes, log fund-per-survivor
wealth at each date is normal: the standard deviation is sigma a* sqrt(t-t0)
and the mean obeys

    mu_{t+dt} = mu_t + log(s_t^-C) + log(1 - c*_t) + xi_drift dt,

where xi_drift is the growth quadratic at a* with alpha set to zero (the drift
of log wealth rather than its power-mean growth).  Log consumption is log
wealth shifted by log c*_t with identical spread.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import ConfigurationError, MarketParams, Preferences, TimeGrid
from .mortality import MortalityTable
from .solver import ValueTable, continuation_factor, drift_growth_exponent

__all__ = [
    "LognormalSchedule",
    "Direction",
    "wealth_schedule",
    "consumption_drift",
    "consumption_direction",
    "eis",
]


@dataclass(frozen=True)
class LognormalSchedule:
    """Per-grid-point parameters of log wealth X and log consumption gamma."""

    grid: TimeGrid
    mu_x: np.ndarray
    sigma_x: np.ndarray
    mu_gamma: np.ndarray
    sigma_gamma: np.ndarray


def wealth_schedule(table: ValueTable, mortality: MortalityTable, x0: float) -> LognormalSchedule:
    """Lognormal parameters of per-survivor wealth and consumption over time.

    Only individual and infinite modes: with a random survivor count the
    per-survivor wealth of a finite fund is not lognormal (use Monte Carlo).
    """
    if table.mode.is_finite:
        raise ConfigurationError(
            "wealth_schedule supports individual and infinite modes only; "
            "finite collectives need simulation"
        )
    if mortality.grid != table.grid:
        raise ConfigurationError("mortality table was built on a different grid")
    if not x0 > 0.0:
        raise ConfigurationError(f"initial wealth must be positive, got {x0}")

    grid = table.grid
    n = grid.n_steps
    pool = table.mode.pooling
    prefs = table.prefs
    q = prefs.rho / (1.0 - prefs.rho)
    xi_drift = drift_growth_exponent(table.market, prefs.alpha)

    mu_x = np.empty(n)
    mu_x[0] = math.log(x0)
    var_x = np.empty(n)
    var_x[0] = 0.0
    step_var = (table.astar * table.market.sigma) ** 2 * grid.dt
    for k in range(n - 1):
        # log(1 - c*_k) = log((y_k - 1)/y_k) with y_k - 1 = phi_k^q y_{k+1},
        # which stays accurate when c* is within rounding of 1
        phi = continuation_factor(prefs, table.market, float(mortality.s[k]), pool, grid.dt)
        log_remaining = q * math.log(phi) + math.log(table.y[k + 1]) - math.log(table.y[k])
        mu_x[k + 1] = (
            mu_x[k]
            - pool * math.log(mortality.s[k])
            + log_remaining
            + xi_drift * grid.dt
        )
        var_x[k + 1] = var_x[k] + step_var
    sigma_x = np.sqrt(var_x)

    rho = table.prefs.rho
    mu_gamma = mu_x + (rho / (rho - 1.0)) * np.log(table.z)
    sigma_gamma = sigma_x.copy()
    for arr in (mu_x, sigma_x, mu_gamma, sigma_gamma):
        arr.flags.writeable = False
    return LognormalSchedule(
        grid=grid, mu_x=mu_x, sigma_x=sigma_x, mu_gamma=mu_gamma, sigma_gamma=sigma_gamma
    )


def consumption_drift(
    prefs: Preferences,
    market: MarketParams,
    s: float,
    collective: int,
    dt: float = 1.0,
) -> float:
    """Expected one-step change of log consumption per survivor:

        E(log gamma_{t+dt} | gamma_t) - log gamma_t
            = log(s^-C) + rho/(1-rho) log(phi) + xi_drift dt.
    """
    phi = continuation_factor(prefs, market, s, collective, dt)
    rho = prefs.rho
    return (
        -collective * math.log(s)
        + (rho / (1.0 - rho)) * math.log(phi)
        + drift_growth_exponent(market, prefs.alpha) * dt
    )


class Direction(enum.Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"
    CONSTANT = "constant"


def consumption_direction(prefs: Preferences, collective: int) -> Direction:
    """How optimal consumption moves over time when mu = r = 0 and beta = 1.

    Consumption then follows gamma_{t+dt} = s^e gamma_t with
    e = (1/alpha - C/rho) rho/(1-rho); for survival probabilities strictly
    inside (0, 1) the sign of e classifies the direction (s^e < 1 iff e > 0).
    """
    e = (1.0 / prefs.alpha - collective / prefs.rho) * prefs.rho / (1.0 - prefs.rho)
    if e > 0.0:
        return Direction.DECREASING
    if e < 0.0:
        return Direction.INCREASING
    return Direction.CONSTANT


def eis(prefs: Preferences, market: MarketParams) -> float:
    """Elasticity of intertemporal substitution of the optimal strategy:

        1/(1-rho) * (1 - (mu - r)(1 + alpha (rho - 2)) / ((alpha - 1)^2 sigma^2))

    Independent of time, mortality and the discount rate.
    """
    alpha, rho = prefs.alpha, prefs.rho
    frac = (market.mu - market.r) * (1.0 + alpha * (rho - 2.0)) / (
        (alpha - 1.0) ** 2 * market.sigma**2
    )
    return (1.0 - frac) / (1.0 - rho)
