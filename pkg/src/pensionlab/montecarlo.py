"""Path simulation of the collectivised fund under a given policy.

Within a period the constant-mix fund value is geometric Brownian motion, so
each period is sampled exactly: multiply by exp((abar - a^2 sigma^2/2) dt +
a sigma sqrt(dt) Z) with abar = a(mu-r) + r; there is no discretisation
error.  Survivor counts follow binomial draws (deterministic fraction decay
for the infinite fund), and the dead's wealth is redistributed through the
budget identity

    Xbar_t = (n_t / n_{t+dt}) (X_t - gamma_t)        finite fund,
    Xbar_t = (X_t - gamma_t) / s_t                   infinite fund.

All randomness is drawn from counter-based streams keyed by
(seed, path, step): stream 0 drives market growth, stream 1 the survivor
transition.  Results are therefore bitwise reproducible for a given seed,
independent of evaluation order or thread count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import math
import numpy as np

from .core import ConfigurationError, MarketParams, TimeGrid
from .mortality import MortalityTable
from .solver import CollectiveMode, Strategy, ValueTable
from ._kernels import binomial_inverse, lgamma_table
from ._rng import inverse_normal_cdf, uniforms

__all__ = [
    "SimulationConfig",
    "SimulationResult",
    "SummaryStats",
    "PercentileTable",
    "simulate",
    "summarize",
]

_RECORD_CHOICES = ("survivors", "wealth", "consumption")
_STREAM_GROWTH = 0
_STREAM_SURVIVAL = 1


@dataclass(frozen=True)
class SimulationConfig:
    paths: int
    seed: int
    mode: CollectiveMode
    policy: Union[ValueTable, Strategy]
    x0: float = 1.0
    record: Sequence[str] = _RECORD_CHOICES

    def __post_init__(self):
        if self.paths < 1:
            raise ConfigurationError(f"paths must be >= 1, got {self.paths}")
        if not self.x0 > 0.0:
            raise ConfigurationError(f"x0 must be positive, got {self.x0}")
        unknown = set(self.record) - set(_RECORD_CHOICES)
        if unknown:
            raise ConfigurationError(f"unknown record series {sorted(unknown)}")


@dataclass(frozen=True)
class SummaryStats:
    """Per-grid-point moments over paths still alive (n_t > 0)."""

    mean_log_x: np.ndarray
    var_log_x: np.ndarray
    mean_log_gamma: np.ndarray
    var_log_gamma: np.ndarray
    mean_survivors: np.ndarray
    alive_paths: np.ndarray


@dataclass(frozen=True)
class SimulationResult:
    grid: TimeGrid
    mode: CollectiveMode
    x0: float
    summary: SummaryStats
    survivors: Optional[np.ndarray] = None
    wealth: Optional[np.ndarray] = None
    consumption: Optional[np.ndarray] = None


def _policy_arrays(config: SimulationConfig, grid: TimeGrid):
    """(a per step, c lookup) from a ValueTable or explicit Strategy."""
    n_steps = grid.n_steps
    pol = config.policy
    if isinstance(pol, ValueTable):
        if pol.mode != config.mode:
            raise ConfigurationError(
                f"value table solved for mode {pol.mode}, simulation asked for {config.mode}"
            )
        if pol.grid != grid:
            raise ConfigurationError("value table was solved on a different grid")
        a = np.full(n_steps, pol.astar)
        c = np.array(pol.cstar, copy=True)
    else:
        a = np.asarray(pol.a, dtype=np.float64)
        c = np.asarray(pol.c, dtype=np.float64)
    if a.shape != (n_steps,):
        raise ConfigurationError(f"policy a must have shape ({n_steps},), got {a.shape}")
    expected = (config.mode.n, n_steps) if config.mode.is_finite else (n_steps,)
    if c.shape != expected:
        raise ConfigurationError(f"policy c must have shape {expected}, got {c.shape}")
    if np.any((c < 0.0) | (c > 1.0)):
        raise ConfigurationError("consumption rates must lie in [0, 1]")
    return a, c


def _masked_moments(values: np.ndarray, alive: np.ndarray):
    """Mean and ddof=1 variance of log(values) over the alive mask."""
    count = int(alive.sum())
    if count == 0:
        return math.nan, math.nan
    with np.errstate(divide="ignore"):
        logs = np.log(values[alive])
    mean = float(logs.mean())
    var = float(logs.var(ddof=1)) if count > 1 else 0.0
    return mean, var


def simulate(
    config: SimulationConfig,
    grid: TimeGrid,
    market: MarketParams,
    mortality: MortalityTable,
) -> SimulationResult:
    """Simulate fund-per-survivor wealth and consumption along the grid."""
    if mortality.grid != grid:
        raise ConfigurationError("mortality table was built on a different grid")
    a_arr, c_arr = _policy_arrays(config, grid)
    n_steps = grid.n_steps
    paths = config.paths
    dt = grid.dt
    seed = config.seed
    infinite = config.mode.kind == "infinite"
    # the individual problem is a one-member fund
    n0 = 1 if config.mode.kind == "individual" else (config.mode.n if config.mode.is_finite else 0)

    rec_surv = "survivors" in config.record
    rec_wealth = "wealth" in config.record
    rec_cons = "consumption" in config.record
    surv_out = np.empty((paths, n_steps)) if rec_surv else None
    wealth_out = np.empty((paths, n_steps)) if rec_wealth else None
    cons_out = np.empty((paths, n_steps)) if rec_cons else None

    mean_lx = np.empty(n_steps)
    var_lx = np.empty(n_steps)
    mean_lg = np.empty(n_steps)
    var_lg = np.empty(n_steps)
    mean_n = np.empty(n_steps)
    alive_ct = np.empty(n_steps, dtype=np.int64)

    growth_base = (a_arr * (market.mu - market.r) + market.r - 0.5 * a_arr**2 * market.sigma**2) * dt
    growth_vol = a_arr * market.sigma * math.sqrt(dt)

    x = np.full(paths, config.x0)

    if infinite:
        frac = 1.0
        for k in range(n_steps):
            gamma = c_arr[k] * x
            if rec_surv:
                surv_out[:, k] = frac
            if rec_wealth:
                wealth_out[:, k] = x
            if rec_cons:
                cons_out[:, k] = gamma
            alive = np.ones(paths, dtype=bool)
            mean_lx[k], var_lx[k] = _masked_moments(x, alive)
            mean_lg[k], var_lg[k] = _masked_moments(gamma, alive)
            mean_n[k] = frac
            alive_ct[k] = paths
            if k < n_steps - 1:
                s_k = float(mortality.s[k])
                xbar = (x - gamma) / s_k
                z = inverse_normal_cdf(uniforms(seed, paths, k, _STREAM_GROWTH))
                x = xbar * np.exp(growth_base[k] + growth_vol[k] * z)
                frac *= s_k
    else:
        lgam = lgamma_table(n0)
        n_cur = np.full(paths, n0, dtype=np.int64)
        c_lookup = c_arr if config.mode.is_finite else c_arr[None, :]
        for k in range(n_steps):
            alive = n_cur > 0
            rate = np.where(alive, c_lookup[np.maximum(n_cur, 1) - 1, k], 0.0)
            gamma = rate * x
            if rec_surv:
                surv_out[:, k] = n_cur
            if rec_wealth:
                wealth_out[:, k] = x
            if rec_cons:
                cons_out[:, k] = gamma
            mean_lx[k], var_lx[k] = _masked_moments(x, alive)
            mean_lg[k], var_lg[k] = _masked_moments(gamma, alive)
            mean_n[k] = float(n_cur.mean())
            alive_ct[k] = int(alive.sum())
            if k < n_steps - 1:
                s_k = float(mortality.s[k])
                u = uniforms(seed, paths, k, _STREAM_SURVIVAL)
                n_next = binomial_inverse(n_cur, s_k, u, lgam)
                surviving = n_next > 0
                xbar = np.where(
                    surviving, (n_cur / np.maximum(n_next, 1)) * (x - gamma), 0.0
                )
                z = inverse_normal_cdf(uniforms(seed, paths, k, _STREAM_GROWTH))
                x = xbar * np.exp(growth_base[k] + growth_vol[k] * z)
                n_cur = n_next

    summary = SummaryStats(
        mean_log_x=mean_lx,
        var_log_x=var_lx,
        mean_log_gamma=mean_lg,
        var_log_gamma=var_lg,
        mean_survivors=mean_n,
        alive_paths=alive_ct,
    )
    return SimulationResult(
        grid=grid,
        mode=config.mode,
        x0=config.x0,
        summary=summary,
        survivors=surv_out,
        wealth=wealth_out,
        consumption=cons_out,
    )


@dataclass(frozen=True)
class PercentileTable:
    """Empirical quantiles per grid point, over alive paths.

    Quantiles use numpy's linear interpolation convention, so the 0.5
    quantile of a two-value sample is their midpoint.
    """

    probs: np.ndarray
    x: np.ndarray
    gamma: np.ndarray


def summarize(result: SimulationResult, probs: Sequence[float]) -> PercentileTable:
    """Empirical quantiles of wealth and consumption at every grid point."""
    probs = np.asarray(list(probs), dtype=np.float64)
    if probs.size == 0:
        raise ConfigurationError("need at least one probability")
    if np.any((probs <= 0.0) | (probs >= 1.0)):
        raise ConfigurationError("probabilities must lie strictly inside (0, 1)")
    if result.wealth is None or result.consumption is None:
        raise ConfigurationError("summarize needs wealth and consumption recorded")
    n_steps = result.grid.n_steps
    xq = np.full((probs.size, n_steps), np.nan)
    gq = np.full((probs.size, n_steps), np.nan)
    if result.survivors is not None:
        alive = result.survivors > 0
    else:
        alive = np.ones_like(result.wealth, dtype=bool)
    for k in range(n_steps):
        mask = alive[:, k]
        if mask.any():
            xq[:, k] = np.quantile(result.wealth[mask, k], probs, method="linear")
            gq[:, k] = np.quantile(result.consumption[mask, k], probs, method="linear")
    return PercentileTable(probs=probs, x=xq, gamma=gq)
