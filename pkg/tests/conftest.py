import numpy as np
import pytest

from pensionlab import (
    CollectiveMode,
    DEFAULT_GRID,
    GOMPERTZ_DEFAULT,
    MarketParams,
    MortalityTable,
    Preferences,
    gompertz_makeham,
    make_time_grid,
    solve,
)
from pensionlab._kernels import binomial_inverse, lgamma_table


@pytest.fixture(scope="session")
def base_market():
    return MarketParams(mu=0.062, r=0.027, sigma=0.15)


@pytest.fixture(scope="session")
def vnm_prefs():
    return Preferences(alpha=-1.0, rho=-1.0, b=0.0)


@pytest.fixture(scope="session")
def default_table():
    """The shipped synthetic table on its 65..95 annual grid."""
    grid = make_time_grid(*DEFAULT_GRID)
    table = gompertz_makeham(
        GOMPERTZ_DEFAULT["a"], GOMPERTZ_DEFAULT["b"], GOMPERTZ_DEFAULT["c"], grid
    )
    return grid, table

@pytest.fixture(scope="session")
def mild_table():
    """A wide, realistic-spread table (annual, ages 65..120)."""
    grid = make_time_grid(65.0, 1.0, 121.0)
    table = gompertz_makeham(1e-4, 3e-5, 0.09, grid)
    return grid, table


def random_mortality(rng: np.random.Generator, grid) -> MortalityTable:
    """Random pmf on the grid with positive mass at the final point."""
    p = rng.dirichlet(np.ones(grid.n_steps) * 2.0)
    p[-1] = max(p[-1], 0.05)
    p /= p.sum()
    return MortalityTable.from_pmf(grid, p)


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger jit compilation before any timed test runs."""
    grid = make_time_grid(0.0, 1.0, 3.0)
    mt = MortalityTable.from_pmf(grid, [0.2, 0.3, 0.5])
    solve(
        CollectiveMode.finite(2),
        grid,
        MarketParams(mu=0.03, r=0.01, sigma=0.2),
        Preferences(alpha=-1.0, rho=-1.0),
        mt,
    )
    binomial_inverse(
        np.array([5, 9], dtype=np.int64), 0.7, np.array([0.3, 0.8]), lgamma_table(9)
    )
