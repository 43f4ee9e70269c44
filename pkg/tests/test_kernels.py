import math
from fractions import Fraction

import numpy as np
import pytest

from pensionlab._backend import HAS_NUMBA
from pensionlab._kernels import (
    binomial_inverse_numpy,
    finite_value_step_numpy,
    lgamma_table,
)
from pensionlab._rng import inverse_normal_cdf, uniforms

if HAS_NUMBA:
    from pensionlab._kernels import binomial_inverse_numba, finite_value_step_numba


class TestUniforms:
    def test_open_interval_and_determinism(self):
        u1 = uniforms(12345, 10_000, step=3, stream=1)
        u2 = uniforms(12345, 10_000, step=3, stream=1)
        assert np.array_equal(u1, u2)
        assert np.all((u1 > 0.0) & (u1 < 1.0))

    def test_streams_and_steps_decorrelate(self):
        base = uniforms(1, 1000, step=0, stream=0)
        assert not np.array_equal(base, uniforms(1, 1000, step=0, stream=1))
        assert not np.array_equal(base, uniforms(1, 1000, step=1, stream=0))
        assert not np.array_equal(base, uniforms(2, 1000, step=0, stream=0))

    def test_value_depends_only_on_path_key(self):
        full = uniforms(99, 1000, step=5, stream=0)
        single = uniforms(99, np.array([421]), step=5, stream=0)
        assert full[421] == single[0]

    def test_roughly_uniform(self):
        u = uniforms(7, 200_000, step=0, stream=0)
        assert abs(u.mean() - 0.5) < 0.005
        assert abs(u.var() - 1.0 / 12.0) < 0.001


class TestInverseNormal:
    def test_against_scipy(self):
        ndtri = pytest.importorskip("scipy.special").ndtri
        p = np.concatenate(
            [[1e-300, 1e-20, 1e-9], np.linspace(1e-6, 1.0 - 1e-6, 2001), [1.0 - 1e-9]]
        )
        ours = inverse_normal_cdf(p)
        ref = ndtri(p)
        assert np.allclose(ours, ref, rtol=1e-12, atol=1e-13)

    def test_roundtrip_through_erfc(self):
        p = np.linspace(1e-8, 1.0 - 1e-8, 4001)
        x = inverse_normal_cdf(p)
        back = np.array([0.5 * math.erfc(-v / math.sqrt(2.0)) for v in x])
        assert np.allclose(back, p, atol=2e-15)

    def test_symmetry_and_median(self):
        assert inverse_normal_cdf(np.array([0.5]))[0] == 0.0
        p = np.array([0.01, 0.2, 0.43])
        assert np.allclose(inverse_normal_cdf(p), -inverse_normal_cdf(1.0 - p), atol=1e-13)


def _exact_binomial_pmf(n, s_frac):
    return [
        float(Fraction(math.comb(n, k)) * s_frac**k * (1 - s_frac) ** (n - k))
        for k in range(n + 1)
    ]


class TestBinomialInverse:
    def test_partition_reproduces_pmf(self):
        # feeding a fine grid of uniforms must allocate each outcome a share
        # of cells proportional to its probability
        n, s = 20, 0.3
        grid_n = 400_000
        u = (np.arange(grid_n) + 0.5) / grid_n
        k = binomial_inverse_numpy(np.full(grid_n, n, dtype=np.int64), s, u, lgamma_table(n))
        counts = np.bincount(k, minlength=n + 1) / grid_n
        pmf = _exact_binomial_pmf(n, Fraction(3, 10))
        assert np.max(np.abs(counts - pmf)) < 2.0 / grid_n * (n + 1)

    def test_degenerate_probabilities(self):
        n = np.array([4, 7, 0], dtype=np.int64)
        u = np.array([0.3, 0.9, 0.5])
        lg = lgamma_table(7)
        assert np.array_equal(binomial_inverse_numpy(n, 0.0, u, lg), [0, 0, 0])
        assert np.array_equal(binomial_inverse_numpy(n, 1.0, u, lg), [4, 7, 0])

    def test_whole_support_reachable(self):
        # the partition is ordered mode-outward, so edges are reached by the
        # uniforms falling in the last-accumulated intervals
        n = 10
        grid_n = 200_000
        u = (np.arange(grid_n) + 0.5) / grid_n
        k = binomial_inverse_numpy(np.full(grid_n, n, dtype=np.int64), 0.5, u, lgamma_table(n))
        assert set(np.unique(k)) == set(range(n + 1))

    def test_large_n_small_survival_no_underflow(self):
        # pmf(0) underflows in linear space; mode-start inversion must not care
        n = np.full(1000, 10_000, dtype=np.int64)
        u = uniforms(3, 1000, step=0, stream=0)
        k = binomial_inverse_numpy(n, 0.5, u, lgamma_table(10_000))
        assert np.all((k > 4600) & (k < 5400))
        assert abs(k.mean() - 5000.0) < 4 * 50.0 / math.sqrt(1000)

    def test_moments_on_hashed_stream(self):
        n0, s, draws = 1000, 0.97, 100_000
        u = uniforms(99, draws, step=0, stream=1)
        k = binomial_inverse_numpy(np.full(draws, n0, dtype=np.int64), s, u, lgamma_table(n0))
        mean_se = math.sqrt(n0 * s * (1 - s) / draws)
        assert abs(k.mean() - n0 * s) < 4 * mean_se
        var = n0 * s * (1 - s)
        assert abs(k.var() - var) < 5 * var * math.sqrt(2.0 / (draws - 1))

    @pytest.mark.skipif(not HAS_NUMBA, reason="numba unavailable")
    def test_backends_agree(self):
        rng = np.random.default_rng(17)
        lg = lgamma_table(500)
        for s in (0.02, 0.5, 0.93, 0.999):
            n = rng.integers(0, 500, size=5000).astype(np.int64)
            u = uniforms(5, 5000, step=2, stream=1)
            a = binomial_inverse_numpy(n, s, u, lg)
            b = binomial_inverse_numba(n, s, u, lg)
            assert np.array_equal(a, b)


class TestFiniteValueStep:
    @pytest.mark.skipif(not HAS_NUMBA, reason="numba unavailable")
    def test_backends_agree(self):
        rng = np.random.default_rng(23)
        for s in (1e-8, 0.4, 0.97, 1.0):
            for alpha, rho in ((-1.0, -1.0), (-4.0, 0.5), (0.5, -2.0)):
                n = 40
                logz = rng.normal(-1.0, 0.8, size=n)
                q = rho / (1.0 - rho)
                args = (logz, s, lgamma_table(n), alpha, -0.01, q, 1.0 / q)
                a = finite_value_step_numpy(*args)
                b = finite_value_step_numba(*args)
                assert np.allclose(a, b, rtol=1e-12, atol=1e-13)

    def test_single_member_matches_scalar_recursion(self):
        # row 1 is the individual recursion: theta = pref * s^(1/alpha) * z
        s, alpha, rho = 0.8, -1.5, -0.5
        q = rho / (1.0 - rho)
        logz = np.array([math.log(0.7)])
        out = finite_value_step_numpy(logz, s, lgamma_table(1), alpha, 0.02, q, 1.0 / q)
        theta = math.exp(0.02) * s ** (1.0 / alpha) * 0.7
        y = 1.0 + theta**q
        assert out[0] == pytest.approx((1.0 / q) * math.log(y), rel=1e-13)

    def test_lgamma_table(self):
        lg = lgamma_table(20)
        assert lg[0] == 0.0
        for k in (1, 5, 20):
            assert lg[k] == pytest.approx(math.lgamma(k + 1.0), rel=1e-15)
