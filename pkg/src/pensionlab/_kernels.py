"""Hot numeric kernels, in numba and pure-numpy variants.

Two operations dominate runtime and live here:

* ``finite_value_step`` - one backward step of the finite-collective value
  recursion, O(n^2) in the survivor count, evaluated in log space so z^alpha
  stays representable for large |alpha|.
* ``binomial_inverse`` - exact binomial sampling from a single uniform by
  chop-down inversion starting at the mode, so the expected work per draw is
  O(sqrt(n s (1-s))) instead of O(n).

The module-level names dispatch to the backend chosen in ``_backend``; the
``*_numpy`` / ``*_numba`` variants stay importable for cross-checking and
benchmarks.  Both variants apply the same floating-point operations in the
same per-element order.
"""

from __future__ import annotations

import math

import numpy as np

from ._backend import BACKEND, HAS_NUMBA, jit

__all__ = [
    "lgamma_table",
    "log_survivor_mixture_numpy",
    "finite_value_step",
    "finite_value_step_numpy",
    "binomial_inverse",
    "binomial_inverse_numpy",
]


def lgamma_table(nmax: int) -> np.ndarray:
    """lgam[k] = log(k!) for k = 0..nmax."""
    return np.array([math.lgamma(k + 1.0) for k in range(nmax + 1)])


# ---------------------------------------------------------------------------
# finite-collective value step
# ---------------------------------------------------------------------------
#
# For each current survivor count m = 1..n, with z' the next-step values:
#
#   lam_m    = sum_{i=1..m} (i/m)^(1-alpha) C(m,i) s^i (1-s)^(m-i) z'_i^alpha
#   theta_m  = exp(log_pref) * lam_m^(1/alpha),  log_pref = log(beta)/rho + xi dt
#   y_m      = 1 + theta_m^(rho/(1-rho))
#   z_m      = y_m^((1-rho)/rho)
#
# computed throughout as log z.  s == 1 collapses the sum to the i = m term.


def log_survivor_mixture_numpy(logw, s, lgam, alpha):
    """log lam_m for m = 1..n, where

        lam_m = sum_{i=1..m} (i/m)^(1-alpha) C(m,i) s^i (1-s)^(m-i) exp(alpha logw_i)

    via a row-wise log-sum-exp over the masked (m, i) triangle.
    """
    n = logw.shape[0]
    idx = np.arange(1, n + 1)
    if s >= 1.0:
        return alpha * logw
    ls = math.log(s)
    l1s = math.log1p(-s)
    logi = np.log(idx.astype(np.float64))
    m_col = idx[:, None]
    i_row = idx[None, :]
    mask = i_row <= m_col
    d = np.where(mask, m_col - i_row, 0)
    t = (
        lgam[m_col]
        - lgam[i_row]
        - lgam[d]
        + i_row * ls
        + d * l1s
        + (1.0 - alpha) * (logi[None, :] - logi[:, None])
        + alpha * logw[None, :]
    )
    t = np.where(mask, t, -np.inf)
    mx = t.max(axis=1)
    # rows whose max is +-inf are exact limits (lam = inf or 0); bypass the
    # log-sum-exp there to avoid inf - inf
    finite = np.isfinite(mx)
    with np.errstate(over="ignore"):
        adj = np.exp(t - np.where(finite, mx, 0.0)[:, None]).sum(axis=1)
    return np.where(finite, mx + np.log(adj), mx)


def finite_value_step_numpy(logz_next, s, lgam, alpha, log_pref, q, zexp):
    loglam = log_survivor_mixture_numpy(logz_next, s, lgam, alpha)
    logtheta = log_pref + loglam / alpha
    # overflow to inf is how divergence is detected, not a fault
    with np.errstate(over="ignore"):
        y = 1.0 + np.exp(q * logtheta)
    return zexp * np.log(y)


if HAS_NUMBA:

    @jit
    def _finite_step_nb(logz_next, s, lgam, alpha, log_pref, q, zexp):  # pragma: no cover
        n = logz_next.shape[0]
        out = np.empty(n)
        terms = np.empty(n)
        if s >= 1.0:
            for m in range(1, n + 1):
                loglam = alpha * logz_next[m - 1]
                logtheta = log_pref + loglam / alpha
                y = 1.0 + math.exp(q * logtheta)
                out[m - 1] = zexp * math.log(y)
            return out
        ls = math.log(s)
        l1s = math.log1p(-s)
        for m in range(1, n + 1):
            logm = math.log(float(m))
            mx = -np.inf
            for i in range(1, m + 1):
                t = (
                    lgam[m]
                    - lgam[i]
                    - lgam[m - i]
                    + i * ls
                    + (m - i) * l1s
                    + (1.0 - alpha) * (math.log(float(i)) - logm)
                    + alpha * logz_next[i - 1]
                )
                terms[i - 1] = t
                if t > mx:
                    mx = t
            acc = 0.0
            for i in range(m):
                acc += math.exp(terms[i] - mx)
            loglam = mx + math.log(acc)
            logtheta = log_pref + loglam / alpha
            y = 1.0 + math.exp(q * logtheta)
            out[m - 1] = zexp * math.log(y)
        return out

    finite_value_step_numba = _finite_step_nb
else:  # pragma: no cover
    finite_value_step_numba = None


# ---------------------------------------------------------------------------
# binomial sampling by chop-down inversion from the mode
# ---------------------------------------------------------------------------
#
# The unit interval is partitioned into pieces of length pmf(k) in the fixed
# order mode, mode+1, mode-1, mode+2, mode-2, ...; the draw is the k whose
# piece contains u.  This is an exact sampler for any u ~ Uniform(0,1); the
# (~1e-15) residual rounding mass at the end of the interval maps to the mode.


def binomial_inverse_numpy(n, s, u, lgam):
    n = np.asarray(n, dtype=np.int64)
    u = np.asarray(u, dtype=np.float64)
    if s <= 0.0:
        return np.zeros_like(n)
    if s >= 1.0:
        return n.copy()
    ls = math.log(s)
    l1s = math.log1p(-s)
    m = np.minimum(np.floor((n + 1) * s).astype(np.int64), n)
    pm = np.exp(lgam[n] - lgam[m] - lgam[n - m] + m * ls + (n - m) * l1s)
    acc = pm.copy()
    res = np.where(u < acc, m, np.int64(-1))
    pr = pm.copy()
    pl = pm.copy()
    for j in range(1, int(n.max()) + 2):
        ir = m + j
        pr = np.where(ir <= n, pr * (((n - ir + 1) * s) / (ir * (1.0 - s))), 0.0)
        acc = acc + pr
        res = np.where((res < 0) & (u < acc), ir, res)
        il = m - j
        pl = np.where(il >= 0, pl * (((il + 1) * (1.0 - s)) / ((n - il) * s)), 0.0)
        acc = acc + pl
        res = np.where((res < 0) & (u < acc), il, res)
        if np.all(res >= 0):
            break
    return np.where(res < 0, m, res)


if HAS_NUMBA:

    @jit
    def _binom_inv_nb(n, s, u, lgam):  # pragma: no cover
        out = np.empty(n.shape[0], dtype=np.int64)
        if s <= 0.0:
            for k in range(n.shape[0]):
                out[k] = 0
            return out
        if s >= 1.0:
            for k in range(n.shape[0]):
                out[k] = n[k]
            return out
        ls = math.log(s)
        l1s = math.log1p(-s)
        for k in range(n.shape[0]):
            nk = n[k]
            uk = u[k]
            m = int(math.floor((nk + 1) * s))
            if m > nk:
                m = nk
            pm = math.exp(lgam[nk] - lgam[m] - lgam[nk - m] + m * ls + (nk - m) * l1s)
            acc = pm
            if uk < acc:
                out[k] = m
                continue
            pr = pm
            pl = pm
            found = -1
            for j in range(1, nk + 2):
                moved = False
                ir = m + j
                if ir <= nk:
                    pr = pr * (((nk - ir + 1) * s) / (ir * (1.0 - s)))
                    acc += pr
                    moved = True
                    if uk < acc:
                        found = ir
                        break
                il = m - j
                if il >= 0:
                    pl = pl * (((il + 1) * (1.0 - s)) / ((nk - il) * s))
                    acc += pl
                    moved = True
                    if uk < acc:
                        found = il
                        break
                if not moved:
                    break
            out[k] = m if found < 0 else found
        return out

    binomial_inverse_numba = _binom_inv_nb
else:  # pragma: no cover
    binomial_inverse_numba = None


if BACKEND == "numba":
    finite_value_step = finite_value_step_numba
    binomial_inverse = binomial_inverse_numba
else:
    finite_value_step = finite_value_step_numpy
    binomial_inverse = binomial_inverse_numpy
