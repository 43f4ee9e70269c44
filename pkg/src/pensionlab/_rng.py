"""Counter-based random streams for reproducible simulation.

Every variate is a pure function of (seed, path, step, stream), so results
are identical regardless of evaluation order, vectorisation or thread count.
The generator is a chain of splitmix64 finalisers absorbing each key in turn;
uniforms take the top 53 bits, and normals come from the rational-polynomial
inverse normal CDF (Wichura's PPND16), accurate to ~1e-15.
"""

from __future__ import annotations

import numpy as np

__all__ = ["uniforms", "inverse_normal_cdf"]

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)


def _mix(x: np.ndarray) -> np.ndarray:
    """splitmix64 finaliser (full avalanche) on uint64 values."""
    x = (x + _GOLDEN).astype(np.uint64)
    x = (x ^ (x >> _U64(30))) * _MIX1
    x = (x ^ (x >> _U64(27))) * _MIX2
    return x ^ (x >> _U64(31))


def uniforms(seed: int, paths: np.ndarray | int, step: int, stream: int) -> np.ndarray:
    """Uniform(0,1) variates keyed by (seed, path, step, stream).

    ``paths`` may be an index array or a count (meaning arange(count)).
    Values lie strictly inside (0, 1).
    """
    if np.isscalar(paths):
        paths = np.arange(int(paths), dtype=np.uint64)
    else:
        paths = np.asarray(paths, dtype=np.uint64)
    h = _mix(np.full(paths.shape, _U64(seed & 0xFFFFFFFFFFFFFFFF)))
    h = _mix(h ^ paths)
    h = _mix(h ^ _U64(step))
    h = _mix(h ^ _U64(stream))
    return (h >> _U64(11)).astype(np.float64) * 2.0**-53 + 2.0**-54


# PPND16 (applied-statistics algorithm AS 241): rational approximations on a
# central interval and two tail regimes.
_A = (
    3.3871328727963666080e0,
    1.3314166789178437745e2,
    1.9715909503065514427e3,
    1.3731693765509461125e4,
    4.5921953931549871457e4,
    6.7265770927008700853e4,
    3.3430575583588128105e4,
    2.5090809287301226727e3,
)
_B = (
    1.0,
    4.2313330701600911252e1,
    6.8718700749205790830e2,
    5.3941960214247511077e3,
    2.1213794301586595867e4,
    3.9307895800092710610e4,
    2.8729085735721942674e4,
    5.2264952788528545610e3,
)
_C = (
    1.42343711074968357734e0,
    4.63033784615654529590e0,
    5.76949722146069140550e0,
    3.64784832476320460504e0,
    1.27045825245236838258e0,
    2.41780725177450611770e-1,
    2.27238449892691845833e-2,
    7.74545014278341407640e-4,
)
_D = (
    1.0,
    2.05319162663775882187e0,
    1.67638483018380384940e0,
    6.89767334985100004550e-1,
    1.48103976427480074590e-1,
    1.51986665636164571966e-2,
    5.47593808499534494600e-4,
    1.05075007164441684324e-9,
)
_E = (
    6.65790464350110377720e0,
    5.46378491116411436990e0,
    1.78482653991729133580e0,
    2.96560571828504891230e-1,
    2.65321895265761230930e-2,
    1.24266094738807843860e-3,
    2.71155556874348757815e-5,
    2.01033439929228813265e-7,
)
_F = (
    1.0,
    5.99832206555887937690e-1,
    1.36929880922735805310e-1,
    1.48753612908506148525e-2,
    7.86869131145613259100e-4,
    1.84631831751005468180e-5,
    1.42151175831644588870e-7,
    2.04426310338993978564e-15,
)


def _poly(coeffs, x):
    acc = np.full_like(x, coeffs[-1])
    for c in coeffs[-2::-1]:
        acc = acc * x + c
    return acc


def inverse_normal_cdf(p: np.ndarray) -> np.ndarray:
    """Standard normal quantile of p in (0, 1), vectorised."""
    p = np.asarray(p, dtype=np.float64)
    q = p - 0.5
    central = np.abs(q) <= 0.425

    r_c = 0.180625 - q * q
    x_central = q * _poly(_A, r_c) / _poly(_B, r_c)

    r_t = np.sqrt(-np.log(np.minimum(p, 1.0 - p)))
    near = r_t <= 5.0
    r1 = r_t - 1.6
    r2 = r_t - 5.0
    x_tail = np.where(near, _poly(_C, r1) / _poly(_D, r1), _poly(_E, r2) / _poly(_F, r2))
    x_tail = np.where(q < 0.0, -x_tail, x_tail)

    return np.where(central, x_central, x_tail)
