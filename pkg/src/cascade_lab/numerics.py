"""Standard normal special functions and compensated summation.

Scalar entry points (``norm_cdf``, ``log_norm_cdf``, ``inv_norm_cdf``) validate
their input and raise :class:`DomainError`.  The ``*_array`` variants skip
validation and are used on the hot paths of the enumeration and Monte Carlo
engines.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erfc, erfcx

__all__ = [
    "DomainError",
    "norm_cdf",
    "log_norm_cdf",
    "inv_norm_cdf",
    "norm_cdf_array",
    "log_norm_cdf_array",
    "inv_norm_cdf_array",
    "compensated_sum",
]

SQRT1_2 = 1.0 / math.sqrt(2.0)
LOG_HALF = math.log(0.5)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


def _check_finite(z: float) -> float:
    z = float(z)
    if not math.isfinite(z):
        raise DomainError(f"argument must be finite, got {z!r}")
    return z


# ---------------------------------------------------------------------------
# Phi(z)
# ---------------------------------------------------------------------------


def norm_cdf_array(z):
    z = np.asarray(z, dtype=np.float64)
    # erfc keeps full relative precision in the lower tail
    return 0.5 * erfc(-z * SQRT1_2)


def norm_cdf(z: float) -> float:
    """Standard normal CDF."""
    z = _check_finite(z)
    if z < 0:
        return 0.5 * math.erfc(-z * SQRT1_2)
    return 1.0 - 0.5 * math.erfc(z * SQRT1_2)


# ---------------------------------------------------------------------------
# log Phi(z)
# ---------------------------------------------------------------------------


def log_norm_cdf_array(z):
    """Vectorised ``log(Phi(z))`` that never underflows for finite ``z``.

    For ``z >= 0`` the complement is small and ``log1p`` keeps it exact.  For
    ``z < 0`` the scaled complementary error function pulls the Gaussian factor
    out analytically: ``Phi(z) = erfcx(-z/sqrt2) * exp(-z**2/2) / 2``.
    """
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    zp = z[pos]
    out[pos] = np.log1p(-0.5 * erfc(zp * SQRT1_2))
    neg = ~pos
    zn = z[neg]
    out[neg] = np.log(erfcx(-zn * SQRT1_2)) + LOG_HALF - 0.5 * zn * zn
    return out


def log_norm_cdf(z: float) -> float:
    """Natural log of the standard normal CDF."""
    z = _check_finite(z)
    if z >= 0:
        return math.log1p(-0.5 * float(erfc(z * SQRT1_2)))
    return math.log(float(erfcx(-z * SQRT1_2))) + LOG_HALF - 0.5 * z * z


# ---------------------------------------------------------------------------
# Phi^{-1}(p): Wichura's AS241 (PPND16) plus one Newton step
# ---------------------------------------------------------------------------

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


def _poly(coef, x):
    acc = coef[-1]
    for c in coef[-2::-1]:
        acc = acc * x + c
    return acc


def inv_norm_cdf_array(p):
    """Vectorised inverse normal CDF for ``p`` strictly inside (0, 1)."""
    p = np.asarray(p, dtype=np.float64)
    q = p - 0.5
    tail = np.minimum(p, 1.0 - p)
    z = np.empty_like(p)

    central = np.abs(q) <= 0.425
    qc = q[central]
    r = 0.180625 - qc * qc
    z[central] = qc * _poly(_A, r) / _poly(_B, r)

    outer = ~central
    r = np.sqrt(-np.log(tail[outer]))
    near = r <= 5.0
    zo = np.where(
        near,
        _poly(_C, r - 1.6) / _poly(_D, r - 1.6),
        _poly(_E, r - 5.0) / _poly(_F, r - 5.0),
    )
    z[outer] = np.where(q[outer] < 0, -zo, zo)

    # Newton polish, residual evaluated on the side with the small tail
    lower = z < 0
    resid = np.where(
        lower,
        norm_cdf_array(z) - p,
        (1.0 - p) - norm_cdf_array(-z),
    )
    resid = np.where(lower, resid, -resid)
    dens = INV_SQRT_2PI * np.exp(-0.5 * z * z)
    return z - resid / dens


def inv_norm_cdf(p: float) -> float:
    """Inverse of :func:`norm_cdf` on the open interval (0, 1)."""
    p = float(p)
    if not (0.0 < p < 1.0):
        raise DomainError(f"probability must lie strictly in (0, 1), got {p!r}")
    return float(inv_norm_cdf_array(np.array([p]))[0])


# ---------------------------------------------------------------------------
# Summation
# ---------------------------------------------------------------------------


def compensated_sum(values) -> float:
    """Sum an array with pairwise error-free transformations.

    Each pairwise pass is an exact TwoSum; the rounding errors of every pass are
    collected and added back at the end, giving a result as accurate as
    summing in doubled working precision.
    """
    x = np.asarray(values, dtype=np.float64).ravel()
    if x.size == 0:
        return 0.0
    errors = []
    while x.size > 1:
        if x.size % 2:
            x = np.append(x, 0.0)
        a = x[0::2]
        b = x[1::2]
        s = a + b
        bv = s - a
        errors.append(float(np.sum((a - (s - bv)) + (b - bv))))
        x = s
    return math.fsum([float(x[0]), *errors])
