"""
Standard normal quantiles.

Rational approximation of the inverse CDF (Acklam's coefficients), refined
by one Halley step against the complementary error function.
"""

import math
from typing import Union

import numpy as np
from scipy.special import erfc, ndtr

from quadtest.errors import DomainError

ArrayLike = Union[float, np.ndarray]

_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)

_P_LOW = 0.02425
_P_HIGH = 1.0 - _P_LOW


def _tail(p: np.ndarray) -> np.ndarray:
    r = np.sqrt(-2.0 * np.log(p))
    num = ((((_C[0] * r + _C[1]) * r + _C[2]) * r + _C[3]) * r + _C[4]) * r + _C[5]
    den = (((_D[0] * r + _D[1]) * r + _D[2]) * r + _D[3]) * r + 1.0
    return num / den


def _central(p: np.ndarray) -> np.ndarray:
    u = p - 0.5
    r = u * u
    num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * u
    den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    return num / den


def normal_quantile(p: ArrayLike) -> ArrayLike:
    """
    Inverse of the standard normal CDF.

    Args:
        p (ArrayLike): Probabilities in [0, 1]

    Returns:
        ArrayLike: z with Phi(z) = p; -inf at 0 and +inf at 1
    """
    arr = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any((arr < 0.0) | (arr > 1.0)):
        raise DomainError("probabilities must lie in [0, 1]")
    z = np.empty_like(arr)
    z[arr == 0.0] = -np.inf
    z[arr == 1.0] = np.inf

    interior = (arr > 0.0) & (arr < 1.0)
    low = interior & (arr < _P_LOW)
    high = interior & (arr > _P_HIGH)
    mid = interior & ~low & ~high
    z[low] = _tail(arr[low])
    z[high] = -_tail(1.0 - arr[high])
    z[mid] = _central(arr[mid])

    # Halley refinement
    zi = z[interior]
    e = 0.5 * erfc(-zi / math.sqrt(2.0)) - arr[interior]
    u = e * math.sqrt(2.0 * math.pi) * np.exp(zi * zi / 2.0)
    z[interior] = zi - u / (1.0 + zi * u / 2.0)

    if np.ndim(p) == 0:
        return float(z)
    return z


def two_sided_critical_value(gamma: float) -> float:
    """z_{1 - gamma/2}."""
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
    return float(normal_quantile(1.0 - gamma / 2.0))


def normal_cdf(z: ArrayLike) -> ArrayLike:
    return ndtr(z)
