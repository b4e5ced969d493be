"""
Standard normal CDF and quantile.

The quantile is Acklam's rational approximation (relative error below
1.15e-9) followed by one Halley step on the erfc-based CDF, which brings
|Phi(x) - p| down to rounding level. It is evaluated elementwise, so the
sampler built on it produces the same numbers whatever the batch shape.
"""
import numpy as np
from scipy import special

from .exceptions import DomainError

_A = (-3.969683028665376e+01, 2.209460984245205e+02,
      -2.759285104469687e+02, 1.383577518672690e+02,
      -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02,
      -1.556989798598866e+02, 6.680131188771972e+01,
      -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01,
      -2.400758277161838e+00, -2.549732539343734e+00,
      4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01,
      2.445134137142996e+00, 3.754408661907416e+00)

_P_LOW = 0.02425


def normal_cdf(x):
    return special.ndtr(x)


def _tail(q):
    c, d = _C, _D
    num = ((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]
    den = (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
    return num / den


def _central(p):
    a, b = _A, _B
    q = p - 0.5
    r = q * q
    num = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r
           + a[5]) * q
    den = ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0
    return num / den


def inverse_normal_cdf(p):
    """
    Return x with Phi(x) = p for p in (0, 1); accepts scalars or arrays.
    """
    scalar = np.ndim(p) == 0
    p = np.asarray(p, dtype=np.float64)
    if not np.all((p > 0.0) & (p < 1.0)):
        raise DomainError("normal quantile is defined for 0 < p < 1 only")
    # the upper half is the mirror of the lower one; 1 - p is exact there
    upper = p > 0.5
    q = np.where(upper, 1.0 - p, p)
    with np.errstate(divide='ignore', invalid='ignore'):
        tail = _tail(np.sqrt(-2.0 * np.log(np.where(q < _P_LOW, q, 0.5))))
        x = np.where(q < _P_LOW, tail, _central(q))
        # Halley refinement
        e = 0.5 * special.erfc(-x / np.sqrt(2.0)) - q
        u = e * np.sqrt(2.0 * np.pi) * np.exp(0.5 * x * x)
        x = x - u / (1.0 + 0.5 * x * u)
    x = np.where(upper, -x, x)
    if scalar:
        return float(x)
    return x


def upper_quantile(epsilon):
    """
    z_epsilon, the upper epsilon-quantile: P(Z > z_epsilon) = epsilon.
    """
    if np.ndim(epsilon) == 0 and 0.0 < epsilon <= 0.5:
        return 0.0 - inverse_normal_cdf(epsilon)
    return inverse_normal_cdf(1.0 - epsilon)
