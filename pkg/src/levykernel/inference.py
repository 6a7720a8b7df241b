"""Studentized pointwise confidence intervals for the Levy density.

The studentized statistic is ``(f_hat - gamma_hat - f) / sqrt(c * f_hat)`` with
``c = xi_g**2 / (eta1**d eta2**d denom)``, asymptotically standard normal.
Intervals come either from the Wald form or from inverting the statistic with
the unknown ``f`` in the variance, which keeps the bounds nonnegative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .estimate import PointEstimate
from .exceptions import NoDataError
from .kernels import Bandwidth, KernelSpec, roughness

__all__ = [
    "IntervalResult",
    "normal_quantile",
    "variance_scale",
    "ci_wald",
    "ci_inversion",
    "inversion_bounds",
]


@dataclass
class IntervalResult:
    center: float
    lo: float
    hi: float
    level: float
    variance_scale: float
    method: str
    empty: bool = False

    @property
    def half_width(self) -> float:
        return (self.hi - self.lo) / 2.0

    def contains(self, value: float) -> bool:
        return (not self.empty) and self.lo <= value <= self.hi


def normal_quantile(level: float) -> float:
    """Two-sided critical value ``z_{(1 + level) / 2}``."""
    if not 0.0 <= level < 1.0:
        raise ValueError("level must lie in [0, 1)")
    return float(norm.ppf((1.0 + level) / 2.0))


def variance_scale(est: PointEstimate, bandwidth, g1: KernelSpec, g2: KernelSpec, d: int = 1) -> float:
    """``c = xi_g**2 / (eta1**d eta2**d denom)``."""
    if not est.denom > 0:
        raise NoDataError("no observations near x: the occupation denominator is zero")
    bw = Bandwidth.coerce(bandwidth)
    return roughness(g1, g2) / ((bw.eta1 * bw.eta2) ** d * est.denom)


def _center(est: PointEstimate, subtract_bias: bool) -> float:
    return est.f_hat - est.gamma_hat if subtract_bias else est.f_hat


def ci_wald(est: PointEstimate, c: float, level: float = 0.95, subtract_bias: bool = True) -> IntervalResult:
    if est.f_hat < 0:
        raise ValueError("f_hat must be nonnegative")
    center = _center(est, subtract_bias)
    half = normal_quantile(level) * math.sqrt(c * est.f_hat)
    return IntervalResult(center, center - half, center + half, level, c, "wald")


def inversion_bounds(a, c, z):
    """Roots of ``(a - f)**2 = z**2 c f``; vectorized.

    Returns ``(lo, hi, empty)``; ``empty`` marks a negative discriminant, where
    ``lo = hi = 0``. Bounds are clipped to ``[0, inf)``.
    """
    a, c, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, c, z)))
    shift = z * z * c / 2.0
    disc = z * z * c * a + shift * shift
    empty = disc < 0.0
    root = np.sqrt(np.where(empty, 0.0, disc))
    mid = a + shift
    hi = mid + root
    # the smaller root via the product a**2 / hi avoids cancellation
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = np.where(hi > 0, a * a / hi, 0.0)
    lo = np.maximum(lo, 0.0)
    hi = np.maximum(hi, 0.0)
    lo = np.where(empty, 0.0, lo)
    hi = np.where(empty, 0.0, hi)
    return lo, hi, empty


def ci_inversion(est: PointEstimate, c: float, level: float = 0.95,
                 subtract_bias: bool = True) -> IntervalResult:
    """``{f >= 0 : (f_hat - gamma_hat - f)**2 <= z**2 c f}``."""
    if est.f_hat < 0:
        raise ValueError("f_hat must be nonnegative")
    a = _center(est, subtract_bias)
    lo, hi, empty = inversion_bounds(a, c, normal_quantile(level))
    return IntervalResult(a, float(lo), float(hi), level, c, "inversion", bool(empty))
