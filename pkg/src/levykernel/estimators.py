"""scikit-learn style estimators wrapping the kernel ratio.

Evaluation points are rows ``(x_1..x_d, y_1..y_d)``; ``predict`` returns the
density estimate, ``bias`` the plug-in bias correction and
``confidence_interval`` the studentized pointwise intervals.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .estimate import (
    median_sigma,
    continuous_sample,
    discrete_sample,
)
from .exceptions import DomainError
from .inference import inversion_bounds, normal_quantile
from .kernels import Bandwidth, get_kernel, roughness
from .simulate import JumpLog, SamplePath

__all__ = ["EstimateTable", "LevyKernelDensity", "ContinuousLevyKernelDensity"]


@dataclass
class EstimateTable:
    """Column-oriented estimation results."""

    x: np.ndarray
    y: np.ndarray
    f_hat: np.ndarray
    gamma_hat: np.ndarray
    denom: np.ndarray
    reliable: np.ndarray
    ci_lo: Optional[np.ndarray] = None
    ci_hi: Optional[np.ndarray] = None
    method: str = ""
    level: float = float("nan")
    subtract_bias: bool = True

    def __len__(self):
        return len(self.f_hat)

    @property
    def corrected(self) -> np.ndarray:
        return self.f_hat - self.gamma_hat

    def columns(self):
        d = self.x.shape[1]
        xs = ["x"] if d == 1 else [f"x{i + 1}" for i in range(d)]
        ys = ["y"] if d == 1 else [f"y{i + 1}" for i in range(d)]
        return xs + ys + ["f_hat", "gamma_hat", "denom", "reliable", "ci_lo", "ci_hi", "method"]

    def rows(self):
        lo = self.ci_lo if self.ci_lo is not None else np.full(len(self), np.nan)
        hi = self.ci_hi if self.ci_hi is not None else np.full(len(self), np.nan)
        for i in range(len(self)):
            yield (*self.x[i], *self.y[i], self.f_hat[i], self.gamma_hat[i], self.denom[i],
                   int(self.reliable[i]), lo[i], hi[i], self.method)


def _split_points(points, d):
    pts = check_array(points, ensure_2d=True, dtype=float)
    if pts.shape[1] != 2 * d:
        raise ValueError(f"points need {2 * d} columns (x then y), got {pts.shape[1]}")
    xs, ys = pts[:, :d], pts[:, d:]
    if np.any(np.all(ys == 0.0, axis=1)):
        raise DomainError("cannot estimate the Levy density at y = 0")
    return xs, ys


class _KernelRatioEstimator(BaseEstimator):

    def _kernels(self, d):
        g1 = get_kernel(self.kernel, d)
        g2 = get_kernel(self.jump_kernel if self.jump_kernel is not None else self.kernel, d)
        return g1, g2

    def _by_x(self, points, fn):
        check_is_fitted(self, "ratio_")
        xs, ys = _split_points(points, self.n_dims_)
        out = np.zeros(len(xs))
        ux, inverse = np.unique(xs, axis=0, return_inverse=True)
        inverse = np.ravel(inverse)
        for i, x in enumerate(ux):
            sel = inverse == i
            out[sel] = fn(x, ys[sel])
        return out

    def predict(self, points) -> np.ndarray:
        """Density estimate ``f_hat`` at each row of ``points``."""
        bw = Bandwidth.coerce(self.bandwidth)
        self._check_points(points)
        return self._by_x(points, lambda x, ys: self.ratio_.estimate(self.g1_, self.g2_, bw, x, ys)[0])

    def bias(self, points) -> np.ndarray:
        """Plug-in bias correction ``gamma_hat`` at each row of ``points``."""
        bw = Bandwidth.coerce(self.bandwidth)
        self._check_points(points)
        return self._by_x(points, lambda x, ys: self.ratio_.bias_correction(
            self.g1_, self.g2_, bw, x, ys, self.alpha1, self.alpha2, self.curvature_kernel))

    def derivative(self, points, m1=None, m2=None) -> np.ndarray:
        """Exact partial derivative ``d^m1/dx^m1 d^m2/dy^m2`` of ``f_hat``."""
        bw = Bandwidth.coerce(self.bandwidth)
        return self._by_x(points, lambda x, ys: self.ratio_.derivative(
            self.g1_, self.g2_, bw, x, ys, m1, m2))

    def occupation(self, points) -> np.ndarray:
        bw = Bandwidth.coerce(self.bandwidth)
        return self._by_x(points, lambda x, ys: np.full(len(ys), self.ratio_.occupation(self.g1_, bw.eta1, x)))

    def variance_scale(self, denom) -> np.ndarray:
        bw = Bandwidth.coerce(self.bandwidth)
        d = self.n_dims_
        denom = np.asarray(denom, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(denom > 0, roughness(self.g1_, self.g2_) / ((bw.eta1 * bw.eta2) ** d * denom), np.inf)

    def estimate(self, points, level=None, method=None) -> EstimateTable:
        """Estimates, bias corrections, reliability flags and confidence bounds."""
        check_is_fitted(self, "ratio_")
        self._check_points(points)
        xs, ys = _split_points(points, self.n_dims_)
        f = self.predict(points)
        gamma = self.bias(points) if self.subtract_bias else np.zeros(len(f))
        denom = self.occupation(points)
        reliable = self._reliable(xs, ys)
        table = EstimateTable(xs, ys, f, gamma, denom, reliable, subtract_bias=self.subtract_bias)
        self._attach_ci(table, level, method)
        return table

    def confidence_interval(self, points, level=None, method=None):
        """``(lo, hi)`` arrays of pointwise confidence bounds."""
        table = self.estimate(points, level, method)
        return table.ci_lo, table.ci_hi

    def _attach_ci(self, table: EstimateTable, level, method):
        level = self.level if level is None else level
        method = self.ci_method if method is None else method
        z = normal_quantile(level)
        c = self.variance_scale(table.denom)
        center = table.corrected
        has = table.denom > 0
        c_safe = np.where(has, c, 0.0)
        if method == "wald":
            half = z * np.sqrt(c_safe * table.f_hat)
            lo, hi = center - half, center + half
        elif method == "inversion":
            lo, hi, _ = inversion_bounds(center, c_safe, z)
        else:
            raise ValueError(f"unknown interval method {method!r}")
        table.ci_lo = np.where(has, lo, np.nan)
        table.ci_hi = np.where(has, hi, np.nan)
        table.method = method
        table.level = level

    def _check_points(self, points):
        pass


class LevyKernelDensity(_KernelRatioEstimator):
    """Kernel estimator of the Levy kernel density from discrete observations.

    Parameters
    ----------
    bandwidth : float or (float, float)
        ``(eta1, eta2)``: state and jump-size bandwidths.
    kernel : str or KernelSpec
        State kernel ``g1``; also the jump kernel unless ``jump_kernel`` is set.
    jump_kernel : str or KernelSpec, optional
        Jump kernel ``g2``.
    alpha1, alpha2 : int
        Smoothness orders used by the bias correction.
    curvature_kernel : str, KernelSpec or None
        Kernel substituted for derivatives beyond a kernel's smoothness.
    level : float
        Default confidence level.
    ci_method : {"inversion", "wald"}
        Default interval construction.
    subtract_bias : bool
        Center intervals at ``f_hat - gamma_hat`` (True) or ``f_hat``.
    sigma : float, callable or None
        Diffusion scale for the unreliable-zone flag; ``None`` uses a median
        proxy estimated in :meth:`fit`.
    zeta : float
        Multiplier of ``sigma * sqrt(delta)`` in the unreliable-zone flag.
    """

    def __init__(self, bandwidth=(0.4, 0.4), kernel="biweight", jump_kernel=None,
                 alpha1=2, alpha2=2, curvature_kernel="triweight", level=0.95,
                 ci_method="inversion", subtract_bias=True, sigma=None, zeta=5.0):
        self.bandwidth = bandwidth
        self.kernel = kernel
        self.jump_kernel = jump_kernel
        self.alpha1 = alpha1
        self.alpha2 = alpha2
        self.curvature_kernel = curvature_kernel
        self.level = level
        self.ci_method = ci_method
        self.subtract_bias = subtract_bias
        self.sigma = sigma
        self.zeta = zeta

    def fit(self, X, y=None, delta=None):
        """Fit on observations ``X_0, X_delta, ..., X_{n delta}``.

        ``X`` is a :class:`SamplePath` or an array of shape ``(n + 1,)`` or
        ``(n + 1, d)``; ``delta`` is required for arrays.
        """
        if isinstance(X, SamplePath):
            delta = X.delta if delta is None else delta
            X = X.values
        if delta is None:
            raise ValueError("the observation lag delta is required")
        values = check_array(X, ensure_2d=False, dtype=float, ensure_min_samples=2)
        values = values[:, None] if values.ndim == 1 else values
        Bandwidth.coerce(self.bandwidth)
        self.delta_ = float(delta)
        self.n_dims_ = values.shape[1]
        self.n_features_in_ = 2 * self.n_dims_
        self.n_obs_ = len(values) - 1
        self.g1_, self.g2_ = self._kernels(self.n_dims_)
        if self.sigma is None:
            self.sigma_ = median_sigma(values, self.delta_)
        else:
            self.sigma_ = self.sigma
        self.ratio_ = discrete_sample(values, self.delta_)
        return self

    def unreliable_threshold(self, x=None) -> float:
        check_is_fitted(self, "ratio_")
        sig = self.sigma_(x) if callable(self.sigma_) else self.sigma_
        return float(self.zeta * sig * np.sqrt(self.delta_))

    def _reliable(self, xs, ys):
        eta2 = Bandwidth.coerce(self.bandwidth).eta2
        sig = np.array([float(self.sigma_(x if len(x) > 1 else x[0])) if callable(self.sigma_)
                        else float(self.sigma_) for x in xs])
        return np.linalg.norm(ys, axis=1) > eta2 + self.zeta * sig * np.sqrt(self.delta_)


class ContinuousLevyKernelDensity(_KernelRatioEstimator):
    """Continuous-time benchmark: logged jumps over the fine-grid sojourn integral."""

    def __init__(self, bandwidth=(0.4, 0.4), kernel="biweight", jump_kernel=None,
                 alpha1=2, alpha2=2, curvature_kernel="triweight", level=0.95,
                 ci_method="inversion", subtract_bias=True):
        self.bandwidth = bandwidth
        self.kernel = kernel
        self.jump_kernel = jump_kernel
        self.alpha1 = alpha1
        self.alpha2 = alpha2
        self.curvature_kernel = curvature_kernel
        self.level = level
        self.ci_method = ci_method
        self.subtract_bias = subtract_bias

    def fit(self, X: JumpLog, y=None, t=None):
        """Fit on a :class:`JumpLog` carrying its sojourn grid, up to time ``t``."""
        if not isinstance(X, JumpLog):
            raise TypeError("ContinuousLevyKernelDensity.fit expects a JumpLog")
        Bandwidth.coerce(self.bandwidth)
        self.n_dims_ = 1
        self.n_features_in_ = 2
        self.eps_jump_ = X.eps_jump
        self.g1_, self.g2_ = self._kernels(1)
        self.ratio_ = continuous_sample(X, t)
        return self

    def _check_points(self, points):
        check_is_fitted(self, "ratio_")
        _, ys = _split_points(points, 1)
        eta2 = Bandwidth.coerce(self.bandwidth).eta2
        if np.any(np.abs(ys) <= self.eps_jump_ + eta2):
            raise ValueError(
                f"|y| must exceed eps_jump + eta2 = {self.eps_jump_ + eta2:g}; smaller jumps are not logged")

    def _reliable(self, xs, ys):
        return np.ones(len(xs), dtype=bool)
