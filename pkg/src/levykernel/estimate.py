"""Kernel estimators of the Levy kernel density and their bias corrections.

Both the discrete-observation estimator and the continuous-time benchmark are
ratios

    f_hat(x, y) = sum_k A_k(x) B_k(y) / sum_j w_j A'_j(x)

with ``A = g1^{eta,x}`` evaluated at pre-jump states, ``B = g2^{eta,y}``
evaluated at increments (or jumps), and a weighted occupation sum in the
denominator (``w_j = delta`` on the observation grid, trapezoid weights on the
fine grid). :class:`KernelRatio` implements the ratio and its exact partial
derivatives once for both cases.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .exceptions import CapabilityError, DomainError
from .kernels import (
    Bandwidth,
    KernelSpec,
    get_kernel,
    moment,
    multi_factorial,
    multi_indices,
)
from .simulate import JumpLog, SamplePath

_Q75 = 0.6744897501960817  # upper quartile of N(0, 1)

__all__ = [
    "KernelRatio",
    "EstimationRequest",
    "PointEstimate",
    "estimate_discrete",
    "derivative_estimate",
    "bias_correction_discrete",
    "estimate_continuous",
    "bias_correction_continuous",
    "median_sigma",
    "discrete_sample",
    "continuous_sample",
]


def _as_2d(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return a[:, None] if a.ndim == 1 else a


def _binom(j, i) -> int:
    return math.prod(math.comb(a, b) for a, b in zip(j, i))


def _sub_indices(m):
    return list(itertools.product(*(range(v + 1) for v in m)))


def _check_order(alpha, name):
    if int(alpha) != alpha or alpha < 1:
        raise CapabilityError(f"{name} must be a positive integer for the bias correction, got {alpha}")
    return int(alpha)


class KernelRatio:
    """Weighted kernel ratio ``sum A B / sum w A`` with analytic derivatives.

    Parameters
    ----------
    num_pos, num_inc : array, shape (k, d)
        Pre-jump states and increments entering the numerator.
    den_pos : array, shape (m, d)
        States entering the occupation denominator.
    den_w : array, shape (m,)
        Weights of the denominator terms.
    """

    def __init__(self, num_pos, num_inc, den_pos, den_w):
        self.num_pos = _as_2d(num_pos)
        self.num_inc = _as_2d(num_inc)
        self.den_pos = _as_2d(den_pos)
        self.den_w = np.asarray(den_w, dtype=float)
        if self.num_pos.shape != self.num_inc.shape:
            raise ValueError("numerator states and increments differ in shape")
        if len(self.den_pos) != len(self.den_w):
            raise ValueError("denominator states and weights differ in length")
        self.dim = self.den_pos.shape[1]

    # -- kernel weights -----------------------------------------------------

    @staticmethod
    def _local(g: KernelSpec, eta: float, center, pts):
        u = (pts - center) / eta
        mask = np.all(np.abs(u) < 1.0, axis=1)
        return mask, u[mask]

    @staticmethod
    def _weights(g: KernelSpec, eta: float, u, m, piecewise=False):
        # d^m/dc^m of eta^-d g((p - c)/eta)
        order = sum(m)
        scale = (-1.0) ** order * eta ** (-(g.dim + order))
        return scale * g.derivative(u if g.dim > 1 else u[:, 0], m, piecewise=piecewise)

    def occupation(self, g1: KernelSpec, eta1: float, x, m=None) -> float:
        """``sum_j w_j d^m/dx^m g1^{eta,x}(den_pos_j)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        m = (0,) * self.dim if m is None else tuple(m)
        mask, u = self._local(g1, eta1, x, self.den_pos)
        if not mask.any():
            return 0.0
        return float(self.den_w[mask] @ self._weights(g1, eta1, u, m))

    def _numerator(self, g1, g2, bw: Bandwidth, x, ys, m1, m2):
        mask, u = self._local(g1, bw.eta1, x, self.num_pos)
        if not mask.any():
            return np.zeros(len(ys))
        a = self._weights(g1, bw.eta1, u, m1)
        inc = self.num_inc[mask]
        near = np.all((inc > ys.min(axis=0) - bw.eta2) & (inc < ys.max(axis=0) + bw.eta2), axis=1)
        a, inc = a[near], inc[near]
        v = (inc[:, None, :] - ys[None, :, :]) / bw.eta2
        inside = np.all(np.abs(v) < 1.0, axis=2)
        rows = np.flatnonzero(inside.any(axis=1))
        if len(rows) == 0:
            return np.zeros(len(ys))
        vv = v[rows]
        order = sum(m2)
        scale = (-1.0) ** order * bw.eta2 ** (-(g2.dim + order))
        b = scale * g2.derivative(vv if g2.dim > 1 else vv[..., 0], m2)
        return a[rows] @ b

    def derivative(self, g1: KernelSpec, g2: KernelSpec, bandwidth, x, ys, m1=None, m2=None):
        """``d^{m1}/dx^{m1} d^{m2}/dy^{m2}`` of the ratio at ``x`` for each row of ``ys``.

        Uses the generalized Leibniz rule on ``N = R * D``; the result is
        exact up to rounding. Returns zeros where the denominator vanishes.
        """
        bw = Bandwidth.coerce(bandwidth)
        d = self.dim
        x = np.atleast_1d(np.asarray(x, dtype=float))
        ys = np.asarray(ys, dtype=float).reshape(-1, d)
        m1 = (0,) * d if m1 is None else tuple(int(v) for v in np.atleast_1d(m1))
        m2 = (0,) * d if m2 is None else tuple(int(v) for v in np.atleast_1d(m2))
        for name, g, m in (("g1", g1, m1), ("g2", g2, m2)):
            if sum(m) > g.smoothness:
                raise CapabilityError(
                    f"{name} ({g.name}) has {g.smoothness} continuous derivatives; "
                    f"derivative of order {sum(m)} requested")
        mask, u = self._local(g1, bw.eta1, x, self.den_pos)
        if not mask.any():
            return np.zeros(len(ys))
        w = self.den_w[mask]
        dens = {j: float(w @ self._weights(g1, bw.eta1, u, j)) for j in _sub_indices(m1)}
        d0 = dens[(0,) * d]
        if d0 <= 0.0:
            return np.zeros(len(ys))
        ratios = {}
        for j in sorted(_sub_indices(m1), key=sum):
            acc = self._numerator(g1, g2, bw, x, ys, j, m2)
            for i in _sub_indices(j):
                if i != j:
                    diff = tuple(a - b for a, b in zip(j, i))
                    acc = acc - _binom(j, i) * ratios[i] * dens[diff]
            ratios[j] = acc / d0
        return ratios[m1]

    def estimate(self, g1, g2, bandwidth, x, ys):
        """``(f_hat, denom)`` at ``x`` for every row of ``ys``."""
        bw = Bandwidth.coerce(bandwidth)
        denom = self.occupation(g1, bw.eta1, x)
        ys = np.asarray(ys, dtype=float).reshape(-1, self.dim)
        if denom <= 0.0:
            return np.zeros(len(ys)), 0.0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        num = self._numerator(g1, g2, bw, x, ys, (0,) * self.dim, (0,) * self.dim)
        return num / denom, denom

    def bias_correction(self, g1, g2, bandwidth, x, ys, alpha1=2, alpha2=2,
                        curvature_kernel: Optional[Union[str, KernelSpec]] = "triweight"):
        """Plug-in estimate of the leading smoothing bias at ``x`` for each ``y``.

        Derivatives of an order exceeding a kernel's smoothness are taken from
        the estimator built with ``curvature_kernel`` in its place; the
        moments always come from ``g1`` and ``g2``.
        """
        bw = Bandwidth.coerce(bandwidth)
        a1 = _check_order(alpha1, "alpha1")
        a2 = _check_order(alpha2, "alpha2")
        d = self.dim
        ys = np.asarray(ys, dtype=float).reshape(-1, d)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        denom = self.occupation(g1, bw.eta1, x)
        out = np.zeros(len(ys))
        if denom <= 0.0:
            return out

        def pick(g, order):
            if order <= g.smoothness:
                return g
            if curvature_kernel is not None:
                alt = get_kernel(curvature_kernel, g.dim)
                if order <= alt.smoothness:
                    return alt
            raise CapabilityError(
                f"no kernel with {order} continuous derivatives available for {g.name!r}")

        zero = (0,) * d
        for total_m2 in range(1, a1 + 1):
            for m2 in multi_indices(d, total_m2):
                for m1 in multi_indices(d, a1 - total_m2):
                    kappa = moment(g1, tuple(a + b for a, b in zip(m1, m2)))
                    if kappa == 0.0:
                        continue
                    gx = pick(g1, sum(m1))
                    occ_ratio = self.occupation(gx, bw.eta1, x, m1) / self.occupation(gx, bw.eta1, x)
                    gr = pick(g1, sum(m2))
                    deriv = self.derivative(gr, g2, bw, x, ys, m2, zero)
                    out += (bw.eta1 ** a1 * kappa / (multi_factorial(m1) * multi_factorial(m2))
                            * occ_ratio * deriv)
        for m in multi_indices(d, a2):
            kappa = moment(g2, m)
            if kappa == 0.0:
                continue
            gy = pick(g2, a2)
            out += bw.eta2 ** a2 * kappa / multi_factorial(m) * self.derivative(g1, gy, bw, x, ys, zero, m)
        return out


def discrete_sample(values, delta: float) -> KernelRatio:
    values = _as_2d(values)
    if len(values) < 2:
        raise ValueError("at least two observations are required")
    if not delta > 0:
        raise ValueError("delta must be positive")
    n = len(values) - 1
    return KernelRatio(values[:-1], np.diff(values, axis=0), values[:-1], np.full(n, float(delta)))


def continuous_sample(log: JumpLog, t: Optional[float] = None) -> KernelRatio:
    """Jump sums up to ``t`` over trapezoid-weighted sojourn integrals on the fine grid."""
    if log.sojourn_grid is None:
        raise ValueError("the continuous benchmark needs the fine-grid sojourn path")
    grid = np.asarray(log.sojourn_grid, dtype=float)
    horizon = (len(grid) - 1) * log.step
    if t is None:
        t = horizon
    if not 0 < t <= horizon * (1 + 1e-12):
        raise ValueError(f"t = {t} outside the simulated horizon (0, {horizon}]")
    n_steps = int(round(t / log.step))
    grid = grid[: n_steps + 1]
    w = np.full(len(grid), log.step)
    w[0] = w[-1] = log.step / 2.0
    if len(grid) == 1:
        w[:] = 0.0
    keep = log.times < n_steps * log.step - 1e-12 * log.step
    return KernelRatio(log.left_limits[keep], log.jumps[keep], grid, w)


def median_sigma(values, delta: float) -> float:
    """Jump-robust diffusion scale ``median |dX_k| / (z_0.75 sqrt(delta))``.

    Residual jump activity at the sampling scale biases it upward, which only
    widens the unreliable zone.
    """
    inc = np.diff(_as_2d(values), axis=0)
    if len(inc) == 0:
        return 0.0
    r = np.linalg.norm(inc, axis=1) if inc.shape[1] > 1 else np.abs(inc[:, 0])
    return float(np.median(r) / (_Q75 * np.sqrt(delta)))


# --------------------------------------------------------------------------
# request/response surface


@dataclass
class PointEstimate:
    f_hat: float
    gamma_hat: float
    denom: float
    reliable: bool = True


@dataclass
class EstimationRequest:
    """Observations plus the smoothing configuration.

    ``sigma`` gives the diffusion scale used for the unreliable-zone flag: a
    number, a callable of ``x``, or ``None`` for the median proxy.
    """

    observations: SamplePath
    bandwidth: Bandwidth
    g1: KernelSpec = None
    g2: KernelSpec = None
    grid: Sequence = ()
    alpha1: int = 2
    alpha2: int = 2
    curvature_kernel: Optional[Union[str, KernelSpec]] = "triweight"
    sigma: Optional[Union[float, Callable]] = None
    zeta: float = 5.0

    def __post_init__(self):
        self.bandwidth = Bandwidth.coerce(self.bandwidth)
        values = _as_2d(self.observations.values)
        d = values.shape[1]
        self.g1 = get_kernel(self.g1 or "biweight", d)
        self.g2 = get_kernel(self.g2 or "biweight", d)
        for a, g in ((self.alpha1, self.g1), (self.alpha2, self.g2)):
            if a > g.order:
                raise ValueError(f"smoothness {a} exceeds the order {g.order} of kernel {g.name!r}")
        for point in self.grid:
            _split_point(point, d)

    @property
    def d(self) -> int:
        return _as_2d(self.observations.values).shape[1]

    def sample(self) -> KernelRatio:
        return discrete_sample(self.observations.values, self.observations.delta)

    def sigma_at(self, x) -> float:
        if self.sigma is None:
            return median_sigma(self.observations.values, self.observations.delta)
        if callable(self.sigma):
            return float(self.sigma(x))
        return float(self.sigma)


def _split_point(point, d):
    p = np.asarray(point, dtype=float).ravel()
    if p.size != 2 * d:
        raise ValueError(f"evaluation points need {2 * d} coordinates, got {p.size}")
    x, y = p[:d], p[d:]
    if np.all(y == 0.0):
        raise DomainError("cannot estimate the Levy density at y = 0")
    return x, y


def reliable_flag(y, eta2: float, sigma: float, delta: float, zeta: float = 5.0) -> bool:
    return bool(np.linalg.norm(np.atleast_1d(y)) > eta2 + zeta * sigma * math.sqrt(delta))


def estimate_discrete(req: EstimationRequest, point) -> PointEstimate:
    x, y = _split_point(point, req.d)
    s = req.sample()
    f, denom = s.estimate(req.g1, req.g2, req.bandwidth, x, y)
    gamma = 0.0
    if denom > 0:
        gamma = float(s.bias_correction(req.g1, req.g2, req.bandwidth, x, y,
                                        req.alpha1, req.alpha2, req.curvature_kernel)[0])
    rel = reliable_flag(y, req.bandwidth.eta2, req.sigma_at(x), req.observations.delta, req.zeta)
    return PointEstimate(float(f[0]), gamma, denom, rel)


def derivative_estimate(req: EstimationRequest, point, m1=None, m2=None) -> float:
    x, y = _split_point(point, req.d)
    return float(req.sample().derivative(req.g1, req.g2, req.bandwidth, x, y, m1, m2)[0])


def bias_correction_discrete(req: EstimationRequest, point) -> float:
    x, y = _split_point(point, req.d)
    return float(req.sample().bias_correction(req.g1, req.g2, req.bandwidth, x, y,
                                              req.alpha1, req.alpha2, req.curvature_kernel)[0])


def _continuous_setup(log, bandwidth, g1, g2, point, t):
    bw = Bandwidth.coerce(bandwidth)
    d = 1
    g1 = get_kernel(g1 or "biweight", d)
    g2 = get_kernel(g2 or "biweight", d)
    x, y = _split_point(point, d)
    if np.linalg.norm(y) <= log.eps_jump + bw.eta2:
        raise ValueError(
            f"|y| = {np.linalg.norm(y):g} must exceed eps_jump + eta2 = "
            f"{log.eps_jump + bw.eta2:g}; smaller jumps are not logged")
    return bw, g1, g2, x, y, continuous_sample(log, t)


def estimate_continuous(log: JumpLog, bandwidth, g1, g2, point, t: Optional[float] = None,
                        alpha1: int = 2, alpha2: int = 2,
                        curvature_kernel="triweight") -> PointEstimate:
    """Continuous-time benchmark from the logged jumps and the fine-grid sojourn integral."""
    bw, g1, g2, x, y, s = _continuous_setup(log, bandwidth, g1, g2, point, t)
    f, denom = s.estimate(g1, g2, bw, x, y)
    gamma = 0.0
    if denom > 0:
        gamma = float(s.bias_correction(g1, g2, bw, x, y, alpha1, alpha2, curvature_kernel)[0])
    return PointEstimate(float(f[0]), gamma, denom, True)


def bias_correction_continuous(log: JumpLog, bandwidth, g1, g2, point, t: Optional[float] = None,
                               alpha1: int = 2, alpha2: int = 2,
                               curvature_kernel="triweight") -> float:
    bw, g1, g2, x, y, s = _continuous_setup(log, bandwidth, g1, g2, point, t)
    return float(s.bias_correction(g1, g2, bw, x, y, alpha1, alpha2, curvature_kernel)[0])
