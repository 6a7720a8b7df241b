"""Compactly supported smoothing kernels.

All kernels are polynomials on ``[-1, 1]`` and vanish outside. Kernels in
dimension ``d > 1`` are products of a one-dimensional base kernel, so their
moments and roughness factorize.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import integrate

from .exceptions import CapabilityError

__all__ = [
    "KernelSpec",
    "Bandwidth",
    "biweight",
    "triweight",
    "uniform",
    "biweight4",
    "get_kernel",
    "scaled_eval",
    "moment",
    "roughness",
    "derivative_eval",
    "KERNELS",
]

_QUAD_TOL = 1e-12


def _as_multi_index(m, dim: int) -> tuple[int, ...]:
    if np.isscalar(m):
        if dim != 1:
            raise ValueError(f"scalar multi-index given for dimension {dim}")
        m = (int(m),)
    m = tuple(int(v) for v in m)
    if len(m) != dim or any(v < 0 for v in m):
        raise ValueError(f"invalid multi-index {m} for dimension {dim}")
    return m


@dataclass(frozen=True)
class KernelSpec:
    """A product kernel with polynomial factors supported on ``[-1, 1]``.

    Parameters
    ----------
    name : str
        Registry name.
    coef : tuple of float
        Coefficients (increasing powers) of the one-dimensional factor.
    order : int
        Kernel order: moments ``kappa_m`` vanish for ``0 < |m| < order``.
    smoothness : int
        Number of continuous derivatives of the factor on the real line.
    dim : int
        Dimension ``d`` of the argument.
    """

    name: str
    coef: tuple[float, ...]
    order: int
    smoothness: int
    dim: int = 1

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")

    @property
    def symmetric(self) -> bool:
        return all(c == 0.0 for c in self.coef[1::2])

    def with_dim(self, dim: int) -> "KernelSpec":
        return KernelSpec(self.name, self.coef, self.order, self.smoothness, dim)

    def factor(self, z, k: int = 0, piecewise: bool = False) -> np.ndarray:
        """k-th derivative of the one-dimensional factor, zero off ``(-1, 1)``."""
        if k > self.smoothness and not (piecewise and k == self.smoothness + 1):
            raise CapabilityError(
                f"kernel {self.name!r} has {self.smoothness} continuous derivatives; "
                f"derivative of order {k} requested"
            )
        z = np.asarray(z, dtype=float)
        c = _derived_coef(self.coef, k)
        out = P.polyval(z, c)
        return np.where(np.abs(z) < 1.0, out, 0.0)

    def derivative(self, z, m, piecewise: bool = False) -> np.ndarray:
        """Partial derivative of multi-index ``m`` at ``z``.

        For ``dim == 1`` ``z`` may have any shape; otherwise its trailing axis
        has length ``dim``.
        """
        m = _as_multi_index(m, self.dim)
        if sum(m) > self.smoothness and not piecewise:
            raise CapabilityError(
                f"kernel {self.name!r} supports derivatives up to order "
                f"{self.smoothness}, got |m| = {sum(m)}"
            )
        z = np.asarray(z, dtype=float)
        if self.dim == 1:
            return self.factor(z, m[0], piecewise=True)
        if z.shape[-1] != self.dim:
            raise ValueError(f"expected trailing axis of length {self.dim}")
        out = self.factor(z[..., 0], m[0], piecewise=True)
        for j in range(1, self.dim):
            out = out * self.factor(z[..., j], m[j], piecewise=True)
        return out

    def __call__(self, z) -> np.ndarray:
        return self.derivative(z, (0,) * self.dim)


@lru_cache(maxsize=None)
def _derived_coef(coef: tuple[float, ...], k: int) -> np.ndarray:
    return P.polyder(np.asarray(coef, dtype=float), k) if k else np.asarray(coef, dtype=float)


@dataclass(frozen=True)
class Bandwidth:
    """State bandwidth ``eta1`` and jump bandwidth ``eta2``."""

    eta1: float
    eta2: float

    def __post_init__(self):
        if not (self.eta1 > 0 and self.eta2 > 0):
            raise ValueError(f"bandwidths must be positive, got {self.eta1}, {self.eta2}")

    @classmethod
    def coerce(cls, value) -> "Bandwidth":
        if isinstance(value, Bandwidth):
            return value
        if np.isscalar(value):
            return cls(float(value), float(value))
        eta1, eta2 = value
        return cls(float(eta1), float(eta2))


def biweight(dim: int = 1) -> KernelSpec:
    # 0.9375 (1 - z^2)^2
    return KernelSpec("biweight", (0.9375, 0.0, -1.875, 0.0, 0.9375), 2, 1, dim)


def triweight(dim: int = 1) -> KernelSpec:
    # 35/32 (1 - z^2)^3
    c = 35.0 / 32.0
    return KernelSpec("triweight", (c, 0.0, -3 * c, 0.0, 3 * c, 0.0, -c), 2, 2, dim)


def uniform(dim: int = 1) -> KernelSpec:
    return KernelSpec("uniform", (0.5,), 2, 0, dim)


def biweight4(dim: int = 1) -> KernelSpec:
    """Fourth-order kernel ``105/64 (1 - z^2)^2 (1 - 3 z^2)``."""
    c = 105.0 / 64.0
    coef = P.polymul(P.polypow([1.0, 0.0, -1.0], 2), [1.0, 0.0, -3.0]) * c
    return KernelSpec("biweight4", tuple(float(v) for v in coef), 4, 1, dim)


KERNELS = {
    "biweight": biweight,
    "triweight": triweight,
    "uniform": uniform,
    "biweight4": biweight4,
}


def get_kernel(kernel, dim: int = 1) -> KernelSpec:
    """Look up a kernel by name, or pass a :class:`KernelSpec` through."""
    if isinstance(kernel, KernelSpec):
        return kernel if kernel.dim == dim else kernel.with_dim(dim)
    try:
        return KERNELS[kernel](dim)
    except KeyError:
        raise ValueError(
            f"unknown kernel {kernel!r}; choose from {sorted(KERNELS)}"
        ) from None


def scaled_eval(g: KernelSpec, eta: float, center, z) -> np.ndarray:
    """``eta**-d * g((z - center) / eta)``."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    z = np.asarray(z, dtype=float)
    center = np.asarray(center, dtype=float)
    return g((z - center) / eta) / eta**g.dim


def derivative_eval(g: KernelSpec, m, z) -> np.ndarray:
    return g.derivative(z, m)


def _quad(fun) -> float:
    val, _ = integrate.quad(fun, -1.0, 1.0, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=200)
    return float(val)


@lru_cache(maxsize=None)
def _factor_moment(coef: tuple[float, ...], power: int) -> float:
    return _quad(lambda z: z**power * P.polyval(z, coef))


def moment(g: KernelSpec, m) -> float:
    """``kappa_m(g) = int z_1^m_1 ... z_d^m_d g(z) dz`` by adaptive quadrature."""
    m = _as_multi_index(m, g.dim)
    if 0 < sum(m) < g.order:
        return 0.0  # vanishes by definition of the kernel order
    if g.symmetric and any(v % 2 for v in m):
        val = math.prod(_factor_moment(g.coef, v) for v in m)
        if abs(val) < 1e-12:
            return 0.0
        return val
    return math.prod(_factor_moment(g.coef, v) for v in m)


@lru_cache(maxsize=None)
def _factor_sq(coef: tuple[float, ...]) -> float:
    return _quad(lambda z: P.polyval(z, coef) ** 2)


def squared_integral(g: KernelSpec) -> float:
    return _factor_sq(g.coef) ** g.dim


def roughness(g1: KernelSpec, g2: KernelSpec) -> float:
    """``int g1(w)^2 dw * int g2(z)^2 dz``."""
    return squared_integral(g1) * squared_integral(g2)


def multi_indices(dim: int, total: int) -> list[tuple[int, ...]]:
    """All multi-indices of length ``dim`` with ``|m| == total``."""
    if dim == 1:
        return [(total,)]
    out = []
    for first in range(total, -1, -1):
        for rest in multi_indices(dim - 1, total - first):
            out.append((first,) + rest)
    return out


def multi_factorial(m: Sequence[int]) -> int:
    return math.prod(math.factorial(v) for v in m)
