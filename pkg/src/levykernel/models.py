"""Process models given by their characteristics (drift, diffusion, Levy kernel).

Two concrete families are provided: the state-dependent stable example with
switching jump intensities (:class:`StableExample`) and a finite-activity
compound-Poisson model with a smooth, bounded Levy density
(:class:`CompoundPoissonToy`). Arbitrary user callables can be wrapped with
:class:`LevyModel`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special, stats

from .exceptions import CapabilityError, DomainError

__all__ = [
    "LevyModel",
    "StableExampleParams",
    "StableExample",
    "CompoundPoissonToy",
    "zeta_plus",
    "zeta_minus",
    "levy_density_eval",
    "tail_mass",
    "sample_large_jump",
    "positive_stable",
    "stable_remainder_increment",
    "model_from_config",
]


def _check_y(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if np.any(y == 0.0):
        raise DomainError("the Levy density is not defined at y = 0")
    return y


class LevyModel:
    """Characteristics ``(b, c, f)`` of a univariate Markov Ito semimartingale.

    Parameters
    ----------
    drift : callable
        ``x -> b(x)``.
    diffusion_coeff : callable
        ``x -> c(x) >= 0`` (the variance rate, ``c = sigma**2``).
    levy_density : callable
        ``(x, y) -> f(x, y) >= 0`` for ``y != 0``.
    stability_index : float or None
        Stable index ``alpha`` of the small jumps; ``None`` for finite activity.
    activity_index : float
        Integrability index ``beta`` in ``[0, 2]``.
    jump_sampler : callable, optional
        ``(x, eps, rng) -> y`` drawing from ``f(x, .)`` restricted to
        ``|y| > eps`` and normalized. Needed for simulation.
    name : str
        Identifier written into output headers.
    """

    def __init__(
        self,
        drift: Callable,
        diffusion_coeff: Callable,
        levy_density: Callable,
        stability_index: Optional[float] = None,
        activity_index: float = 0.0,
        jump_sampler: Optional[Callable] = None,
        name: str = "custom",
    ):
        self._drift = drift
        self._diffusion = diffusion_coeff
        self._density = levy_density
        self.stability_index = stability_index
        self.activity_index = activity_index
        self._jump_sampler = jump_sampler
        self.name = name

    def drift(self, x):
        return self._drift(x)

    def diffusion_coeff(self, x):
        return self._diffusion(x)

    def levy_density(self, x, y):
        return self._density(x, _check_y(y))

    def tail_mass(self, x: float, eps: float) -> float:
        """``int_{|y| > eps} f(x, y) dy`` by quadrature."""
        if eps <= 0:
            raise ValueError("eps must be positive")
        f = lambda y: float(self._density(x, y))
        right, _ = integrate.quad(f, eps, np.inf, epsabs=0, epsrel=1e-11, limit=200)
        left, _ = integrate.quad(f, -np.inf, -eps, epsabs=0, epsrel=1e-11, limit=200)
        return right + left

    def sample_large_jump(self, x: float, eps: float, rng) -> float:
        if self._jump_sampler is None:
            raise CapabilityError(f"model {self.name!r} has no jump sampler")
        return float(self._jump_sampler(x, eps, rng))

    def small_jump_increment(self, x: float, h: float, eps: float, rng, mode: str = "neglect") -> float:
        if mode == "neglect":
            return 0.0
        raise CapabilityError(f"model {self.name!r} only supports small_jump_mode='neglect'")

    def sigma(self, x) -> float:
        return math.sqrt(float(self.diffusion_coeff(x)))


# --------------------------------------------------------------------------
# state-dependent stable example


@dataclass(frozen=True)
class StableExampleParams:
    b: float = 1.0
    c: float = 1.0
    xi: float = 3.0
    alpha: float = 0.9

    def __post_init__(self):
        if self.b <= 0 or self.c <= 0 or self.xi <= 0:
            raise ValueError("b, c and xi must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")


def zeta_plus(params: StableExampleParams, x):
    """Intensity weight of positive jumps; ``2`` far left, ``0`` far right."""
    x = np.asarray(x, dtype=float)
    xi = params.xi
    bump = (1.0 + np.cos(np.pi * np.clip(x, -xi, xi) / xi)) / 2.0
    out = np.where(x <= 0.0, 2.0 - bump, bump)
    out = np.where(x <= -xi, 2.0, out)
    out = np.where(x > xi, 0.0, out)
    return out[()] if out.ndim == 0 else out


def zeta_minus(params: StableExampleParams, x):
    return 2.0 - zeta_plus(params, x)


def positive_stable(alpha: float, size, rng) -> np.ndarray:
    """Standard one-sided stable variates with ``E exp(-l S) = exp(-l**alpha)``.

    Kanter's representation of the Chambers-Mallows-Stuck transform for
    totally skewed stable laws with ``0 < alpha < 1``.
    """
    u = rng.uniform(0.0, np.pi, size)
    w = rng.standard_exponential(size)
    return _kanter(alpha, u, w)


def _kanter(alpha, u, w):
    a = np.sin(alpha * u) / np.sin(u) ** (1.0 / alpha)
    b = (np.sin((1.0 - alpha) * u) / w) ** ((1.0 - alpha) / alpha)
    return a * b


def subordinator_scale(alpha: float, weight: float, h: float) -> float:
    """Scale ``s`` such that ``s * S`` has Levy density ``weight * y**(-1-alpha)`` over time ``h``."""
    return (h * weight * special.gamma(1.0 - alpha) / alpha) ** (1.0 / alpha)


class StableExample(LevyModel):
    """Mean-reverting diffusion with stable jumps of state-dependent skewness.

    ``b(x) = -b x``, ``c(x) = c`` and
    ``f(x, y) = (zeta_plus(x) 1{y > 0} + zeta_minus(x) 1{y < 0}) |y|**(-1-alpha)``.
    """

    def __init__(self, b: float = 1.0, c: float = 1.0, xi: float = 3.0, alpha: float = 0.9,
                 beta: Optional[float] = None):
        self.params = StableExampleParams(b, c, xi, alpha)
        self.stability_index = alpha
        self.activity_index = min(alpha + 0.05, 2.0) if beta is None else beta
        if self.activity_index <= alpha:
            raise ValueError("beta must exceed alpha for the stable example")
        self.name = f"stable(b={b:g},c={c:g},xi={xi:g},alpha={alpha:g})"

    def drift(self, x):
        return -self.params.b * np.asarray(x, dtype=float)

    def diffusion_coeff(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.params.c)[()]

    def zeta_plus(self, x):
        return zeta_plus(self.params, x)

    def zeta_minus(self, x):
        return zeta_minus(self.params, x)

    def levy_density(self, x, y):
        y = _check_y(y)
        zp = self.zeta_plus(x)
        weight = np.where(y > 0, zp, 2.0 - zp)
        out = weight * np.abs(y) ** (-1.0 - self.params.alpha)
        return out[()] if np.ndim(out) == 0 else out

    def tail_mass(self, x: float, eps: float) -> float:
        if eps <= 0:
            raise ValueError("eps must be positive")
        a = self.params.alpha
        # zeta_plus + zeta_minus == 2 everywhere
        return 2.0 / a * eps ** (-a)

    def sample_large_jump(self, x: float, eps: float, rng) -> float:
        positive = rng.random() < float(self.zeta_plus(x)) / 2.0
        u = 1.0 - rng.random()
        magnitude = eps * u ** (-1.0 / self.params.alpha)
        return magnitude if positive else -magnitude

    def small_jump_increment(self, x: float, h: float, eps: float, rng, mode: str = "stable_exact") -> float:
        zp = float(self.zeta_plus(x))
        return stable_remainder_increment(zp, 2.0 - zp, h, eps, self.params.alpha, rng, mode)

    def config(self) -> dict:
        p = self.params
        return {"kind": "stable", "b": p.b, "c": p.c, "xi": p.xi, "alpha": p.alpha,
                "beta": self.activity_index}


def _truncated_subordinator(weight, h, eps, alpha, rng) -> float:
    if weight <= 0.0:
        return 0.0
    scale = subordinator_scale(alpha, weight, h)
    while True:
        s = scale * float(positive_stable(alpha, None, rng))
        # conditioning on S_h <= eps rules out every jump above eps; it also drops
        # small-jump sums above eps, an error of order P(S_h > eps)
        if s <= eps:
            return s


def stable_remainder_increment(zeta_pos: float, zeta_neg: float, h: float, eps: float,
                               alpha: float, rng, mode: str = "stable_exact") -> float:
    """Sum of the jumps with ``|y| <= eps`` over a substep of length ``h``.

    Difference of two one-sided stable subordinator increments with Levy
    densities ``zeta_pos * y**(-1-alpha)`` and ``zeta_neg * y**(-1-alpha)``,
    each conditioned on staying below ``eps``.
    """
    if mode == "neglect":
        return 0.0
    if mode != "stable_exact":
        raise ValueError(f"unknown small_jump_mode {mode!r}")
    if not 0.0 < alpha < 1.0:
        raise CapabilityError("small-jump remainder requires 0 < alpha < 1")
    up = _truncated_subordinator(zeta_pos, h, eps, alpha, rng)
    down = _truncated_subordinator(zeta_neg, h, eps, alpha, rng)
    return up - down


# --------------------------------------------------------------------------
# compound-Poisson toy


@dataclass
class CompoundPoissonToy(LevyModel):
    """Finite-activity model with ``f(x, y) = lam * phi((y - m(x)) / s) / s``.

    ``phi`` is the standard normal density and ``m(x) = m0 + m1 tanh(x)``;
    the drift is ``-b x`` and the diffusion coefficient ``c`` is constant.
    """

    lam: float = 1.0
    m0: float = 1.0
    m1: float = 0.5
    s: float = 0.5
    b: float = 1.0
    c: float = 0.1
    stability_index: Optional[float] = field(default=None, init=False)
    activity_index: float = field(default=0.0, init=False)

    def __post_init__(self):
        if self.lam < 0 or self.s <= 0 or self.c < 0:
            raise ValueError("lam >= 0, s > 0 and c >= 0 are required")
        self.name = (f"toy(lam={self.lam:g},m0={self.m0:g},m1={self.m1:g},"
                     f"s={self.s:g},b={self.b:g},c={self.c:g})")

    def jump_mean(self, x):
        return self.m0 + self.m1 * np.tanh(x)

    def drift(self, x):
        return -self.b * np.asarray(x, dtype=float)

    def diffusion_coeff(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.c)[()]

    def levy_density(self, x, y):
        y = _check_y(y)
        z = (y - self.jump_mean(x)) / self.s
        return self.lam * stats.norm.pdf(z) / self.s

    def tail_mass(self, x: float, eps: float) -> float:
        if eps < 0:
            raise ValueError("eps must be non-negative")
        m = float(self.jump_mean(x))
        inside = stats.norm.cdf((eps - m) / self.s) - stats.norm.cdf((-eps - m) / self.s)
        return self.lam * (1.0 - inside)

    def sample_large_jump(self, x: float, eps: float, rng) -> float:
        m = float(self.jump_mean(x))
        while True:
            y = m + self.s * rng.standard_normal()
            if abs(y) > eps:
                return y

    def small_jump_increment(self, x: float, h: float, eps: float, rng, mode: str = "stable_exact") -> float:
        if mode == "neglect" or eps == 0.0:
            return 0.0
        rate = self.lam - self.tail_mass(x, eps)
        total = 0.0
        m = float(self.jump_mean(x))
        for _ in range(rng.poisson(rate * h)):
            while True:
                y = m + self.s * rng.standard_normal()
                if abs(y) <= eps:
                    break
            total += y
        return total

    def config(self) -> dict:
        return {"kind": "toy", "lam": self.lam, "m0": self.m0, "m1": self.m1,
                "s": self.s, "b": self.b, "c": self.c}


# --------------------------------------------------------------------------
# functional surface


def levy_density_eval(model: LevyModel, x, y):
    return model.levy_density(x, y)


def tail_mass(model: LevyModel, x: float, eps: float) -> float:
    return model.tail_mass(x, eps)


def sample_large_jump(model: LevyModel, x: float, eps: float, rng) -> float:
    return model.sample_large_jump(x, eps, rng)


def model_from_config(cfg: dict) -> LevyModel:
    cfg = dict(cfg)
    kind = cfg.pop("kind", "stable")
    if kind == "stable":
        return StableExample(**cfg)
    if kind == "toy":
        return CompoundPoissonToy(**cfg)
    raise ValueError(f"unknown model kind {kind!r}")
