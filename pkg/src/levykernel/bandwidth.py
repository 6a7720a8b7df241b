"""Asymptotic bandwidth conditions for power-law bandwidth families.

Everything is expressed through exponents of one scale parameter ``T = n delta``
(the observation span): ``delta = T**-p``, ``n = T**(1 + p)``, ``v(T) = T**delta_dk``
and ``eta_i = coeff_i * T**-e_i``. A sequence ``T**q`` tends to zero when
``q < 0``, to a positive constant when ``q == 0`` and to infinity when ``q > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

__all__ = [
    "PowerLawBandwidth",
    "AsymptoticRegime",
    "ConditionResult",
    "ConditionReport",
    "optimal_exponents",
    "check_conditions",
    "check_conditions_continuous",
    "unreliable_threshold",
]

_TOL = 1e-12

SATISFIED = "satisfied"
VIOLATED = "violated"
BOUNDARY = "boundary"


@dataclass(frozen=True)
class PowerLawBandwidth:
    """``eta(T) = coeff * T**(-exponent)`` with ``T = n delta``."""

    coeff: float = 1.0
    exponent: float = 0.0

    def __post_init__(self):
        if self.coeff <= 0 or self.exponent < 0:
            raise ValueError("coeff must be positive and exponent nonnegative")

    def __call__(self, span: float) -> float:
        return self.coeff * span ** (-self.exponent)


@dataclass(frozen=True)
class AsymptoticRegime:
    alpha1: float = 2.0
    alpha2: float = 2.0
    d: int = 1
    beta: float = 2.0
    delta: float = 1.0  # Darling-Kac index; v(t) ~ t**delta

    def __post_init__(self):
        if not 0 < self.delta <= 1:
            raise ValueError("the Darling-Kac index must lie in (0, 1]")
        if not 0 <= self.beta <= 2:
            raise ValueError("beta must lie in [0, 2]")
        if self.alpha1 <= 0 or self.alpha2 <= 0 or self.d < 1:
            raise ValueError("alpha1, alpha2 > 0 and d >= 1 are required")

    @property
    def v_exponent(self) -> float:
        return self.delta


@dataclass(frozen=True)
class ConditionResult:
    cid: str
    description: str
    status: str
    exponent: float
    limit: Optional[float] = None

    @property
    def slack(self) -> float:
        return self.exponent


@dataclass
class ConditionReport:
    results: list = field(default_factory=list)

    def __getitem__(self, cid: str) -> ConditionResult:
        for r in self.results:
            if r.cid == cid:
                return r
        raise KeyError(cid)

    def status(self, cid: str) -> str:
        return self[cid].status

    @property
    def ok(self) -> bool:
        return all(r.status != VIOLATED for r in self.results)

    def rows(self):
        """Machine-readable rows ``(condition id, status, slack exponent)``."""
        return [(r.cid, r.status, r.exponent) for r in self.results]

    def table(self) -> str:
        lines = [f"{'condition':<12} {'status':<10} {'exponent':>12}  {'limit':>10}  description"]
        for r in self.results:
            lim = "" if r.limit is None else f"{r.limit:.6g}"
            lines.append(f"{r.cid:<12} {r.status:<10} {r.exponent:>12.6g}  {lim:>10}  {r.description}")
        return "\n".join(lines)


def optimal_exponents(regime: AsymptoticRegime):
    """Rate-optimal bandwidth exponents ``(xi1, xi2, rate_exponent)``."""
    a1, a2, d = regime.alpha1, regime.alpha2, regime.d
    denom = d * (a1 + a2) + 2 * a1 * a2
    return a2 / denom, a1 / denom, a1 * a2 / denom


def _sign(q: float) -> int:
    if abs(q) <= _TOL:
        return 0
    return 1 if q > 0 else -1


# A zero exponent leaves a positive constant, which neither vanishes nor diverges.
def _to_zero(cid, desc, q):
    return ConditionResult(cid, desc, SATISFIED if _sign(q) < 0 else VIOLATED, q)


def _to_infinity(cid, desc, q):
    return ConditionResult(cid, desc, SATISFIED if _sign(q) > 0 else VIOLATED, q)


def _bounded(cid, desc, q):
    return ConditionResult(cid, desc, SATISFIED if _sign(q) <= 0 else VIOLATED, q)


def _limit_condition(cid, desc, q, constant):
    # v eta... -> zeta^2 < inf: any non-positive exponent is admissible
    s = _sign(q)
    if s < 0:
        return ConditionResult(cid, desc, SATISFIED, q, 0.0)
    if s == 0:
        return ConditionResult(cid, desc, BOUNDARY, q, constant)
    return ConditionResult(cid, desc, VIOLATED, q, math.inf)


def _smoothing_conditions(regime, eta1, eta2, prefix):
    d, v = regime.d, regime.v_exponent
    e1, e2 = eta1.exponent, eta2.exponent
    return [
        _to_infinity(f"{prefix}a", "v eta1^d eta2^d -> inf", v - d * e1 - d * e2),
        _to_zero(f"{prefix}b", "eta1 -> 0", -e1),
        _to_zero(f"{prefix}c", "eta2 -> 0", -e2),
    ]


def _bias_conditions(regime, eta1, eta2, labels):
    d, a1, a2 = regime.d, regime.alpha1, regime.alpha2
    v = regime.v_exponent
    e1, e2 = eta1.exponent, eta2.exponent
    q1 = v - (d + 2 * a1) * e1 - d * e2
    q2 = v - d * e1 - (d + 2 * a2) * e2
    c1 = eta1.coeff ** (d + 2 * a1) * eta2.coeff ** d
    c2 = eta1.coeff ** d * eta2.coeff ** (d + 2 * a2)
    r1 = _limit_condition(labels[0], "v eta1^(d+2a1) eta2^d -> zeta1^2", q1, c1)
    r2 = _limit_condition(labels[1], "v eta1^d eta2^(d+2a2) -> zeta2^2", q2, c2)
    return [r1, r2]


def check_conditions(eta1: PowerLawBandwidth, eta2: PowerLawBandwidth, regime: AsymptoticRegime,
                     lag_exponent: float = 2.0) -> ConditionReport:
    """Check the smoothing, bias and discretisation conditions.

    ``lag_exponent`` is ``p`` in ``delta = (n delta)**-p``; ``p = 0`` keeps
    the observation lag fixed. Boundary cases of the bias conditions report
    ``zeta_i**2`` as ``limit``.
    """
    p = float(lag_exponent)
    if p < 0:
        raise ValueError("lag_exponent must be nonnegative")
    d, beta, v = regime.d, regime.beta, regime.v_exponent
    e1, e2 = eta1.exponent, eta2.exponent
    results = _smoothing_conditions(regime, eta1, eta2, "2.7")
    results += _bias_conditions(regime, eta1, eta2, ("2.8a", "2.8b"))

    vee = max(1.0 - 2.0 / (beta + d), 0.0)
    wedge = min(1.0 - 2.0 / (beta + d), 0.0)
    results.append(_to_zero("2.9a-1", "delta eta1^-(2+d[(1-2/(beta+d)) v 0]) -> 0",
                            -p + e1 * (2.0 + d * vee)))
    results.append(_to_zero("2.9a-2", "delta eta2^-(2 v (beta+d)) -> 0",
                            -p + e2 * max(2.0, beta + d)))
    results.append(_bounded("2.9b-1", "n delta^2 eta1^d eta2^d bounded",
                            (1.0 + p) - 2.0 * p - d * e1 - d * e2))
    results.append(_to_zero("2.9b-2", "v delta^2 eta1^(d-4-2d[(1-2/(beta+d)) ^ 0]) eta2^d -> 0",
                            v - 2.0 * p - e1 * (d - 4.0 - 2.0 * d * wedge) - d * e2))
    results.append(_to_zero("2.9c", "v delta^2 eta1^d eta2^(d-(4 v 2(beta+d))) -> 0",
                            v - 2.0 * p - d * e1 - e2 * (d - max(4.0, 2.0 * (beta + d)))))

    a1, a2, dk = regime.alpha1, regime.alpha2, regime.delta
    big = d * (a1 + a2) + 2 * a1 * a2
    zeta = max((1 - dk) * d * (a1 + a2) + 2 * a1 * a2,
               dk * a1 * (a2 + 2 + d),
               dk * a2 * (a1 + 2 + d * d / (2 + d)))
    results.append(_to_zero("lag-speed", "n delta^(1+[d(a1+a2)+2a1a2]/zeta) -> 0",
                            (1.0 + p) - p * (1.0 + big / zeta)))
    results.append(_to_zero("lag-recurrence", "(n delta)^(1-delta) delta -> 0",
                            (1.0 - dk) - p))
    return ConditionReport(results)


def check_conditions_continuous(eta1: PowerLawBandwidth, eta2: PowerLawBandwidth,
                                regime: AsymptoticRegime) -> ConditionReport:
    """Smoothing and bias conditions for the continuous-time benchmark (scale ``t``)."""
    results = _smoothing_conditions(regime, eta1, eta2, "3.2")
    results += _bias_conditions(regime, eta1, eta2, ("3.3a", "3.3b"))
    return ConditionReport(results)


def unreliable_threshold(sigma: float, delta_obs: float, zeta: float = 5.0) -> float:
    """``zeta * sigma * sqrt(delta)``: below this jump size, increments are mostly diffusive."""
    if sigma < 0 or delta_obs <= 0 or zeta <= 0:
        raise ValueError("sigma >= 0, delta > 0 and zeta > 0 are required")
    return zeta * sigma * math.sqrt(delta_obs)
