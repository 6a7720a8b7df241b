import numpy as np
import pytest
from scipy.stats import norm

import naive
from levykernel.estimate import PointEstimate
from levykernel.exceptions import NoDataError
from levykernel.inference import ci_inversion, ci_wald, inversion_bounds, normal_quantile, variance_scale
from levykernel.kernels import biweight, uniform

Z95 = 1.959963984540054


def test_normal_quantile():
    assert normal_quantile(0.95) == pytest.approx(Z95, abs=1e-12)
    assert normal_quantile(0.0) == 0.0
    for level in (0.5, 0.8, 0.99, 0.999):
        assert norm.cdf(normal_quantile(level)) == pytest.approx((1 + level) / 2, abs=1e-12)
    with pytest.raises(ValueError):
        normal_quantile(1.0)


def test_variance_scale_examples():
    g = biweight()
    est = PointEstimate(1.0, 0.0, 10.0)
    assert variance_scale(est, (0.4, 0.4), g, g) == pytest.approx((5 / 7) ** 2 / 1.6, rel=1e-12)
    u = uniform()
    assert variance_scale(est, (0.5, 0.2), u, u) == pytest.approx(0.25 / (0.1 * 10.0), rel=1e-12)
    doubled = PointEstimate(1.0, 0.0, 20.0)
    assert variance_scale(doubled, 0.4, g, g) == pytest.approx(variance_scale(est, 0.4, g, g) / 2)
    with pytest.raises(NoDataError):
        variance_scale(PointEstimate(0.0, 0.0, 0.0), 0.4, g, g)


def test_wald_examples():
    r = ci_wald(PointEstimate(1.0, 0.0, 1.0), 0.04, 0.95)
    assert r.half_width == pytest.approx(Z95 * 0.2, abs=1e-10)
    assert r.center == 1.0
    r0 = ci_wald(PointEstimate(0.0, 0.3, 1.0), 0.04, 0.95)
    assert r0.half_width == 0.0 and r0.center == pytest.approx(-0.3)
    assert ci_wald(PointEstimate(1.0, 0.0, 1.0), 0.04, 0.0).half_width == 0.0
    assert ci_wald(PointEstimate(1.0, 0.2, 1.0), 0.04, subtract_bias=False).center == 1.0
    with pytest.raises(ValueError):
        ci_wald(PointEstimate(-1.0, 0.0, 1.0), 0.04)


def test_inversion_worked_example():
    r = ci_inversion(PointEstimate(1.0, 0.0, 1.0), 0.04, 0.95)
    g = lambda f: (1.0 - f) ** 2 - Z95**2 * 0.04 * f  # noqa: E731
    lo_ref = naive.bisect_root(g, 0.0, 1.0)
    hi_ref = naive.bisect_root(g, 1.0, 10.0)
    assert r.lo == pytest.approx(lo_ref, abs=1e-12)
    assert r.hi == pytest.approx(hi_ref, abs=1e-12)
    assert r.lo == pytest.approx(0.677378, abs=1e-6)
    assert r.hi == pytest.approx(1.476280, abs=1e-6)


def test_inversion_edge_cases():
    lo, hi, empty = inversion_bounds(0.0, 0.04, Z95)
    assert lo == 0.0 and hi == pytest.approx(Z95**2 * 0.04) and not empty
    lo, hi, _ = inversion_bounds(2.5, 1e-14, Z95)
    assert lo == pytest.approx(2.5, abs=1e-6) and hi == pytest.approx(2.5, abs=1e-6)
    lo, hi, _ = inversion_bounds(2.5, 0.0, Z95)
    assert lo == hi == 2.5
    lo, hi, empty = inversion_bounds(-1.0, 0.04, Z95)
    assert empty and lo == 0.0 and hi == 0.0
    r = ci_inversion(PointEstimate(0.1, 1.0, 1.0), 0.04)
    assert r.empty and not r.contains(0.0)


def test_inversion_nonnegative_and_contains_center(rng):
    a = rng.uniform(0, 5, 500)
    c = 10 ** rng.uniform(-4, 1, 500)
    lo, hi, empty = inversion_bounds(a, c, Z95)
    assert not empty.any()
    assert np.all((0 <= lo) & (lo <= a) & (a <= hi))


def test_inversion_converges_to_wald():
    a = 2.0
    prev = None
    for c in (1e-2, 1e-3, 1e-4, 1e-5):
        lo, hi, _ = inversion_bounds(a, c, Z95)
        half = Z95 * np.sqrt(c * a)
        gap = abs(lo - (a - half)) + abs(hi - (a + half))
        assert gap <= 2 * Z95**2 * c
        if prev is not None:
            assert gap < prev
        prev = gap


def test_inversion_monotone_in_a():
    a = np.linspace(0, 20, 4001)
    for c in (1e-3, 0.04, 2.0):
        lo, hi, _ = inversion_bounds(a, c, Z95)
        assert np.all(np.diff(lo) >= 0) and np.all(np.diff(hi) >= 0)


def test_interval_result_contains():
    r = ci_inversion(PointEstimate(1.0, 0.0, 1.0), 0.04)
    assert r.contains(1.0) and not r.contains(2.0)
    assert r.method == "inversion" and r.level == 0.95 and r.variance_scale == 0.04
