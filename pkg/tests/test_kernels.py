import numpy as np
import pytest
from scipy import integrate

from levykernel.exceptions import CapabilityError
from levykernel.kernels import (
    Bandwidth,
    biweight,
    biweight4,
    derivative_eval,
    get_kernel,
    moment,
    multi_factorial,
    multi_indices,
    roughness,
    scaled_eval,
    squared_integral,
    triweight,
    uniform,
)


def test_biweight_values():
    g = biweight()
    assert g(0.0) == pytest.approx(0.9375, abs=1e-15)
    assert g(1.0) == 0.0 and g(-1.0) == 0.0
    assert g(0.5) == pytest.approx(0.52734375, abs=1e-15)
    assert g(3.0) == 0.0


def test_scaled_eval_examples():
    g = biweight()
    assert scaled_eval(g, 0.5, 0.0, 0.0) == pytest.approx(1.875)
    assert scaled_eval(g, 1.0, 2.0, 2.5) == pytest.approx(0.52734375)
    assert scaled_eval(g, 0.3, 1.0, 1.3) == 0.0
    assert scaled_eval(g, 0.3, 1.0, 0.2) == 0.0


@pytest.mark.parametrize("name", ["biweight", "triweight", "uniform", "biweight4"])
def test_normalized_and_symmetric(name):
    g = get_kernel(name)
    assert moment(g, 0) == pytest.approx(1.0, abs=1e-12)
    assert moment(g, 1) == 0.0
    assert moment(g, 3) == 0.0


def test_moments_against_quadrature():
    g = biweight()
    ref, _ = integrate.quad(lambda z: 0.9375 * z**2 * (1 - z * z) ** 2, -1, 1)
    assert moment(g, 2) == pytest.approx(ref, rel=1e-12)
    assert moment(g, 2) == pytest.approx(1 / 7, abs=1e-12)
    assert moment(triweight(), 2) == pytest.approx(1 / 9, abs=1e-12)


def test_kernel_order_four():
    g = biweight4()
    assert g.order == 4
    assert abs(moment(g, 2)) < 1e-12
    assert moment(g, 4) != 0.0


def test_roughness_examples():
    b, u = biweight(), uniform()
    assert squared_integral(b) == pytest.approx(5 / 7, abs=1e-12)
    assert roughness(b, b) == pytest.approx((5 / 7) ** 2, abs=1e-12)
    assert roughness(u, u) == pytest.approx(0.25, abs=1e-12)
    assert roughness(b, u) == pytest.approx(5 / 14, abs=1e-12)


def test_derivative_examples():
    g = biweight()
    assert derivative_eval(g, 1, 0.0) == 0.0
    # -3.75 z (1 - z^2) at z = 0.5
    assert derivative_eval(g, 1, 0.5) == pytest.approx(-1.40625, abs=1e-14)
    assert derivative_eval(g, 1, 1.5) == 0.0


def test_derivative_smoothness_guard():
    with pytest.raises(CapabilityError):
        derivative_eval(biweight(), 2, 0.1)
    with pytest.raises(CapabilityError):
        derivative_eval(uniform(), 1, 0.1)
    assert np.isfinite(derivative_eval(triweight(), 2, 0.1))


@pytest.mark.parametrize("name,k", [("biweight", 1), ("triweight", 1), ("triweight", 2)])
def test_derivative_matches_finite_difference(name, k):
    g = get_kernel(name)
    z = np.linspace(-0.95, 0.95, 39)
    h = 1e-5
    fd = (g.derivative(z + h, k - 1) - g.derivative(z - h, k - 1)) / (2 * h)
    np.testing.assert_allclose(g.derivative(z, k), fd, atol=1e-8)


def test_product_kernel():
    g2 = get_kernel("biweight", 2)
    pts = np.array([[0.0, 0.0], [0.5, -0.2], [0.99, 0.99], [1.2, 0.0]])
    g1 = biweight()
    expect = g1(pts[:, 0]) * g1(pts[:, 1])
    np.testing.assert_allclose(g2(pts), expect)
    assert moment(g2, (2, 0)) == pytest.approx(1 / 7, abs=1e-12)
    assert moment(g2, (1, 1)) == 0.0
    assert squared_integral(g2) == pytest.approx((5 / 7) ** 2, abs=1e-12)


def test_multi_index_helpers():
    assert multi_indices(1, 3) == [(3,)]
    assert sorted(multi_indices(2, 2)) == [(0, 2), (1, 1), (2, 0)]
    assert len(multi_indices(3, 2)) == 6
    assert multi_factorial((2, 3)) == 12


def test_bandwidth_coerce():
    assert Bandwidth.coerce(0.3) == Bandwidth(0.3, 0.3)
    assert Bandwidth.coerce((0.2, 0.4)) == Bandwidth(0.2, 0.4)
    with pytest.raises(ValueError):
        Bandwidth.coerce((0.2, -1.0))


def test_unknown_kernel():
    with pytest.raises(ValueError):
        get_kernel("gaussian")
