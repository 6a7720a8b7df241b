import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import naive
from levykernel.estimate import (
    EstimationRequest,
    KernelRatio,
    bias_correction_continuous,
    bias_correction_discrete,
    derivative_estimate,
    discrete_sample,
    estimate_continuous,
    estimate_discrete,
    median_sigma,
    reliable_flag,
)
from levykernel.exceptions import CapabilityError, DomainError
from levykernel.kernels import biweight, get_kernel
from levykernel.simulate import JumpLog, SamplePath

G = biweight()


def handcrafted_path(n=50, seed=4):
    rng = np.random.default_rng(seed)
    steps = rng.normal(0, 0.25, n - 1) + (rng.random(n - 1) < 0.3) * rng.choice([-1.2, 0.9, 1.5], n - 1)
    return np.concatenate([[0.0], np.cumsum(steps)])


def test_zero_denominator():
    path = SamplePath(0.1, np.linspace(5, 6, 30))
    req = EstimationRequest(path, (0.4, 0.4), sigma=1.0)
    est = estimate_discrete(req, (0.0, 1.0))
    assert est.f_hat == 0.0 and est.denom == 0.0 and est.gamma_hat == 0.0
    assert bias_correction_discrete(req, (0.0, 1.0)) == 0.0


def test_constant_path_single_increment():
    n, delta, x, y = 40, 0.05, 0.3, 1.1
    values = np.full(n + 1, x)
    values[-1] = x + y
    req = EstimationRequest(SamplePath(delta, values), (0.4, 0.5), sigma=0.0)
    est = estimate_discrete(req, (x, y))
    assert est.f_hat == pytest.approx(0.9375 / (0.5 * delta * n), rel=1e-14)


def test_handcrafted_matches_double_loop():
    values = handcrafted_path()
    req = EstimationRequest(SamplePath(0.1, values), (0.4, 0.4), sigma=1.0)
    for x, y in [(0.0, 0.9), (values[10], values[11] - values[10]), (-0.5, -1.2)]:
        f_ref, d_ref = naive.discrete(list(values), 0.1, 0.4, 0.4, x, y)
        est = estimate_discrete(req, (x, y))
        assert est.f_hat == pytest.approx(f_ref, rel=1e-12, abs=1e-300)
        assert est.denom == pytest.approx(d_ref, rel=1e-12)
        if f_ref:
            g_ref = naive.bias_discrete(list(values), 0.1, 0.4, 0.4, x, y)
            assert est.gamma_hat == pytest.approx(g_ref, rel=1e-10)


def test_denominator_identity():
    values = handcrafted_path()
    req = EstimationRequest(SamplePath(0.1, values), (0.4, 0.4), sigma=1.0)
    x = 0.2
    raw = sum(G((v - x) / 0.4) / 0.4 for v in values[:-1])
    assert estimate_discrete(req, (x, 1.0)).denom == pytest.approx(0.1 * raw, rel=1e-13)


def test_domain_error_at_zero_jump():
    req = EstimationRequest(SamplePath(0.1, handcrafted_path()), 0.4, sigma=1.0)
    with pytest.raises(DomainError):
        estimate_discrete(req, (0.0, 0.0))


def test_derivative_zero_order_and_capability():
    values = handcrafted_path()
    req = EstimationRequest(SamplePath(0.1, values), (0.5, 0.5), sigma=1.0)
    pt = (values[5], values[6] - values[5])
    assert derivative_estimate(req, pt, (0,), (0,)) == pytest.approx(estimate_discrete(req, pt).f_hat, rel=1e-15)
    with pytest.raises(CapabilityError):
        derivative_estimate(req, pt, (2,), (0,))


def test_symmetric_configuration_has_zero_x_derivative():
    x = 0.7
    offsets = np.array([0.1, 0.25, 0.3])
    pre = np.concatenate([x - offsets, x + offsets])
    inc = np.concatenate([[1.0, 1.2, 0.8], [1.0, 1.2, 0.8]])
    ratio = KernelRatio(pre, inc, pre, np.full(6, 0.1))
    val = ratio.derivative(G, G, (0.5, 0.5), x, [1.05], (1,), (0,))[0]
    assert abs(val) < 1e-10
    assert ratio.estimate(G, G, (0.5, 0.5), x, [1.05])[0][0] > 0


def test_vanishing_moments_give_zero_bias():
    values = handcrafted_path()
    k4 = get_kernel("biweight4")
    req = EstimationRequest(SamplePath(0.1, values), (0.5, 0.5), g1=k4, g2=k4, sigma=1.0)
    assert bias_correction_discrete(req, (0.0, 1.0)) == 0.0


def test_non_integer_order_rejected():
    ratio = discrete_sample(handcrafted_path(), 0.1)
    with pytest.raises(CapabilityError):
        ratio.bias_correction(G, G, (0.4, 0.4), 0.0, [1.0], alpha1=1.5)


def test_request_rejects_order_above_kernel_order():
    with pytest.raises(ValueError):
        EstimationRequest(SamplePath(0.1, handcrafted_path()), 0.4, alpha1=4)


def test_reliable_flag():
    assert reliable_flag(1.0, 0.4, 1.0, 0.0025) is True
    assert reliable_flag(0.6, 0.4, 1.0, 0.0025) is False
    assert reliable_flag(0.5, 0.4, 0.0, 0.01) is True


def test_median_sigma_on_brownian_path(rng):
    delta = 0.01
    values = np.concatenate([[0.0], np.cumsum(1.7 * np.sqrt(delta) * rng.standard_normal(20000))])
    assert median_sigma(values, delta) == pytest.approx(1.7, rel=0.03)


# -- continuous benchmark ------------------------------------------------------


def test_continuous_single_jump_constant_path():
    step, n, x, y = 0.01, 500, 0.2, 1.3
    fine = np.full(n + 1, x)
    log = JumpLog([1.0], [x], [y], 0.05, step, fine)
    est = estimate_continuous(log, (0.4, 0.5), None, None, (x, y))
    assert est.f_hat == pytest.approx(0.9375 / (0.5 * step * n), rel=1e-13)


def test_continuous_no_jumps_near_y():
    log = JumpLog([1.0], [0.0], [1.0], 0.05, 0.01, np.zeros(501))
    assert estimate_continuous(log, 0.3, None, None, (0.0, -2.0)).f_hat == 0.0


def test_continuous_preconditions():
    log = JumpLog([1.0], [0.0], [1.0], 0.05, 0.01, np.zeros(501))
    with pytest.raises(ValueError):
        estimate_continuous(log, (0.3, 0.4), None, None, (0.0, 0.4))
    with pytest.raises(ValueError):
        estimate_continuous(log, (0.3, 0.4), None, None, (0.0, 1.0), t=10.0)
    with pytest.raises(ValueError):
        estimate_continuous(JumpLog([], [], [], 0.05, 0.01, None), 0.3, None, None, (0.0, 1.0))


def test_continuous_zero_denominator():
    log = JumpLog([1.0], [9.0], [1.0], 0.05, 0.01, np.full(501, 9.0))
    est = estimate_continuous(log, 0.3, None, None, (0.0, 1.0))
    assert est.f_hat == 0.0 and est.denom == 0.0
    assert bias_correction_continuous(log, 0.3, None, None, (0.0, 1.0)) == 0.0


def test_continuous_respects_horizon():
    fine = np.zeros(1001)
    log = JumpLog([2.0, 8.0], [0.0, 0.0], [1.0, 1.0], 0.05, 0.01, fine)
    half = estimate_continuous(log, 0.5, None, None, (0.0, 1.0), t=5.0)
    full = estimate_continuous(log, 0.5, None, None, (0.0, 1.0), t=10.0)
    assert half.f_hat == pytest.approx(full.f_hat, rel=1e-12)
    assert half.denom == pytest.approx(full.denom / 2, rel=1e-12)


# -- properties ----------------------------------------------------------------

paths = st.lists(st.floats(-3, 3, allow_nan=False), min_size=3, max_size=60).map(np.array)


@settings(max_examples=60, deadline=None)
@given(paths, st.floats(-2, 2), st.floats(0.05, 3), st.floats(0.2, 1.5), st.floats(0.2, 1.5))
def test_nonnegative(values, x, y, e1, e2):
    f, _ = discrete_sample(values, 0.1).estimate(G, G, (e1, e2), x, [y])
    assert f[0] >= 0.0


@settings(max_examples=60, deadline=None)
@given(paths, st.floats(-2, 2), st.floats(0.05, 3), st.floats(0.2, 1.5))
def test_reflection_invariance(values, x, y, eta):
    f, d = discrete_sample(values, 0.1).estimate(G, G, eta, x, [y])
    fr, dr = discrete_sample(2 * x - values, 0.1).estimate(G, G, eta, x, [-y])
    assert fr[0] == pytest.approx(f[0], rel=1e-9, abs=1e-12)
    assert dr == pytest.approx(d, rel=1e-9, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(paths, st.floats(-2, 2), st.floats(0.05, 3))
def test_locality(values, x, y):
    eta = (0.5, 0.5)
    base = discrete_sample(values, 0.1)
    far = np.full(5, x + 10.0)
    extra = KernelRatio(np.concatenate([base.num_pos[:, 0], far]), np.concatenate([base.num_inc[:, 0], far]),
                        np.concatenate([base.den_pos[:, 0], far]), np.concatenate([base.den_w, np.full(5, 0.1)]))
    assert extra.estimate(G, G, eta, x, [y])[0][0] == base.estimate(G, G, eta, x, [y])[0][0]


def test_two_dimensional_matches_loop(rng):
    values = np.cumsum(rng.normal(0, 0.3, (80, 2)), axis=0)
    g = get_kernel("biweight", 2)
    x, y = values[10], values[11] - values[10]
    eta1, eta2 = 0.8, 0.7
    num = den = 0.0
    for k in range(1, len(values)):
        a = g((values[k - 1] - x) / eta1) / eta1**2
        den += 0.1 * a
        num += a * g((values[k] - values[k - 1] - y) / eta2) / eta2**2
    req = EstimationRequest(SamplePath(0.1, values), (eta1, eta2), sigma=1.0)
    est = estimate_discrete(req, np.concatenate([x, y]))
    assert est.f_hat == pytest.approx(num / den, rel=1e-12)
    assert np.isfinite(est.gamma_hat)
