import itertools

import pytest

from levykernel.bandwidth import (
    AsymptoticRegime,
    PowerLawBandwidth,
    check_conditions,
    check_conditions_continuous,
    optimal_exponents,
    unreliable_threshold,
)


def test_optimal_exponents_examples():
    xi1, xi2, rate = optimal_exponents(AsymptoticRegime(2, 2, 1))
    assert (xi1, xi2, rate) == pytest.approx((1 / 6, 1 / 6, 1 / 3), abs=1e-15)
    for a, d in itertools.product((1, 2, 3.5), (1, 2, 3)):
        assert optimal_exponents(AsymptoticRegime(a, a, d))[2] == pytest.approx(a / (2 * a + 2 * d), abs=1e-14)
    # alpha2 large: xi2 -> 0 and xi1 -> 1 / (d + 2 alpha1)
    xi1, xi2, _ = optimal_exponents(AsymptoticRegime(2, 1e9, 1))
    assert xi2 == pytest.approx(0.0, abs=1e-8)
    assert xi1 == pytest.approx(1 / 5, rel=1e-8)


@pytest.mark.parametrize("a1,a2,d", list(itertools.product((1, 2, 3), (1, 2, 4), (1, 2, 3))))
def test_optimum_invariants(a1, a2, d):
    reg = AsymptoticRegime(a1, a2, d)
    xi1, xi2, rate = optimal_exponents(reg)
    swapped = optimal_exponents(AsymptoticRegime(a2, a1, d))
    assert swapped == pytest.approx((xi2, xi1, rate), abs=1e-15)
    assert d * (xi1 + xi2) + 2 * min(a1 * xi1, a2 * xi2) == pytest.approx(1.0, abs=1e-12)
    rep = check_conditions(PowerLawBandwidth(1.0, xi1), PowerLawBandwidth(1.0, xi2), reg)
    assert all(rep.status(c) == "satisfied" for c in ("2.7a", "2.7b", "2.7c"))
    assert rep.status("2.8a") == "boundary" and rep.status("2.8b") == "boundary"


def test_boundary_constants():
    reg = AsymptoticRegime(2, 2, 1)
    rep = check_conditions(PowerLawBandwidth(1.0, 1 / 6), PowerLawBandwidth(1.0, 1 / 6), reg)
    assert rep["2.8a"].limit == pytest.approx(1.0) and rep["2.8b"].limit == pytest.approx(1.0)
    rep = check_conditions(PowerLawBandwidth(2.0, 1 / 6), PowerLawBandwidth(0.5, 1 / 6), reg)
    assert rep["2.8a"].limit == pytest.approx(2.0**5 * 0.5)
    assert rep["2.8b"].limit == pytest.approx(2.0 * 0.5**5)


def test_undersmoothing_is_satisfied_and_oversmoothing_violated():
    reg = AsymptoticRegime(2, 2, 1)
    under = check_conditions(PowerLawBandwidth(1, 0.2), PowerLawBandwidth(1, 0.2), reg)
    assert under.status("2.8a") == "satisfied" and under["2.8a"].limit == 0.0
    over = check_conditions(PowerLawBandwidth(1, 0.1), PowerLawBandwidth(1, 0.1), reg)
    assert over.status("2.8a") == "violated"
    too_small = check_conditions(PowerLawBandwidth(1, 0.6), PowerLawBandwidth(1, 0.6), reg)
    assert too_small.status("2.7a") == "violated"


def test_fixed_bandwidth_violates_shrinkage():
    rep = check_conditions(PowerLawBandwidth(0.4, 0.0), PowerLawBandwidth(0.4, 0.0), AsymptoticRegime())
    assert rep.status("2.7b") == "violated" and rep.status("2.7c") == "violated"
    assert not rep.ok


def test_fixed_lag_violates_discretisation():
    rep = check_conditions(PowerLawBandwidth(1, 1 / 6), PowerLawBandwidth(1, 1 / 6), AsymptoticRegime(),
                           lag_exponent=0.0)
    assert rep.status("2.9a-2") == "violated"


def test_report_serialisation():
    rep = check_conditions(PowerLawBandwidth(1, 1 / 6), PowerLawBandwidth(1, 1 / 6), AsymptoticRegime())
    rows = rep.rows()
    assert rows[0][0] == "2.7a" and all(len(r) == 3 for r in rows)
    assert "2.8b" in rep.table() and "boundary" in rep.table()
    with pytest.raises(KeyError):
        rep["9.9"]


def test_continuous_conditions():
    rep = check_conditions_continuous(PowerLawBandwidth(1, 1 / 6), PowerLawBandwidth(1, 1 / 6),
                                      AsymptoticRegime())
    assert [r.cid for r in rep.results] == ["3.2a", "3.2b", "3.2c", "3.3a", "3.3b"]
    assert rep.status("3.3a") == "boundary"


def test_validation():
    with pytest.raises(ValueError):
        AsymptoticRegime(delta=0.0)
    with pytest.raises(ValueError):
        AsymptoticRegime(beta=2.5)
    with pytest.raises(ValueError):
        PowerLawBandwidth(1.0, -0.1)


def test_unreliable_threshold_examples():
    assert unreliable_threshold(1.0, 0.0025) == pytest.approx(0.25)
    assert unreliable_threshold(0.0, 0.0025) == 0.0
    assert unreliable_threshold(1.0, 0.01) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        unreliable_threshold(1.0, 0.0)
