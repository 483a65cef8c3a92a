import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadtest.core import utest
from quadtest.core.quantile import two_sided_critical_value
from quadtest.errors import ConfigError, DataError, DomainError, TuningError
from quadtest.models.basis_spec import BasisKind, BasisSpec
from quadtest.models.coefficients import SobolevDerivative
from quadtest.models.sample import Sample
from quadtest.models.solution import RegimeRate
from quadtest.models.spectral import ActiveSet, CoefficientMap
from quadtest.models.testing import INDEFINITE, SHARP, IndefiniteThresholdConfig, TestConfig, TestReport


def _active(rows):
    lattice = np.asarray(rows, dtype=np.int64)
    ones = np.ones(lattice.shape[0])
    return ActiveSet(1.0, lattice, ones, ones)


@given(seed=st.integers(min_value=0, max_value=10 ** 6), m=st.integers(min_value=2, max_value=12))
@settings(max_examples=40, deadline=None)
def test_factorised_form_matches_the_pair_sum(seed, m):
    rng = np.random.default_rng(seed)
    basis = BasisSpec(BasisKind.TENSOR, 2)
    active = _active([[1, 0], [-2, 1], [0, 3], [1, -1]])
    weights = rng.standard_normal(len(active))
    weights /= np.linalg.norm(weights)
    x = rng.standard_normal(m)
    points = rng.random((m, 2))
    fast = utest.u_statistic(x, points, weights, active, basis)
    slow = utest.u_statistic_pairwise(x, points, weights, active, basis)
    assert fast == pytest.approx(slow, rel=1e-9, abs=1e-12)


def test_u_statistic_by_hand(tensor1):
    """Two unit responses at t = 0 with phi_1(0) = sqrt(2): U = sqrt(2/2) * 2 = 2."""
    active = _active([[1]])
    value = utest.u_statistic(np.ones(2), np.zeros((2, 1)), np.array([1.0]), active, tensor1)
    assert value == pytest.approx(2.0)


def test_zero_responses_give_zero(tensor1, rng):
    active = _active([[1], [2]])
    w = np.array([0.6, 0.8])
    assert utest.u_statistic(np.zeros(10), rng.random((10, 1)), w, active, tensor1) == 0.0


def test_statistic_is_even_in_the_responses(tensor1, rng):
    active = _active([[1], [2]])
    w = np.array([0.6, 0.8])
    x, points = rng.standard_normal(20), rng.random((20, 1))
    assert utest.u_statistic(-x, points, w, active, tensor1) == pytest.approx(
        utest.u_statistic(x, points, w, active, tensor1))


def test_statistic_flips_with_the_weights(tensor1, rng):
    active = _active([[1], [2]])
    w = np.array([0.6, 0.8])
    x, points = rng.standard_normal(20), rng.random((20, 1))
    assert utest.u_statistic(x, points, -w, active, tensor1) == pytest.approx(
        -utest.u_statistic(x, points, w, active, tensor1))


def test_weights_must_have_unit_norm(tensor1, rng):
    active = _active([[1], [2]])
    with pytest.raises(DomainError):
        utest.u_statistic(rng.standard_normal(5), rng.random((5, 1)), np.array([1.0, 1.0]), active, tensor1)


def test_weights_must_match_the_index_set(tensor1, rng):
    with pytest.raises(DomainError):
        utest.u_statistic(rng.standard_normal(5), rng.random((5, 1)), np.array([1.0]), _active([[1], [2]]), tensor1)


def test_split_sizes(rng):
    sample = Sample(rng.random((10, 1)), rng.standard_normal(10))
    head, tail = utest.split_sample(sample)
    assert (head.n, tail.n) == (7, 3)
    np.testing.assert_array_equal(head.x, sample.x[:7])


def test_split_needs_four_observations(rng):
    with pytest.raises(DataError):
        utest.split_sample(Sample(rng.random((3, 1)), rng.standard_normal(3)))


def test_predicted_mean():
    active = _active([[1], [2]])
    theta = CoefficientMap(np.array([[2], [5]]), np.array([0.5, 1.0]))
    # only index 2 is shared: sqrt(10 * 9 / 2) * 0.8 * 0.5^2
    value = utest.predicted_mean(10, np.array([0.6, 0.8]), active, theta)
    assert value == pytest.approx(math.sqrt(45.0) * 0.2)


@pytest.fixture
def sharp_test(rough_config):
    return utest.SharpUTest(rough_config, 1000)


def test_sharp_threshold_is_the_normal_quantile(sharp_test):
    assert sharp_test.threshold == pytest.approx(two_sided_critical_value(0.1))
    assert sharp_test.threshold == pytest.approx(1.6448536269514722, abs=1e-9)
    assert sharp_test.m == 969
    assert np.linalg.norm(sharp_test.weights) == pytest.approx(1.0)


def test_sharp_run_reports_diagnostics(sharp_test, rng):
    sample = Sample(rng.random((1000, 1)), rng.standard_normal(1000))
    report = sharp_test.run(sample)
    assert report.mode == SHARP
    assert math.isfinite(report.statistic)
    assert report.diagnostics["pilot_size"] == 0
    assert report.diagnostics["pilot_branch"] == "sobolev"
    assert report.h_n_predicted is None


def test_sharp_run_rejects_a_different_sample_size(sharp_test, rng):
    with pytest.raises(DataError):
        sharp_test.run(Sample(rng.random((999, 1)), rng.standard_normal(999)))


def test_sharp_test_with_explicit_weights(rough_spec, tensor1, rng):
    active = _active([[1], [-1]])
    config = TestConfig(rough_spec, tensor1, 0.05, weights=np.array([0.6, 0.8]), weight_set=active)
    test = utest.SharpUTest(config, 50)
    assert test.solution is None
    report = test.run(Sample(rng.random((50, 1)), rng.standard_normal(50)))
    assert "T" not in report.diagnostics


def test_sharp_mode_refuses_signed_functionals(signed_toy, tensor1):
    with pytest.raises(DomainError):
        TestConfig(signed_toy, tensor1, 0.05, mode=SHARP)


def test_indefinite_test_needs_class_bounds(signed_toy, tensor1):
    config = TestConfig(signed_toy, tensor1, 0.1)
    assert config.mode == INDEFINITE
    with pytest.raises(ConfigError):
        utest.IndefiniteUTest(config, 100)


def test_default_class_bounds(signed_toy, tensor1):
    bounds = utest.default_class_bounds(signed_toy, tensor1, 10.0)
    assert bounds.D3 == pytest.approx(math.sqrt(2.0))
    assert bounds.D4 == pytest.approx(1.0)


def test_default_class_bounds_need_a_summable_ellipsoid(rough_spec, tensor1):
    with pytest.raises(ConfigError):
        utest.default_class_bounds(rough_spec, tensor1, 100.0)


def test_indefinite_threshold_formula():
    assert utest.indefinite_threshold(100, 10.0, 2.0, 0.1, 6.0, 4.0) == pytest.approx(5.0 + math.sqrt(2060.0))


@pytest.fixture
def indefinite(signed_toy, tensor1):
    bounds = utest.default_class_bounds(signed_toy, tensor1, 10.0)
    return utest.IndefiniteUTest(TestConfig(signed_toy, tensor1, 0.1, thresholds=bounds), 100)


def test_indefinite_test_setup(indefinite):
    """Both indices enter at T = 10, M = 2, D1 = 1 and D2 = 2."""
    assert indefinite.T == pytest.approx(10.0)
    assert indefinite.regime == RegimeRate.REGULAR
    assert indefinite.sums.M == pytest.approx(2.0)
    np.testing.assert_allclose(indefinite.weights, np.array([1.0, -1.0]) / math.sqrt(2.0))
    assert indefinite.thresholds.D1 == pytest.approx(1.0)
    assert indefinite.thresholds.D2 == pytest.approx(2.0)
    assert indefinite.thresholds.B1 == pytest.approx(102.0)
    assert indefinite.threshold == pytest.approx(utest.indefinite_threshold(100, 10.0, 2.0, 0.1, 102.0, 4.0))


def test_indefinite_run_flags_claims_below_the_guarantee(indefinite, rng):
    sample = Sample(rng.random((100, 1)), rng.standard_normal(100))
    report = indefinite.run(sample, claimed_rho2=1e-6)
    assert report.mode == INDEFINITE
    assert report.diagnostics["outside_guarantee"]
    assert report.diagnostics["guaranteed_rho2"] == pytest.approx(indefinite.guaranteed_rho2)


def test_indefinite_statistic_matches_the_test(indefinite, signed_toy, tensor1, rng):
    sample = Sample(rng.random((100, 1)), rng.standard_normal(100))
    direct = utest.indefinite_statistic(sample, signed_toy, tensor1, 10.0)
    assert indefinite.run(sample).statistic == pytest.approx(direct)


def test_indefinite_level_is_capped_by_the_root(signed_toy):
    T, regime = utest.indefinite_level(signed_toy, 100)
    assert T == pytest.approx(10.0)
    assert regime == RegimeRate.REGULAR


def test_indefinite_test_refuses_an_empty_index_set(two_sample_spec, two_sample_basis):
    config = TestConfig(two_sample_spec, two_sample_basis, 0.1, thresholds=IndefiniteThresholdConfig(D3=1.0, D4=1.0))
    with pytest.raises(TuningError) as info:
        utest.IndefiniteUTest(config, 2000)
    assert info.value.minimum_n > 2000
    with pytest.raises(TuningError):
        utest.indefinite_level(two_sample_spec, 2000)


def test_report_reject_semantics():
    assert TestReport(-3.0, 2.0, INDEFINITE).reject
    assert not TestReport(-3.0, 2.0, SHARP).reject
    assert TestReport(2.5, 2.0, SHARP).reject
    assert not TestReport(2.0, 2.0, SHARP).reject


def test_report_json_is_plain(tensor1):
    report = TestReport(1.0, 2.0, SHARP, diagnostics={"T": np.float64(3.0)})
    assert '"T": 3.0' in report.to_json()


def test_threshold_config_rejects_nonpositive_bounds():
    with pytest.raises(ConfigError):
        IndefiniteThresholdConfig(D3=0.0, D4=1.0)


def test_sharp_test_with_a_nonempty_pilot(rng):
    """The tail has floor(sqrt(20000)) = 141 points, so the pilot holds the two indices (0, +-1)."""
    spec = SobolevDerivative([2.0, 2.0], [0.5, 0.0])
    basis = BasisSpec(BasisKind.TENSOR, 2)
    test = utest.SharpUTest(TestConfig(spec, basis, 0.1), 20000)
    report = test.run(Sample(rng.random((20000, 2)), rng.standard_normal(20000)))
    assert report.diagnostics["pilot_size"] == 2
    assert report.diagnostics["pilot_size"] <= 0.25 * math.sqrt(141)
    assert math.isfinite(report.statistic)
