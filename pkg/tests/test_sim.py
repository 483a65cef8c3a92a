import math

import numpy as np
import pytest

from quadtest.core import sim, spectra, utest
from quadtest.errors import DataError, DomainError, InfeasibleSeparationError, MonteCarloError
from quadtest.models.sample import NoiseKind, NoiseSpec
from quadtest.models.simulation import ALTERNATIVE, NULL
from quadtest.models.coefficients import TwoSampleNorm
from quadtest.models.spectral import ActiveSet, CoefficientMap
from quadtest.models.testing import TestConfig

SQRT2 = math.sqrt(2.0)


@pytest.fixture
def pair_config(rough_spec, tensor1):
    """Explicit weights on the first conjugate pair; no tuning needed."""
    lattice = np.array([[-1], [1]])
    ones = np.ones(2)
    return TestConfig(rough_spec, tensor1, 0.1, weights=np.array([0.6, 0.8]),
                      weight_set=ActiveSet(1.0, lattice, ones, ones))


def test_regression_function_at_the_origin(tensor1):
    theta = CoefficientMap(np.array([[1]]), np.array([1.0]))
    assert sim.regression_function(theta, tensor1, np.zeros((1, 1)))[0] == pytest.approx(SQRT2)


def test_zero_function(tensor1):
    zero = CoefficientMap.zero(1)
    np.testing.assert_array_equal(sim.regression_function(zero, tensor1, np.full((3, 1), 0.2)), np.zeros(3))


def test_generated_data_is_deterministic(tensor1):
    theta = CoefficientMap(np.array([[2]]), np.array([0.3]))
    first = sim.generate_data(theta, tensor1, 50, seed=7)
    second = sim.generate_data(theta, tensor1, 50, seed=7)
    np.testing.assert_array_equal(first.points, second.points)
    np.testing.assert_array_equal(first.x, second.x)
    assert not np.array_equal(first.x, sim.generate_data(theta, tensor1, 50, seed=8).x)


def test_generated_points_lie_in_the_cube(two_sample_basis):
    sample = sim.generate_data(CoefficientMap.zero(1, tagged=True), two_sample_basis, 100, seed=1)
    assert sample.points.shape == (100, 2)
    assert sample.points.min() >= 0.0 and sample.points.max() <= 1.0


def test_generation_needs_two_observations(tensor1):
    with pytest.raises(DomainError):
        sim.generate_data(CoefficientMap.zero(1), tensor1, 1)


def test_rademacher_noise_takes_two_values(rng):
    values = NoiseSpec(NoiseKind.RADEMACHER).draw(rng, 1000)
    assert set(np.unique(values).tolist()) == {-1.0, 1.0}


@pytest.mark.parametrize("kind", [NoiseKind.GAUSSIAN, NoiseKind.RADEMACHER, NoiseKind.STUDENT])
def test_noise_has_unit_variance(kind, rng):
    values = NoiseSpec(kind).draw(rng, 200000)
    assert values.mean() == pytest.approx(0.0, abs=0.02)
    assert values.var() == pytest.approx(1.0, rel=0.05)


def test_student_noise_needs_a_finite_fourth_moment():
    with pytest.raises(DomainError):
        NoiseSpec(NoiseKind.STUDENT, df=4.0)
    assert NoiseSpec(NoiseKind.STUDENT).fourth_moment == pytest.approx(3.0 * 7.0 / 5.0)


def test_least_favorable_alternative_is_on_the_boundary(rough_solution):
    theta = sim.least_favorable_alternative(rough_solution)
    squares = theta.values ** 2
    assert float(rough_solution.active.c @ squares) == pytest.approx(1.0)
    assert float(rough_solution.active.q @ squares) == pytest.approx(rough_solution.rate ** 2)
    assert np.all(theta.values >= 0)


def test_separated_alternative_uses_the_cheapest_index(toy_list):
    active = spectra.active_set(toy_list, 7.0)
    theta = sim.separated_alternative(active, 0.5)
    assert theta.keys() == [(1,)]
    assert theta.values[0] == pytest.approx(math.sqrt(0.5))


def test_separated_alternative_outside_the_ellipsoid(toy_list):
    active = spectra.active_set(toy_list, 7.0)
    with pytest.raises(InfeasibleSeparationError) as info:
        sim.separated_alternative(active, 2.0)
    assert info.value.endpoint == pytest.approx(1.0)


def test_separated_alternative_for_a_signed_family(signed_toy):
    theta = sim.separated_alternative(spectra.active_set(signed_toy, 10.0), 0.1)
    assert len(theta) == 1
    assert theta.values[0] == pytest.approx(math.sqrt(0.1))


def test_monte_carlo_needs_enough_replications(pair_config):
    with pytest.raises(DomainError):
        sim.monte_carlo(pair_config, CoefficientMap.zero(1), None, 99, seed=0, n=50)


def test_monte_carlo_records(pair_config):
    alt = CoefficientMap(np.array([[1]]), np.array([0.5]))
    estimates = sim.monte_carlo(pair_config, CoefficientMap.zero(1), alt, 100, seed=3, n=50)
    assert len(estimates.records) == 200
    assert [r.hypothesis for r in estimates.records[:100]] == [NULL] * 100
    assert estimates.records[100].hypothesis == ALTERNATIVE
    assert 0.0 <= estimates.type1 <= 1.0
    assert estimates.cumulative == pytest.approx(estimates.type1 + estimates.type2)
    assert estimates.type1_se == pytest.approx(math.sqrt(estimates.type1 * (1 - estimates.type1) / 100))


def test_results_do_not_depend_on_the_thread_count(pair_config):
    zero = CoefficientMap.zero(1)
    serial = sim.monte_carlo(pair_config, zero, None, 100, seed=11, n=60, threads=1)
    pooled = sim.monte_carlo(pair_config, zero, None, 100, seed=11, n=60, threads=4)
    assert [r.statistic for r in serial.records] == [r.statistic for r in pooled.records]
    assert serial.type2 is None


class _BrokenTest:
    def run(self, sample):
        raise DataError("cannot run")


def test_failing_replication_is_reported(pair_config):
    with pytest.raises(MonteCarloError) as info:
        sim.monte_carlo(pair_config, CoefficientMap.zero(1), None, 100, seed=0, n=50, test=_BrokenTest())
    assert info.value.message.startswith("replication 0 (null)")
    assert info.value.replication == 0


def test_wilks_needs_null_records():
    with pytest.raises(DomainError):
        sim.wilks_from_records([])


@pytest.mark.slow
def test_sharp_test_controls_both_errors(rough_config, rough_solution):
    alt = sim.least_favorable_alternative(rough_solution)
    estimates = sim.monte_carlo(rough_config, CoefficientMap.zero(1), alt, 200, seed=2024, n=1000, threads=4)
    assert estimates.type1 <= 0.1
    assert estimates.cumulative <= 0.25


@pytest.mark.slow
def test_null_statistic_is_close_to_standard_normal(rough_config):
    wilks = sim.wilks_diagnostic(rough_config, 300, seed=99, n=1000, threads=4)
    assert wilks.pvalue > 1e-3
    assert wilks.variance == pytest.approx(1.0, rel=0.3)
    assert len(wilks.statistics) == 300


def _statistics(theta, weights, active, basis, m, reps, seed, noise=None):
    values = []
    for rep in range(reps):
        sample = sim.generate_data(theta, basis, m, noise, seed=seed * 100000 + rep)
        values.append(utest.u_statistic(sample.x, sample.points, weights, active, basis))
    return np.array(values)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_statistic_mean_is_the_predicted_shift(tensor1, seed):
    rng = np.random.default_rng(seed)
    lattice = np.array([[1], [-2], [3]])
    ones = np.ones(3)
    active = ActiveSet(1.0, lattice, ones, ones)
    weights = rng.random(3) + 0.1
    weights /= np.linalg.norm(weights)
    theta = CoefficientMap(lattice, rng.uniform(0.1, 0.2, size=3))
    m, reps = 200, 2000
    values = _statistics(theta, weights, active, tensor1, m, reps, seed)
    expected = utest.predicted_mean(m, weights, active, theta)
    assert expected > 1.0
    assert values.mean() == pytest.approx(expected, abs=4.0 * values.std() / math.sqrt(reps))


@pytest.mark.parametrize("kind", [NoiseKind.GAUSSIAN, NoiseKind.RADEMACHER])
def test_null_statistic_has_unit_variance(tensor1, kind):
    """Var U = sum w_l^2 E[xi^2]^2 = 1 under f = 0 for any unit-variance noise."""
    lattice = np.array([[1], [-1], [2]])
    ones = np.ones(3)
    active = ActiveSet(1.0, lattice, ones, ones)
    weights = np.array([0.6, 0.0, 0.8])
    reps = 2000
    values = _statistics(CoefficientMap.zero(1), weights, active, tensor1, 200, reps, 17, NoiseSpec(kind))
    assert values.mean() == pytest.approx(0.0, abs=4.0 / math.sqrt(reps))
    assert values.var(ddof=1) == pytest.approx(1.0, abs=0.13)


@pytest.mark.slow
def test_rademacher_null_statistic_is_close_to_standard_normal(rough_config):
    wilks = sim.wilks_diagnostic(rough_config, 1000, seed=7, n=1000, noise=NoiseSpec(NoiseKind.RADEMACHER),
                                 threads=4)
    assert wilks.pvalue > 1e-3
    assert wilks.variance == pytest.approx(1.0, abs=0.15)


@pytest.mark.slow
def test_indefinite_null_campaign_on_a_feasible_two_sample_setting(two_sample_basis):
    """sqrt(2000) exceeds the entry level (2 pi)^1.2, so N(T_n) holds the twelve indices |m| <= 3."""
    spec = TwoSampleNorm([0.6], [0.0])
    T_n, _ = utest.indefinite_level(spec, 2000)
    config = TestConfig(spec, two_sample_basis, 0.1, thresholds=utest.default_class_bounds(spec, two_sample_basis, T_n))
    test = utest.IndefiniteUTest(config, 2000)
    assert test.T == pytest.approx(math.sqrt(2000.0))
    assert len(test.active) == 12
    estimates = sim.monte_carlo(config, CoefficientMap.zero(1, tagged=True), None, 200, seed=31, n=2000,
                                threads=4, test=test)
    assert estimates.type1 <= 0.1 / 2.0 + 0.03
