"""
Linear U-statistics and the two decision rules built on them.

The sharp test splits the sample, removes a pilot fit of the nuisance part
and thresholds the U-statistic with optimal weights at z_{1-gamma/2}. The
indefinite test uses the raw responses with signed weights q_l / sqrt(M(T))
and a nonasymptotic threshold.
"""

import logging
import math
from typing import Any, Dict, Optional, Tuple

import numpy as np

from quadtest.core import conditions, extremal, spectra
from quadtest.core.basis import basis_sup, default_grid_size, design_matrix, sup_sum_squares
from quadtest.core.estimator import pilot_branch, pilot_eval, pilot_fit, require_sample_dimension
from quadtest.core.quantile import two_sided_critical_value
from quadtest.errors import ConfigError, DataError, DomainError
from quadtest.models.basis_spec import BasisSpec
from quadtest.models.coefficients import CoefficientSpec
from quadtest.models.sample import Sample
from quadtest.models.solution import ExtremalSolution
from quadtest.models.spectral import ActiveSet, CoefficientMap
from quadtest.models.testing import (
    INDEFINITE,
    SHARP,
    IndefiniteThresholdConfig,
    TestConfig,
    TestReport,
)

logger = logging.getLogger(__name__)

WEIGHT_NORM_TOL = 1e-8


def split_sample(sample: Sample) -> Tuple[Sample, Sample]:
    """
    Deterministic split into the U-statistic head and the pilot tail.

    Args:
        sample (Sample): Full sample, n >= 4

    Returns:
        Tuple[Sample, Sample]: The first m = n - floor(sqrt(n)) points and the rest
    """
    if sample.n < 4:
        raise DataError(f"splitting needs n >= 4 observations, got {sample.n}")
    m = extremal.sample_split_size(sample.n)
    return sample.head(m), sample.tail(m)


def _check_weights(weights: np.ndarray, active: ActiveSet) -> np.ndarray:
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(active),):
        raise DomainError(f"{weights.size} weights for {len(active)} indices")
    norm = float(np.linalg.norm(weights))
    if abs(norm - 1.0) > WEIGHT_NORM_TOL:
        raise DomainError(f"weights must have unit Euclidean norm, got {norm:.12g}")
    return weights


def _check_statistic_inputs(x: np.ndarray, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float).reshape(-1)
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    if x.size < 2:
        raise DomainError(f"the U-statistic needs m >= 2 observations, got {x.size}")
    if points.shape[0] != x.size:
        raise DomainError(f"{points.shape[0]} points for {x.size} responses")
    return x, points


def u_statistic(x: np.ndarray, points: np.ndarray, weights: np.ndarray, active: ActiveSet,
                basis: BasisSpec) -> float:
    """
    Weighted U-statistic in factorised form.

    U = sum_l w_l [(sum_i x_i phi_l(t_i))^2 - sum_i x_i^2 phi_l(t_i)^2] / sqrt(2 m (m-1)),
    which equals sqrt(2/(m(m-1))) sum_{i<j} x_i x_j sum_l w_l phi_l(t_i) phi_l(t_j).

    Args:
        x (np.ndarray): Adjusted responses, shape (m,)
        points (np.ndarray): Design points, shape (m, D)
        weights (np.ndarray): Unit-norm weights on the rows of ``active``
        active (ActiveSet): Index set
        basis (BasisSpec): Fourier system

    Returns:
        float: The statistic
    """
    x, points = _check_statistic_inputs(x, points)
    weights = _check_weights(weights, active)
    m = x.size
    phi = design_matrix(basis, active, points)
    sums = x @ phi
    diagonal = (x * x) @ (phi * phi)
    return float(weights @ (sums * sums - diagonal)) / math.sqrt(2.0 * m * (m - 1))


def u_statistic_pairwise(x: np.ndarray, points: np.ndarray, weights: np.ndarray, active: ActiveSet,
                         basis: BasisSpec) -> float:
    """Reference O(m^2 K) evaluation of the same statistic as a sum over pairs."""
    x, points = _check_statistic_inputs(x, points)
    weights = _check_weights(weights, active)
    m = x.size
    phi = design_matrix(basis, active, points)
    kernel = (phi * weights) @ phi.T
    total = 0.0
    for i in range(m - 1):
        total += x[i] * float(x[i + 1:] @ kernel[i, i + 1:])
    return math.sqrt(2.0 / (m * (m - 1))) * total


def predicted_mean(m: int, weights: np.ndarray, active: ActiveSet, theta: CoefficientMap) -> float:
    """h_n[f, w] = sqrt(m(m-1)/2) sum_l w_l theta_l^2."""
    aligned = theta.aligned(active)
    return math.sqrt(m * (m - 1) / 2.0) * float(weights @ (aligned * aligned))


class SharpUTest:
    """
    The sharp linear U-test with weights fixed for a sample size.

    Weights are the tuned optimal weights unless explicit ones are configured.

    Args:
        config (TestConfig): Test configuration in sharp mode
        n (int): Sample size the test is built for
        solution (Optional[ExtremalSolution]): Precomputed extremal solution
    """
    __test__ = False

    def __init__(self, config: TestConfig, n: int, solution: Optional[ExtremalSolution] = None):
        if config.mode != SHARP:
            raise ConfigError(f"SharpUTest needs mode '{SHARP}', got '{config.mode}'")
        if n < 4:
            raise DomainError(f"n >= 4 is required, got {n}")
        self.config = config
        self.n = n
        self.m = extremal.sample_split_size(n)
        self.threshold = two_sided_critical_value(config.gamma)
        self.branch = pilot_branch(config.spec)
        if config.weights is not None:
            self.solution = None
            self.active = config.weight_set
            self.weights = _check_weights(config.weights, config.weight_set)
        else:
            self.solution = solution or extremal.separation_rate(
                config.spec, n, config.gamma, config.basis, self.branch, check_branch=True,
                max_box_side=config.max_box_side)
            self.active = self.solution.active
            self.weights = self.solution.weights

    def adjusted_head(self, sample: Sample) -> Tuple[Sample, int]:
        """Head of the split with the pilot fit removed, and the pilot size."""
        head, tail = split_sample(sample)
        pilot = pilot_fit(tail, self.config.spec, self.config.basis, self.config.T_pilot,
                          self.config.pilot_cap_fraction, self.config.pilot_exponent, self.config.max_box_side)
        if len(pilot) == 0:
            return head, 0
        return Sample(head.points, head.x - pilot_eval(pilot, self.config.basis, head.points)), len(pilot)

    def run(self, sample: Sample, theta: Optional[CoefficientMap] = None) -> TestReport:
        """
        Run the test on a sample.

        Args:
            sample (Sample): Observations, n must match the test
            theta (Optional[CoefficientMap]): True coefficients, enables the predicted mean

        Returns:
            TestReport: Statistic, threshold and diagnostics
        """
        require_sample_dimension(sample, self.config.basis)
        if sample.n != self.n:
            raise DataError(f"the test was built for n = {self.n}, the sample has {sample.n} observations")
        if self.config.tau != 1.0:
            sample = sample.rescaled(self.config.tau)
        head, pilot_size = self.adjusted_head(sample)
        statistic = u_statistic(head.x, head.points, self.weights, self.active, self.config.basis)
        h_n = None if theta is None else predicted_mean(self.m, self.weights, self.active, theta)
        return TestReport(statistic, self.threshold, SHARP, h_n, self.diagnostics(pilot_size))

    def diagnostics(self, pilot_size: int = 0) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "n": self.n,
            "m": self.m,
            "gamma": self.config.gamma,
            "count": len(self.active),
            "pilot_size": pilot_size,
            "pilot_branch": self.branch,
        }
        if self.solution is not None:
            data.update({
                "T": self.solution.T,
                "rate": self.solution.rate,
                "conditions": [check.to_dict() for check in self.solution.conditions],
            })
        return data


def sharp_test(sample: Sample, config: TestConfig, theta: Optional[CoefficientMap] = None) -> TestReport:
    """Build a SharpUTest for the sample size and run it once."""
    return SharpUTest(config, sample.n).run(sample, theta)


def indefinite_threshold(n: int, T: float, M: float, gamma: float, B1: float, B2: float) -> float:
    """u = n / (T sqrt(2 M)) + gamma^{-1/2} (B1 + B2 n / M)^{1/2}."""
    return n / (T * math.sqrt(2.0 * M)) + (B1 + B2 * n / M) ** 0.5 / math.sqrt(gamma)


def indefinite_weights(active: ActiveSet) -> np.ndarray:
    """Signed weights q_l / sqrt(M(T)), unit norm by construction."""
    M = float(active.q @ active.q)
    if M <= 0:
        raise DomainError(f"N(T) is empty at T = {active.threshold:.6g}")
    return active.q / math.sqrt(M)


def indefinite_statistic(sample: Sample, spec: CoefficientSpec, basis: BasisSpec, T: float,
                         max_box_side: int = spectra.DEFAULT_MAX_BOX_SIDE) -> float:
    """
    U_n(T) = binom(n, 2)^{-1/2} sum_{i<j} x_i x_j G_T(t_i, t_j) on the raw responses.

    Args:
        sample (Sample): Observations
        spec (CoefficientSpec): Coefficient family
        basis (BasisSpec): Fourier system
        T (float): Truncation level

    Returns:
        float: The statistic
    """
    require_sample_dimension(sample, basis)
    active = spectra.active_set(spec, T, max_box_side)
    return u_statistic(sample.x, sample.points, indefinite_weights(active), active, basis)


def indefinite_level(spec: CoefficientSpec, n: int,
                     max_box_side: int = spectra.DEFAULT_MAX_BOX_SIDE) -> Tuple[float, str]:
    """T_n = min(T_n^0, sqrt(n)) and the regime tag; also defined for one-signed families."""
    T_n, _, regime = extremal.indefinite_regime(spec, n, max_box_side)
    return T_n, regime


def default_class_bounds(spec: CoefficientSpec, basis: BasisSpec, T: float,
                         max_box_side: int = spectra.DEFAULT_MAX_BOX_SIDE) -> IndefiniteThresholdConfig:
    """
    Documented class bounds D3 and D4 for the ellipsoid.

    With D5 = sup|phi| (R sum 1/c_l)^{1/2} bounding ||f||_inf over the
    ellipsoid of radius R, D3 = D5 and D4 = D5 (R max_{N(T)} q_l^2/c_l)^{1/2}.

    Args:
        spec (CoefficientSpec): Coefficient family
        basis (BasisSpec): Fourier system
        T (float): Truncation level of the test

    Returns:
        IndefiniteThresholdConfig: D3 and D4 filled in
    """
    inverse_sum = spectra.ellipsoid_sum_inverse(spec)
    if math.isinf(inverse_sum):
        raise ConfigError("default class bounds need sum 1/c_l < infinity, i.e. sigma_bar > d/2; supply D3 and D4")
    radius = spec.ellipsoid_radius()
    D5 = basis_sup(basis) * math.sqrt(radius * inverse_sum)
    active = spectra.active_set(spec, T, max_box_side)
    top = float(np.max(active.q ** 2 / active.c)) if len(active) else 0.0
    D4 = D5 * math.sqrt(radius * top) if top > 0 else D5
    return IndefiniteThresholdConfig(D3=D5, D4=D4)


class IndefiniteUTest:
    """
    The test for indefinite functionals with the nonasymptotic threshold.

    Args:
        config (TestConfig): Test configuration in indefinite mode
        n (int): Sample size the test is built for
    """
    __test__ = False

    def __init__(self, config: TestConfig, n: int):
        if config.mode != INDEFINITE:
            raise ConfigError(f"IndefiniteUTest needs mode '{INDEFINITE}', got '{config.mode}'")
        if config.thresholds is None or config.thresholds.D3 is None or config.thresholds.D4 is None:
            raise ConfigError("the indefinite test needs the class bounds D3 and D4")
        self.config = config
        self.n = n
        spec = config.spec
        if config.T is not None:
            self.T = float(config.T)
            self.regime = None
        else:
            self.T, self.regime = indefinite_level(spec, n, config.max_box_side)
        self.active = spectra.active_set(spec, self.T, config.max_box_side)
        self.weights = indefinite_weights(self.active)
        self.sums = spectra.spectral_sums(self.active)
        points = default_grid_size(config.basis, self.active) ** config.basis.dimension
        if points * len(self.active) <= extremal.SUP_SUM_BUDGET:
            sup_sum = sup_sum_squares(config.basis, self.active)
        else:
            sup_sum = config.basis.c3_bound * len(self.active)
        self.checks = conditions.indefinite_conditions(self.active, self.sums, sup_sum)
        D1 = self.checks[0].value
        D2 = self.checks[1].value
        self.thresholds = config.thresholds.with_computed(D1, D2)
        M = self.sums.M
        self.threshold = indefinite_threshold(n, self.T, M, config.gamma, self.thresholds.B1, self.thresholds.B2)
        self.guaranteed_rho2 = extremal.guaranteed_rho2(n, config.gamma, self.thresholds.B1, self.thresholds.B2,
                                                        M, self.T)
        attainable = max(self.sums.max_q_over_c, 1.0 / self.T) * spec.ellipsoid_radius()
        self.guarantee_vacuous = self.guaranteed_rho2 > attainable
        if self.guarantee_vacuous:
            logger.warning("guaranteed rho^2 = %.4g exceeds the largest attainable |Q[f]| = %.4g",
                           self.guaranteed_rho2, attainable)
        logger.info("indefinite test at T = %.6g with |N(T)| = %d, threshold %.6g",
                    self.T, len(self.active), self.threshold)

    def run(self, sample: Sample, claimed_rho2: Optional[float] = None,
            theta: Optional[CoefficientMap] = None) -> TestReport:
        """
        Run the test on a sample.

        Args:
            sample (Sample): Observations
            claimed_rho2 (Optional[float]): Separation the caller wants certified
            theta (Optional[CoefficientMap]): True coefficients, enables the predicted mean

        Returns:
            TestReport: Statistic, threshold and diagnostics
        """
        require_sample_dimension(sample, self.config.basis)
        if sample.n != self.n:
            raise DataError(f"the test was built for n = {self.n}, the sample has {sample.n} observations")
        if self.config.tau != 1.0:
            sample = sample.rescaled(self.config.tau)
        statistic = u_statistic(sample.x, sample.points, self.weights, self.active, self.config.basis)
        h_n = None if theta is None else predicted_mean(self.n, self.weights, self.active, theta)
        return TestReport(statistic, self.threshold, INDEFINITE, h_n, self.diagnostics(claimed_rho2))

    def diagnostics(self, claimed_rho2: Optional[float] = None) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "n": self.n,
            "gamma": self.config.gamma,
            "T": self.T,
            "regime": self.regime,
            "count": len(self.active),
            "M": self.sums.M,
            "thresholds": self.thresholds.to_dict(),
            "conditions": [check.to_dict() for check in self.checks],
            "guaranteed_rho2": self.guaranteed_rho2,
            "guarantee_vacuous": self.guarantee_vacuous,
        }
        if claimed_rho2 is not None:
            data["outside_guarantee"] = claimed_rho2 < self.guaranteed_rho2
        return data


def indefinite_test(sample: Sample, config: TestConfig, claimed_rho2: Optional[float] = None) -> TestReport:
    """Build an IndefiniteUTest for the sample size and run it once."""
    return IndefiniteUTest(config, sample.n).run(sample, claimed_rho2)


def build_test(config: TestConfig, n: int):
    """The reusable test object for the configured mode."""
    if config.mode == SHARP:
        return SharpUTest(config, n)
    return IndefiniteUTest(config, n)


def run_test(sample: Sample, config: TestConfig) -> TestReport:
    """Dispatch on the configured mode."""
    return build_test(config, sample.n).run(sample)
