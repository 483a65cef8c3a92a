"""
Data generation under the regression model and Monte Carlo campaigns.

Every replication draws from its own child of numpy.random.SeedSequence(seed),
so results do not depend on the number of worker threads or their order.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Union

import numpy as np
from scipy.stats import kstest

from quadtest.core import utest
from quadtest.core.basis import design_matrix
from quadtest.errors import DomainError, InfeasibleSeparationError, MonteCarloError, NumericalError, QuadTestError
from quadtest.models.basis_spec import BasisSpec
from quadtest.models.sample import NoiseSpec, Sample
from quadtest.models.simulation import ALTERNATIVE, NULL, ErrorEstimates, ReplicationRecord, WilksDiagnostic
from quadtest.models.solution import ExtremalSolution
from quadtest.models.spectral import ActiveSet, CoefficientMap
from quadtest.models.testing import TestConfig

logger = logging.getLogger(__name__)

MIN_REPLICATIONS = 100
FEASIBILITY_TOL = 1e-9

Seed = Union[int, np.random.SeedSequence]
TestObject = Union[utest.SharpUTest, utest.IndefiniteUTest]


def _support(theta: CoefficientMap) -> ActiveSet:
    zeros = np.zeros(len(theta))
    return ActiveSet(0.0, theta.lattice, zeros, zeros, theta.tags)


def regression_function(theta: CoefficientMap, basis: BasisSpec, points: np.ndarray) -> np.ndarray:
    """f(t) = sum_l theta_l phi_l(t) at the rows of ``points``."""
    if len(theta) == 0:
        return np.zeros(np.asarray(points).shape[0])
    return design_matrix(basis, _support(theta), points) @ theta.values


def generate_data(theta: CoefficientMap, basis: BasisSpec, n: int, noise: Optional[NoiseSpec] = None,
                  seed: Seed = 0) -> Sample:
    """
    Draw x_i = f(t_i) + xi_i with t_i iid uniform on the unit cube.

    Args:
        theta (CoefficientMap): Finitely supported coefficients of f
        basis (BasisSpec): Fourier system
        n (int): Sample size
        noise (Optional[NoiseSpec]): Noise law, standard Gaussian by default
        seed: Integer seed or a SeedSequence child

    Returns:
        Sample: The generated observations
    """
    if n < 2:
        raise DomainError(f"n >= 2 is required, got {n}")
    noise = noise or NoiseSpec()
    rng = np.random.default_rng(seed)
    points = rng.random((n, basis.point_dimension))
    x = regression_function(theta, basis, points) + noise.draw(rng, n)
    return Sample(points, x)


def _replicate(test, theta: CoefficientMap, basis: BasisSpec, n: int, noise: NoiseSpec,
               seed: np.random.SeedSequence, rep: int, hypothesis: str) -> ReplicationRecord:
    try:
        report = test.run(generate_data(theta, basis, n, noise, seed))
    except QuadTestError as exc:
        raise MonteCarloError(exc.message, rep, hypothesis) from exc
    return ReplicationRecord(rep, report.statistic, report.threshold, report.reject, hypothesis)


def _campaign(test, theta: CoefficientMap, basis: BasisSpec, n: int, noise: NoiseSpec,
              seeds: List[np.random.SeedSequence], hypothesis: str, threads: int) -> List[ReplicationRecord]:
    def one(rep: int) -> ReplicationRecord:
        return _replicate(test, theta, basis, n, noise, seeds[rep], rep, hypothesis)

    if threads <= 1:
        records = [one(rep) for rep in range(len(seeds))]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(one, range(len(seeds))))
    logger.info("%s campaign finished: %d replications, %d rejections", hypothesis, len(records),
                sum(r.reject for r in records))
    return records


def monte_carlo(config: TestConfig, f_null: CoefficientMap, f_alt: Optional[CoefficientMap], reps: int,
                seed: int, n: int, noise: Optional[NoiseSpec] = None, threads: int = 1,
                test: Optional[TestObject] = None) -> ErrorEstimates:
    """
    Empirical type I and type II error rates of the configured test.

    The test object is built once for n, so weights and thresholds are not
    re-tuned per replication.

    Args:
        config (TestConfig): Test configuration
        f_null (CoefficientMap): A function with Q[f] = 0
        f_alt (Optional[CoefficientMap]): A separated alternative, or None for a null-only campaign
        reps (int): Replications per campaign, at least 100
        seed (int): Master seed
        n (int): Sample size
        noise (Optional[NoiseSpec]): Noise law
        threads (int): Worker threads
        test: A test already built for n, reused instead of building one

    Returns:
        ErrorEstimates: Rates, standard errors and per-replication records
    """
    if reps < MIN_REPLICATIONS:
        raise DomainError(f"reps >= {MIN_REPLICATIONS} is required, got {reps}")
    noise = noise or NoiseSpec()
    test = test or utest.build_test(config, n)
    children = np.random.SeedSequence(seed).spawn(2 * reps)
    records = _campaign(test, f_null, config.basis, n, noise, children[:reps], NULL, threads)
    if f_alt is not None:
        records += _campaign(test, f_alt, config.basis, n, noise, children[reps:], ALTERNATIVE, threads)
    estimates = ErrorEstimates(records, reps, seed)
    logger.info("Monte Carlo estimates: %s", estimates)
    return estimates


def wilks_diagnostic(config: TestConfig, reps: int, seed: int, n: int, noise: Optional[NoiseSpec] = None,
                     threads: int = 1) -> WilksDiagnostic:
    """
    Kolmogorov-Smirnov distance between the null statistic and N(0, 1).

    Args:
        config (TestConfig): Test configuration
        reps (int): Replications under f = 0
        seed (int): Master seed
        n (int): Sample size
        noise (Optional[NoiseSpec]): Noise law
        threads (int): Worker threads

    Returns:
        WilksDiagnostic: KS distance, p-value and the replicate statistics
    """
    if reps < 2:
        raise DomainError(f"reps >= 2 is required, got {reps}")
    noise = noise or NoiseSpec()
    test = utest.build_test(config, n)
    zero = CoefficientMap.zero(config.spec.dimension, config.spec.two_sample)
    seeds = np.random.SeedSequence(seed).spawn(reps)
    return wilks_from_records(_campaign(test, zero, config.basis, n, noise, seeds, NULL, threads))


def wilks_from_records(records: List[ReplicationRecord]) -> WilksDiagnostic:
    """KS comparison of the null replications in a record list with N(0, 1)."""
    null = [r for r in records if r.hypothesis == NULL]
    if len(null) < 2:
        raise DomainError(f"at least two null replications are required, got {len(null)}")
    statistics = [r.statistic for r in null]
    result = kstest(statistics, "norm")
    reject_rate = sum(r.reject for r in null) / len(null)
    return WilksDiagnostic(float(result.statistic), float(result.pvalue), statistics, reject_rate)


def least_favorable_alternative(solution: ExtremalSolution) -> CoefficientMap:
    """
    theta_l = +sqrt(v*_l) on N(T).

    The result lies on the ellipsoid boundary, <c, theta^2> = 1, and has
    <q, theta^2> = r*^2.

    Args:
        solution (ExtremalSolution): Tuned extremal solution

    Returns:
        CoefficientMap: Coefficients of the least-favorable function
    """
    v = solution.least_favorable
    active = solution.active
    ellipsoid = float(active.c @ v)
    functional = float(np.abs(active.q) @ v)
    target = solution.rate ** 2
    if ellipsoid > 1.0 + FEASIBILITY_TOL or not math.isclose(functional, target, rel_tol=1e-8):
        raise NumericalError(
            f"least-favorable profile is infeasible: <c, v> = {ellipsoid:.12g}, <q, v> = {functional:.12g}",
            {"rate2": target})
    return CoefficientMap.on(active, np.sqrt(v))


def separated_alternative(active: ActiveSet, rho2: float, radius: float = 1.0) -> CoefficientMap:
    """
    A one-coefficient function with |Q[f]| = rho2 inside the ellipsoid of the given radius.

    The coefficient sits on the row of ``active`` with the largest |q_l| / c_l,
    which needs the least ellipsoid budget.

    Args:
        active (ActiveSet): Candidate indices, usually N(T)
        rho2 (float): Target |Q[f]|
        radius (float): Ellipsoid radius

    Returns:
        CoefficientMap: theta with theta_k^2 = rho2 / |q_k|
    """
    if len(active) == 0:
        raise DomainError("no index available for the alternative")
    k = int(np.argmax(np.abs(active.q) / active.c))
    theta2 = rho2 / abs(float(active.q[k]))
    if active.c[k] * theta2 > radius * (1.0 + FEASIBILITY_TOL):
        raise InfeasibleSeparationError(
            f"|Q[f]| = {rho2:.6g} is not attainable inside the ellipsoid of radius {radius:g}",
            endpoint=radius * abs(float(active.q[k])) / float(active.c[k]))
    values = np.zeros(len(active))
    values[k] = math.sqrt(theta2)
    support = values != 0
    return CoefficientMap(active.lattice[support], values[support],
                          None if active.tags is None else active.tags[support])
