"""
Lower-bound constructions used as empirical sanity checks.

The Gaussian prior places independent N(0, (1 - delta) v_l) coefficients on
N(T); the two-point pair perturbs a null function with Q[f0] = 0 along its
positive coordinate.
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from quadtest.core import conditions, extremal, spectra
from quadtest.core.basis import sup_sum_squares
from quadtest.core.quantile import normal_cdf
from quadtest.errors import DomainError
from quadtest.models.basis_spec import BasisSpec
from quadtest.models.coefficients import CoefficientSpec, FiniteList
from quadtest.models.lower import PriorSpec, TwoPointPair
from quadtest.models.solution import ConditionCheck
from quadtest.models.spectral import ActiveSet, CoefficientMap

logger = logging.getLogger(__name__)

# Extra factor on T once both sign classes are present, so the argmin of c
# inside each class is not cut off by the active-set condition.
SIGN_CLASS_MARGIN = 16.0
MAX_DOUBLINGS = 60


def least_favorable_prior(spec: CoefficientSpec, T: float, delta: float,
                          max_box_side: int = spectra.DEFAULT_MAX_BOX_SIDE) -> PriorSpec:
    """
    The prior with a_l = (1 - delta) v*_l on N(T).

    Args:
        spec (CoefficientSpec): Nonnegative coefficient family
        T (float): Truncation level
        delta (float): Shrinkage in (0, 1]

    Returns:
        PriorSpec: The prior
    """
    extremal.require_nonnegative(spec)
    active = spectra.active_set(spec, T, max_box_side)
    _, v, _ = extremal.optimal_profile(active, T)
    return PriorSpec(active, (1.0 - delta) * v, delta)


def prior_sample(spec: CoefficientSpec, T: float, delta: float, seed: int,
                 max_box_side: int = spectra.DEFAULT_MAX_BOX_SIDE) -> CoefficientMap:
    """
    One draw of theta from the least-favorable prior.

    Args:
        spec (CoefficientSpec): Nonnegative coefficient family
        T (float): Truncation level
        delta (float): Shrinkage in (0, 1]
        seed (int): Seed of the draw

    Returns:
        CoefficientMap: The drawn coefficients on N(T)
    """
    prior = least_favorable_prior(spec, T, delta, max_box_side)
    values = prior.draw(np.random.default_rng(seed))[0]
    return CoefficientMap.on(prior.active, values)


def prior_draws(prior: PriorSpec, draws: int, seed: int) -> np.ndarray:
    """Independent prior draws of shape (draws, K)."""
    return prior.draw(np.random.default_rng(seed), draws)


def membership_frequency(draws: np.ndarray, prior: PriorSpec, C: float, r_star: float) -> float:
    """
    Fraction of draws inside the alternative {<c, theta^2> <= 1, <q, theta^2> >= (C r*)^2}.

    Args:
        draws (np.ndarray): Draws of shape (R, K) on the prior's index set
        prior (PriorSpec): The prior the draws come from
        C (float): Shrinkage of the separation
        r_star (float): Separation rate

    Returns:
        float: Empirical membership frequency
    """
    squares = np.atleast_2d(draws) ** 2
    inside = (squares @ prior.active.c <= 1.0) & (squares @ np.abs(prior.active.q) >= (C * r_star) ** 2)
    return float(np.mean(inside))


def prior_diagnostics(prior: PriorSpec, n: int, rate: float,
                      basis: Optional[BasisSpec] = None) -> List[ConditionCheck]:
    """Checks L1 to L5 for the profile v = a / (1 - delta) behind the prior."""
    shrink = 1.0 - (prior.delta or 0.0)
    v = prior.variances / shrink if shrink > 0 else np.zeros(len(prior))
    sup_sum = None
    if basis is not None and len(prior):
        sup_sum = sup_sum_squares(basis, prior.active.subset(v > 0))
    return conditions.prior_conditions(prior.active, v, n, rate, sup_sum)


def prior_risk_bound(n: int, delta: float, v_norm: float) -> float:
    """2 Phi(-n (1 - delta) ||v||_2 / (2 sqrt 2)), the Bayes risk floor under the prior."""
    return 2.0 * float(normal_cdf(-n * (1.0 - delta) * v_norm / (2.0 * math.sqrt(2.0))))


def indefinite_prior(spec: CoefficientSpec, T: float,
                     max_box_side: int = spectra.DEFAULT_MAX_BOX_SIDE) -> PriorSpec:
    """
    Prior with a_l = |q_l| / (2 T M*(T)) on the dominant sign class of N(T).

    Args:
        spec (CoefficientSpec): Coefficient family
        T (float): Truncation level

    Returns:
        PriorSpec: The prior, supported on one sign class
    """
    active = spectra.active_set(spec, T, max_box_side)
    sums = spectra.spectral_sums(active)
    if sums.M_star <= 0:
        raise DomainError(f"N(T) is empty at T = {T:.6g}")
    dominant = active.q > 0 if sums.M_plus >= sums.M_minus else active.q < 0
    support = active.subset(dominant)
    return PriorSpec(support, np.abs(support.q) / (2.0 * T * sums.M_star))


def _sign_class_minima(spec: CoefficientSpec, max_box_side: int) -> Tuple[ActiveSet, int, int]:
    """Index set with the rows of smallest c in each sign class of q."""
    if isinstance(spec, FiniteList):
        support = spec.q != 0
        if not np.any(support):
            raise DomainError("the finite list has no index with q_l != 0")
        candidates = spectra.active_set(spec, 2.0 * float(np.max(spec.c[support] / np.abs(spec.q[support]))))
    else:
        T = spectra.smallest_entry_threshold(spec, max_box_side) * 2.0
        candidates = spectra.active_set(spec, T, max_box_side)
        for _ in range(MAX_DOUBLINGS):
            if np.any(candidates.q > 0) and np.any(candidates.q < 0):
                break
            T *= 2.0
            candidates = spectra.active_set(spec, T, max_box_side)
        if np.any(candidates.q > 0) and np.any(candidates.q < 0):
            candidates = spectra.active_set(spec, T * SIGN_CLASS_MARGIN, max_box_side)
    rows = []
    for sign in (1.0, -1.0):
        members = np.flatnonzero(np.sign(candidates.q) == sign)
        if members.size == 0:
            raise DomainError("the two-point construction needs both sign classes of q to be nonempty")
        # np.argmin keeps the first minimiser; rows are in lexicographic order
        rows.append(int(members[np.argmin(candidates.c[members])]))
    return candidates, rows[0], rows[1]


def two_point_pair(spec: CoefficientSpec, n: int, z: float,
                   max_box_side: int = spectra.DEFAULT_MAX_BOX_SIDE) -> TwoPointPair:
    """
    The pair f0, f1 on {l+, l-} with Q[f0] = 0 and |Q[f1]| = z q_{l+} / sqrt(n).

    theta0_+^2 = |q-| / (c+ |q-| + c- q+) and theta0_-^2 = q+ / (c+ |q-| + c- q+)
    put f0 on the boundary of the ellipsoid; theta1_+^2 = theta0_+^2 - z / sqrt(n).

    Args:
        spec (CoefficientSpec): Family with both sign classes
        n (int): Sample size
        z (float): Perturbation size, z > 0
        max_box_side (int): Cap on the enumeration box side

    Returns:
        TwoPointPair: The pair and the KL divergence of the Gaussian-noise laws
    """
    if not z > 0:
        raise DomainError(f"z > 0 is required, got {z}")
    candidates, plus, minus = _sign_class_minima(spec, max_box_side)
    c_plus, q_plus = float(candidates.c[plus]), float(candidates.q[plus])
    c_minus, q_minus = float(candidates.c[minus]), float(abs(candidates.q[minus]))
    scale = c_plus * q_minus + c_minus * q_plus
    theta0_plus2 = q_minus / scale
    theta0_minus2 = q_plus / scale
    step = z / math.sqrt(n)
    if step > theta0_plus2:
        raise DomainError(
            f"z / sqrt(n) = {step:.6g} must not exceed theta0_+^2 = {theta0_plus2:.6g}; choose a smaller z")
    theta0_plus = math.sqrt(theta0_plus2)
    theta1_plus = math.sqrt(theta0_plus2 - step)
    pair = candidates.subset(np.isin(np.arange(len(candidates)), [plus, minus]))
    order = [0, 1] if plus < minus else [1, 0]
    lattice = pair.lattice[order]
    tags = None if pair.tags is None else pair.tags[order]
    theta0 = CoefficientMap(lattice, np.array([theta0_plus, math.sqrt(theta0_minus2)]), tags)
    theta1 = CoefficientMap(lattice, np.array([theta1_plus, math.sqrt(theta0_minus2)]), tags)
    kl = 0.5 * n * (theta0_plus - theta1_plus) ** 2
    logger.info("two-point pair at l+ = %s, l- = %s with KL %.4g",
                candidates.lattice[plus].tolist(), candidates.lattice[minus].tolist(), kl)
    return TwoPointPair(theta0, theta1, z, n, q_plus, kl)


def pair_functional(pair: TwoPointPair, spec: CoefficientSpec) -> Tuple[float, float]:
    """Q[f0] and Q[f1] evaluated from the family's coefficients."""
    values = []
    for theta in (pair.theta0, pair.theta1):
        _, q = spec.evaluate(theta.lattice, theta.tags)
        values.append(float(q @ theta.values ** 2))
    return values[0], values[1]


def two_point_lower_bound(pair: TwoPointPair) -> Tuple[float, float]:
    """(1/4 exp(-KL), r^2 = z q_{l+} / sqrt(n))."""
    return pair.risk_floor, pair.rho2


def z_for_level(theta0_plus: float, gamma: float) -> float:
    """z = 2 theta0_+ sqrt(ln(1/(4 gamma))), for which 1/4 exp(-z^2/(4 theta0_+^2)) = gamma."""
    if not 0.0 < gamma < 0.25:
        raise DomainError(f"gamma must lie in (0, 1/4), got {gamma}")
    return 2.0 * theta0_plus * math.sqrt(math.log(1.0 / (4.0 * gamma)))
