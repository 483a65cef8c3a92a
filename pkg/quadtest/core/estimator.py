"""
Empirical Fourier coefficients and the pilot estimator of the projection
onto the complement of S_F.
"""

import logging
import math
from typing import Optional, Sequence, Union

import numpy as np

from quadtest.core import spectra
from quadtest.core.basis import design_matrix, unit_grid
from quadtest.errors import ActiveSetTooLargeError, DomainError, PilotCapError
from quadtest.models.basis_spec import BasisSpec
from quadtest.models.coefficients import CoefficientSpec, FiniteList, SingleIndex, SobolevDerivative
from quadtest.models.sample import PilotEstimate, Sample
from quadtest.models.spectral import ActiveSet, CoefficientMap

logger = logging.getLogger(__name__)

SUMMABLE = "summable"
SOBOLEV = "sobolev"


def empirical_coeff(sample: Sample, l: Sequence[int], basis: BasisSpec, tag: Optional[int] = None) -> float:
    """
    (1/n) sum_i x_i phi_l(t_i).

    Args:
        sample (Sample): Observations
        l (Sequence[int]): Nonzero lattice index
        basis (BasisSpec): Fourier system
        tag (Optional[int]): Sample tag for the two-sample basis

    Returns:
        float: The empirical coefficient
    """
    lattice = np.atleast_2d(np.asarray(l, dtype=np.int64))
    tags = None if tag is None else np.array([tag], dtype=np.int64)
    single = ActiveSet(0.0, lattice, np.zeros(1), np.zeros(1), tags)
    return float(empirical_coefficients(sample, single, basis)[0])


def empirical_coefficients(sample: Sample, active: ActiveSet, basis: BasisSpec) -> np.ndarray:
    """Empirical coefficients for every row of an index set."""
    if len(active) == 0:
        return np.zeros(0)
    phi = design_matrix(basis, active, sample.points)
    return sample.x @ phi / sample.n


def pilot_budget(n: int, exponent: float = 0.4, cap_fraction: float = 0.25) -> int:
    """Default pilot size: min(floor(n^exponent), floor(cap_fraction sqrt(n)))."""
    return int(min(math.floor(n ** exponent), math.floor(cap_fraction * math.sqrt(n))))


def default_pilot_threshold(spec: CoefficientSpec, n: int, exponent: float = 0.4,
                            max_box_side: int = spectra.DEFAULT_MAX_BOX_SIDE, cap_fraction: float = 0.25) -> float:
    """
    Largest T with |N1(T)| <= pilot_budget(n, exponent, cap_fraction).

    Args:
        spec (CoefficientSpec): Coefficient family
        n (int): Sample size
        exponent (float): Size exponent of the pilot
        max_box_side (int): Cap on the enumeration box side
        cap_fraction (float): The pilot never exceeds cap_fraction sqrt(n) indices

    Returns:
        float: The pilot level, infinite when S_F^c is empty
    """
    if isinstance(spec, SobolevDerivative) and np.all(spec.alpha == 0):
        return math.inf
    budget = pilot_budget(n, exponent, cap_fraction)
    if isinstance(spec, FiniteList):
        values = np.sort(spec.c[spec.q == 0])
        return math.inf if values.size <= budget else float(values[budget])
    T = 1.0
    found = spectra.complement_active_set(spec, T, max_box_side)
    while len(found) <= budget:
        try:
            found = spectra.complement_active_set(spec, 2.0 * T, max_box_side)
        except ActiveSetTooLargeError:
            logger.debug("pilot search stopped at T = %.6g with %d indices", T, len(found))
            return T
        T *= 2.0
    return float(np.sort(found.c)[budget])


def pilot_fit(sample: Sample, spec: CoefficientSpec, basis: BasisSpec, T_pilot: Optional[float] = None,
              cap_fraction: float = 0.25, exponent: float = 0.4,
              max_box_side: int = spectra.DEFAULT_MAX_BOX_SIDE) -> PilotEstimate:
    """
    Empirical coefficients on N1(T_pilot) = {l in S_F^c : c_l < T_pilot}.

    Args:
        sample (Sample): The pilot part of the sample
        spec (CoefficientSpec): Coefficient family
        basis (BasisSpec): Fourier system
        T_pilot (Optional[float]): Pilot level, defaults to the largest T whose |N1(T)| fits the budget
        cap_fraction (float): |N1| may not exceed cap_fraction sqrt(n)
        exponent (float): Exponent of the default pilot size

    Returns:
        PilotEstimate: The fitted pilot
    """
    if T_pilot is None:
        T = default_pilot_threshold(spec, sample.n, exponent, max_box_side, cap_fraction)
    else:
        T = T_pilot
    if math.isinf(T):
        if isinstance(spec, FiniteList):
            active = spectra.complement_active_set(spec, T)
        else:
            active = ActiveSet.empty(T, spec.dimension, tagged=spec.two_sample)
    else:
        active = spectra.complement_active_set(spec, T, max_box_side)
    cap = cap_fraction * math.sqrt(sample.n)
    if len(active) > cap:
        raise PilotCapError(
            f"the pilot set has {len(active)} indices, above the cap {cap:.3g}; choose a smaller T_pilot",
            {"count": len(active), "cap": cap, "T_pilot": T},
        )
    coefficients = empirical_coefficients(sample, active, basis)
    logger.info("pilot fitted on %d observations with %d coefficients", sample.n, len(active))
    return PilotEstimate(active, coefficients, T)


def pilot_eval(pilot: PilotEstimate, basis: BasisSpec, t: Union[Sequence[float], np.ndarray]) -> Union[float, np.ndarray]:
    """
    sum_l theta_hat_l phi_l(t) at one point or a batch of points.

    Args:
        pilot (PilotEstimate): The fitted pilot
        basis (BasisSpec): Fourier system
        t: A point of shape (D,) or points of shape (n, D)

    Returns:
        The pilot value(s)
    """
    points = np.asarray(t, dtype=float)
    single = points.ndim == 0 or (points.ndim == 1 and (basis.point_dimension > 1 or points.size == 1))
    batch = points.reshape(-1, basis.point_dimension)
    if len(pilot) == 0:
        values = np.zeros(batch.shape[0])
    else:
        values = design_matrix(basis, pilot.active, batch) @ pilot.coefficients
    return float(values[0]) if single else values


def pilot_l4_error(pilot: PilotEstimate, theta_true: CoefficientMap, basis: BasisSpec,
                   grid_size: Optional[int] = None) -> float:
    """
    ||Pi f - Pi_hat f||_4^4 by grid quadrature.

    The grid resolves four times the largest frequency present, so the
    quadrature is exact for the quartic of the difference.

    Args:
        pilot (PilotEstimate): The fitted pilot
        theta_true (CoefficientMap): Coefficients of the projection Pi f
        basis (BasisSpec): Fourier system
        grid_size (Optional[int]): Points per axis

    Returns:
        float: The fourth power of the L4 error
    """
    diff = theta_true.as_dict()
    for key, value in zip(pilot.active.keys(), pilot.coefficients.tolist()):
        diff[key] = diff.get(key, 0.0) - value
    if not diff:
        return 0.0
    tagged = basis.samples == 2
    coefficients = CoefficientMap.from_dict(diff, basis.dimension, tagged)
    active = ActiveSet(0.0, coefficients.lattice, np.zeros(len(coefficients)), np.zeros(len(coefficients)),
                       coefficients.tags)
    top = int(np.max(np.abs(coefficients.lattice)))
    size = grid_size or 4 * top + 1
    points = unit_grid(basis.point_dimension, size)
    values = design_matrix(basis, active, points) @ coefficients.values
    return float(np.mean(values ** 4))


def pilot_branch(spec: CoefficientSpec) -> Optional[str]:
    """
    Which sufficient condition for pilot consistency the family satisfies.

    Returns:
        Optional[str]: "summable" when sum 1/c_l converges, "sobolev" under the
        Sobolev embedding sigma_bar > d/4, None when neither is verifiable
    """
    if isinstance(spec, FiniteList):
        return SUMMABLE
    if isinstance(spec, SobolevDerivative):
        sigma_bar, d = spec.sigma_bar, spec.dimension
    elif isinstance(spec, SingleIndex):
        sigma_bar, d = spec.sigma, spec.dimension
    else:
        logger.warning("pilot consistency could not be verified for the %s family", spec.family)
        return None
    if sigma_bar > d / 2.0:
        return SUMMABLE
    if sigma_bar > d / 4.0:
        return SOBOLEV
    logger.warning("pilot consistency could not be verified: sigma_bar = %.4g <= d/4", sigma_bar)
    return None


def require_sample_dimension(sample: Sample, basis: BasisSpec) -> None:
    if sample.dimension != basis.point_dimension:
        raise DomainError(f"sample points have dimension {sample.dimension}, basis expects {basis.point_dimension}")
