"""
Coefficient arrays, active sets N(T) and their spectral sums.

Active sets are found by enumerating a per-axis box. When the analytic box
from the family is small it is scanned directly; otherwise a seed box is
grown axis by axis until no member sits in the outer half of any axis.
"""

import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from quadtest.errors import ActiveSetTooLargeError, DomainError
from quadtest.models.coefficients import (
    TWO_PI,
    CoefficientSpec,
    FiniteList,
    SingleIndex,
    SobolevDerivative,
)
from quadtest.models.spectral import ActiveSet, SpectralSums

logger = logging.getLogger(__name__)

DEFAULT_MAX_BOX_SIDE = 4096
# Analytic boxes up to this many lattice points are scanned in one pass.
DIRECT_SCAN_VOLUME = 1 << 20
MAX_BOX_VOLUME = 1 << 23


def coefficients(spec: CoefficientSpec, lattice: np.ndarray,
                 tags: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorised (c, q) over a batch of nonzero indices.

    Args:
        spec (CoefficientSpec): Coefficient family
        lattice (np.ndarray): Indices of shape (K, d)
        tags (Optional[np.ndarray]): Sample tags for two-sample families

    Returns:
        Tuple[np.ndarray, np.ndarray]: Arrays c and q
    """
    lattice = np.asarray(lattice, dtype=np.int64)
    if lattice.ndim == 1:
        lattice = lattice.reshape(1, -1)
    if lattice.shape[1] != spec.dimension:
        raise DomainError(f"index dimension {lattice.shape[1]} does not match d = {spec.dimension}")
    if np.any(np.all(lattice == 0, axis=1)):
        raise DomainError("the zero index is excluded from functional index sets")
    return spec.evaluate(lattice, tags)


def coeff(spec: CoefficientSpec, l: Sequence[int], tag: Optional[int] = None) -> Tuple[float, float]:
    """
    The pair (c_l, q_l) for a single index.

    Args:
        spec (CoefficientSpec): Coefficient family
        l (Sequence[int]): Nonzero lattice index
        tag (Optional[int]): Sample tag s in {1, 2} for two-sample families

    Returns:
        Tuple[float, float]: (c_l, q_l)
    """
    tags = None if tag is None else np.array([tag], dtype=np.int64)
    c, q = coefficients(spec, np.atleast_1d(np.asarray(l, dtype=np.int64)), tags)
    return float(c[0]), float(q[0])


def lattice_box(radii: np.ndarray) -> np.ndarray:
    """
    All nonzero integer points of the box prod_j [-r_j, r_j] in lexicographic order.

    Args:
        radii (np.ndarray): Nonnegative half-widths per axis

    Returns:
        np.ndarray: Integer array of shape (K, d)
    """
    axes = [np.arange(-int(r), int(r) + 1, dtype=np.int64) for r in radii]
    mesh = np.meshgrid(*axes, indexing="ij")
    lattice = np.stack([m.reshape(-1) for m in mesh], axis=1)
    return lattice[np.any(lattice != 0, axis=1)]


def _box_volume(radii: np.ndarray) -> float:
    return float(np.prod(2.0 * radii.astype(float) + 1.0))


def _guard_box(radii: np.ndarray, max_box_side: int) -> None:
    side = int(2 * np.max(radii) + 1)
    if side > max_box_side:
        raise ActiveSetTooLargeError(
            f"search box side {side} exceeds the cap {max_box_side}",
            {"radii": radii.tolist(), "max_box_side": max_box_side},
        )
    if _box_volume(radii) > MAX_BOX_VOLUME:
        raise ActiveSetTooLargeError(
            f"search box holds {_box_volume(radii):.3g} points, above the cap {MAX_BOX_VOLUME}",
            {"radii": radii.tolist()},
        )


def _members(spec: CoefficientSpec, lattice: np.ndarray, T: float,
             tags: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    c, q = spec.evaluate(lattice, tags)
    mask = (q != 0) & (c < T * np.abs(q))
    return mask, c, q


def _finite_active_set(spec: FiniteList, T: float) -> ActiveSet:
    mask, c, q = _members(spec, spec.lattice, T, spec.tags)
    active = ActiveSet(T, spec.lattice[mask], c[mask], q[mask], None if spec.tags is None else spec.tags[mask])
    return _sorted(active)


def _sorted(active: ActiveSet) -> ActiveSet:
    if len(active) < 2:
        return active
    columns = [active.lattice[:, j] for j in range(active.dimension)]
    if active.tags is not None:
        columns.append(active.tags)
    order = np.lexsort(columns[::-1])
    return ActiveSet(active.threshold, active.lattice[order], active.c[order], active.q[order],
                     None if active.tags is None else active.tags[order])


def _grow_magnitude_set(spec: CoefficientSpec, T: float, max_box_side: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Members of N(T) for the untagged magnitudes (c_l, |q_l|)."""
    bounds = np.asarray(spec.axis_bounds(T), dtype=np.int64)
    if np.all(bounds == 0):
        empty = np.zeros((0, spec.dimension), dtype=np.int64)
        return empty, np.zeros(0), np.zeros(0)
    if _box_volume(bounds) <= DIRECT_SCAN_VOLUME:
        lattice = lattice_box(bounds)
        mask, c, q = _members(spec, lattice, T, _unit_tags(spec, lattice))
        return lattice[mask], c[mask], np.abs(q[mask])

    radii = np.minimum(bounds, np.maximum(1, -(-bounds // 8)))
    while True:
        _guard_box(radii, max_box_side)
        lattice = lattice_box(radii)
        mask, c, q = _members(spec, lattice, T, _unit_tags(spec, lattice))
        members = lattice[mask]
        reach = np.max(np.abs(members), axis=0) if members.shape[0] else np.zeros(spec.dimension, dtype=np.int64)
        grow = (radii < bounds) & (reach > radii // 2)
        logger.debug("active-set box radii %s, %d members, growing axes %s", radii.tolist(), members.shape[0],
                     np.flatnonzero(grow).tolist())
        if not np.any(grow):
            return members, c[mask], np.abs(q[mask])
        radii = np.where(grow, np.minimum(2 * radii, bounds), radii)


def _unit_tags(spec: CoefficientSpec, lattice: np.ndarray) -> Optional[np.ndarray]:
    # Tag 2 carries +|q| for the two-sample family.
    if spec.two_sample:
        return np.full(lattice.shape[0], 2, dtype=np.int64)
    return None


def active_set(spec: CoefficientSpec, T: float, max_box_side: int = DEFAULT_MAX_BOX_SIDE) -> ActiveSet:
    """
    The truncation set N(T) = {l in S_F : c_l < T |q_l|}.

    Args:
        spec (CoefficientSpec): Coefficient family
        T (float): Positive truncation level
        max_box_side (int): Cap on the side length of the search box

    Returns:
        ActiveSet: Members in lexicographic order, with their (c, q)
    """
    if not T > 0 or not math.isfinite(T):
        raise DomainError(f"T > 0 is required, got {T}")
    if isinstance(spec, FiniteList):
        return _finite_active_set(spec, T)
    if isinstance(spec, SingleIndex):
        spec.require_finite()
    lattice, c, q_abs = _grow_magnitude_set(spec, T, max_box_side)
    if not spec.two_sample:
        return ActiveSet(T, lattice, c, q_abs)
    count = lattice.shape[0]
    tags = np.tile(np.array([1, 2], dtype=np.int64), count)
    signs = np.where(tags == 1, -1.0, 1.0)
    return ActiveSet(T, np.repeat(lattice, 2, axis=0), np.repeat(c, 2), signs * np.repeat(q_abs, 2), tags)


def spectral_sums(active: ActiveSet, T: Optional[float] = None) -> SpectralSums:
    """
    Exact finite sums over an active set.

    Args:
        active (ActiveSet): The set N(T)
        T (Optional[float]): Truncation level, defaults to the set's threshold

    Returns:
        SpectralSums: I0, I1, I2, M and the sign-class splits
    """
    T = active.threshold if T is None else float(T)
    q_abs = np.abs(active.q)
    a = np.clip(q_abs - active.c / T, 0.0, None)
    positive = active.q > 0
    negative = active.q < 0
    q2 = active.q * active.q
    return SpectralSums(
        T=T,
        I0=float(np.sum(a * a)),
        I1=float(np.sum(q_abs * a)),
        I2=float(np.sum((active.c / T) * a)),
        M=float(np.sum(q2)),
        count=len(active),
        M_plus=float(np.sum(q2[positive])),
        M_minus=float(np.sum(q2[negative])),
        N_plus=int(np.sum(positive)),
        N_minus=int(np.sum(negative)),
        max_q_over_c=float(np.max(q_abs / active.c)) if len(active) else 0.0,
    )


def smallest_entry_threshold(spec: CoefficientSpec, max_box_side: int = DEFAULT_MAX_BOX_SIDE) -> float:
    """
    T0 = min over S_F of c_l/|q_l|; N(T) is empty exactly when T <= T0.

    Args:
        spec (CoefficientSpec): Coefficient family
        max_box_side (int): Cap on the enumeration box side

    Returns:
        float: The entry threshold T0
    """
    if isinstance(spec, FiniteList):
        support = spec.q != 0
        if not np.any(support):
            raise DomainError("the finite list has no index with q_l != 0")
        return float(np.min(spec.c[support] / np.abs(spec.q[support])))
    T = 1.0
    active = active_set(spec, T, max_box_side)
    if len(active):
        while len(active):
            smaller = active
            T /= 2.0
            active = active_set(spec, T, max_box_side)
        active = smaller
    else:
        while not len(active):
            T *= 2.0
            active = active_set(spec, T, max_box_side)
    return float(np.min(active.c / np.abs(active.q)))


def complement_active_set(spec: CoefficientSpec, T: float,
                          max_box_side: int = DEFAULT_MAX_BOX_SIDE) -> ActiveSet:
    """
    The pilot index set N1(T) = {l in S_F^c : c_l < T}.

    Args:
        spec (CoefficientSpec): Coefficient family
        T (float): Pilot truncation level
        max_box_side (int): Cap on the enumeration box side

    Returns:
        ActiveSet: Indices outside S_F with c_l < T; q is zero on every row
    """
    if not T > 0:
        raise DomainError(f"T > 0 is required, got {T}")
    if isinstance(spec, FiniteList):
        mask = (spec.q == 0) & (spec.c < T)
        return _sorted(ActiveSet(T, spec.lattice[mask], spec.c[mask], spec.q[mask],
                                 None if spec.tags is None else spec.tags[mask]))
    if isinstance(spec, SobolevDerivative) and np.all(spec.alpha == 0):
        return ActiveSet.empty(T, spec.dimension, tagged=spec.two_sample)
    radii = np.asarray(spec.ellipsoid_axis_bounds(T), dtype=np.int64)
    if np.all(radii == 0):
        return ActiveSet.empty(T, spec.dimension, tagged=spec.two_sample)
    _guard_box(radii, max_box_side)
    lattice = lattice_box(radii)
    c, q = spec.evaluate(lattice, _unit_tags(spec, lattice))
    mask = (q == 0) & (c < T)
    lattice, c = lattice[mask], c[mask]
    if not spec.two_sample:
        return ActiveSet(T, lattice, c, np.zeros(c.size))
    tags = np.tile(np.array([1, 2], dtype=np.int64), c.size)
    return ActiveSet(T, np.repeat(lattice, 2, axis=0), np.repeat(c, 2), np.zeros(2 * c.size), tags)


def smoothness_vector(spec: CoefficientSpec) -> Optional[np.ndarray]:
    """Per-axis smoothness sigma_j for the Sobolev-type families, None otherwise."""
    if isinstance(spec, SobolevDerivative):
        return spec.sigma
    if isinstance(spec, SingleIndex):
        return np.full(spec.dimension, spec.sigma)
    return None


def ellipsoid_sum_inverse(spec: CoefficientSpec, box_points: int = 1 << 18) -> float:
    """
    sum over nonzero l of 1/c_l.

    Finite for the Sobolev-type families exactly when sigma_bar > d/2. The
    sum is taken exactly over {c_l < T} for a T filling the point budget and
    the remainder is added from the lattice-point counting asymptotics.

    Args:
        spec (CoefficientSpec): Coefficient family
        box_points (int): Enumeration budget

    Returns:
        float: The sum, or infinity when it diverges
    """
    if isinstance(spec, FiniteList):
        return float(np.sum(1.0 / spec.c))
    sigma = smoothness_vector(spec)
    s = float(np.sum(1.0 / (2.0 * sigma)))
    if s >= 1.0:
        return math.inf
    T = TWO_PI ** (2.0 * float(np.max(sigma)))
    while _box_volume(np.asarray(spec.ellipsoid_axis_bounds(4.0 * T))) <= box_points:
        T *= 4.0
    lattice = lattice_box(np.asarray(spec.ellipsoid_axis_bounds(T)))
    c, _ = spec.evaluate(lattice, _unit_tags(spec, lattice))
    head = float(np.sum(1.0 / c[c < T]))
    # count{c < t} ~ V t^s with V the volume of {sum_j |2 pi x_j|^{2 sigma_j} < 1}
    log_volume = (np.sum(gammaln(1.0 + 1.0 / (2.0 * sigma))) - gammaln(1.0 + s)
                  + spec.dimension * math.log(2.0) - spec.dimension * math.log(TWO_PI))
    tail = math.exp(log_volume) * s * T ** (s - 1.0) / (1.0 - s)
    return head + tail
