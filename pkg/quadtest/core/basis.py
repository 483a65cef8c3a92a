"""
Evaluation of the orthonormal Fourier systems on the unit cube.
"""

import logging
import math
from typing import Optional, Sequence

import numpy as np

from quadtest.errors import DomainError
from quadtest.models.basis_spec import BasisKind, BasisSpec
from quadtest.models.spectral import ActiveSet

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)

# Upper bound on (points x indices) entries materialised at once.
_CHUNK_ENTRIES = 1 << 22


def _first_nonzero_positive(lattice: np.ndarray) -> np.ndarray:
    """True for rows whose first nonzero entry is positive."""
    nonzero = lattice != 0
    first = np.argmax(nonzero, axis=1)
    return lattice[np.arange(lattice.shape[0]), first] > 0


def _check_lattice(spec: BasisSpec, lattice: np.ndarray) -> np.ndarray:
    lattice = np.asarray(lattice, dtype=np.int64)
    if lattice.ndim == 1:
        lattice = lattice.reshape(1, -1)
    if lattice.shape[1] != spec.dimension:
        raise DomainError(f"index dimension {lattice.shape[1]} does not match basis dimension {spec.dimension}")
    if np.any(np.all(lattice == 0, axis=1)):
        raise DomainError("the zero index has no centred basis function")
    return lattice


def _block_values(kind: BasisKind, lattice: np.ndarray, points: np.ndarray) -> np.ndarray:
    """phi_l(t) for d-dimensional points, shape (n, K)."""
    angles = 2.0 * math.pi * points[:, None, :] * lattice[None, :, :]
    if kind == BasisKind.DOT_PRODUCT:
        phase = angles.sum(axis=2)
        positive = _first_nonzero_positive(lattice)
        return SQRT2 * np.where(positive[None, :], np.cos(phase), np.sin(phase))
    factors = np.where(
        lattice[None, :, :] == 0,
        1.0,
        np.where(lattice[None, :, :] > 0, SQRT2 * np.cos(angles), SQRT2 * np.sin(angles)),
    )
    return np.prod(factors, axis=2)


def _evaluate(spec: BasisSpec, lattice: np.ndarray, tags: Optional[np.ndarray], points: np.ndarray) -> np.ndarray:
    d = spec.dimension
    if spec.samples == 1:
        return _block_values(spec.kind, lattice, points)
    if tags is None:
        raise DomainError("the two-sample basis needs sample tags")
    values = np.empty((points.shape[0], lattice.shape[0]))
    for s in (1, 2):
        cols = np.flatnonzero(tags == s)
        if cols.size:
            values[:, cols] = _block_values(spec.kind, lattice[cols], points[:, (s - 1) * d:s * d])
    return values


def eval_basis(spec: BasisSpec, l: Sequence[int], t: Sequence[float], tag: Optional[int] = None) -> float:
    """
    Evaluate a single basis function at a single point.

    Args:
        spec (BasisSpec): The Fourier system
        l (Sequence[int]): Nonzero lattice index of length d
        t (Sequence[float]): Point in [0,1]^D with D = spec.point_dimension
        tag (Optional[int]): Sample tag for the two-sample basis

    Returns:
        float: phi_l(t)
    """
    point = np.atleast_1d(np.asarray(t, dtype=float))
    if point.shape != (spec.point_dimension,):
        raise DomainError(f"point dimension {point.size} does not match basis point dimension {spec.point_dimension}")
    lattice = _check_lattice(spec, np.atleast_1d(l))
    tags = None if tag is None else np.array([tag], dtype=np.int64)
    return float(_evaluate(spec, lattice, tags, point.reshape(1, -1))[0, 0])


def design_matrix(spec: BasisSpec, active: ActiveSet, points: np.ndarray) -> np.ndarray:
    """
    All active basis functions at all points.

    Args:
        spec (BasisSpec): The Fourier system
        active (ActiveSet): Indices, rows of the lattice define the columns
        points (np.ndarray): Design points, shape (n, D)

    Returns:
        np.ndarray: Matrix Phi with Phi[i, k] = phi_{l_k}(t_i), shape (n, K)
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    if points.shape[1] != spec.point_dimension:
        raise DomainError(f"points have dimension {points.shape[1]}, basis expects {spec.point_dimension}")
    if len(active) == 0:
        return np.zeros((points.shape[0], 0))
    lattice = _check_lattice(spec, active.lattice)
    step = max(1, _CHUNK_ENTRIES // max(1, len(active) * spec.dimension))
    blocks = [_evaluate(spec, lattice, active.tags, points[start:start + step])
              for start in range(0, points.shape[0], step)]
    return np.vstack(blocks)


def unit_grid(dimension: int, size: int) -> np.ndarray:
    """
    Uniform periodic grid {k/size} on [0,1)^dimension.

    Args:
        dimension (int): Number of axes
        size (int): Points per axis

    Returns:
        np.ndarray: Grid points, shape (size^dimension, dimension)
    """
    axis = np.arange(size, dtype=float) / size
    mesh = np.meshgrid(*([axis] * dimension), indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def gram_check(spec: BasisSpec, lattice: np.ndarray, grid_size: int, tags: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Numerically integrated Gram matrix over a uniform periodic grid.

    The trapezoid rule on the torus is exact for trigonometric polynomials
    below the Nyquist frequency, so the result is the identity up to rounding
    whenever grid_size > 2 max|l_j|.

    Args:
        spec (BasisSpec): The Fourier system
        lattice (np.ndarray): Indices, shape (K, d)
        grid_size (int): Points per axis, at least 2
        tags (Optional[np.ndarray]): Sample tags for the two-sample basis

    Returns:
        np.ndarray: Gram matrix of shape (K, K)
    """
    if grid_size < 2:
        raise DomainError(f"grid_size >= 2 is required, got {grid_size}")
    lattice = _check_lattice(spec, lattice)
    active = ActiveSet(0.0, lattice, np.zeros(lattice.shape[0]), np.zeros(lattice.shape[0]), tags)
    points = unit_grid(spec.point_dimension, grid_size)
    phi = design_matrix(spec, active, points)
    return phi.T @ phi / points.shape[0]


def default_grid_size(spec: BasisSpec, active: ActiveSet, max_points: int = 1 << 18) -> int:
    """Twice the Nyquist resolution for the active frequencies, capped by a point budget."""
    top = int(np.max(np.abs(active.lattice))) if len(active) else 1
    nyquist = 4 * top + 4
    cap = max(2, int(math.floor(max_points ** (1.0 / spec.dimension))))
    return min(nyquist, cap)


def sup_sum_squares(spec: BasisSpec, active: ActiveSet, grid_size: Optional[int] = None) -> float:
    """
    Grid supremum of sum_l phi_l(t)^2 over the active indices.

    For the two-sample basis the sum splits over the two coordinate blocks
    and the supremum is taken per block.

    Args:
        spec (BasisSpec): The Fourier system
        active (ActiveSet): Indices to sum over
        grid_size (Optional[int]): Points per axis, defaults to a Nyquist-based size

    Returns:
        float: max over the grid of sum_l phi_l(t)^2
    """
    if len(active) == 0:
        return 0.0
    grid_size = grid_size or default_grid_size(spec, active)
    block_spec = BasisSpec(spec.kind, spec.dimension)
    grid = unit_grid(spec.dimension, grid_size)
    groups = [None] if active.tags is None else [active.tags == s for s in (1, 2)]
    total = 0.0
    for mask in groups:
        lattice = active.lattice if mask is None else active.lattice[mask]
        if lattice.shape[0] == 0:
            continue
        block = ActiveSet(active.threshold, lattice, np.zeros(lattice.shape[0]), np.zeros(lattice.shape[0]))
        total += float(np.max(np.sum(design_matrix(block_spec, block, grid) ** 2, axis=1)))
    logger.debug("sup of sum phi^2 over %d indices on a %d-point grid: %.6g", len(active), grid.shape[0], total)
    return total


def basis_sup(spec: BasisSpec) -> float:
    """Uniform bound on |phi_l|: sqrt(2) for the dot-product family, 2^{d/2} for the tensor family."""
    return spec.sup_bound
