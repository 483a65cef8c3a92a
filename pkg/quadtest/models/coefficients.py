"""
Coefficient specifications: the ellipsoid array c and the functional array q.

Each family evaluates (c_l, q_l) on a batch of lattice indices and knows a
guaranteed per-axis box that contains every index with c_l < T|q_l|.
"""

import json
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from quadtest.errors import DomainError

TWO_PI = 2.0 * math.pi

# Relative size below which a single-index q_l is treated as an exact zero.
SINGLE_INDEX_ZERO_TOL = 1e-12


def _as_vector(values: Sequence[float], name: str, length: Optional[int] = None) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise DomainError(f"{name} must be a non-empty vector")
    if length is not None and arr.size != length:
        raise DomainError(f"{name} must have length {length}, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def _axis_floor(values: np.ndarray) -> np.ndarray:
    # Members satisfy a strict inequality, the tiny inflation absorbs rounding.
    return np.floor(values * (1.0 + 1e-12)).astype(np.int64)


class CoefficientSpec:
    """
    Base class for the (c, q) generator families.

    Args:
        dimension (int): Lattice dimension d
    """
    family = ""
    explicit = False
    two_sample = False

    def __init__(self, dimension: int):
        if dimension < 1:
            raise DomainError(f"dimension must satisfy d >= 1, got {dimension}")
        self.dimension = dimension

    @property
    def signed(self) -> bool:
        """True when q takes both signs."""
        return False

    def evaluate(self, lattice: np.ndarray, tags: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
        """
        Evaluate (c, q) on a batch of indices.

        Args:
            lattice (np.ndarray): Integer array of shape (K, d)
            tags (Optional[np.ndarray]): Sample tags in {1, 2}, two-sample families only

        Returns:
            Tuple[np.ndarray, np.ndarray]: Arrays c and q of shape (K,)
        """
        raise NotImplementedError

    def axis_bounds(self, T: float) -> np.ndarray:
        """Per-axis half-widths of a box containing {l : c_l < T|q_l|}."""
        raise NotImplementedError

    def ellipsoid_axis_bounds(self, T: float) -> np.ndarray:
        """Per-axis half-widths of a box containing {l : c_l < T}."""
        raise NotImplementedError

    def min_abs_q(self) -> Optional[float]:
        """Infimum of |q_l| over S_F when known in closed form."""
        return None

    def ellipsoid_radius(self) -> float:
        """Radius of the ellipsoid the functions live in (2 for the two-sample sum class)."""
        return 1.0

    def to_dict(self) -> Dict[str, Any]:
        return {"family": self.family, "dimension": self.dimension}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.to_dict()})"


class SobolevDerivative(CoefficientSpec):
    """
    Anisotropic Sobolev ellipsoid with a partial-derivative functional.

    c_l = sum_j (2 pi l_j)^{2 sigma_j} and q_l = prod_j (2 pi l_j)^{2 alpha_j}.

    Args:
        sigma (Sequence[float]): Smoothness per axis, all positive
        alpha (Sequence[float]): Derivative order per axis, all nonnegative
    """
    family = "sobolev-derivative"

    def __init__(self, sigma: Sequence[float], alpha: Sequence[float]):
        sigma_arr = _as_vector(sigma, "sigma")
        super().__init__(sigma_arr.size)
        alpha_arr = _as_vector(alpha, "alpha", self.dimension)
        if np.any(sigma_arr <= 0):
            raise DomainError("sigma_j > 0 is required for every axis")
        if np.any(alpha_arr < 0):
            raise DomainError("alpha_j >= 0 is required for every axis")
        self.sigma = sigma_arr
        self.alpha = alpha_arr
        if self.delta >= 1.0:
            raise DomainError(f"delta = sum(alpha_j/sigma_j) < 1 is required, got delta = {self.delta:.6g}")
        if self.sigma_bar <= self.dimension / 4.0:
            raise DomainError(
                f"harmonic mean sigma_bar > d/4 is required, got sigma_bar = {self.sigma_bar:.6g} <= {self.dimension / 4.0:.6g}"
            )

    @property
    def delta(self) -> float:
        return float(np.sum(self.alpha / self.sigma))

    @property
    def sigma_bar(self) -> float:
        return float(self.dimension / np.sum(1.0 / self.sigma))

    def _magnitudes(self, lattice: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        x = TWO_PI * np.abs(np.asarray(lattice, dtype=float))
        c = np.sum(x ** (2.0 * self.sigma), axis=1)
        q = np.prod(x ** (2.0 * self.alpha), axis=1)
        return c, q

    def evaluate(self, lattice: np.ndarray, tags: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
        return self._magnitudes(lattice)

    def axis_bounds(self, T: float) -> np.ndarray:
        # c >= y_max and q <= y_max^delta with y_j = (2 pi l_j)^{2 sigma_j}, so y_max < T^{1/(1-delta)}
        return _axis_floor(T ** (1.0 / (2.0 * self.sigma * (1.0 - self.delta))) / TWO_PI)

    def ellipsoid_axis_bounds(self, T: float) -> np.ndarray:
        return _axis_floor(T ** (1.0 / (2.0 * self.sigma)) / TWO_PI)

    def min_abs_q(self) -> Optional[float]:
        return float(TWO_PI ** (2.0 * np.sum(self.alpha)))

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data.update({
            "sigma": self.sigma.tolist(),
            "alpha": self.alpha.tolist(),
            "delta": self.delta,
            "sigma_bar": self.sigma_bar,
        })
        return data


class TwoSampleNorm(SobolevDerivative):
    """
    Equality of Sobolev norms of two functions.

    Indices are pairs (m, s) with s in {1, 2}; c_{m,s} = c_m and
    q_{m,s} = (-1)^s prod_j (2 pi m_j)^{2 alpha_j}.
    """
    family = "two-sample"
    two_sample = True

    @property
    def signed(self) -> bool:
        return True

    def evaluate(self, lattice: np.ndarray, tags: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
        if tags is None:
            raise DomainError("two-sample indices need a sample tag s in {1, 2}")
        tags = np.asarray(tags)
        if np.any((tags != 1) & (tags != 2)):
            raise DomainError("sample tags must be 1 or 2")
        c, q = self._magnitudes(lattice)
        return c, np.where(tags == 1, -q, q)

    def ellipsoid_radius(self) -> float:
        return 2.0


class SingleIndex(CoefficientSpec):
    """
    Goodness of fit of a single-index model along the direction beta.

    c_l = sum_i (2 pi l_i)^{2 sigma} and q_l = (2 pi)^2 (||l||^2 - (beta.l)^2).

    Args:
        sigma (float): Isotropic smoothness
        beta (Sequence[float]): Unit direction
    """
    family = "single-index"

    def __init__(self, sigma: float, beta: Sequence[float]):
        beta_arr = _as_vector(beta, "beta")
        super().__init__(beta_arr.size)
        if abs(float(np.linalg.norm(beta_arr)) - 1.0) > 1e-12:
            raise DomainError(f"||beta||_2 = 1 is required, got {np.linalg.norm(beta_arr):.15g}")
        if not sigma > self.dimension / 4.0:
            raise DomainError(f"sigma > d/4 is required, got sigma = {sigma} <= {self.dimension / 4.0}")
        self.sigma = float(sigma)
        self.beta = beta_arr

    def evaluate(self, lattice: np.ndarray, tags: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
        x = TWO_PI * np.asarray(lattice, dtype=float)
        c = np.sum(np.abs(x) ** (2.0 * self.sigma), axis=1)
        norm2 = np.sum(x * x, axis=1)
        proj = x @ self.beta
        q = norm2 - proj * proj
        q = np.where(q <= SINGLE_INDEX_ZERO_TOL * norm2, 0.0, q)
        return c, q

    def require_finite(self) -> None:
        if self.sigma <= 1.0:
            raise DomainError(
                f"sigma > 1 is required for finite active sets of the single-index family, got sigma = {self.sigma}"
            )

    def axis_bounds(self, T: float) -> np.ndarray:
        self.require_finite()
        # q <= d x_max^2 and c >= x_max^{2 sigma}
        bound = (T * self.dimension) ** (1.0 / (2.0 * self.sigma - 2.0)) / TWO_PI
        return _axis_floor(np.full(self.dimension, bound))

    def ellipsoid_axis_bounds(self, T: float) -> np.ndarray:
        return _axis_floor(np.full(self.dimension, T ** (1.0 / (2.0 * self.sigma)) / TWO_PI))

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data.update({"sigma": self.sigma, "beta": self.beta.tolist()})
        return data


class FiniteList(CoefficientSpec):
    """
    Explicit finite list of indices with their (c, q) pairs.

    Args:
        indices (Sequence[Sequence[int]]): Lattice indices, shape (K, d)
        c (Sequence[float]): Positive ellipsoid coefficients
        q (Sequence[float]): Functional coefficients of any sign
        tags (Optional[Sequence[int]]): Optional sample tags
    """
    family = "finite-list"
    explicit = True

    def __init__(self, indices: Sequence[Sequence[int]], c: Sequence[float], q: Sequence[float],
                 tags: Optional[Sequence[int]] = None):
        lattice = np.asarray(indices, dtype=np.int64)
        if lattice.ndim == 1:
            lattice = lattice.reshape(-1, 1)
        if lattice.ndim != 2 or lattice.shape[0] == 0:
            raise DomainError("indices must be a non-empty list of integer vectors")
        super().__init__(lattice.shape[1])
        c_arr = _as_vector(c, "c", lattice.shape[0])
        q_arr = _as_vector(q, "q", lattice.shape[0])
        if np.any(c_arr <= 0):
            raise DomainError("c_l > 0 is required for every listed index")
        if np.any(np.all(lattice == 0, axis=1)):
            raise DomainError("the zero index is excluded from functional index sets")
        self.tags = None if tags is None else np.asarray(tags, dtype=np.int64)
        self.two_sample = self.tags is not None
        keys = self._keys(lattice, self.tags)
        if len(set(keys)) != len(keys):
            raise DomainError("indices must be distinct")
        self.lattice = lattice
        self.c = c_arr
        self.q = q_arr
        self._lookup = {key: i for i, key in enumerate(keys)}

    @staticmethod
    def _keys(lattice: np.ndarray, tags: Optional[np.ndarray]) -> List[Tuple[int, ...]]:
        if tags is None:
            return [tuple(int(v) for v in row) for row in lattice]
        return [tuple(int(v) for v in row) + (int(s),) for row, s in zip(lattice, tags)]

    @property
    def signed(self) -> bool:
        return bool(np.any(self.q > 0) and np.any(self.q < 0))

    def evaluate(self, lattice: np.ndarray, tags: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
        lattice = np.asarray(lattice, dtype=np.int64).reshape(-1, self.dimension)
        keys = self._keys(lattice, None if tags is None else np.asarray(tags))
        missing = [key for key in keys if key not in self._lookup]
        if missing:
            raise DomainError(f"index {missing[0]} is not part of the finite list")
        rows = np.array([self._lookup[key] for key in keys], dtype=np.int64)
        return self.c[rows], self.q[rows]

    def axis_bounds(self, T: float) -> np.ndarray:
        return np.max(np.abs(self.lattice), axis=0)

    def ellipsoid_axis_bounds(self, T: float) -> np.ndarray:
        return np.max(np.abs(self.lattice), axis=0)

    def min_abs_q(self) -> Optional[float]:
        nonzero = np.abs(self.q[self.q != 0])
        return float(nonzero.min()) if nonzero.size else None

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data.update({
            "indices": self.lattice.tolist(),
            "c": self.c.tolist(),
            "q": self.q.tolist(),
        })
        if self.tags is not None:
            data["tags"] = self.tags.tolist()
        return data
