"""
Index-set models: active sets N(T), their spectral sums and coefficient maps.
"""

import json
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

IndexKey = Tuple[int, ...]


def index_keys(lattice: np.ndarray, tags: Optional[np.ndarray]) -> List[IndexKey]:
    """
    Hashable keys for a batch of indices.

    Args:
        lattice (np.ndarray): Integer array of shape (K, d)
        tags (Optional[np.ndarray]): Sample tags, appended as the last key entry

    Returns:
        List[IndexKey]: One tuple per index
    """
    if tags is None:
        return [tuple(int(v) for v in row) for row in lattice]
    return [tuple(int(v) for v in row) + (int(s),) for row, s in zip(lattice, tags)]


class ActiveSet:
    """
    A finite set of indices together with their (c, q) cache.

    Rows are kept in lexicographic order of (lattice, tag).

    Args:
        threshold (float): Truncation level T the set was built for
        lattice (np.ndarray): Integer array of shape (K, d)
        c (np.ndarray): Ellipsoid coefficients
        q (np.ndarray): Functional coefficients
        tags (Optional[np.ndarray]): Sample tags in {1, 2} for two-sample indices
    """
    def __init__(self, threshold: float, lattice: np.ndarray, c: np.ndarray, q: np.ndarray,
                 tags: Optional[np.ndarray] = None):
        self.threshold = float(threshold)
        self.lattice = np.asarray(lattice, dtype=np.int64)
        self.c = np.asarray(c, dtype=float)
        self.q = np.asarray(q, dtype=float)
        self.tags = None if tags is None else np.asarray(tags, dtype=np.int64)

    @classmethod
    def empty(cls, threshold: float, dimension: int, tagged: bool = False) -> "ActiveSet":
        tags = np.zeros(0, dtype=np.int64) if tagged else None
        return cls(threshold, np.zeros((0, dimension), dtype=np.int64), np.zeros(0), np.zeros(0), tags)

    @property
    def dimension(self) -> int:
        return self.lattice.shape[1]

    def __len__(self) -> int:
        return self.lattice.shape[0]

    def subset(self, mask: np.ndarray, threshold: Optional[float] = None) -> "ActiveSet":
        """Rows selected by a boolean mask."""
        return ActiveSet(
            self.threshold if threshold is None else threshold,
            self.lattice[mask],
            self.c[mask],
            self.q[mask],
            None if self.tags is None else self.tags[mask],
        )

    def restrict(self, T: float) -> "ActiveSet":
        """
        The sub-collection {l : c_l < T|q_l|}; equals N(T) whenever T <= threshold.

        Args:
            T (float): New truncation level

        Returns:
            ActiveSet: Restricted set
        """
        return self.subset(self.c < T * np.abs(self.q), threshold=T)

    def keys(self) -> List[IndexKey]:
        return index_keys(self.lattice, self.tags)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "threshold": self.threshold,
            "count": len(self),
            "indices": self.lattice.tolist(),
            "tags": None if self.tags is None else self.tags.tolist(),
            "c": self.c.tolist(),
            "q": self.q.tolist(),
        }

    def __repr__(self) -> str:
        return f"ActiveSet(T={self.threshold:.6g}, count={len(self)})"


class SpectralSums:
    """
    Exact finite sums over an active set N(T).

    With a_l = (|q_l| - c_l/T)_+ the sums are I0 = sum a_l^2,
    I1 = sum |q_l| a_l and I2 = sum (c_l/T) a_l, so that I2 = I1 - I0.
    """
    def __init__(self, T: float, I0: float, I1: float, I2: float, M: float, count: int,
                 M_plus: float, M_minus: float, N_plus: int, N_minus: int, max_q_over_c: float):
        self.T = T
        self.I0 = I0
        self.I1 = I1
        self.I2 = I2
        self.M = M
        self.count = count
        self.M_plus = M_plus
        self.M_minus = M_minus
        self.N_plus = N_plus
        self.N_minus = N_minus
        self.max_q_over_c = max_q_over_c

    @property
    def J(self) -> float:
        """sum c_l (T|q_l| - c_l)_+ = T^2 I2."""
        return self.T * self.T * self.I2

    @property
    def M_star(self) -> float:
        return max(self.M_plus, self.M_minus)

    @property
    def N_star(self) -> int:
        return self.N_plus if self.M_plus > self.M_minus else self.N_minus

    def to_dict(self) -> Dict[str, Any]:
        return {
            "T": self.T,
            "I0": self.I0,
            "I1": self.I1,
            "I2": self.I2,
            "J": self.J,
            "M": self.M,
            "count": self.count,
            "M_plus": self.M_plus,
            "M_minus": self.M_minus,
            "N_plus": self.N_plus,
            "N_minus": self.N_minus,
            "N_star": self.N_star,
            "max_q_over_c": self.max_q_over_c,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


class CoefficientMap:
    """
    Finitely supported Fourier coefficients theta_l of a function.

    Args:
        lattice (np.ndarray): Integer array of shape (K, d)
        values (np.ndarray): Coefficients theta_l
        tags (Optional[np.ndarray]): Sample tags for two-sample indices
    """
    def __init__(self, lattice: np.ndarray, values: np.ndarray, tags: Optional[np.ndarray] = None):
        self.lattice = np.asarray(lattice, dtype=np.int64).reshape(-1, np.asarray(lattice).shape[-1])
        self.values = np.asarray(values, dtype=float)
        self.tags = None if tags is None else np.asarray(tags, dtype=np.int64)
        if self.values.shape[0] != self.lattice.shape[0]:
            raise ValueError("one coefficient per index is required")

    @classmethod
    def from_dict(cls, mapping: Dict[IndexKey, float], dimension: int, tagged: bool = False) -> "CoefficientMap":
        keys = list(mapping.keys())
        if not keys:
            lattice = np.zeros((0, dimension), dtype=np.int64)
            return cls(lattice, np.zeros(0), np.zeros(0, dtype=np.int64) if tagged else None)
        rows = np.asarray(keys, dtype=np.int64)
        if tagged:
            return cls(rows[:, :dimension], np.asarray(list(mapping.values())), rows[:, dimension])
        return cls(rows, np.asarray(list(mapping.values())))

    @classmethod
    def on(cls, active: ActiveSet, values: np.ndarray) -> "CoefficientMap":
        return cls(active.lattice, values, active.tags)

    @classmethod
    def zero(cls, dimension: int, tagged: bool = False) -> "CoefficientMap":
        return cls.from_dict({}, dimension, tagged)

    def __len__(self) -> int:
        return self.values.shape[0]

    def keys(self) -> List[IndexKey]:
        return index_keys(self.lattice, self.tags)

    def as_dict(self) -> Dict[IndexKey, float]:
        return dict(zip(self.keys(), self.values.tolist()))

    def aligned(self, active: ActiveSet) -> np.ndarray:
        """Coefficients on the rows of an active set, zero where absent."""
        lookup = self.as_dict()
        return np.array([lookup.get(key, 0.0) for key in active.keys()], dtype=float)

    def scaled(self, factor: float) -> "CoefficientMap":
        return CoefficientMap(self.lattice, self.values * factor, self.tags)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "indices": self.lattice.tolist(),
            "tags": None if self.tags is None else self.tags.tolist(),
            "values": self.values.tolist(),
        }
