"""
Observation models: samples, pilot estimates and noise laws.
"""

import json
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np

from quadtest.errors import DataError, DomainError
from quadtest.models.spectral import ActiveSet


class Sample:
    """
    Design points t_i in the unit cube with responses x_i.

    Args:
        points (np.ndarray): Array of shape (n, D)
        x (np.ndarray): Responses of shape (n,)
    """
    def __init__(self, points: np.ndarray, x: np.ndarray):
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        x = np.asarray(x, dtype=float).reshape(-1)
        if points.shape[0] != x.shape[0]:
            raise DataError(f"{points.shape[0]} design points but {x.shape[0]} responses")
        if x.shape[0] < 2:
            raise DataError("a sample needs at least two observations")
        if not (np.all(np.isfinite(points)) and np.all(np.isfinite(x))):
            raise DataError("sample values must be finite")
        if np.any(points < 0.0) or np.any(points > 1.0):
            raise DataError("design points must lie in the unit cube [0,1]^d")
        self.points = points
        self.x = x

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.n

    def head(self, m: int) -> "Sample":
        return Sample(self.points[:m], self.x[:m])

    def tail(self, m: int) -> "Sample":
        return Sample(self.points[m:], self.x[m:])

    def rescaled(self, tau: float) -> "Sample":
        """Responses divided by a known noise level tau."""
        if tau <= 0:
            raise DomainError(f"tau > 0 is required, got {tau}")
        return Sample(self.points, self.x / tau)

    def __repr__(self) -> str:
        return f"Sample(n={self.n}, d={self.dimension})"


class PilotEstimate:
    """
    Empirical coefficients on N1(T_pilot) = {l in S_F^c : c_l < T_pilot}.

    Args:
        active (ActiveSet): The index set N1(T_pilot)
        coefficients (np.ndarray): Estimated theta_l on that set
        T_pilot (float): Pilot truncation level
    """
    def __init__(self, active: ActiveSet, coefficients: np.ndarray, T_pilot: float):
        self.active = active
        self.coefficients = np.asarray(coefficients, dtype=float)
        self.T_pilot = T_pilot

    def __len__(self) -> int:
        return len(self.active)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "T_pilot": self.T_pilot,
            "count": len(self.active),
            "indices": self.active.lattice.tolist(),
            "coefficients": self.coefficients.tolist(),
        }


class NoiseKind(str, Enum):
    GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"
    STUDENT = "student"


class NoiseSpec:
    """
    Unit-variance noise law for the regression errors.

    Args:
        kind (NoiseKind): Gaussian, Rademacher or scaled Student
        df (Optional[float]): Student degrees of freedom, must exceed 4
    """
    def __init__(self, kind: NoiseKind = NoiseKind.GAUSSIAN, df: Optional[float] = None):
        self.kind = NoiseKind(kind)
        if self.kind == NoiseKind.STUDENT:
            df = 9.0 if df is None else float(df)
            if df <= 4.0:
                raise DomainError(f"Student noise needs df > 4 for a finite fourth moment, got {df}")
        self.df = df

    @property
    def fourth_moment(self) -> float:
        if self.kind == NoiseKind.GAUSSIAN:
            return 3.0
        if self.kind == NoiseKind.RADEMACHER:
            return 1.0
        return 3.0 * (self.df - 2.0) / (self.df - 4.0)

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == NoiseKind.GAUSSIAN:
            return rng.standard_normal(size)
        if self.kind == NoiseKind.RADEMACHER:
            return 2.0 * rng.integers(0, 2, size=size) - 1.0
        return rng.standard_t(self.df, size=size) * np.sqrt((self.df - 2.0) / self.df)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "df": self.df, "fourth_moment": self.fourth_moment}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)
