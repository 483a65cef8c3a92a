"""
Models for the lower-bound constructions: Gaussian coefficient priors and
the two-point pair for indefinite functionals.
"""

import json
import math
from typing import Any, Dict, Optional

import numpy as np

from quadtest.errors import DomainError
from quadtest.models.spectral import ActiveSet, CoefficientMap


class PriorSpec:
    """
    Independent centred Gaussian prior on the coefficients of an index set.

    Args:
        active (ActiveSet): Support of the prior
        variances (np.ndarray): a_l >= 0 on the rows of ``active``
        delta (Optional[float]): Shrinkage, a_l = (1 - delta) v_l
    """
    def __init__(self, active: ActiveSet, variances: np.ndarray, delta: Optional[float] = None):
        variances = np.asarray(variances, dtype=float)
        if variances.shape != (len(active),):
            raise DomainError(f"{variances.size} variances for {len(active)} indices")
        if np.any(variances < 0):
            raise DomainError("prior variances must be nonnegative")
        if delta is not None and not 0.0 < delta <= 1.0:
            raise DomainError(f"delta must lie in (0, 1], got {delta}")
        self.active = active
        self.variances = variances
        self.delta = delta

    def __len__(self) -> int:
        return len(self.active)

    def draw(self, rng: np.random.Generator, draws: int = 1) -> np.ndarray:
        """Coefficient draws of shape (draws, K)."""
        return rng.standard_normal((draws, len(self.active))) * np.sqrt(self.variances)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "delta": self.delta,
            "count": len(self.active),
            "indices": self.active.lattice.tolist(),
            "tags": None if self.active.tags is None else self.active.tags.tolist(),
            "variances": self.variances.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


class TwoPointPair:
    """
    Two functions on {l+, l-} that no test separates at level gamma.

    f0 satisfies Q[f0] = 0 on the boundary of the ellipsoid; f1 lowers the
    positive coefficient so that Q[f1] = -z q_{l+} / sqrt(n).

    Args:
        theta0 (CoefficientMap): Coefficients of f0
        theta1 (CoefficientMap): Coefficients of f1
        z (float): Perturbation size
        n (int): Sample size
        q_plus (float): q at l+
        kl (float): Kullback-Leibler divergence of the n-sample laws under Gaussian noise
    """
    def __init__(self, theta0: CoefficientMap, theta1: CoefficientMap, z: float, n: int, q_plus: float, kl: float):
        self.theta0 = theta0
        self.theta1 = theta1
        self.z = z
        self.n = n
        self.q_plus = q_plus
        self.kl = kl

    @property
    def theta0_plus(self) -> float:
        return float(self.theta0.values[0])

    @property
    def kl_bound(self) -> float:
        """z^2 / (4 theta_{0,+}^2)."""
        return self.z * self.z / (4.0 * self.theta0_plus ** 2)

    @property
    def rho2(self) -> float:
        """Implied separation |Q[f1]| = z q_{l+} / sqrt(n)."""
        return self.z * self.q_plus / math.sqrt(self.n)

    @property
    def risk_floor(self) -> float:
        """Lower bound 1/4 exp(-KL) on the cumulative error of any test."""
        return 0.25 * math.exp(-self.kl)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "theta0": self.theta0.to_dict(),
            "theta1": self.theta1.to_dict(),
            "z": self.z,
            "n": self.n,
            "kl": self.kl,
            "kl_bound": self.kl_bound,
            "rho2": self.rho2,
            "risk_floor": self.risk_floor,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)
