"""
Test configuration and report models.
"""

import json
import math
from typing import Any, Dict, Optional

import numpy as np

from quadtest.errors import ConfigError, DomainError
from quadtest.models.basis_spec import BasisSpec
from quadtest.models.coefficients import CoefficientSpec
from quadtest.models.spectral import ActiveSet

SHARP = "sharp"
INDEFINITE = "indefinite"


class IndefiniteThresholdConfig:
    """
    Class constants entering the nonasymptotic threshold.

    D1 and D2 are computed from N(T); D3 and D4 are declared class bounds.
    B1 and B2 are always derived from the D's.

    Args:
        D3 (Optional[float]): Bound on sup ||f||_4 over the class
        D4 (Optional[float]): Bound on sup ||f * T_Q f||_2 over the class
        D1 (Optional[float]): Flatness constant of q on N(T)
        D2 (Optional[float]): Sup of sum phi_l^2 over |N(T)|
    """
    def __init__(self, D3: Optional[float] = None, D4: Optional[float] = None,
                 D1: Optional[float] = None, D2: Optional[float] = None):
        for name, value in (("D1", D1), ("D2", D2), ("D3", D3), ("D4", D4)):
            if value is not None and not value > 0:
                raise ConfigError(f"{name} must be positive, got {value}")
        self.D1 = D1
        self.D2 = D2
        self.D3 = D3
        self.D4 = D4

    def _require(self) -> None:
        missing = [name for name in ("D1", "D2", "D3", "D4") if getattr(self, name) is None]
        if missing:
            raise ConfigError(f"indefinite thresholds need {', '.join(missing)}")

    @property
    def B1(self) -> float:
        self._require()
        core = self.D1 * self.D2
        return 6.0 + 12.0 * core * self.D3 ** 2 + 6.0 * core * self.D3 ** 4

    @property
    def B2(self) -> float:
        self._require()
        return 4.0 * self.D4

    def with_computed(self, D1: float, D2: float) -> "IndefiniteThresholdConfig":
        return IndefiniteThresholdConfig(self.D3, self.D4, D1, D2)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"D1": self.D1, "D2": self.D2, "D3": self.D3, "D4": self.D4}
        if None not in data.values():
            data.update({"B1": self.B1, "B2": self.B2})
        return data


class TestConfig:
    """
    Everything needed to run a test on a sample.

    Args:
        spec (CoefficientSpec): Coefficient family
        basis (BasisSpec): Fourier system
        gamma (float): Significance level in (0, 1)
        mode (Optional[str]): "sharp" or "indefinite", defaulted from the sign of q
        weights (Optional[np.ndarray]): Explicit unit-norm weights on ``weight_set``
        weight_set (Optional[ActiveSet]): Index set carrying explicit weights
        T (Optional[float]): Truncation override for the indefinite test
        thresholds (Optional[IndefiniteThresholdConfig]): Class bounds for the indefinite test
        T_pilot (Optional[float]): Pilot truncation override
        pilot_cap_fraction (float): Pilot size cap as a multiple of sqrt(n)
        pilot_exponent (float): Default pilot size is n^pilot_exponent
        tau (float): Known noise level, responses are divided by it
        max_box_side (int): Cap on the enumeration box side
    """
    __test__ = False

    def __init__(self, spec: CoefficientSpec, basis: BasisSpec, gamma: float, mode: Optional[str] = None,
                 weights: Optional[np.ndarray] = None, weight_set: Optional[ActiveSet] = None,
                 T: Optional[float] = None, thresholds: Optional[IndefiniteThresholdConfig] = None,
                 T_pilot: Optional[float] = None, pilot_cap_fraction: float = 0.25,
                 pilot_exponent: float = 0.4, tau: float = 1.0, max_box_side: int = 4096):
        if not 0.0 < gamma < 1.0:
            raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
        if basis.dimension != spec.dimension:
            raise DomainError(f"basis dimension {basis.dimension} does not match coefficient dimension {spec.dimension}")
        if spec.two_sample != (basis.samples == 2):
            raise DomainError("two-sample coefficients need the two-sample basis and vice versa")
        mode = mode or (INDEFINITE if spec.signed else SHARP)
        if mode not in (SHARP, INDEFINITE):
            raise ConfigError(f"mode must be '{SHARP}' or '{INDEFINITE}', got {mode!r}")
        if mode == SHARP and (spec.signed or (spec.explicit and np.any(spec.q < 0))):
            raise DomainError("the sharp test needs q_l >= 0 for every index")
        if (weights is None) != (weight_set is None):
            raise ConfigError("explicit weights need their index set")
        self.spec = spec
        self.basis = basis
        self.gamma = gamma
        self.mode = mode
        self.weights = None if weights is None else np.asarray(weights, dtype=float)
        self.weight_set = weight_set
        self.T = T
        self.thresholds = thresholds
        self.T_pilot = T_pilot
        self.pilot_cap_fraction = pilot_cap_fraction
        self.pilot_exponent = pilot_exponent
        self.tau = tau
        self.max_box_side = max_box_side

    def to_dict(self) -> Dict[str, Any]:
        return {
            "spec": self.spec.to_dict(),
            "basis": self.basis.to_dict(),
            "gamma": self.gamma,
            "mode": self.mode,
            "explicit_weights": self.weights is not None,
            "T": self.T,
            "thresholds": None if self.thresholds is None else self.thresholds.to_dict(),
            "T_pilot": self.T_pilot,
            "pilot_cap_fraction": self.pilot_cap_fraction,
            "pilot_exponent": self.pilot_exponent,
            "tau": self.tau,
        }


class TestReport:
    """
    Outcome of one test run.

    Args:
        statistic (float): U_n (sharp) or U_n(T) (indefinite)
        threshold (float): Critical value
        mode (str): "sharp" or "indefinite"
        h_n_predicted (Optional[float]): Predicted mean when the true coefficients are known
        diagnostics (Optional[Dict[str, Any]]): Condition flags and constants
    """
    __test__ = False

    def __init__(self, statistic: float, threshold: float, mode: str,
                 h_n_predicted: Optional[float] = None, diagnostics: Optional[Dict[str, Any]] = None):
        self.statistic = float(statistic)
        self.threshold = float(threshold)
        self.mode = mode
        self.h_n_predicted = h_n_predicted
        self.diagnostics = diagnostics or {}

    @property
    def reject(self) -> bool:
        if self.mode == INDEFINITE:
            return abs(self.statistic) > self.threshold
        return self.statistic > self.threshold

    def to_dict(self) -> Dict[str, Any]:
        return {
            "statistic": self.statistic,
            "threshold": self.threshold,
            "reject": self.reject,
            "mode": self.mode,
            "h_n_predicted": self.h_n_predicted,
            "diagnostics": self.diagnostics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=_json_default)

    def __repr__(self) -> str:
        return f"TestReport(statistic={self.statistic:.6g}, threshold={self.threshold:.6g}, reject={self.reject})"


def _json_default(value: Any) -> Any:
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, float) and math.isinf(value):
        return str(value)
    raise TypeError(f"cannot serialise {type(value).__name__}")
