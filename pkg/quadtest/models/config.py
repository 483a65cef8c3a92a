"""
Run configuration loaded from a JSON document.
"""

import json
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from quadtest.errors import ConfigError
from quadtest.models.basis_spec import BasisKind, BasisSpec
from quadtest.models.coefficients import CoefficientSpec, FiniteList, SingleIndex, SobolevDerivative, TwoSampleNorm
from quadtest.models.sample import NoiseKind, NoiseSpec
from quadtest.models.spectral import CoefficientMap
from quadtest.models.testing import INDEFINITE, SHARP, IndefiniteThresholdConfig

THREADS_ENV = "QUADTEST_THREADS"

FAMILIES = ("sobolev-derivative", "single-index", "two-sample", "finite-list")
LEAST_FAVORABLE = "least-favorable"
NO_ALTERNATIVE = "none"
DEFAULT_BOUNDS = "default"

DEFAULTS: Dict[str, Any] = {
    "family": None,
    "sigma": None,
    "alpha": None,
    "beta": None,
    "indices": None,
    "c": None,
    "q": None,
    "tags": None,
    "dimension": None,
    "basis": BasisKind.TENSOR.value,
    "n": None,
    "gamma": 0.05,
    "noise": NoiseKind.GAUSSIAN.value,
    "df": None,
    "mode": None,
    "T": None,
    "T_pilot": None,
    "pilot_cap_fraction": 0.25,
    "pilot_exponent": 0.4,
    "tau": 1.0,
    "class_bounds": None,
    "seed": 0,
    "reps": 1000,
    "alternative": LEAST_FAVORABLE,
    "max_box_side": 4096,
    "quadrature_tol": 1e-4,
    "output": None,
    "threads": None,
}


def _number(data: Dict[str, Any], key: str, positive: bool = False) -> Optional[float]:
    value = data.get(key)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{key}' must be a number, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(f"'{key}' must be positive, got {value!r}")
    return float(value)


def _integer(data: Dict[str, Any], key: str, minimum: int) -> Optional[int]:
    value = data.get(key)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"'{key}' must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"'{key}' must be >= {minimum}, got {value}")
    return value


def _vector(data: Dict[str, Any], key: str, dimension: Optional[int] = None) -> Optional[List[float]]:
    value = data.get(key)
    if value is None:
        return None
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if dimension is None:
            raise ConfigError(f"scalar '{key}' needs 'dimension'")
        return [float(value)] * dimension
    if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise ConfigError(f"'{key}' must be a number or a list of numbers")
    return [float(v) for v in value]


class RunConfig:
    """
    Validated run configuration with every default filled in.

    Args:
        data (Dict[str, Any]): Raw configuration document
    """
    def __init__(self, data: Dict[str, Any]):
        if not isinstance(data, dict):
            raise ConfigError("the configuration must be a JSON object")
        unknown = sorted(set(data) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown configuration key '{unknown[0]}'", {"unknown": unknown})
        values = dict(DEFAULTS)
        values.update(data)
        if values["family"] not in FAMILIES:
            raise ConfigError(f"'family' must be one of {', '.join(FAMILIES)}, got {values['family']!r}")
        self.family: str = values["family"]
        self.dimension = _integer(values, "dimension", 1)
        self.basis = values["basis"]
        if self.basis not in [kind.value for kind in BasisKind]:
            raise ConfigError(f"'basis' must be 'tensor' or 'dot-product', got {self.basis!r}")
        self.n = _integer(values, "n", 2)
        self.gamma = _number(values, "gamma", positive=True)
        if not self.gamma < 1.0:
            raise ConfigError(f"'gamma' must lie in (0, 1), got {self.gamma}")
        if values["noise"] not in [kind.value for kind in NoiseKind]:
            raise ConfigError(f"'noise' must be gaussian, rademacher or student, got {values['noise']!r}")
        self.noise = values["noise"]
        self.df = _number(values, "df", positive=True)
        if values["mode"] not in (None, SHARP, INDEFINITE):
            raise ConfigError(f"'mode' must be '{SHARP}' or '{INDEFINITE}', got {values['mode']!r}")
        self.mode = values["mode"]
        self.T = _number(values, "T", positive=True)
        self.T_pilot = _number(values, "T_pilot", positive=True)
        self.pilot_cap_fraction = _number(values, "pilot_cap_fraction", positive=True)
        self.pilot_exponent = _number(values, "pilot_exponent", positive=True)
        self.tau = _number(values, "tau", positive=True)
        self.class_bounds = self._parse_bounds(values["class_bounds"])
        self.seed = _integer(values, "seed", 0)
        self.reps = _integer(values, "reps", 1)
        self.alternative = self._parse_alternative(values["alternative"])
        self.max_box_side = _integer(values, "max_box_side", 1)
        self.quadrature_tol = _number(values, "quadrature_tol", positive=True)
        if values["output"] is not None and not isinstance(values["output"], str):
            raise ConfigError("'output' must be a path string")
        self.output: Optional[str] = values["output"]
        threads = values["threads"]
        if threads is None and os.environ.get(THREADS_ENV):
            try:
                threads = int(os.environ[THREADS_ENV])
            except ValueError:
                raise ConfigError(f"{THREADS_ENV} must be an integer, got {os.environ[THREADS_ENV]!r}")
        self.threads = _integer({"threads": 1 if threads is None else threads}, "threads", 1)
        self._raw = values
        self.spec = self._build_spec(values)
        if self.dimension is not None and self.dimension != self.spec.dimension:
            raise ConfigError(f"'dimension' = {self.dimension} does not match the family parameters "
                              f"(dimension {self.spec.dimension})")
        self.dimension = self.spec.dimension
        if self.mode is None:
            self.mode = INDEFINITE if self.spec.signed else SHARP

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunConfig":
        """Read and validate a JSON configuration file."""
        try:
            with open(path, "r", encoding="utf-8") as handle:
                data = json.load(handle)
        except OSError as exc:
            raise ConfigError(f"cannot read configuration {path}: {exc.strerror}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"configuration {path} is not valid JSON: line {exc.lineno}: {exc.msg}")
        return cls(data)

    @staticmethod
    def _parse_bounds(value: Any) -> Union[None, str, IndefiniteThresholdConfig]:
        if value is None or value == DEFAULT_BOUNDS:
            return value
        if not isinstance(value, dict) or set(value) - {"D3", "D4"}:
            raise ConfigError("'class_bounds' must be \"default\" or an object with keys D3 and D4")
        return IndefiniteThresholdConfig(D3=_number(value, "D3"), D4=_number(value, "D4"))

    @staticmethod
    def _parse_alternative(value: Any) -> Union[str, List[Dict[str, Any]]]:
        if value in (LEAST_FAVORABLE, NO_ALTERNATIVE):
            return value
        if not isinstance(value, list) or not all(isinstance(item, dict) for item in value):
            raise ConfigError("'alternative' must be \"least-favorable\", \"none\" or a list of "
                              "{\"index\": [...], \"value\": x} objects")
        for item in value:
            if set(item) - {"index", "value", "tag"} or "index" not in item or "value" not in item:
                raise ConfigError("alternative coefficients need the keys 'index' and 'value' (and optionally 'tag')")
        return value

    def _build_spec(self, values: Dict[str, Any]) -> CoefficientSpec:
        d = self.dimension
        if self.family in ("sobolev-derivative", "two-sample"):
            sigma = _vector(values, "sigma", d)
            if sigma is None:
                raise ConfigError(f"the {self.family} family needs 'sigma'")
            alpha = _vector(values, "alpha", len(sigma)) or [0.0] * len(sigma)
            cls = SobolevDerivative if self.family == "sobolev-derivative" else TwoSampleNorm
            return cls(sigma, alpha)
        if self.family == "single-index":
            sigma = _number(values, "sigma", positive=True)
            beta = _vector(values, "beta")
            if sigma is None or beta is None:
                raise ConfigError("the single-index family needs 'sigma' and 'beta'")
            return SingleIndex(sigma, beta)
        if values["indices"] is None or values["c"] is None or values["q"] is None:
            raise ConfigError("the finite-list family needs 'indices', 'c' and 'q'")
        return FiniteList(values["indices"], values["c"], values["q"], values["tags"])

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """A new configuration with some keys replaced, validated again."""
        data = {key: value for key, value in self._raw.items() if value is not None or key in overrides}
        data.update(overrides)
        return RunConfig(data)

    def basis_spec(self) -> BasisSpec:
        return BasisSpec(BasisKind(self.basis), self.dimension, 2 if self.spec.two_sample else 1)

    def noise_spec(self) -> NoiseSpec:
        return NoiseSpec(NoiseKind(self.noise), self.df)

    def require_n(self) -> int:
        if self.n is None:
            raise ConfigError("this command needs the sample size 'n'")
        return self.n

    def alternative_map(self) -> Optional[CoefficientMap]:
        """The explicit alternative as a coefficient map, None for the keyword forms."""
        if isinstance(self.alternative, str):
            return None
        tagged = self.spec.two_sample
        mapping = {}
        for item in self.alternative:
            key = tuple(int(v) for v in item["index"])
            if len(key) != self.dimension:
                raise ConfigError(f"alternative index {list(key)} must have {self.dimension} components")
            if tagged:
                if item.get("tag") not in (1, 2):
                    raise ConfigError("two-sample alternative coefficients need 'tag' 1 or 2")
                key = key + (int(item["tag"]),)
            mapping[key] = float(item["value"])
        return CoefficientMap.from_dict(mapping, self.dimension, tagged)

    def to_dict(self) -> Dict[str, Any]:
        """The resolved configuration, defaults included."""
        data = dict(self._raw)
        data.update({
            "dimension": self.dimension,
            "mode": self.mode,
            "threads": self.threads,
            "df": NoiseSpec(NoiseKind(self.noise), self.df).df,
            "class_bounds": (self.class_bounds.to_dict()
                             if isinstance(self.class_bounds, IndefiniteThresholdConfig) else self.class_bounds),
        })
        for key, value in data.items():
            if isinstance(value, np.ndarray):
                data[key] = value.tolist()
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)
