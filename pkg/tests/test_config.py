import json

import numpy as np
import pytest

from quadtest.errors import ConfigError, DomainError
from quadtest.models.basis_spec import BasisKind
from quadtest.models.coefficients import FiniteList, SingleIndex, TwoSampleNorm
from quadtest.models.config import THREADS_ENV, RunConfig
from quadtest.models.testing import INDEFINITE, SHARP, IndefiniteThresholdConfig

SMOOTH = {"family": "sobolev-derivative", "sigma": [2.0], "alpha": [0.0], "n": 1000}


def test_defaults_are_filled_in(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    config = RunConfig(SMOOTH)
    assert config.gamma == 0.05
    assert config.mode == SHARP
    assert config.threads == 1
    assert config.dimension == 1
    assert config.basis_spec().kind == BasisKind.TENSOR


def test_unknown_key_is_named():
    with pytest.raises(ConfigError) as info:
        RunConfig(dict(SMOOTH, sigmaa=[1.0]))
    assert "sigmaa" in info.value.message


def test_scalar_sigma_needs_the_dimension():
    with pytest.raises(ConfigError):
        RunConfig({"family": "sobolev-derivative", "sigma": 2.0})
    config = RunConfig({"family": "sobolev-derivative", "sigma": 2.0, "dimension": 3})
    np.testing.assert_array_equal(config.spec.sigma, [2.0, 2.0, 2.0])


def test_dimension_must_match_the_parameters():
    with pytest.raises(ConfigError):
        RunConfig(dict(SMOOTH, dimension=2))


def test_family_parameters_are_validated():
    with pytest.raises(DomainError):
        RunConfig({"family": "sobolev-derivative", "sigma": [1.0], "alpha": [1.0]})
    with pytest.raises(ConfigError):
        RunConfig({"family": "single-index", "sigma": 2.0})
    with pytest.raises(ConfigError):
        RunConfig({"family": "spline"})


def test_signed_families_default_to_the_indefinite_mode():
    config = RunConfig({"family": "two-sample", "sigma": [2.0]})
    assert isinstance(config.spec, TwoSampleNorm)
    assert config.mode == INDEFINITE
    assert config.basis_spec().samples == 2


def test_single_index_family():
    config = RunConfig({"family": "single-index", "sigma": 2.0, "beta": [1.0, 0.0]})
    assert isinstance(config.spec, SingleIndex)
    assert config.dimension == 2


def test_finite_list_family():
    config = RunConfig({"family": "finite-list", "indices": [[1], [2]], "c": [2.0, 2.0], "q": [1.0, -1.0]})
    assert isinstance(config.spec, FiniteList)
    assert config.mode == INDEFINITE


@pytest.mark.parametrize("key,value", [("gamma", 1.5), ("gamma", "0.05"), ("n", 1), ("reps", 2.5),
                                       ("noise", "cauchy"), ("mode", "both"), ("basis", "wavelet")])
def test_bad_values_are_rejected(key, value):
    with pytest.raises(ConfigError):
        RunConfig(dict(SMOOTH, **{key: value}))


def test_threads_from_the_environment(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert RunConfig(SMOOTH).threads == 3
    assert RunConfig(dict(SMOOTH, threads=2)).threads == 2


def test_bad_threads_variable(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "many")
    with pytest.raises(ConfigError):
        RunConfig(SMOOTH)


def test_class_bounds():
    config = RunConfig(dict(SMOOTH, class_bounds={"D3": 1.5, "D4": 2.0}))
    assert isinstance(config.class_bounds, IndefiniteThresholdConfig)
    assert config.class_bounds.D4 == 2.0
    assert RunConfig(dict(SMOOTH, class_bounds="default")).class_bounds == "default"
    with pytest.raises(ConfigError):
        RunConfig(dict(SMOOTH, class_bounds={"D5": 1.0}))


def test_load_from_a_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(SMOOTH))
    assert RunConfig.load(path).n == 1000


def test_load_reports_bad_json(tmp_path):
    path = tmp_path / "run.json"
    path.write_text("{\"family\": ")
    with pytest.raises(ConfigError) as info:
        RunConfig.load(path)
    assert "not valid JSON" in info.value.message


def test_load_reports_a_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.load(tmp_path / "missing.json")


def test_overrides_are_validated_again():
    config = RunConfig(SMOOTH)
    changed = config.with_overrides(gamma=0.1, n=500)
    assert (changed.gamma, changed.n) == (0.1, 500)
    assert config.gamma == 0.05
    with pytest.raises(ConfigError):
        config.with_overrides(gamma=2.0)


def test_explicit_alternative():
    config = RunConfig(dict(SMOOTH, alternative=[{"index": [1], "value": 0.2}, {"index": [-3], "value": 0.1}]))
    theta = config.alternative_map()
    assert theta.as_dict() == {(1,): 0.2, (-3,): 0.1}
    assert RunConfig(SMOOTH).alternative_map() is None


def test_alternative_index_dimension_is_checked():
    config = RunConfig(dict(SMOOTH, alternative=[{"index": [1, 2], "value": 0.2}]))
    with pytest.raises(ConfigError):
        config.alternative_map()


def test_two_sample_alternative_needs_tags():
    config = RunConfig({"family": "two-sample", "sigma": [2.0], "alternative": [{"index": [1], "value": 0.2}]})
    with pytest.raises(ConfigError):
        config.alternative_map()


def test_resolved_configuration_serialises(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    data = json.loads(RunConfig(SMOOTH).to_json())
    assert data["mode"] == SHARP
    assert data["threads"] == 1
    assert data["reps"] == 1000
