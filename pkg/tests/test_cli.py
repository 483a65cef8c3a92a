import json

import numpy as np
import pytest
from click.testing import CliRunner

from quadtest.cli import main
from quadtest.core import sim
from quadtest.interfaces import files
from quadtest.models.basis_spec import BasisKind, BasisSpec
from quadtest.models.spectral import CoefficientMap

ROUGH = {"family": "sobolev-derivative", "sigma": [0.26], "alpha": [0.0], "n": 1000, "gamma": 0.1}
SIGNED = {"family": "finite-list", "indices": [[1], [2]], "c": [2.0, 2.0], "q": [1.0, -1.0], "n": 100,
          "gamma": 0.1, "class_bounds": "default"}


@pytest.fixture
def runner():
    return CliRunner()


def _config(tmp_path, data, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def _data(tmp_path, n, seed=0):
    sample = sim.generate_data(CoefficientMap.zero(1), BasisSpec(BasisKind.TENSOR, 1), n, seed=seed)
    path = tmp_path / "data.csv"
    files.write_sample(path, sample)
    return str(path)


def test_rate_for_the_smooth_ellipsoid(runner, tmp_path):
    config = _config(tmp_path, {"family": "sobolev-derivative", "sigma": [2.0], "n": 1000000})
    out = tmp_path / "rate.json"
    result = runner.invoke(main, ["rate", "--config", config, "--out", str(out)])
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text())
    assert data["rate_exponent"] == pytest.approx(4.0 / 9.0)
    assert data["closed_form"]["kappa"] == pytest.approx(0.25)
    assert data["config"]["gamma"] == 0.05


def test_rate_for_a_signed_family(runner, tmp_path):
    out = tmp_path / "rate.json"
    result = runner.invoke(main, ["rate", "--config", _config(tmp_path, SIGNED), "--out", str(out)])
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text())
    assert data["T"] == pytest.approx(10.0)
    assert data["regime"] == "regular"


def test_invalid_parameters_exit_with_code_two(runner, tmp_path):
    config = _config(tmp_path, {"family": "sobolev-derivative", "sigma": [1.0], "alpha": [1.0], "n": 100})
    result = runner.invoke(main, ["rate", "--config", config])
    assert result.exit_code == 2


def test_unknown_key_exits_with_code_two(runner, tmp_path):
    result = runner.invoke(main, ["rate", "--config", _config(tmp_path, dict(ROUGH, colour="red"))])
    assert result.exit_code == 2


def test_weights_are_unit_norm_and_reproducible(runner, tmp_path):
    config = _config(tmp_path, ROUGH)
    first, second = tmp_path / "w1.csv", tmp_path / "w2.csv"
    assert runner.invoke(main, ["weights", "--config", config, "--out", str(first)]).exit_code == 0
    assert runner.invoke(main, ["weights", "--config", config, "--out", str(second)]).exit_code == 0
    assert first.read_text() == second.read_text()
    table = np.genfromtxt(first, delimiter=",", names=True)
    assert float(np.sum(table["w_star"] ** 2)) == pytest.approx(1.0)
    summary = json.loads((tmp_path / "w1.json").read_text())
    assert summary["T"] > 0


def test_sharp_test_on_generated_data(runner, tmp_path):
    out = tmp_path / "report.json"
    result = runner.invoke(main, ["test", _data(tmp_path, 1000), "--config", _config(tmp_path, ROUGH),
                                  "--out", str(out)])
    assert result.exit_code == 0, result.output
    report = json.loads(out.read_text())
    assert report["mode"] == "sharp"
    assert report["threshold"] == pytest.approx(1.6448536269514722, abs=1e-9)
    assert report["reject"] == (report["statistic"] > report["threshold"])


def test_indefinite_test_on_generated_data(runner, tmp_path):
    out = tmp_path / "report.json"
    result = runner.invoke(main, ["test", _data(tmp_path, 100), "--config", _config(tmp_path, SIGNED),
                                  "--out", str(out)])
    assert result.exit_code == 0, result.output
    report = json.loads(out.read_text())
    assert report["mode"] == "indefinite"
    assert report["diagnostics"]["T"] == pytest.approx(10.0)


def test_duplicated_column_exits_with_code_three(runner, tmp_path):
    data = tmp_path / "bad.csv"
    data.write_text("t1,t1,x\n0.1,0.2,1.0\n")
    result = runner.invoke(main, ["test", str(data), "--config", _config(tmp_path, ROUGH)])
    assert result.exit_code == 3


@pytest.mark.slow
def test_simulate_writes_records(runner, tmp_path):
    config = _config(tmp_path, dict(ROUGH, reps=100, seed=5))
    out = tmp_path / "sim.json"
    result = runner.invoke(main, ["simulate", "--config", config, "--out", str(out), "--threads", "2"])
    assert result.exit_code == 0, result.output
    summary = json.loads(out.read_text())
    assert summary["estimates"]["replications"] == 100
    assert summary["config"]["threads"] == 2
    records = (tmp_path / "sim.records.csv").read_text().splitlines()
    assert records[0] == "rep,statistic,threshold,reject,hypothesis"
    assert len(records) == 201


def test_rate_refuses_an_empty_indefinite_index_set(runner, tmp_path):
    config = _config(tmp_path, {"family": "two-sample", "sigma": [2.0], "n": 2000})
    result = runner.invoke(main, ["rate", "--config", config])
    assert result.exit_code == 4


def test_indefinite_test_refuses_an_empty_index_set(runner, tmp_path):
    config = _config(tmp_path, {"family": "two-sample", "sigma": [2.0], "n": 2000, "class_bounds": "default"})
    sample = sim.generate_data(CoefficientMap.zero(1, tagged=True), BasisSpec(BasisKind.TENSOR, 1, samples=2), 2000)
    path = tmp_path / "data.csv"
    files.write_sample(path, sample)
    result = runner.invoke(main, ["test", str(path), "--config", config])
    assert result.exit_code == 4


@pytest.mark.slow
def test_simulate_without_output_warns_about_the_records(runner, tmp_path, caplog):
    config = _config(tmp_path, dict(ROUGH, reps=100, seed=5))
    result = runner.invoke(main, ["simulate", "--config", config])
    assert result.exit_code == 0, result.output
    assert "per-replication records were not written" in caplog.text
    assert not list(tmp_path.glob("*.records.csv"))
