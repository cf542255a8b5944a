import io
import json

import pandas as pd
import pytest

import main
from src.controllers import sweep as sweep_controller
from src.controllers import verify as verify_controller
from src.middleware.command_logging import format_log_to_multiline
from src.schemas.experiments import CheckResult
from src.util.errors import NumericalError
from tests.conftest import config_path


def test_version(capsys):
    assert main.main(["--version"]) == 0
    assert "ShiftRisk" in capsys.readouterr().out


def test_missing_command():
    assert main.main([]) == 2


def test_bounds_csv(capsys):
    assert main.main(["bounds", "--config", config_path("uniform.yaml")]) == 0
    frame = pd.read_csv(io.StringIO(capsys.readouterr().out))
    assert list(frame.columns[:3]) == ["alpha", "eps", "rate_only"]
    assert {"CDS_exact", "IDS_lower", "JDS_upper"} <= set(frame.columns)
    assert len(frame) == 6
    assert frame["CDS_exact"].iloc[-1] == pytest.approx(1.0 + 1.0 / 5304.0, rel=1e-15)


def test_bounds_json(capsys):
    assert main.main(["bounds", "--config", config_path("density.yaml"), "--format", "json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert len(rows) == 7
    assert all(row["rate_only"] for row in rows)


def test_invalid_trials_exit_code(caplog):
    assert main.main(["risk-matrix", "--config", config_path("location_matrix.yaml"), "--trials", "1"]) == 2
    assert "trials" in caplog.text


def test_missing_config_exit_code(tmp_path):
    assert main.main(["sweep", "--config", str(tmp_path / "nowhere.yaml")]) == 2


def test_risk_matrix_to_file(tmp_path):
    out = tmp_path / "matrix.csv"
    code = main.main(["risk-matrix", "--config", config_path("location_matrix.yaml"), "--trials", "10", "--out", str(out)])
    assert code == 0
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["estimator", "perturbation", "mean", "std_error", "trials", "seed"]
    assert len(frame) == 8


def test_sweep_is_byte_identical(tmp_path):
    outputs = []
    for name in ("first.csv", "second.csv"):
        out = tmp_path / name
        args = ["sweep", "--config", config_path("location.yaml"), "--trials", "10", "--seed", "7", "--out", str(out)]
        assert main.main(args) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
    assert outputs[0].startswith(b"problem,alpha,eps,shift_class,minimax_empirical")


def test_sweep_is_independent_of_the_worker_count(tmp_path):
    outputs = []
    for threads in ("1", "2"):
        out = tmp_path / f"sweep_{threads}.csv"
        args = ["sweep", "--config", config_path("location.yaml"), "--trials", "5", "--threads", threads, "--out", str(out)]
        assert main.main(args) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_failed_checks_exit_code(monkeypatch, capsys):
    failing = [CheckResult(name="location_JDS_eps=0.1", passed=False), CheckResult(name="crlb_constant", passed=True)]
    monkeypatch.setattr(verify_controller.experiments_service, "verify", lambda config: failing)
    assert main.main(["verify", "--config", config_path("location_matrix.yaml")]) == 1
    assert "location_JDS_eps=0.1" in capsys.readouterr().out


def test_numerical_failure_exit_code(monkeypatch):
    def explode(config):
        raise NumericalError("quadrature did not converge")

    monkeypatch.setattr(sweep_controller.experiments_service, "sweep_rows", explode)
    assert main.main(["sweep", "--config", config_path("location.yaml")]) == 3


def test_run_record_is_indented_per_section():
    record = {
        "X-RUN-ID": "abc",
        "command": {"name": "sweep", "arguments": {"trials": 5}},
        "result": {"exit_code": 0},
    }
    assert format_log_to_multiline(record).split("\n") == [
        "X-RUN-ID: abc",
        "command:",
        "    name: sweep",
        "    arguments:",
        "        trials: 5",
        "result:",
        "    exit_code: 0",
    ]
