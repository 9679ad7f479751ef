"""Tests for run reports, resource metrics and matrix export."""

import csv
import json
import time

import numpy as np
import pytest

from src.rw_integrals.models.problem import BasisIndex
from src.rw_integrals.models.results import ConnectionMatrix, Residual
from src.rw_integrals.reporting import (
    ResourceMonitor,
    RunReport,
    format_complex,
    write_matrix_csv,
    write_matrix_json,
)


@pytest.fixture
def small_matrix():
    legend = [BasisIndex.point(1, 1), BasisIndex.corner(2)]
    return ConnectionMatrix((2, 1), [[0.5 - 0.25j, 1.0], [-2j, 1 / 3]], legend, at={"t1": [0.12 + 0.12j]})


class TestExport:
    """Deterministic JSON and CSV output."""

    def test_format_complex(self):
        assert format_complex(1.5 - 0.25j) == "1.5-0.25i"
        assert format_complex(complex(0, -2)) == "0-2i"
        assert format_complex(1 / 3, digits=3) == "0.333+0i"

    def test_full_precision_round_trips(self):
        value = complex(np.pi, -np.e)
        real, imag = format_complex(value)[:-1].split("-", 1)
        assert float(real) == np.pi
        assert -float(imag) == -np.e

    def test_json(self, small_matrix, tmp_path):
        path = write_matrix_json(small_matrix, tmp_path / "out" / "A21.json")
        data = json.loads(path.read_text(encoding="utf-8"))
        assert data["deriv"] == {"k": 2, "p": 1}
        assert data["entries"][1][0] == [0.0, -2.0]
        assert [item["label"] for item in data["legend"]] == ["1,1", "+-,2"]

    def test_json_is_deterministic(self, small_matrix, tmp_path):
        first = write_matrix_json(small_matrix, tmp_path / "a.json").read_bytes()
        second = write_matrix_json(small_matrix, tmp_path / "b.json").read_bytes()
        assert first == second

    def test_csv(self, small_matrix, tmp_path):
        path = write_matrix_csv(small_matrix, tmp_path / "A21.csv")
        with path.open(newline="", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["1,1", "+-,2"]
        assert rows[1] == ["0.5-0.25i", "1+0i"]
        assert complex(rows[2][1].replace("i", "j")) == pytest.approx(1 / 3, rel=1e-16)


class TestRunReport:
    """Pass/fail bookkeeping and the JSON report."""

    def test_empty_report_passes(self):
        assert RunReport(command="validate").passed

    def test_add_check(self):
        report = RunReport(command="flatness")
        assert report.add_check("flat_11_21", 1e-9, 1e-5, pair=[(1, 1), (2, 1)])
        assert not report.add_check("flat_11_22", 1e-3, 1e-5)
        assert not report.passed
        assert [check["id"] for check in report.failures] == ["flat_11_22"]
        assert report.checks[0]["pair"] == [[1, 1], [2, 1]]

    def test_nan_residual_fails(self):
        report = RunReport(command="verify-ode")
        assert not report.add_check("ode_1_1", float("nan"), 1e-6)

    def test_add_residual(self):
        report = RunReport(command="identities")
        assert report.add_residual(Residual("frv", 1e-13, 1e-10, sample={"u": 0.1 + 0.2j}))
        assert report.checks[0]["sample"] == {"u": [0.1, 0.2]}

    def test_error_fails_report(self):
        report = RunReport(command="validate")
        report.error = {"message": "bad"}
        assert not report.passed
        assert report.to_dict()["error"] == {"message": "bad"}

    def test_to_dict_converts_numpy(self):
        report = RunReport(command="connection", seed=3, parameters={"h": np.float64(1e-5), "z": np.complex128(1j)})
        report.extra["shape"] = np.array([16, 16])
        data = report.to_dict()
        assert data["parameters"] == {"h": 1e-5, "z": [0.0, 1.0]}
        assert data["extra"] == {"shape": [16, 16]}
        assert data["pass"] is True
        assert "error" not in data
        json.dumps(data)

    def test_finish_records_time_and_memory(self):
        report = RunReport(command="identities")
        with ResourceMonitor(interval=0.01) as monitor:
            time.sleep(0.02)
        report.finish(monitor)
        assert report.wall_time > 0
        assert report.peak_memory_mb > 0

    def test_write(self, tmp_path):
        report = RunReport(command="validate", config_digest="abc")
        report.add_check("config", 0.0, 1.0)
        path = report.write(tmp_path / "reports" / "run.json")
        data = json.loads(path.read_text(encoding="utf-8"))
        assert data["command"] == "validate"
        assert data["config_digest"] == "abc"
        assert data["pass"] is True


class TestResourceMonitor:
    """Peak memory sampling."""

    def test_peak_only_grows(self):
        monitor = ResourceMonitor(interval=0.01).start()
        before = monitor.peak_memory_mb
        block = np.ones(4 * 1024 * 1024)
        time.sleep(0.05)
        monitor.stop()
        assert monitor.peak_memory_mb >= before
        del block

    def test_stop_without_start(self):
        monitor = ResourceMonitor()
        monitor.stop()
        assert monitor.peak_memory_mb > 0

    def test_cpu_percent(self):
        assert ResourceMonitor().cpu_percent() >= 0.0
