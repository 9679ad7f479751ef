"""
Tests for the logging system.

Covers the JSON formatter, timing metrics, the Logger wrapper helpers,
file rotation setup and RW_LOG_* configuration.
"""

import json
import logging
import logging.handlers
import os
import sys
import tempfile
from pathlib import Path
from unittest.mock import MagicMock, patch

import pytest

from src.rw_integrals.logging import Logger, configure_logging, get_logger
from src.rw_integrals.logging.config import LoggingConfig
from src.rw_integrals.logging.logger import LOG_FILE_NAME, JSONFormatter, PerformanceLogger


class _Capture(logging.Handler):
    def __init__(self):
        super().__init__()
        self.records = []

    def emit(self, record):
        self.records.append(record)


def _record(level=logging.INFO, msg="Test message", exc_info=None):
    return logging.LogRecord(
        name="rw_integrals.test",
        level=level,
        pathname="/test/path.py",
        lineno=42,
        msg=msg,
        args=(),
        exc_info=exc_info,
    )


class TestJSONFormatter:
    """Test the JSON formatter for structured logging."""

    def test_basic_formatting(self):
        log_data = json.loads(JSONFormatter().format(_record()))

        assert log_data["level"] == "INFO"
        assert log_data["logger"] == "rw_integrals.test"
        assert log_data["message"] == "Test message"
        assert log_data["line"] == 42
        assert log_data["timestamp"].endswith("Z")
        assert "extra" not in log_data

    def test_exception_formatting(self):
        try:
            raise ValueError("Test exception")
        except ValueError:
            record = _record(logging.ERROR, "Error occurred", sys.exc_info())

        log_data = json.loads(JSONFormatter().format(record))

        assert log_data["exception"]["type"] == "ValueError"
        assert log_data["exception"]["message"] == "Test exception"
        assert "Traceback" in log_data["exception"]["traceback"]

    def test_extra_fields(self):
        record = _record()
        record.check = {"id": "frv", "residual": 1e-13}
        record.argument = 0.5 + 0.25j

        log_data = json.loads(JSONFormatter().format(record))

        assert log_data["extra"]["check"] == {"id": "frv", "residual": 1e-13}
        # complex values fall back to str
        assert log_data["extra"]["argument"] == "(0.5+0.25j)"


class TestPerformanceLogger:
    """Test performance metrics logging."""

    def setup_method(self):
        self.mock_logger = MagicMock()
        self.perf_logger = PerformanceLogger(self.mock_logger)

    def test_operation_timing(self):
        self.perf_logger.log_operation_timing("identities", 1.23456, success=True, samples=100)

        args, kwargs = self.mock_logger.info.call_args
        assert args[0] == "Operation completed: identities"
        performance = kwargs["extra"]["performance"]
        assert performance["duration_ms"] == 1234.56
        assert performance["success"] is True
        assert performance["samples"] == 100

    def test_resource_usage(self):
        self.perf_logger.log_resource_usage(512.3456, cpu_percent=12.3456)
        metrics = self.mock_logger.info.call_args[1]["extra"]["performance"]
        assert metrics == {"memory_mb": 512.35, "cpu_percent": 12.35, "type": "resource_usage"}

    def test_resource_usage_without_cpu(self):
        self.perf_logger.log_resource_usage(100.0)
        metrics = self.mock_logger.info.call_args[1]["extra"]["performance"]
        assert "cpu_percent" not in metrics

    def test_disabled_writes_nothing(self, monkeypatch):
        monkeypatch.setattr(PerformanceLogger, "enabled", False)
        self.perf_logger.log_operation_timing("identities", 0.5)
        self.perf_logger.log_resource_usage(10.0)
        self.mock_logger.info.assert_not_called()


class TestLogger:
    """Test the Logger wrapper."""

    def setup_method(self):
        self.mock_python_logger = MagicMock()
        self.logger = Logger("rw_integrals.test", self.mock_python_logger)

    def test_levels_pass_extras(self):
        self.logger.debug("terms", terms=12)
        self.mock_python_logger.debug.assert_called_once_with("terms", extra={"terms": 12}, stacklevel=2)

        self.logger.error("failed", exc_info=True, command="flatness")
        self.mock_python_logger.error.assert_called_once_with(
            "failed", exc_info=True, extra={"command": "flatness"}, stacklevel=2
        )

    def test_records_name_the_caller(self):
        python_logger = logging.getLogger("rw_integrals.test.caller")
        python_logger.setLevel(logging.DEBUG)
        python_logger.propagate = False
        capture = _Capture()
        python_logger.addHandler(capture)
        try:
            logger = Logger("rw_integrals.test.caller", python_logger)
            logger.info("direct")
            logger.warning("careful")
            logger.log_check_result("frv", 1e-13, 1e-10, True)
        finally:
            python_logger.removeHandler(capture)
            python_logger.propagate = True

        assert [record.funcName for record in capture.records] == ["test_records_name_the_caller"] * 3
        assert {record.module for record in capture.records} == {"test_logging"}

    def test_log_command(self):
        self.logger.log_command("connection", {"deriv": "1,1"})
        args, kwargs = self.mock_python_logger.info.call_args
        assert args[0] == "Command started: connection"
        assert kwargs["extra"]["command"]["parameters"] == {"deriv": "1,1"}

    def test_passed_check_logged_at_info(self):
        self.logger.log_check_result("G_1", 1e-14, 1e-10, True)
        self.mock_python_logger.info.assert_called_once()
        self.mock_python_logger.error.assert_not_called()

    def test_failed_check_logged_at_error(self):
        self.logger.log_check_result("G_1", 1e-3, 1e-10, False, component="u1+tau")
        args, kwargs = self.mock_python_logger.error.call_args
        assert args[0] == "Check failed: G_1"
        assert kwargs["extra"]["check"]["component"] == "u1+tau"

    def test_log_refinement(self):
        self.logger.log_refinement("pochhammer", 2, "estimate 1e-6")
        extra = self.mock_python_logger.debug.call_args[1]["extra"]
        assert extra["refinement"] == {"contour": "pochhammer", "level": 2, "reason": "estimate 1e-6"}

    def test_time_operation_success(self):
        with self.logger.time_operation("assemble"):
            pass
        performance = self.mock_python_logger.info.call_args[1]["extra"]["performance"]
        assert performance["operation"] == "assemble"
        assert performance["success"] is True

    def test_time_operation_failure(self):
        with pytest.raises(RuntimeError):
            with self.logger.time_operation("assemble"):
                raise RuntimeError("singular")
        performance = self.mock_python_logger.info.call_args[1]["extra"]["performance"]
        assert performance["success"] is False
        assert performance["error"] == "singular"

    def test_get_logger(self):
        logger = get_logger("rw_integrals.sample")
        assert isinstance(logger, Logger)
        assert logger.name == "rw_integrals.sample"


class TestLoggingConfiguration:
    """Test logging setup against a temporary directory."""

    def _reset_root(self):
        root = logging.getLogger()
        for handler in list(root.handlers):
            handler.close()
            root.removeHandler(handler)

    def test_file_handler_writes_json(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            try:
                configure_logging(log_level="DEBUG", log_dir=temp_dir, console_output=False)
                get_logger("rw_integrals.test").info("written", terms=3)
                for handler in logging.getLogger().handlers:
                    handler.flush()

                lines = (Path(temp_dir) / LOG_FILE_NAME).read_text(encoding="utf-8").splitlines()
                entry = json.loads(lines[-1])
                assert entry["message"] == "written"
                assert entry["extra"]["terms"] == 3
            finally:
                self._reset_root()

    def test_no_file_handler_without_directory(self):
        try:
            configure_logging(log_level="WARNING", log_dir=None, console_output=True)
            handlers = logging.getLogger().handlers
            assert len(handlers) == 1
            assert isinstance(handlers[0], logging.StreamHandler)
            assert handlers[0].stream is sys.stderr
            assert logging.getLogger().level == logging.WARNING
        finally:
            self._reset_root()

    def test_performance_lines_can_be_disabled(self, monkeypatch):
        monkeypatch.setattr(PerformanceLogger, "enabled", True)
        try:
            configure_logging(log_dir=None, console_output=False, performance_logging=False)
            assert PerformanceLogger.enabled is False
        finally:
            self._reset_root()

    def test_rotation_settings(self):
        with tempfile.TemporaryDirectory() as temp_dir:
            try:
                configure_logging(log_dir=temp_dir, max_bytes=2048, backup_count=2, console_output=False)
                handler = logging.getLogger().handlers[0]
                assert isinstance(handler, logging.handlers.RotatingFileHandler)
                assert handler.maxBytes == 2048
                assert handler.backupCount == 2
            finally:
                self._reset_root()


class TestLoggingConfig:
    """Test RW_LOG_* configuration."""

    def test_defaults(self):
        config = LoggingConfig()
        assert config.level == "INFO"
        assert config.log_dir == "logs"
        assert config.max_bytes == 10 * 1024 * 1024
        assert config.console_output is True

    def test_from_environment(self):
        env = {
            "RW_LOG_LEVEL": "debug",
            "RW_LOG_DIR": "/tmp/rw-logs",
            "RW_LOG_MAX_FILE_SIZE_MB": "3",
            "RW_LOG_BACKUP_COUNT": "1",
            "RW_LOG_CONSOLE": "false",
            "RW_LOG_PERFORMANCE": "FALSE",
        }
        with patch.dict(os.environ, env):
            config = LoggingConfig.from_environment()

        assert config.level == "DEBUG"
        assert config.log_dir == "/tmp/rw-logs"
        assert config.max_bytes == 3 * 1024 * 1024
        assert config.backup_count == 1
        assert config.console_output is False
        assert config.enable_performance_logging is False

    def test_from_mapping_keeps_defaults_for_unset(self):
        config = LoggingConfig.from_environment({"RW_LOG_DIR": "custom", "RW_LOG_CONSOLE": ""})
        assert config.log_dir == "custom"
        assert config.console_output is True
        assert config.backup_count == 5
        assert config.level == "INFO"

    def test_bad_integer(self):
        with pytest.raises(ValueError, match="RW_LOG_BACKUP_COUNT must be an integer, got 'many'"):
            LoggingConfig.from_environment({"RW_LOG_BACKUP_COUNT": "many"})

    def test_validate(self, tmp_path):
        LoggingConfig(log_dir=str(tmp_path / "logs")).validate()
        assert (tmp_path / "logs").is_dir()

        with pytest.raises(ValueError, match="Invalid log level"):
            LoggingConfig(level="VERBOSE", log_dir=str(tmp_path)).validate()
        with pytest.raises(ValueError, match="Max file size must be positive"):
            LoggingConfig(max_file_size_mb=0, log_dir=str(tmp_path)).validate()
        with pytest.raises(ValueError, match="Backup count must be non-negative"):
            LoggingConfig(backup_count=-1, log_dir=str(tmp_path)).validate()
