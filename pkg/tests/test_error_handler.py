"""Tests for error categorization and exit-code selection."""

import logging
from unittest.mock import Mock

import pytest

from src.rw_integrals.error_handler import (
    EXIT_CHECK_FAILURE,
    EXIT_USAGE,
    ErrorContext,
    ErrorHandler,
    ErrorSeverity,
)
from src.rw_integrals.models.exceptions import (
    BranchJump,
    CommandNotFoundError,
    GeometryError,
    InvalidParameterError,
    NearSingular,
    NonConvergence,
    ParseError,
    QuadratureFailure,
    ValidationError,
)


@pytest.fixture
def mock_logger():
    """Mock logger for testing."""
    return Mock(spec=logging.Logger)


@pytest.fixture
def error_handler(mock_logger):
    return ErrorHandler(logger=mock_logger)


@pytest.fixture
def sample_context():
    return ErrorContext(
        command="identities",
        parameters={"seed": 7, "samples": 10},
        config_path="config/problems/sample_1x1.json",
    )


class TestErrorSeverity:
    """Severity and exit code of each error family."""

    @pytest.mark.parametrize("error, severity", [
        (ValidationError("bad"), ErrorSeverity.LOW),
        (ParseError("p.json", 1, 2), ErrorSeverity.LOW),
        (InvalidParameterError("h"), ErrorSeverity.LOW),
        (CommandNotFoundError("plot"), ErrorSeverity.LOW),
        (GeometryError("circles overlap"), ErrorSeverity.MEDIUM),
        (NearSingular("rho(u)", 1e-14 + 0j, 1e-14), ErrorSeverity.HIGH),
        (BranchJump("u1-t11", 3, 2.0), ErrorSeverity.HIGH),
        (QuadratureFailure(5, 1e-6, 1e-8), ErrorSeverity.HIGH),
        (NonConvergence("theta1", 200), ErrorSeverity.HIGH),
        (RuntimeError("boom"), ErrorSeverity.CRITICAL),
    ])
    def test_categories(self, error_handler, error, severity):
        assert error_handler.get_error_severity(error) == severity

    def test_subclass_inherits_category(self, error_handler):
        class StrictValidationError(ValidationError):
            pass

        assert error_handler.get_error_severity(StrictValidationError("x")) == ErrorSeverity.LOW

    def test_exit_codes(self):
        assert ErrorHandler.exit_code(ErrorSeverity.LOW) == EXIT_USAGE
        assert ErrorHandler.exit_code(ErrorSeverity.MEDIUM) == EXIT_USAGE
        assert ErrorHandler.exit_code(ErrorSeverity.HIGH) == EXIT_CHECK_FAILURE
        assert ErrorHandler.exit_code(ErrorSeverity.CRITICAL) == EXIT_CHECK_FAILURE


class TestHandleError:
    """Structured responses and logging."""

    def test_validation_error_response(self, error_handler, sample_context):
        error = ValidationError("c1 has 2 entries but t1 has 1", field="c1")
        response = error_handler.handle_error(error, sample_context)

        assert response["exit_code"] == EXIT_USAGE
        assert response["severity"] == "low"
        payload = response["error"]
        assert payload["code"] == -32602
        assert payload["message"] == "c1 has 2 entries but t1 has 1"
        assert payload["data"]["type"] == "ValidationError"
        assert payload["data"]["details"]["field"] == "c1"
        assert payload["data"]["context"]["command"] == "identities"
        assert payload["data"]["context"]["config_path"] == "config/problems/sample_1x1.json"

    def test_numerical_failure_exits_with_one(self, error_handler, sample_context):
        response = error_handler.handle_error(QuadratureFailure(5, 3e-7, 1e-8), sample_context)
        assert response["exit_code"] == EXIT_CHECK_FAILURE
        assert response["error"]["data"]["details"]["level"] == 5
        error_handler.logger.error.assert_called_once()

    def test_geometry_error_logged_as_warning(self, error_handler, sample_context):
        response = error_handler.handle_error(GeometryError("radius r must exceed 0.001"), sample_context)
        assert response["exit_code"] == EXIT_USAGE
        assert response["error"]["message"] == "Invalid cycle geometry: radius r must exceed 0.001"
        error_handler.logger.warning.assert_called_once()

    def test_unexpected_error(self, error_handler, sample_context):
        response = error_handler.handle_error(KeyError("missing"), sample_context)
        assert response["severity"] == "critical"
        assert response["error"]["code"] == -32000
        assert response["error"]["data"]["type"] == "KeyError"
        args, kwargs = error_handler.logger.critical.call_args
        assert args[0] == "Unexpected error"
        assert kwargs["error"]["command"] == "identities"

    def test_low_severity_logged_at_info(self, error_handler, sample_context):
        error_handler.handle_error(CommandNotFoundError("plot"), sample_context)
        error_handler.logger.info.assert_called_once()
        error_handler.logger.error.assert_not_called()


class TestStatistics:
    """Error counters carried into the run report."""

    def test_counts(self, error_handler, sample_context):
        error_handler.handle_error(ValidationError("a"), sample_context)
        error_handler.handle_error(ValidationError("b"), sample_context)
        error_handler.handle_error(BranchJump("u1-u2", 4, 1.9), sample_context)

        stats = error_handler.get_error_statistics()
        assert stats["total_errors"] == 3
        assert stats["errors_by_type"] == {"ValidationError": 2, "BranchJump": 1}
        assert stats["errors_by_severity"]["low"] == 2
        assert stats["errors_by_severity"]["high"] == 1
        assert stats["errors_by_severity"]["critical"] == 0

    def test_statistics_are_a_copy(self, error_handler, sample_context):
        error_handler.handle_error(ValidationError("a"), sample_context)
        stats = error_handler.get_error_statistics()
        stats["errors_by_type"]["ValidationError"] = 99
        assert error_handler.get_error_statistics()["errors_by_type"]["ValidationError"] == 1

    def test_reset(self, error_handler, sample_context):
        error_handler.handle_error(ValidationError("a"), sample_context)
        error_handler.reset_error_statistics()
        stats = error_handler.get_error_statistics()
        assert stats["total_errors"] == 0
        assert stats["errors_by_type"] == {}

    def test_create_context(self, error_handler):
        context = error_handler.create_context("flatness", {"pairs": "all"}, config_path="p.json")
        assert context.command == "flatness"
        assert context.parameters == {"pairs": "all"}
        assert context.config_path == "p.json"
        assert context.timestamp > 0
