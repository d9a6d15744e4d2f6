import asyncio

import pytest

from utils.error_handler import (AppError, ArtifactError, ConfigError, ErrorBoundary, ErrorCategory, ErrorConverter,
                                 ErrorHandler, InvariantViolation, NoSolutionError, ParseError, SystemError,
                                 UsageError, ValidationError, handle_errors)


def test_exit_codes():
    assert ErrorHandler.exit_code(ValidationError("bad")) == 1
    assert ErrorHandler.exit_code(ParseError("bad", line=3)) == 1
    assert ErrorHandler.exit_code(InvariantViolation("broken")) == 2
    assert ErrorHandler.exit_code(RuntimeError("other")) == 1


def test_parse_error_location():
    error = ParseError("bad value", line=4, field="value")
    assert error.message == "bad value (line 4, field 'value')"
    assert error.details == {"line": 4, "field": "value"}
    assert ParseError("empty").message == "empty (input)"
    assert error.category is ErrorCategory.PARSE


def test_standard_exceptions_are_converted():
    assert isinstance(ErrorConverter.convert(FileNotFoundError("x")), SystemError)
    assert isinstance(ErrorConverter.convert(ValueError("x")), ValidationError)
    assert isinstance(ErrorConverter.convert(UnicodeDecodeError("utf-8", b"\xff", 0, 1, "bad")), ParseError)
    error = ValidationError("kept")
    assert ErrorConverter.convert(error) is error
    assert issubclass(UsageError, ValidationError)


def test_to_dict():
    error = NoSolutionError("odd T", details={"size": 3})
    data = error.to_dict()
    assert data["error_type"] == "NoSolutionError"
    assert data["category"] == "solver"
    assert data["details"] == {"size": 3}
    assert "suggestion" in data


def test_artifact_error_names_manifest():
    error = ArtifactError("disk full", manifest_path="out/seeds_manifest.jsonl", completed=12)
    assert error.details["manifest_path"] == "out/seeds_manifest.jsonl"
    assert error.details["completed_trials"] == 12
    assert isinstance(error, SystemError)


def test_boundary_suppresses_and_records():
    with ErrorBoundary(raise_error=False, log_error=False, context={"case": 1}) as boundary:
        raise KeyError("missing")
    assert isinstance(boundary.error, ValidationError)
    assert boundary.error.details["context"] == {"case": 1}

    with ErrorBoundary(raise_error=False, log_error=False) as clean:
        pass
    assert clean.error is None


def test_boundary_reraises_converted():
    with pytest.raises(ConfigError):
        with ErrorBoundary(error_type=ConfigError, log_error=False):
            raise ValueError("nope")
    with pytest.raises(InvariantViolation):
        with ErrorBoundary(error_type=ConfigError, log_error=False):
            raise InvariantViolation("kept as is")


def test_handle_errors_decorator():
    @handle_errors(error_type=ConfigError, log_error=False)
    def failing():
        raise OSError("cannot read")

    @handle_errors(raise_error=False, log_error=False)
    def quiet():
        raise ValueError("ignored")

    @handle_errors(log_error=False)
    async def async_failing():
        raise ValueError("async")

    with pytest.raises(ConfigError):
        failing()
    assert quiet() is None
    with pytest.raises(ValidationError):
        asyncio.run(async_failing())


def test_handle_returns_without_raising():
    error = ErrorHandler.handle(RuntimeError("boom"), log_error=False, raise_error=False, context={"k": 2})
    assert isinstance(error, AppError)
    assert error.details["context"] == {"k": 2}
