#!/usr/bin/env python3

import asyncio
import functools
from enum import Enum
from typing import Any, Callable, Dict, Generic, Optional, Type, TypeVar, Union

from utils.structured_logger import ContextVars, get_logger

T = TypeVar("T")

logger = get_logger(__name__)


class ErrorSeverity(Enum):
    """Severity levels for errors (values match logging levels)."""
    DEBUG = 10
    INFO = 20
    WARNING = 30
    ERROR = 40
    CRITICAL = 50


class ErrorCategory(Enum):
    """Categories used to route errors to exit codes and log levels."""
    VALIDATION = "validation"  # bad parameters or out-of-range arguments
    PARSE = "parse"  # malformed instance or experiment files
    SOLVER = "solver"  # no T-join exists for the requested vertex set
    INVARIANT = "invariant"  # an internal contract was broken
    CONFIG = "config"  # invalid application configuration
    SYSTEM = "system"  # file system and OS failures
    UNKNOWN = "unknown"


class AppError(Exception):
    """
    Base exception with structured metadata for logging and CLI reporting.

    Args:
        message: Technical error message
        category: Error category
        severity: Error severity
        cause: Original exception, if any
        details: Additional key/value details
        user_message: Message shown on the command line (defaults to message)
        suggestion: Suggested fix
    """

    exit_code = 1

    def __init__(self,
                 message: str,
                 category: ErrorCategory = ErrorCategory.UNKNOWN,
                 severity: ErrorSeverity = ErrorSeverity.ERROR,
                 cause: Optional[BaseException] = None,
                 details: Optional[Dict[str, Any]] = None,
                 user_message: Optional[str] = None,
                 suggestion: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.category = category
        self.severity = severity
        self.cause = cause
        self.details = details or {}
        self.user_message = user_message or message
        self.suggestion = suggestion
        self.correlation_id = ContextVars.get("correlation_id")

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a JSON-ready dictionary (used by logs and trial records)."""
        result = {
            "error_type": self.__class__.__name__,
            "message": self.message,
            "category": self.category.value,
            "severity": self.severity.name,
        }
        if self.suggestion:
            result["suggestion"] = self.suggestion
        if self.cause is not None:
            result["cause"] = {"type": self.cause.__class__.__name__, "message": str(self.cause)}
        if self.details:
            result["details"] = self.details
        return result

    def __str__(self) -> str:
        base = f"{self.__class__.__name__}: {self.message}"
        if self.suggestion:
            base += f" Suggestion: {self.suggestion}"
        return base


class ValidationError(AppError):
    """Invalid parameters, out-of-range sizes, graphs too large for an oracle."""

    def __init__(self, message: str, **kwargs):
        kwargs.setdefault("category", ErrorCategory.VALIDATION)
        kwargs.setdefault("severity", ErrorSeverity.WARNING)
        super().__init__(message, **kwargs)


class UsageError(ValidationError):
    """Command-line usage errors (unknown flags, missing arguments)."""


class ParseError(AppError):
    """Malformed input file; carries the offending line number and field."""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None, **kwargs):
        kwargs.setdefault("category", ErrorCategory.PARSE)
        details = dict(kwargs.pop("details", None) or {})
        details.update({"line": line, "field": field})
        location = f"line {line}" if line is not None else "input"
        if field:
            location += f", field '{field}'"
        super().__init__(f"{message} ({location})", details=details, **kwargs)
        self.line = line
        self.field = field


class NoSolutionError(AppError):
    """A T-join was requested for an odd vertex set."""

    def __init__(self, message: str, **kwargs):
        kwargs.setdefault("category", ErrorCategory.SOLVER)
        kwargs.setdefault("suggestion", "T must contain an even number of vertices")
        super().__init__(message, **kwargs)


class InvariantViolation(AppError):
    """An internal contract failed; results computed so far cannot be trusted."""

    exit_code = 2

    def __init__(self, message: str, **kwargs):
        kwargs.setdefault("category", ErrorCategory.INVARIANT)
        kwargs.setdefault("severity", ErrorSeverity.CRITICAL)
        super().__init__(message, **kwargs)


class ConfigError(AppError):
    """Invalid or unreadable configuration."""

    def __init__(self, message: str, key: Optional[str] = None, **kwargs):
        kwargs.setdefault("category", ErrorCategory.CONFIG)
        if key is not None:
            message = f"Configuration error for '{key}': {message}"
        super().__init__(message, **kwargs)
        self.key = key


class SystemError(AppError):
    """File system and OS errors."""

    def __init__(self, message: str, **kwargs):
        kwargs.setdefault("category", ErrorCategory.SYSTEM)
        super().__init__(message, **kwargs)


class ArtifactError(SystemError):
    """Writing experiment artifacts failed; details name the partial manifest."""

    def __init__(self, message: str, manifest_path: Optional[str] = None, completed: int = 0, **kwargs):
        details = dict(kwargs.pop("details", None) or {})
        details.update({"manifest_path": manifest_path, "completed_trials": completed})
        kwargs.setdefault("suggestion", "the seeds manifest lists every trial that finished")
        super().__init__(message, details=details, **kwargs)
        self.manifest_path = manifest_path
        self.completed = completed


class ErrorConverter:
    """Maps standard exceptions onto the AppError hierarchy."""

    DEFAULT_MAPPINGS = {
        FileNotFoundError: SystemError,
        PermissionError: SystemError,
        IsADirectoryError: SystemError,
        OSError: SystemError,
        UnicodeDecodeError: ParseError,
        ValueError: ValidationError,
        TypeError: ValidationError,
        KeyError: ValidationError,
        IndexError: ValidationError,
        MemoryError: SystemError,
        asyncio.TimeoutError: SystemError,
    }

    _custom_mappings: Dict[Type[BaseException], Type[AppError]] = {}

    @classmethod
    def register_mapping(cls, exception_type: Type[BaseException], error_class: Type[AppError]) -> None:
        cls._custom_mappings[exception_type] = error_class

    @classmethod
    def convert(cls, exc: BaseException, default_message: Optional[str] = None) -> AppError:
        """Return exc unchanged if it is an AppError, else the mapped AppError."""
        if isinstance(exc, AppError):
            return exc

        message = default_message or str(exc) or exc.__class__.__name__
        for mapping in (cls._custom_mappings, cls.DEFAULT_MAPPINGS):
            for exc_type, error_class in mapping.items():
                if isinstance(exc, exc_type):
                    return error_class(message, cause=exc, details={"original_type": exc.__class__.__name__})

        return AppError(message, cause=exc, details={"original_type": exc.__class__.__name__})


class ErrorHandler:
    """Central conversion and logging of errors."""

    @staticmethod
    def handle(exc: BaseException,
               log_error: bool = True,
               raise_error: bool = True,
               default_message: Optional[str] = None,
               context: Optional[Dict[str, Any]] = None) -> AppError:
        """
        Convert, optionally log, and optionally re-raise an exception.

        Returns:
            The converted AppError (when raise_error is False)
        """
        app_error = ErrorConverter.convert(exc, default_message)
        if context:
            app_error.details.setdefault("context", {}).update(context)
        if log_error:
            ErrorHandler.log_error(app_error)
        if raise_error:
            raise app_error
        return app_error

    @staticmethod
    def log_error(error: Union[AppError, BaseException], logger_name: Optional[str] = None) -> None:
        """Log an error at the level implied by its severity."""
        if not isinstance(error, AppError):
            error = ErrorConverter.convert(error)

        log = get_logger(logger_name) if logger_name else logger
        log.log(error.severity.value, str(error), extra={"structured_data": error.to_dict()})

    @staticmethod
    def exit_code(error: BaseException) -> int:
        """Process exit code for an error reaching the top level."""
        return ErrorConverter.convert(error).exit_code


def handle_errors(log_error: bool = True,
                  raise_error: bool = True,
                  default_message: Optional[str] = None,
                  error_type: Optional[Type[AppError]] = None,
                  logger_name: Optional[str] = None):
    """
    Decorator converting exceptions raised by the wrapped function to AppErrors.

    Args:
        log_error: Whether to log the error
        raise_error: Whether to re-raise the converted error (else return None)
        default_message: Message override
        error_type: Convert non-AppErrors to this type instead of the mapping table
        logger_name: Logger used for the error record
    """

    def convert(exc: Exception) -> AppError:
        if error_type is not None and not isinstance(exc, AppError):
            return error_type(default_message or str(exc), cause=exc)
        return ErrorConverter.convert(exc, default_message)

    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except Exception as exc:
                app_error = convert(exc)
                if log_error:
                    ErrorHandler.log_error(app_error, logger_name)
                if raise_error:
                    raise app_error from (exc if app_error is not exc else None)
                return None

        @functools.wraps(func)
        async def async_wrapper(*args, **kwargs):
            try:
                return await func(*args, **kwargs)
            except Exception as exc:
                app_error = convert(exc)
                if log_error:
                    ErrorHandler.log_error(app_error, logger_name)
                if raise_error:
                    raise app_error from (exc if app_error is not exc else None)
                return None

        return async_wrapper if asyncio.iscoroutinefunction(func) else wrapper

    return decorator


class ErrorBoundary(Generic[T]):
    """
    Scoped error handling: converts, logs, and either re-raises or suppresses.

    After the block, ``error`` holds the converted AppError (or None).
    """

    def __init__(self,
                 log_error: bool = True,
                 raise_error: bool = True,
                 default_message: Optional[str] = None,
                 error_type: Optional[Type[AppError]] = None,
                 context: Optional[Dict[str, Any]] = None,
                 fallback_value: Optional[T] = None,
                 on_error: Optional[Callable[[AppError], None]] = None,
                 logger_name: Optional[str] = None):
        self.log_error = log_error
        self.raise_error = raise_error
        self.default_message = default_message
        self.error_type = error_type
        self.context = context or {}
        self.fallback_value = fallback_value
        self.on_error = on_error
        self.logger_name = logger_name
        self.error: Optional[AppError] = None

    def _convert(self, exc_val: BaseException) -> AppError:
        if self.error_type is not None and not isinstance(exc_val, AppError):
            app_error = self.error_type(self.default_message or str(exc_val), cause=exc_val)
        else:
            app_error = ErrorConverter.convert(exc_val, self.default_message)
        if self.context:
            app_error.details.setdefault("context", {}).update(self.context)
        return app_error

    def __enter__(self) -> "ErrorBoundary[T]":
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> bool:
        if exc_val is None or not isinstance(exc_val, Exception):
            return False

        app_error = self._convert(exc_val)
        self.error = app_error

        if self.log_error:
            ErrorHandler.log_error(app_error, self.logger_name)
        if self.on_error:
            try:
                self.on_error(app_error)
            except Exception as callback_exc:
                logger.warning(f"Error callback failed: {callback_exc}")

        if self.raise_error:
            if app_error is exc_val:
                return False
            raise app_error from exc_val
        return True
