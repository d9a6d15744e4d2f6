#!/usr/bin/env python3

import asyncio
import datetime
import functools
import json
import logging
import os
import sys
import threading
import time
import traceback
import uuid
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, Dict, Optional

# Per-thread context storage keyed by thread ident
_CONTEXT_STORAGE: Dict[int, Dict[str, Any]] = {}
_CONTEXT_LOCK = threading.RLock()

_STRUCTURED_LOGGING_INITIALIZED = False

# Context keys copied onto every record when set
CONTEXT_KEYS = ("run_id", "command", "trial_seed")


class ContextVars:
    """Thread-scoped context values (correlation id, run id, trial seed)."""

    @classmethod
    def _bucket(cls) -> Dict[str, Any]:
        thread_id = threading.get_ident()
        if thread_id not in _CONTEXT_STORAGE:
            _CONTEXT_STORAGE[thread_id] = {}
        return _CONTEXT_STORAGE[thread_id]

    @classmethod
    def get(cls, key: str, default=None) -> Any:
        with _CONTEXT_LOCK:
            return cls._bucket().get(key, default)

    @classmethod
    def set(cls, key: str, value: Any) -> None:
        with _CONTEXT_LOCK:
            cls._bucket()[key] = value

    @classmethod
    def unset(cls, key: str) -> None:
        with _CONTEXT_LOCK:
            cls._bucket().pop(key, None)

    @classmethod
    def clear(cls) -> None:
        with _CONTEXT_LOCK:
            _CONTEXT_STORAGE[threading.get_ident()] = {}

    @classmethod
    def get_all(cls) -> Dict[str, Any]:
        with _CONTEXT_LOCK:
            return cls._bucket().copy()


class StructuredLogRecord(logging.LogRecord):
    """LogRecord carrying a JSON-ready ``structured`` payload."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)

        self.iso_timestamp = datetime.datetime.fromtimestamp(self.created).isoformat()
        self.correlation_id = ContextVars.get("correlation_id", "")
        self.extra_data = ContextVars.get("extra_data", {})

        self.structured = {
            "timestamp": self.iso_timestamp,
            "level": self.levelname,
            "correlation_id": self.correlation_id,
            "logger": self.name,
            "message": self.getMessage(),
            "module": self.module,
            "function": self.funcName,
            "line": self.lineno,
            "process": self.process,
        }

        for key in CONTEXT_KEYS:
            value = ContextVars.get(key)
            if value is not None:
                self.structured[key] = value

        if self.exc_info and self.exc_info[0] is not None:
            self.structured["exception"] = {
                "type": self.exc_info[0].__name__,
                "message": str(self.exc_info[1]),
                "traceback": traceback.format_exception(*self.exc_info),
            }

        if self.extra_data:
            self.structured["data"] = self.extra_data


class SafeJsonFormatter(logging.Formatter):
    """One JSON object per line; never raises."""

    def format(self, record):
        try:
            if hasattr(record, "structured"):
                return json.dumps(record.structured, default=str)

            fallback = {
                "timestamp": datetime.datetime.fromtimestamp(record.created).isoformat(),
                "level": record.levelname,
                "logger": record.name,
                "message": record.getMessage(),
                "module": record.module,
                "function": record.funcName,
                "line": record.lineno,
            }
            if record.exc_info and record.exc_info[0] is not None:
                fallback["exception"] = {
                    "type": record.exc_info[0].__name__,
                    "message": str(record.exc_info[1]),
                }
            return json.dumps(fallback, default=str)
        except Exception as e:
            return json.dumps({"error": f"Error formatting log record: {e}", "message": str(record.msg)})


class SafeColorizedConsoleFormatter(logging.Formatter):
    """Console formatter with level colors and a tolerant correlation id field."""

    COLORS = {
        "RESET": "\033[0m",
        "RED": "\033[31m",
        "GREEN": "\033[32m",
        "YELLOW": "\033[33m",
        "BLUE": "\033[34m",
        "CYAN": "\033[36m",
        "BOLD": "\033[1m",
    }

    LEVEL_COLORS = {
        "DEBUG": COLORS["BLUE"],
        "INFO": COLORS["GREEN"],
        "WARNING": COLORS["YELLOW"],
        "ERROR": COLORS["RED"],
        "CRITICAL": COLORS["RED"] + COLORS["BOLD"],
    }

    def __init__(self, fmt=None, datefmt=None, style="%", use_colors=True):
        super().__init__(fmt, datefmt, style)
        self.use_colors = use_colors

    def format(self, record):
        try:
            if not hasattr(record, "correlation_id"):
                record.correlation_id = ""

            formatted = super().format(record)

            if self.use_colors:
                reset = self.COLORS["RESET"]
                if record.correlation_id:
                    formatted = formatted.replace(
                        f"[{record.correlation_id}]",
                        f"[{self.COLORS['CYAN']}{record.correlation_id}{reset}]",
                    )
                color = self.LEVEL_COLORS.get(record.levelname, reset)
                formatted = formatted.replace(record.levelname, f"{color}{record.levelname}{reset}", 1)

            return formatted
        except Exception as e:
            return f"LOG-ERROR[{record.levelname}]: {record.getMessage()} (Formatting error: {e})"


class StructuredLogger(logging.Logger):
    """Logger that routes ``extra={'structured_data': ...}`` into the record payload."""

    def makeRecord(self, name, level, fn, lno, msg, args, exc_info,
                   func=None, extra=None, sinfo=None):
        try:
            record = StructuredLogRecord(name, level, fn, lno, msg, args, exc_info, func, sinfo)
        except Exception:
            return super().makeRecord(name, level, fn, lno, msg, args, exc_info, func, extra, sinfo)
        if extra:
            for key, value in extra.items():
                if key not in ("message", "asctime") and key not in record.__dict__:
                    record.__dict__[key] = value
        return record

    def _log(self, level, msg, args, exc_info=None, extra=None, stack_info=False, stacklevel=1):
        structured_extra = {}
        if extra and "structured_data" in extra:
            extra = dict(extra)
            structured_extra = extra.pop("structured_data") or {}

        if structured_extra:
            previous = ContextVars.get("extra_data", {})
            ContextVars.set("extra_data", {**previous, **structured_extra})
            try:
                super()._log(level, msg, args, exc_info, extra, stack_info, stacklevel + 1)
            finally:
                ContextVars.set("extra_data", previous)
        else:
            super()._log(level, msg, args, exc_info, extra, stack_info, stacklevel + 1)

    def trace_operation(self, operation_name: str, level: int = logging.INFO, **kwargs) -> "OperationTracer":
        """Time a logical operation and log its start, completion or failure."""
        return OperationTracer(self, operation_name, level=level, **kwargs)


class FallbackLogger(logging.LoggerAdapter):
    """Wraps a plain logger (created before our class was installed) to add trace_operation."""

    def __init__(self, logger: logging.Logger):
        super().__init__(logger, {})

    def process(self, msg, kwargs):
        extra = kwargs.get("extra")
        if extra and "structured_data" in extra:
            kwargs["extra"] = {k: v for k, v in extra.items() if k != "structured_data"}
        return msg, kwargs

    def trace_operation(self, operation_name: str, level: int = logging.INFO, **kwargs) -> "OperationTracer":
        return OperationTracer(self, operation_name, level=level, **kwargs)


class OperationTracer:
    """Context manager (sync and async) that logs an operation with its duration."""

    def __init__(self, logger, operation_name: str, level: int = logging.INFO, **kwargs):
        self.logger = logger
        self.operation_name = operation_name
        self.level = level
        self.extra_data = kwargs
        self.start_time: Optional[float] = None
        self.duration_ms: Optional[int] = None

        if not ContextVars.get("correlation_id"):
            ContextVars.set("correlation_id", str(uuid.uuid4()))

    def __enter__(self):
        self.start_time = time.perf_counter()
        self.logger.log(
            self.level,
            f"Starting operation: {self.operation_name}",
            extra={"structured_data": {
                "event": "operation_start",
                "operation": self.operation_name,
                **self.extra_data,
            }},
        )
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.duration_ms = int((time.perf_counter() - self.start_time) * 1000)

        if exc_type is not None:
            self.logger.log(
                max(self.level, logging.WARNING),
                f"Operation failed: {self.operation_name} after {self.duration_ms}ms",
                extra={"structured_data": {
                    "event": "operation_failed",
                    "operation": self.operation_name,
                    "duration_ms": self.duration_ms,
                    "error_type": exc_type.__name__,
                    "error_message": str(exc_val),
                    **self.extra_data,
                }},
            )
            return False

        self.logger.log(
            self.level,
            f"Completed operation: {self.operation_name} in {self.duration_ms}ms",
            extra={"structured_data": {
                "event": "operation_completed",
                "operation": self.operation_name,
                "duration_ms": self.duration_ms,
                **self.extra_data,
            }},
        )
        return False

    async def __aenter__(self):
        return self.__enter__()

    async def __aexit__(self, exc_type, exc_val, exc_tb):
        return self.__exit__(exc_type, exc_val, exc_tb)


def operation_logger(func=None, operation_name: Optional[str] = None, level: int = logging.INFO):
    """
    Decorator that wraps a function (sync or async) in an OperationTracer.

    Args:
        func: The function to decorate
        operation_name: Name used in log records (defaults to module.qualname)
        level: Log level for start/complete records
    """

    def decorator(func):
        logger = get_logger(func.__module__)
        name = operation_name or f"{func.__module__}.{func.__qualname__}"

        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            with OperationTracer(logger, name, level=level):
                return func(*args, **kwargs)

        @functools.wraps(func)
        async def async_wrapper(*args, **kwargs):
            async with OperationTracer(logger, name, level=level):
                return await func(*args, **kwargs)

        return async_wrapper if asyncio.iscoroutinefunction(func) else wrapper

    if func is None:
        return decorator
    return decorator(func)


def setup_structured_logging(
        app_name: str = "frustra",
        log_dir: Optional[str] = None,
        console_level: int = logging.WARNING,
        file_level: int = logging.DEBUG,
        enable_json_logs: bool = True,
        max_log_file_size: int = 10 * 1024 * 1024,
        backup_count: int = 5,
        use_console_colors: bool = True,
        enable_file_logs: bool = True,
        force: bool = False,
) -> bool:
    """
    Install console, rotating text and rotating JSON handlers on the root logger.

    Console output goes to stderr so command output on stdout stays machine-readable.
    A second call is a no-op unless ``force`` is set.

    Returns:
        True if structured logging is active, False if basic logging was used instead
    """
    global _STRUCTURED_LOGGING_INITIALIZED

    if _STRUCTURED_LOGGING_INITIALIZED and not force:
        return True

    if not ContextVars.get("correlation_id"):
        ContextVars.set("correlation_id", str(uuid.uuid4()))

    try:
        root_logger = logging.getLogger()
        root_logger.setLevel(logging.DEBUG)
        for handler in root_logger.handlers[:]:
            root_logger.removeHandler(handler)
            handler.close()

        console_format = "%(asctime)s [%(correlation_id)s] %(levelname)s - %(name)s - %(message)s"
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(console_level)
        console_handler.setFormatter(SafeColorizedConsoleFormatter(
            console_format, datefmt="%Y-%m-%d %H:%M:%S", use_colors=use_console_colors
        ))
        root_logger.addHandler(console_handler)

        if enable_file_logs:
            log_dir = log_dir or os.path.join(os.getcwd(), "logs")
            Path(log_dir).mkdir(parents=True, exist_ok=True)

            file_handler = RotatingFileHandler(
                os.path.join(log_dir, f"{app_name}.log"),
                maxBytes=max_log_file_size,
                backupCount=backup_count,
                encoding="utf-8",
            )
            file_handler.setLevel(file_level)
            file_handler.setFormatter(SafeColorizedConsoleFormatter(
                console_format, datefmt="%Y-%m-%d %H:%M:%S", use_colors=False
            ))
            root_logger.addHandler(file_handler)

            if enable_json_logs:
                json_handler = RotatingFileHandler(
                    os.path.join(log_dir, f"{app_name}_json.log"),
                    maxBytes=max_log_file_size,
                    backupCount=backup_count,
                    encoding="utf-8",
                )
                json_handler.setLevel(file_level)
                json_handler.setFormatter(SafeJsonFormatter())
                root_logger.addHandler(json_handler)

        logging.getLogger(__name__).debug(
            f"Structured logging initialized for {app_name}",
            extra={"structured_data": {
                "event": "logging_initialized",
                "log_dir": log_dir,
                "console_level": logging.getLevelName(console_level),
                "file_level": logging.getLevelName(file_level),
                "json_logs_enabled": enable_json_logs and enable_file_logs,
            }},
        )

        _STRUCTURED_LOGGING_INITIALIZED = True
        return True

    except Exception as e:
        print(f"ERROR: Failed to set up structured logging: {e}", file=sys.stderr)
        logging.basicConfig(
            level=logging.WARNING,
            format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            handlers=[logging.StreamHandler(sys.stderr)],
        )
        logging.getLogger(__name__).error(f"Structured logging initialization failed: {e}")
        return False


def get_logger(name: str):
    """Return a logger that supports ``trace_operation`` and structured extras."""
    logger = logging.getLogger(name)
    if isinstance(logger, StructuredLogger):
        return logger
    return FallbackLogger(logger)


# Loggers created from here on are StructuredLoggers
logging.setLoggerClass(StructuredLogger)

if not ContextVars.get("correlation_id"):
    ContextVars.set("correlation_id", str(uuid.uuid4()))
