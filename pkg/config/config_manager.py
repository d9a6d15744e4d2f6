#!/usr/bin/env python3

import copy
import json
import logging
import os
import uuid
from typing import Any, Dict, List, Optional

from utils.error_handler import ConfigError
from utils.structured_logger import get_logger

# Application settings. Experiment parameters live in key=value experiment files
# (config/config_utils.py); these are the defaults they fall back on.
DEFAULT_CONFIG = {
    "version": "1.0.0",

    "logging": {
        "app_name": "frustra",
        "console_level": "WARNING",
        "file_level": "DEBUG",
        "enable_file_logs": True,
        "enable_json_logs": True,
        "max_log_file_size_mb": 10,
        "backup_count": 5,
        "use_console_colors": True,
        "log_directory": "logs",
    },

    "solver": {
        "tie_tolerance": 1e-12,
        "brute_force_edge_limit": 24,
        "brute_force_interior_limit": 20,
        "brute_force_matching_limit": 12,
    },

    "events": {
        "radius": 100.0,
        "density_side_coeff": 100.0,
        "density_exponent": 0.01,
        "density_threshold": 0.01,
        "enumeration_cap": 3 ** 12,
        "search_mode": "exhaustive",
        "vertex_simple_check": True,
        "fixed_radius": 100.0,
    },

    "harness": {
        "n_factor": 2,
        "n_offset": 0,
        "regular_pair_method": "affine",
        "rejection_batch": 4096,
        "max_rejection_batches": 256,
        "witness_samples": 5,
        "report_file": "report.json",
        "frequencies_file": "frequencies.csv",
        "witness_file": "witness_paths.jsonl",
        "manifest_file": "seeds_manifest.jsonl",
    },

    "cli": {
        "use_colors": True,
        "table_format": "github",
    },
}

_LOG_LEVELS = {
    "DEBUG": logging.DEBUG,
    "INFO": logging.INFO,
    "WARNING": logging.WARNING,
    "ERROR": logging.ERROR,
    "CRITICAL": logging.CRITICAL,
}


class ConfigManager:
    """Application settings: defaults deep-merged with an optional JSON file, dot-notation access."""

    def __init__(self, config_file: Optional[str] = None):
        """
        Args:
            config_file: JSON override file; defaults to $FRUSTRA_CONFIG or frustra_config.json
        """
        self.config_file = config_file or os.environ.get("FRUSTRA_CONFIG", "frustra_config.json")
        self.instance_id = str(uuid.uuid4())
        self.logger = get_logger("ConfigManager")
        self.config = self._load_config()

    def _deep_update(self, d: dict, u: dict) -> dict:
        for k, v in u.items():
            if isinstance(v, dict) and isinstance(d.get(k), dict):
                self._deep_update(d[k], v)
            else:
                d[k] = v
        return d

    def _load_config(self) -> dict:
        config = copy.deepcopy(DEFAULT_CONFIG)
        if not os.path.exists(self.config_file):
            return config

        try:
            with open(self.config_file, "r", encoding="utf-8") as f:
                user_config = json.load(f)
        except json.JSONDecodeError as e:
            self.logger.error(f"Invalid JSON in config file {self.config_file}: {e}, using defaults")
            return config
        except OSError as e:
            self.logger.error(f"Error loading config {self.config_file}: {e}, using defaults")
            return config

        if not isinstance(user_config, dict):
            self.logger.error(f"Config file {self.config_file} must hold a JSON object, using defaults")
            return config

        self._deep_update(config, user_config)
        self.logger.info(f"Loaded user configuration from {self.config_file}")
        return config

    def load_file(self, path: str) -> None:
        """Merge a JSON settings file given on the command line (--config)."""
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except FileNotFoundError as e:
            raise ConfigError(f"settings file not found: {path}", cause=e)
        except (json.JSONDecodeError, OSError) as e:
            raise ConfigError(f"cannot read settings file {path}: {e}", cause=e)
        if not isinstance(data, dict):
            raise ConfigError(f"settings file {path} must hold a JSON object")

        self.merge(data)
        self.config_file = path
        errors = self.validate()
        if errors:
            raise ConfigError("; ".join(errors), details={"errors": errors})

    def get(self, key: str, default=None):
        """Get a value; nested keys use dot notation ("events.radius")."""
        current: Any = self.config
        for part in key.split("."):
            if isinstance(current, dict) and part in current:
                current = current[part]
            else:
                return default
        return current

    def set(self, key: str, value: Any) -> None:
        parts = key.split(".")
        current = self.config
        for part in parts[:-1]:
            if not isinstance(current.get(part), dict):
                current[part] = {}
            current = current[part]
        current[parts[-1]] = value
        self.logger.debug(f"Config updated: {key} = {value}")

    def merge(self, config_dict: Dict[str, Any]) -> None:
        self._deep_update(self.config, config_dict)

    def get_section(self, section: str) -> Optional[Dict[str, Any]]:
        section_data = self.config.get(section)
        if isinstance(section_data, dict):
            return copy.deepcopy(section_data)
        return None

    def get_all(self) -> Dict[str, Any]:
        return copy.deepcopy(self.config)

    def reset(self) -> None:
        self.config = copy.deepcopy(DEFAULT_CONFIG)

    def validate(self) -> List[str]:
        """
        Validate ranges of the numeric settings.

        Returns:
            List of validation errors (empty if valid)
        """
        errors = []

        def positive(key: str, allow_zero: bool = False) -> None:
            value = self.get(key)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                errors.append(f"{key} must be a number")
            elif value < 0 or (value == 0 and not allow_zero):
                errors.append(f"{key} must be {'non-negative' if allow_zero else 'positive'}")

        for key in ("solver.brute_force_edge_limit", "solver.brute_force_interior_limit",
                    "solver.brute_force_matching_limit", "events.density_side_coeff",
                    "events.enumeration_cap", "harness.rejection_batch",
                    "harness.max_rejection_batches", "logging.backup_count"):
            positive(key)
        for key in ("solver.tie_tolerance", "events.radius", "events.density_exponent",
                    "events.density_threshold", "harness.witness_samples"):
            positive(key, allow_zero=True)

        if self.get("events.search_mode") not in ("exhaustive", "rotation"):
            errors.append("events.search_mode must be 'exhaustive' or 'rotation'")
        if self.get("harness.regular_pair_method") not in ("affine", "rejection"):
            errors.append("harness.regular_pair_method must be 'affine' or 'rejection'")
        level = str(self.get("logging.console_level", "")).upper()
        if level not in _LOG_LEVELS:
            errors.append(f"logging.console_level must be one of {sorted(_LOG_LEVELS)}")

        return errors

    def setup_structured_logging(self, force: bool = False) -> bool:
        """Initialize structured logging from the ``logging`` section; ``force`` rebuilds the handlers."""
        from utils.structured_logger import setup_structured_logging

        logging_config = self.config.get("logging", {})
        result = setup_structured_logging(
            app_name=logging_config.get("app_name", "frustra"),
            log_dir=logging_config.get("log_directory", "logs"),
            console_level=self._get_log_level(logging_config.get("console_level", "WARNING")),
            file_level=self._get_log_level(logging_config.get("file_level", "DEBUG")),
            enable_json_logs=logging_config.get("enable_json_logs", True),
            max_log_file_size=int(logging_config.get("max_log_file_size_mb", 10) * 1024 * 1024),
            backup_count=logging_config.get("backup_count", 5),
            use_console_colors=logging_config.get("use_console_colors", True),
            enable_file_logs=logging_config.get("enable_file_logs", True),
            force=force,
        )
        if result:
            self.logger = get_logger("ConfigManager")
            self.logger.debug("Structured logging initialized",
                              extra={"structured_data": {"config_id": self.instance_id}})
        return result

    def _get_log_level(self, level_name: str) -> int:
        return _LOG_LEVELS.get(str(level_name).upper(), logging.INFO)


config_manager = ConfigManager()
logger = get_logger("frustra")
