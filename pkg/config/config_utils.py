#!/usr/bin/env python3
"""
Flat ``key=value`` experiment files.

Keys mirror the command-line flags (dashes or underscores both accepted)::

    # pinning-lemma run
    kind=g
    k=2..6
    trials=1000
    seed=12345
    radius=scaled
"""

from typing import Any, Callable, Dict, List, Mapping, Optional, Union

from utils.error_handler import ParseError, ValidationError
from utils.structured_logger import get_logger

logger = get_logger(__name__)


def parse_int_list(text: str) -> List[int]:
    """Parse ``2..5``, ``2,3,4`` or ``3`` into a sorted list of distinct integers."""
    text = text.strip()
    if ".." in text:
        lo_text, hi_text = text.split("..", 1)
        lo, hi = int(lo_text), int(hi_text)
        if hi < lo:
            raise ValueError(f"empty range {text}")
        return list(range(lo, hi + 1))
    values = sorted({int(part) for part in text.split(",") if part.strip()})
    if not values:
        raise ValueError("empty list")
    return values


def parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text}")


def parse_radius(text: str) -> Union[str, float]:
    """``scaled`` (radius = k), ``fixed`` (the default constant) or a number."""
    lowered = text.strip().lower()
    if lowered in ("scaled", "fixed"):
        return lowered
    return float(lowered)


EXPERIMENT_KEYS: Dict[str, Callable[[str], Any]] = {
    "kind": str,
    "k": parse_int_list,
    "n_factor": int,
    "n_offset": int,
    "trials": int,
    "seed": int,
    "radius": parse_radius,
    "radius_scale": float,
    "density_side_coeff": float,
    "density_exponent": float,
    "density_threshold": float,
    "mode": str,
    "method": str,
    "search_mode": str,
    "enumeration_cap": int,
    "c": int,
    "jobs": int,
    "out": str,
    "witness_samples": int,
    "fit": parse_bool,
}


def normalize_key(key: str) -> str:
    return key.strip().lower().replace("-", "_")


def parse_experiment_text(text: str, source: str = "<string>") -> Dict[str, Any]:
    """
    Parse experiment text into typed values.

    Raises:
        ParseError: unknown keys, duplicate keys, missing '=', or values of the wrong type
    """
    values: Dict[str, Any] = {}
    seen_at: Dict[str, int] = {}

    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{source}: expected key=value", line=line_number)

        key_text, value_text = line.split("=", 1)
        key = normalize_key(key_text)
        if key not in EXPERIMENT_KEYS:
            raise ParseError(f"{source}: unknown key '{key}'", line=line_number, field=key)
        if key in seen_at:
            raise ParseError(f"{source}: duplicate key '{key}' (first set on line {seen_at[key]})",
                             line=line_number, field=key)

        try:
            values[key] = EXPERIMENT_KEYS[key](value_text.strip())
        except ValueError as e:
            raise ParseError(f"{source}: invalid value for '{key}': {e}", line=line_number, field=key)
        seen_at[key] = line_number

    return values


def load_experiment_file(path: str) -> Dict[str, Any]:
    """Read and parse an experiment file."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except FileNotFoundError:
        raise ValidationError(f"experiment file not found: {path}")
    except OSError as e:
        raise ValidationError(f"cannot read experiment file {path}: {e}", cause=e)

    values = parse_experiment_text(text, source=path)
    logger.debug(f"Loaded experiment file {path}", extra={"structured_data": {"keys": sorted(values)}})
    return values


def merge_overrides(file_values: Mapping[str, Any],
                    cli_values: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    """File values overridden by every CLI value that is not None."""
    merged = dict(file_values)
    for key, value in (cli_values or {}).items():
        if value is not None:
            merged[normalize_key(key)] = value
    return merged
