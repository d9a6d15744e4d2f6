#!/usr/bin/env python3
"""
Experiment configuration, per-trial records and order-insensitive aggregation.
"""

import hashlib
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

from config.config_manager import config_manager
from core.events import EventParams
from harness.statistics import FitResult, fit_conjecture_curve, wilson_interval
from utils.error_handler import ValidationError

KINDS = ("g", "pinning", "conj2", "conj_b2", "conj3", "conj_b3")
CONDITIONING_MODES = ("none", "rejection", "planted")
REGULAR_PAIR_METHODS = ("affine", "rejection")
EVENTS = ("regular", "isolated", "dually_isolated", "A", "BA", "D", "BD")

# Event whose conditional frequency each kind estimates.
PRIMARY_EVENT = {
    "g": "D",
    "pinning": "A",
    "conj2": "A",
    "conj_b2": "BA",
    "conj3": "D",
    "conj_b3": "BD",
}

INSUFFICIENT_MASS = "insufficient conditioning mass"


def trial_seed(master: int, kind: str, k: int, index: int) -> int:
    """First 8 bytes (big-endian) of SHA-256 of "<master>:<kind>:<k>:<index>", masked to 63 bits."""
    digest = hashlib.sha256(f"{master}:{kind}:{k}:{index}".encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big") & ((1 << 63) - 1)


@dataclass
class ExperimentConfig:
    kind: str = "g"
    ks: List[int] = field(default_factory=lambda: [2, 3, 4])
    n_factor: int = 2
    n_offset: int = 0
    trials: int = 100
    seed: int = 0
    radius: Union[str, float] = "scaled"
    radius_scale: float = 1.0
    fixed_radius: float = 100.0
    density_side_coeff: float = 100.0
    density_exponent: float = 0.01
    density_threshold: float = 0.01
    search_mode: str = "exhaustive"
    enumeration_cap: int = 3 ** 12
    mode: str = "none"
    method: str = "affine"
    c: int = 0
    jobs: int = 1
    out: str = "results"
    witness_samples: int = 5
    fit: bool = True

    @classmethod
    def from_values(cls, values: Mapping[str, Any]) -> "ExperimentConfig":
        """
        Build from parsed experiment-file values merged with CLI flags.

        Unset keys fall back on the ``events`` and ``harness`` settings.
        """
        events = config_manager.get_section("events") or {}
        harness = config_manager.get_section("harness") or {}
        data: Dict[str, Any] = {
            "n_factor": harness.get("n_factor", 2),
            "n_offset": harness.get("n_offset", 0),
            "method": harness.get("regular_pair_method", "affine"),
            "witness_samples": harness.get("witness_samples", 5),
            "density_side_coeff": events.get("density_side_coeff", 100.0),
            "density_exponent": events.get("density_exponent", 0.01),
            "density_threshold": events.get("density_threshold", 0.01),
            "search_mode": events.get("search_mode", "exhaustive"),
            "enumeration_cap": events.get("enumeration_cap", 3 ** 12),
            "fixed_radius": events.get("fixed_radius", 100.0),
        }
        for key, value in values.items():
            if value is None:
                continue
            data["ks" if key == "k" else key] = value
        if isinstance(data.get("ks"), int):
            data["ks"] = [data["ks"]]

        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(f"unknown experiment keys: {', '.join(unknown)}")
        config = cls(**data)
        config.validate()
        return config

    def validate(self) -> None:
        if self.trials < 1:
            raise ValidationError("trial count must be at least 1", details={"trials": self.trials})
        if self.kind not in KINDS:
            raise ValidationError(f"unknown experiment kind '{self.kind}'", details={"kinds": list(KINDS)})
        if self.mode not in CONDITIONING_MODES:
            raise ValidationError(f"unknown conditioning mode '{self.mode}'")
        if self.method not in REGULAR_PAIR_METHODS:
            raise ValidationError(f"unknown regular-pair method '{self.method}'")
        if self.kind in ("conj3", "conj_b3") and self.mode == "planted":
            raise ValidationError("planted conditioning cannot produce the 'no dually isolated C(n',k)' condition",
                                  suggestion="use mode=rejection or mode=none")
        if not self.ks or min(self.ks) < 1:
            raise ValidationError("k values must be positive")
        if self.jobs < 1:
            raise ValidationError("jobs must be at least 1")
        if isinstance(self.radius, str) and self.radius not in ("scaled", "fixed"):
            raise ValidationError(f"radius must be 'scaled', 'fixed' or a number (got '{self.radius}')")
        for k in self.ks:
            if self.n_for(k) < 2:
                raise ValidationError(f"n = {self.n_for(k)} at k = {k}; events need n >= 2")
        # Validates the remaining detector parameters.
        self.event_params(self.ks[0])

    def n_for(self, k: int) -> int:
        return self.n_factor * k + self.n_offset

    def resolved_radius(self, k: int) -> float:
        if self.radius == "scaled":
            return self.radius_scale * k
        if self.radius == "fixed":
            return float(self.fixed_radius)
        return float(self.radius)

    def event_params(self, k: int) -> EventParams:
        return EventParams(radius=self.resolved_radius(k),
                           density_side_coeff=self.density_side_coeff,
                           density_exponent=self.density_exponent,
                           density_threshold=self.density_threshold,
                           search_mode=self.search_mode,
                           enumeration_cap=self.enumeration_cap,
                           fixed_radius=float(self.fixed_radius))

    def to_echo(self) -> Dict[str, Any]:
        echo = asdict(self)
        echo["primary_event"] = PRIMARY_EVENT[self.kind]
        return dict(sorted(echo.items()))


@dataclass(frozen=True)
class TrialSpec:
    """Everything a worker process needs for one trial."""
    kind: str
    k: int
    n: int
    index: int
    seed: int
    params: EventParams
    conditioning: str
    method: str
    c: int
    rejection_batch: int = 4096
    max_rejection_batches: int = 256


@dataclass
class TrialRecord:
    kind: str
    k: int
    n: int
    index: int
    seed: int
    conditioned: bool = False
    events: Dict[str, Optional[bool]] = field(default_factory=dict)
    lemma1: Optional[bool] = None
    obs1: Optional[str] = None
    implication_ok: bool = True
    vertex_simple: Optional[bool] = None
    truncated: bool = False
    path_length: int = 0
    min_distance: Optional[float] = None
    density: Optional[float] = None
    witness: Optional[Dict[str, Any]] = None
    note: str = ""
    error: Optional[Dict[str, Any]] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TrialRecord":
        return cls(**{key: data[key] for key in cls.__dataclass_fields__ if key in data})

    def manifest_entry(self) -> Dict[str, Any]:
        return {"kind": self.kind, "k": self.k, "n": self.n, "index": self.index, "seed": self.seed,
                "status": "failed" if self.error else "completed"}


@dataclass
class KSummary:
    """Aggregate over the trials at one k; counts are over conditioned trials."""
    k: int
    n: int
    completed: int
    failed: int
    trials: int
    counts: Dict[str, int]
    event: str
    p_hat: Optional[float]
    ci95: List[float]
    note: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class TrialReport:
    config: ExperimentConfig
    records: List[TrialRecord]
    per_k: List[KSummary]
    violations: Dict[str, int]
    fit: Optional[FitResult] = None
    artifacts: Dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config_echo": self.config.to_echo(),
            "per_k": [s.to_dict() for s in self.per_k],
            "violations": dict(self.violations),
            "seeds_manifest": [r.manifest_entry() for r in self.records],
            "fit": self.fit.to_dict() if self.fit else None,
        }

    def frequency_rows(self) -> List[Dict[str, Any]]:
        return frequency_rows([s.to_dict() for s in self.per_k])


def frequency_rows(per_k: Sequence[Mapping[str, Any]]) -> List[Dict[str, Any]]:
    """Rows of k,n,trials,event,count,p_hat,ci_lo,ci_hi, event-major."""
    rows = []
    for event in EVENTS:
        for entry in per_k:
            trials, count = entry["trials"], entry["counts"].get(event, 0)
            lo, hi = wilson_interval(count, trials)
            rows.append({"k": entry["k"], "n": entry["n"], "trials": trials, "event": event, "count": count,
                         "p_hat": count / trials if trials else None, "ci_lo": lo, "ci_hi": hi})
    return rows


def sort_records(records: Sequence[TrialRecord]) -> List[TrialRecord]:
    return sorted(records, key=lambda r: (r.k, r.index))


def summarize_k(k: int, n: int, records: Sequence[TrialRecord], event: str) -> KSummary:
    completed = [r for r in records if r.error is None]
    conditioned = [r for r in completed if r.conditioned]
    counts = {name: sum(1 for r in conditioned if r.events.get(name)) for name in EVENTS}
    trials = len(conditioned)
    if trials:
        lo, hi = wilson_interval(counts[event], trials)
        return KSummary(k, n, len(completed), len(records) - len(completed), trials, counts, event,
                        counts[event] / trials, [lo, hi])
    return KSummary(k, n, len(completed), len(records) - len(completed), 0, counts, event,
                    None, [0.0, 1.0], note=INSUFFICIENT_MASS)


def count_violations(records: Sequence[TrialRecord]) -> Dict[str, int]:
    return {
        "lemma1": sum(1 for r in records if r.lemma1 is False),
        "obs1": sum(1 for r in records if r.obs1 == "violated"),
        "implication": sum(1 for r in records if not r.implication_ok),
        "failed_trials": sum(1 for r in records if r.error is not None),
    }


def aggregate(config: ExperimentConfig, records: Sequence[TrialRecord]) -> TrialReport:
    """Counts are summed per k after sorting, so completion order never matters."""
    ordered = sort_records(records)
    event = PRIMARY_EVENT[config.kind]
    per_k = [summarize_k(k, config.n_for(k), [r for r in ordered if r.k == k], event) for k in sorted(config.ks)]

    fit = None
    if config.fit and config.kind not in ("g", "pinning"):
        fit = fit_conjecture_curve([s.k for s in per_k], [s.p_hat for s in per_k], c_grid=None)
    return TrialReport(config, ordered, per_k, count_violations(ordered), fit)
