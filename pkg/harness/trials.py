#!/usr/bin/env python3
"""
Trial workers. Every worker is a top-level function of a picklable
TrialSpec so the runner can hand it to a process pool.
"""

import logging
import math
from typing import Any, Callable, Dict, Optional

import numpy as np

from core.events import (EventFlags, check_observation1, detect_dual_instance, detect_dual_via_translation,
                         detect_primal, is_dually_isolated, witness_to_json, dual_subinstance)
from core.instance import DualInstance, sample_dual_instance
from core.lattice import build_dual, build_extended_dual, build_strip, restrict
from harness.experiment import TrialRecord, TrialSpec
from harness.planting import (extend_couplings, find_first_regular, plant_dual_isolation, plant_isolation,
                              sample_regular_pair)
from utils.error_handler import ErrorBoundary
from utils.structured_logger import ContextVars, get_logger, setup_structured_logging

logger = get_logger(__name__)

_SEED_MASK = (1 << 63) - 1


def init_worker(console_level: int = logging.WARNING) -> None:
    """Process-pool initializer: console logging only, files stay with the parent."""
    setup_structured_logging(console_level=console_level, enable_file_logs=False, force=True)


def _record_flags(record: TrialRecord, flags: EventFlags) -> None:
    record.events = {
        "regular": flags.regular_pair,
        "isolated": flags.isolated,
        "dually_isolated": flags.dually_isolated,
        "A": flags.A,
        "BA": flags.BA,
        "D": flags.D,
        "BD": flags.BD,
    }
    record.lemma1 = flags.lemma1_holds
    record.implication_ok = flags.implications_hold()
    record.vertex_simple = flags.vertex_simple
    record.truncated = flags.truncated
    record.path_length = flags.path_length
    if flags.min_distance is not None and not math.isinf(flags.min_distance):
        record.min_distance = float(flags.min_distance)
    record.density = flags.density
    if flags.witness:
        record.witness = witness_to_json(flags)


def _primal_couplings(spec: TrialSpec, record: TrialRecord) -> Optional[np.ndarray]:
    L = build_strip(spec.n, spec.k)
    if spec.conditioning == "planted":
        return plant_isolation(L, spec.seed).values
    sampled = sample_regular_pair(L, spec.n - 1, spec.seed, spec.method,
                                  spec.rejection_batch, spec.max_rejection_batches)
    if sampled is None:
        record.note = "rejection sampling exhausted"
        return None
    return sampled.values


def _dual_trial(spec: TrialSpec, record: TrialRecord) -> None:
    L = build_strip(spec.n, spec.k)
    dual = plant_dual_isolation(L, spec.seed) if spec.conditioning == "planted" else sample_dual_instance(L, spec.seed)
    flags = detect_dual_instance(dual, spec.params)
    _record_flags(record, flags)
    record.conditioned = spec.conditioning != "rejection" or bool(flags.dually_isolated)


def _pinning_trial(spec: TrialSpec, record: TrialRecord) -> None:
    J = _primal_couplings(spec, record)
    if J is None:
        return
    L = build_strip(spec.n, spec.k)
    flags = detect_primal(L, J, spec.params)
    _record_flags(record, flags)

    # A = D(n-1,k) and BA = BD(n-1,k) hold only on isolated C(n,k)
    if flags.isolated:
        translated = detect_dual_via_translation(L, J, spec.params)
        record.events["D"], record.events["BD"] = translated.D, translated.BD
        agrees = translated.D == flags.A and translated.BD == flags.BA
        record.implication_ok = record.implication_ok and translated.implications_hold() and agrees
    record.conditioned = spec.conditioning != "rejection" or bool(flags.isolated)

    if spec.conditioning == "planted":
        big = build_strip(spec.n + 1, spec.k)
        extended = extend_couplings(J, L, big, (spec.seed + 1) & _SEED_MASK)
        record.obs1 = check_observation1(extended.values, spec.k, spec.n, spec.n + 1).outcome.value


def _conj2_trial(spec: TrialSpec, record: TrialRecord) -> None:
    J = _primal_couplings(spec, record)
    if J is None:
        return
    L = build_strip(spec.n, spec.k)
    flags = detect_primal(L, J, spec.params)
    _record_flags(record, flags)

    if spec.conditioning == "none":
        record.conditioned = True
        return
    if find_first_regular(J, spec.k, spec.n, host=L) != spec.n:
        record.note = "C(n,k) is not the first regular and isolated scale"
        return

    nested_event = "BA" if spec.kind == "conj_b2" else "A"
    for k_sub in range(spec.c + 2, spec.k):
        small = build_strip(spec.n, k_sub)
        sub_flags = detect_primal(small, restrict(J, small, L), spec.params)
        record.implication_ok = record.implication_ok and sub_flags.implications_hold()
        if not getattr(sub_flags, nested_event):
            record.note = f"{nested_event}(n,{k_sub}) failed"
            return
    record.conditioned = True


def _no_dually_isolated_scale(dual: DualInstance, k: int) -> bool:
    L = dual.lattice
    for n_sub in range(k, L.n + 1):
        sub = dual_subinstance(dual, n_sub, k)
        if is_dually_isolated(build_extended_dual(build_dual(sub.lattice)), sub.weights, sub.T):
            return False
    return True


def _conj3_trial(spec: TrialSpec, record: TrialRecord) -> None:
    L = build_strip(spec.n, spec.k)
    dual = sample_dual_instance(L, spec.seed)
    flags = detect_dual_instance(dual, spec.params)
    _record_flags(record, flags)

    if spec.conditioning == "none":
        record.conditioned = True
        return
    if not _no_dually_isolated_scale(dual, spec.k):
        record.note = "a dually isolated C(n',k) exists"
        return

    nested_event = "BD" if spec.kind == "conj_b3" else "D"
    for k_sub in range(spec.c + 2, spec.k):
        sub_flags = detect_dual_instance(dual_subinstance(dual, spec.n, k_sub), spec.params)
        record.implication_ok = record.implication_ok and sub_flags.implications_hold()
        if not getattr(sub_flags, nested_event):
            record.note = f"{nested_event}(n,{k_sub}) failed"
            return
    record.conditioned = True


WORKERS: Dict[str, Callable[[TrialSpec, TrialRecord], None]] = {
    "g": _dual_trial,
    "pinning": _pinning_trial,
    "conj2": _conj2_trial,
    "conj_b2": _conj2_trial,
    "conj3": _conj3_trial,
    "conj_b3": _conj3_trial,
}


def run_trial(spec: TrialSpec) -> Dict[str, Any]:
    """Run one trial; failures are recorded in the result, never raised."""
    ContextVars.set("trial_seed", spec.seed)
    record = TrialRecord(spec.kind, spec.k, spec.n, spec.index, spec.seed)
    with ErrorBoundary(raise_error=False, context={"k": spec.k, "n": spec.n, "index": spec.index},
                       logger_name=__name__) as boundary:
        WORKERS[spec.kind](spec, record)
    if boundary.error is not None:
        record.error = boundary.error.to_dict()
        record.conditioned = False
    ContextVars.unset("trial_seed")
    return record.to_dict()
