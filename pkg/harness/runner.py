#!/usr/bin/env python3
"""
Experiment runner: trial fan-out over a process pool, the seeds manifest,
and the report artifacts.
"""

import asyncio
import csv
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import Any, Dict, List, Mapping, Sequence, Tuple

import aiofiles
import psutil
from tqdm import tqdm

from config.config_manager import config_manager
from core.performance import perf_tracker
from harness.experiment import (ExperimentConfig, TrialRecord, TrialReport, TrialSpec, aggregate, frequency_rows,
                                trial_seed)
from harness.trials import init_worker, run_trial
from utils.error_handler import ArtifactError, ValidationError
from utils.structured_logger import get_logger

logger = get_logger(__name__)

CSV_COLUMNS = ("k", "n", "trials", "event", "count", "p_hat", "ci_lo", "ci_hi")


def default_jobs() -> int:
    return psutil.cpu_count(logical=False) or os.cpu_count() or 1


def build_specs(config: ExperimentConfig) -> List[TrialSpec]:
    harness = config_manager.get_section("harness") or {}
    specs = []
    for k in sorted(config.ks):
        params = config.event_params(k)
        for index in range(config.trials):
            specs.append(TrialSpec(kind=config.kind, k=k, n=config.n_for(k), index=index,
                                   seed=trial_seed(config.seed, config.kind, k, index), params=params,
                                   conditioning=config.mode, method=config.method, c=config.c,
                                   rejection_batch=int(harness.get("rejection_batch", 4096)),
                                   max_rejection_batches=int(harness.get("max_rejection_batches", 256))))
    return specs


def artifact_paths(out_dir: str) -> Dict[str, str]:
    harness = config_manager.get_section("harness") or {}
    return {
        "report": os.path.join(out_dir, harness.get("report_file", "report.json")),
        "frequencies": os.path.join(out_dir, harness.get("frequencies_file", "frequencies.csv")),
        "witnesses": os.path.join(out_dir, harness.get("witness_file", "witness_paths.jsonl")),
        "manifest": os.path.join(out_dir, harness.get("manifest_file", "seeds_manifest.jsonl")),
    }


def _format_number(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def render_frequencies_csv(rows: Sequence[Mapping[str, Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_format_number(row[column]) for column in CSV_COLUMNS])
    return buffer.getvalue()


def render_witnesses(records: Sequence[TrialRecord], samples: int) -> str:
    """Up to ``samples`` witness trails per k, lowest trial index first."""
    lines = []
    taken: Dict[int, int] = {}
    for record in records:
        if record.witness is None or taken.get(record.k, 0) >= samples:
            continue
        taken[record.k] = taken.get(record.k, 0) + 1
        entry = {"kind": record.kind, "k": record.k, "n": record.n, "index": record.index, "seed": record.seed,
                 "events": record.events, **record.witness}
        lines.append(json.dumps(entry, sort_keys=True))
    return "".join(line + "\n" for line in lines)


def per_k_table(per_k: Sequence[Mapping[str, Any]]) -> Tuple[List[str], List[List[Any]]]:
    """Headers and rows for printing a report's per-k summary."""
    headers = ["k", "n", "trials", "event", "count", "p_hat", "95% CI", "note"]
    rows = []
    for entry in per_k:
        lo, hi = entry["ci95"]
        p_hat = entry["p_hat"]
        rows.append([entry["k"], entry["n"], entry["trials"], entry["event"], entry["counts"][entry["event"]],
                     "-" if p_hat is None else f"{p_hat:.4f}", f"[{lo:.4f}, {hi:.4f}]", entry.get("note", "")])
    return headers, rows


async def _write_text(path: str, text: str) -> None:
    async with aiofiles.open(path, "w", encoding="utf-8") as f:
        await f.write(text)


async def _execute(specs: Sequence[TrialSpec], jobs: int, manifest, progress: bool) -> List[TrialRecord]:
    records: List[TrialRecord] = []

    async def collect(data: Dict[str, Any]) -> None:
        record = TrialRecord.from_dict(data)
        records.append(record)
        await manifest.write(json.dumps(record.manifest_entry(), sort_keys=True) + "\n")
        await manifest.flush()
        perf_tracker.increment_counter("trials")

    with tqdm(total=len(specs), desc="Trials", unit="trial", disable=not progress) as pbar:
        if jobs == 1:
            for spec in specs:
                await collect(run_trial(spec))
                pbar.update(1)
        else:
            loop = asyncio.get_running_loop()
            console_level = logging.getLogger().getEffectiveLevel()
            with ProcessPoolExecutor(max_workers=jobs, initializer=init_worker,
                                     initargs=(max(console_level, logging.WARNING),)) as pool:
                futures = [loop.run_in_executor(pool, run_trial, spec) for spec in specs]
                for future in asyncio.as_completed(futures):
                    await collect(await future)
                    pbar.update(1)
    return records


async def run_experiment(config: ExperimentConfig, progress: bool = True) -> TrialReport:
    """
    Run every trial of ``config`` and write the artifacts under ``config.out``.

    The seeds manifest gets one line per finished trial as it completes, so an
    interrupted run leaves a record of what finished. Everything else is
    written after aggregation and depends only on the config.

    Raises:
        ArtifactError: an artifact could not be written; names the manifest
    """
    config.validate()
    specs = build_specs(config)
    paths = artifact_paths(config.out)
    records: List[TrialRecord] = []

    logger.info(f"Running {len(specs)} trials of '{config.kind}'",
                extra={"structured_data": {"ks": config.ks, "trials": config.trials, "jobs": config.jobs,
                                           "mode": config.mode}})
    with perf_tracker.timed("run_experiment"), \
            logger.trace_operation("run_experiment", kind=config.kind, trials=len(specs)):
        try:
            os.makedirs(config.out, exist_ok=True)
            async with aiofiles.open(paths["manifest"], "w", encoding="utf-8") as manifest:
                records = await _execute(specs, config.jobs, manifest, progress)
        except OSError as e:
            raise ArtifactError(f"cannot write the seeds manifest: {e}", manifest_path=paths["manifest"],
                                completed=len(records), cause=e)

        report = aggregate(config, records)
        try:
            await _write_text(paths["report"], json.dumps(report.to_dict(), indent=2, sort_keys=True,
                                                          default=str) + "\n")
            await _write_text(paths["frequencies"], render_frequencies_csv(report.frequency_rows()))
            await _write_text(paths["witnesses"], render_witnesses(report.records, config.witness_samples))
        except OSError as e:
            raise ArtifactError(f"cannot write experiment artifacts: {e}", manifest_path=paths["manifest"],
                                completed=len(records), cause=e)

    report.artifacts = paths
    if any(report.violations[name] for name in ("lemma1", "obs1", "implication")):
        logger.error("Invariant counters are nonzero", extra={"structured_data": report.violations})
    return report


async def estimate_g(config: ExperimentConfig, progress: bool = True) -> TrialReport:
    """Frequencies of D(n,k) and BD(n,k) on parity-sampled dual instances."""
    return await run_experiment(replace(config, kind="g"), progress)


async def estimate_pinning(config: ExperimentConfig, progress: bool = True) -> TrialReport:
    """Frequencies of A(n,k) and BA(n,k) given a regular pair."""
    return await run_experiment(replace(config, kind="pinning"), progress)


async def estimate_conjecture(config: ExperimentConfig, kind: str, progress: bool = True) -> TrialReport:
    if kind not in ("conj2", "conj_b2", "conj3", "conj_b3"):
        raise ValidationError(f"'{kind}' is not a conjecture estimator")
    return await run_experiment(replace(config, kind=kind), progress)


def load_report(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ValidationError(f"report not found: {path}")
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"cannot read report {path}: {e}", cause=e)
    if not isinstance(data, dict) or "per_k" not in data:
        raise ValidationError(f"{path} is not an experiment report")
    return data


def flatten_report(data: Mapping[str, Any]) -> List[Dict[str, Any]]:
    """Frequency rows rebuilt from a report's per-k counts."""
    return frequency_rows(data["per_k"])
