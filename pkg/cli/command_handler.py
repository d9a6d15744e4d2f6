#!/usr/bin/env python3
import argparse
import json
import os
import sys
from typing import Any, Dict, List, Optional, TextIO

import aiofiles
from colorama import Fore, Style
from tabulate import tabulate

from config.config_manager import config_manager, logger
from config.config_utils import load_experiment_file, merge_overrides, parse_int_list, parse_radius
from core.events import (EventFlags, EventParams, detect_dual_instance, detect_dual_via_translation, detect_primal,
                         is_isolated, witness_to_json)
from core.groundstate import brute_force_cgroundstate, cgroundstate
from core.instance import Instance, deserialize, sample_couplings, sample_dual_instance, serialize
from core.lattice import build_dual, build_strip
from core.performance import perf_tracker
from core.tjoin import brute_force_tjoin, min_tjoin
from harness.experiment import ExperimentConfig
from harness.planting import plant_isolation
from harness.runner import (default_jobs, flatten_report, load_report, per_k_table, render_frequencies_csv,
                            run_experiment)
from harness.verification import DEFAULT_CASES, run_suite
from utils.error_handler import UsageError, ValidationError

EXIT_OK = 0
EXIT_INVARIANT = 2


class CLIArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting."""

    def error(self, message: str):
        raise UsageError(message, suggestion=f"run '{self.prog} --help' for usage")


def _add_event_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--radius", type=parse_radius, default=None,
                        help="near-origin radius: a number, 'scaled' (= k) or 'fixed'")
    parser.add_argument("--density-side-coeff", type=float, default=None, help="square side coefficient")
    parser.add_argument("--density-threshold", type=float, default=None, help="density threshold")


def build_parser() -> CLIArgumentParser:
    parser = CLIArgumentParser(prog="frustra",
                               description="Domain walls and incongruence events of 2D spin glasses on strips")
    parser.add_argument("--config", type=str, default=None, help="JSON settings file")
    parser.add_argument("--debug", action="store_true", help="Enable debug logging")
    sub = parser.add_subparsers(dest="command", parser_class=CLIArgumentParser)
    sub.required = True

    gen = sub.add_parser("gen", help="generate an instance file")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--k", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--mode", choices=("signed", "dual", "planted"), default="signed")
    gen.add_argument("--out", type=str, required=True, help="instance file to write")

    solve = sub.add_parser("solve", help="solve one instance and detect events")
    solve.add_argument("instance", help="instance file")
    solve.add_argument("--event", choices=("primal", "dual", "both"), default="both")
    _add_event_flags(solve)
    solve.add_argument("--emit-path", type=str, default=None, help="write the witness trail as JSON")
    solve.add_argument("--check-oracle", action="store_true", help="compare with brute-force oracles")

    verify = sub.add_parser("verify", help="run an invariant suite")
    verify.add_argument("suite", choices=sorted(DEFAULT_CASES) + ["all"])
    verify.add_argument("--seeds", type=int, default=None, help="number of seeded cases")
    verify.add_argument("--seed", type=int, default=0, help="master seed")

    estimate = sub.add_parser("estimate", help="run a Monte Carlo experiment")
    estimate.add_argument("experiment", help="key=value experiment file")
    estimate.add_argument("--kind", type=str, default=None)
    estimate.add_argument("--k", type=parse_int_list, default=None, help="k values: 2..5 or 2,3,4")
    estimate.add_argument("--n", type=int, default=None, help="fixed n for every k")
    estimate.add_argument("--trials", type=int, default=None)
    estimate.add_argument("--seed", type=int, default=None)
    _add_event_flags(estimate)
    estimate.add_argument("--mode", choices=("none", "rejection", "planted"), default=None,
                          help="conditioning mode")
    estimate.add_argument("--jobs", type=int, default=None, help="worker processes (default: physical cores)")
    estimate.add_argument("--out", type=str, default=None, help="artifact directory")

    report = sub.add_parser("report", help="summarize a report.json")
    report.add_argument("report", help="report.json written by estimate")
    report.add_argument("--out", type=str, default=None, help="flattened frequency CSV")
    return parser


def resolve_seed(seed: Optional[int]) -> Optional[int]:
    """FRUSTRA_SEED, when set, wins over --seed."""
    env = os.environ.get("FRUSTRA_SEED")
    if env is None or env == "":
        return seed
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"FRUSTRA_SEED must be an integer (got '{env}')")


def _flag(value: Optional[bool]) -> str:
    return "n/a" if value is None else str(bool(value)).lower()


class CommandHandler:
    """Runs the parsed subcommands; each handler returns the process exit code."""

    def __init__(self, stdout: Optional[TextIO] = None, stderr: Optional[TextIO] = None):
        self.stdout = stdout or sys.stdout
        self.stderr = stderr or sys.stderr
        self.use_colors = config_manager.get("cli.use_colors", True)
        self.table_format = config_manager.get("cli.table_format", "github")
        self.commands = {
            "gen": self._gen_command,
            "solve": self._solve_command,
            "verify": self._verify_command,
            "estimate": self._estimate_command,
            "report": self._report_command,
        }

    def _color(self, text: str, color: str) -> str:
        return f"{color}{text}{Style.RESET_ALL}" if self.use_colors else text

    def _print(self, text: str = "") -> None:
        print(text, file=self.stdout)

    def _echo_config(self, command: str, resolved: Dict[str, Any]) -> None:
        """Every run echoes its resolved parameters on stderr."""
        print(f"config[{command}]: {json.dumps(resolved, sort_keys=True, default=str)}", file=self.stderr)

    async def handle_command(self, args: argparse.Namespace) -> int:
        handler = self.commands.get(args.command)
        if handler is None:
            raise UsageError(f"unknown command '{args.command}'")
        with logger.trace_operation("command", command=args.command):
            return await handler(args)

    async def _gen_command(self, args: argparse.Namespace) -> int:
        seed = resolve_seed(args.seed)
        self._echo_config("gen", {"n": args.n, "k": args.k, "seed": seed, "mode": args.mode, "out": args.out})
        L = build_strip(args.n, args.k)

        if args.mode == "dual":
            instance = Instance.from_dual(sample_dual_instance(L, seed), seed=seed)
        elif args.mode == "planted":
            instance = Instance.from_couplings(L, plant_isolation(L, seed, regular_pair=L.n >= 2), seed=seed)
        else:
            instance = Instance.from_couplings(L, sample_couplings(L, seed), seed=seed)

        async with aiofiles.open(args.out, "wb") as f:
            await f.write(serialize(instance))

        summary = [["lattice", f"C({L.n},{L.k})"], ["edges", L.num_edges], ["plaquettes", L.num_plaquettes],
                   ["|T|", len(instance.T)], ["mode", instance.mode]]
        if instance.signed:
            summary.append(["isolated", _flag(is_isolated(L, instance.couplings))])
        self._print(tabulate(summary, tablefmt=self.table_format))
        self._print(self._color(f"Wrote {args.out}", Fore.GREEN))
        return EXIT_OK

    def _event_params(self, args: argparse.Namespace, k: int) -> EventParams:
        radius = args.radius
        if radius == "scaled":
            radius = float(k)
        elif radius == "fixed":
            radius = 100.0
        return EventParams.from_config(radius=radius, density_side_coeff=args.density_side_coeff,
                                       density_threshold=args.density_threshold)

    async def _solve_command(self, args: argparse.Namespace) -> int:
        async with aiofiles.open(args.instance, "rb") as f:
            data = await f.read()
        instance = deserialize(data)
        L = instance.lattice
        params = self._event_params(args, L.k)
        self._echo_config("solve", {"instance": args.instance, "event": args.event, "n": L.n, "k": L.k,
                                    "mode": instance.mode, "params": params.__dict__})

        primal: Optional[EventFlags] = None
        dual: Optional[EventFlags] = None
        rows: List[List[Any]] = [["lattice", f"C({L.n},{L.k})"], ["mode", instance.mode], ["|T|", len(instance.T)]]

        if instance.signed:
            J = instance.couplings
            state = cgroundstate(L, J)
            rows += [["energy", repr(state.energy)], ["T-join weight", repr(state.tjoin.weight)],
                     ["|DIS|", len(state.dissatisfied)],
                     ["sacrificed edge", "-" if state.sacrificed is None else state.sacrificed]]
            if L.n >= 2:
                if args.event in ("primal", "both"):
                    primal = detect_primal(L, J, params)
                if args.event in ("dual", "both"):
                    dual = detect_dual_via_translation(L, J, params)
            else:
                rows.append(["events", "need n >= 2"])
        else:
            if args.event == "primal":
                raise ValidationError("primal events need signed couplings; this is a dual instance")
            join = min_tjoin(build_dual(L).weighted_graph(instance.weights), instance.T)
            rows.append(["T-join weight", repr(join.weight)])
            dual = detect_dual_instance(instance.to_dual(), params)

        self._print(tabulate(rows, tablefmt=self.table_format))
        A = primal.A if primal else (False if instance.signed else None)
        BA = primal.BA if primal else (False if instance.signed else None)
        D = dual.D if dual else (False if instance.signed else None)
        BD = dual.BD if dual else (False if instance.signed else None)
        self._print(f"A={_flag(A)} BA={_flag(BA)} D={_flag(D)} BD={_flag(BD)}")

        exit_code = EXIT_OK
        for flags in (primal, dual):
            if flags is not None and (flags.lemma1_holds is False or not flags.implications_hold()):
                self._print(self._color("invariant violated in event detection", Fore.RED))
                exit_code = EXIT_INVARIANT

        if args.emit_path:
            witness_flags = primal if primal is not None and primal.witness else dual
            payload = witness_to_json(witness_flags) if witness_flags is not None and witness_flags.witness else None
            async with aiofiles.open(args.emit_path, "w", encoding="utf-8") as f:
                await f.write(json.dumps(payload, sort_keys=True) + "\n")
            self._print(f"witness: {args.emit_path}")

        if args.check_oracle:
            outcome = self._oracle_check(instance)
            color = {"MATCH": Fore.GREEN, "MISMATCH": Fore.RED}.get(outcome, Fore.YELLOW)
            self._print(self._color(f"oracle: {outcome}", color))
            if outcome == "MISMATCH":
                exit_code = EXIT_INVARIANT
        return exit_code

    def _oracle_check(self, instance: Instance) -> str:
        """MATCH, MISMATCH, or SKIPPED when the instance is too large for enumeration."""
        L = instance.lattice
        interior = (2 * L.k - 1) * (2 * L.n - 1)
        if instance.signed:
            if interior > config_manager.get("solver.brute_force_interior_limit", 20):
                return "SKIPPED"
            state = cgroundstate(L, instance.couplings)
            _, oracle_energy = brute_force_cgroundstate(L, instance.couplings)
            same = abs(state.energy - oracle_energy) <= 1e-9 * max(1.0, abs(oracle_energy))
        else:
            graph = build_dual(L).weighted_graph(instance.weights)
            if graph.num_edges > config_manager.get("solver.brute_force_edge_limit", 24):
                return "SKIPPED"
            fast = min_tjoin(graph, instance.T)
            oracle = brute_force_tjoin(graph, instance.T)
            same = abs(fast.weight - oracle.weight) <= 1e-9 * max(1.0, abs(oracle.weight))
        if not same:
            logger.error("Solver disagrees with the brute-force oracle",
                         extra={"structured_data": {"n": L.n, "k": L.k, "mode": instance.mode}})
        return "MATCH" if same else "MISMATCH"

    async def _verify_command(self, args: argparse.Namespace) -> int:
        suites = sorted(DEFAULT_CASES) if args.suite == "all" else [args.suite]
        master = resolve_seed(args.seed)
        self._echo_config("verify", {"suites": suites, "seeds": args.seeds, "seed": master})

        rows, failed = [], False
        for name in suites:
            with perf_tracker.timed(f"verify_{name}"):
                result = run_suite(name, args.seeds, master, progress=True)
            status = self._color("PASS", Fore.GREEN) if result.passed else self._color("FAIL", Fore.RED)
            rows.append([name, result.cases, len(result.failures), status])
            failed = failed or not result.passed
            for failure in result.failures[:10]:
                self._print(self._color(f"  {name}: {failure}", Fore.RED))
        self._print(tabulate(rows, headers=["suite", "cases", "failures", "status"], tablefmt=self.table_format))
        return EXIT_INVARIANT if failed else EXIT_OK

    async def _estimate_command(self, args: argparse.Namespace) -> int:
        file_values = load_experiment_file(args.experiment)
        cli_values = {
            "kind": args.kind,
            "k": args.k,
            "trials": args.trials,
            "seed": args.seed,
            "radius": args.radius,
            "density_side_coeff": args.density_side_coeff,
            "density_threshold": args.density_threshold,
            "mode": args.mode,
            "jobs": args.jobs,
            "out": args.out,
        }
        if args.n is not None:
            cli_values.update({"n_factor": 0, "n_offset": args.n})
        values = merge_overrides(file_values, cli_values)
        env_seed = resolve_seed(values.get("seed"))
        if env_seed is not None:
            values["seed"] = env_seed
        values.setdefault("jobs", default_jobs())

        config = ExperimentConfig.from_values(values)
        self._echo_config("estimate", config.to_echo())
        report = await run_experiment(config)

        headers, rows = per_k_table([s.to_dict() for s in report.per_k])
        self._print(tabulate(rows, headers=headers, tablefmt=self.table_format))
        self._print_footer(report.violations, report.fit.to_dict() if report.fit else None)
        for name, path in sorted(report.artifacts.items()):
            self._print(f"{name}: {path}")

        if any(report.violations[name] for name in ("lemma1", "obs1", "implication")):
            return EXIT_INVARIANT
        return EXIT_OK

    def _print_footer(self, violations: Dict[str, int], fit: Optional[Dict[str, Any]]) -> None:
        text = ", ".join(f"{name}={count}" for name, count in sorted(violations.items()))
        clean = not any(violations.get(name) for name in ("lemma1", "obs1", "implication"))
        self._print(self._color(f"violations: {text}", Fore.GREEN if clean else Fore.RED))
        if fit:
            self._print(f"fit: c={fit['c']} epsilon={fit['epsilon']:.4g} sse={fit['sse']:.4g} "
                        f"points={fit['points']}")

    async def _report_command(self, args: argparse.Namespace) -> int:
        data = load_report(args.report)
        self._echo_config("report", {"report": args.report, "out": args.out})
        headers, rows = per_k_table(data["per_k"])
        self._print(tabulate(rows, headers=headers, tablefmt=self.table_format))
        self._print_footer(data.get("violations", {}), data.get("fit"))
        if args.out:
            async with aiofiles.open(args.out, "w", encoding="utf-8") as f:
                await f.write(render_frequencies_csv(flatten_report(data)))
            self._print(self._color(f"Wrote {args.out}", Fore.GREEN))
        return EXIT_OK
