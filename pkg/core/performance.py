#!/usr/bin/env python3

import sys
import time
from contextlib import contextmanager
from typing import Any, Dict, Iterator, List, Optional, TextIO

from colorama import Fore, Style
from tabulate import tabulate


class PerformanceTracker:
    """Per-process solver timers and counters (never written into artifacts)."""

    def __init__(self):
        self.metrics: Dict[str, List[float]] = {}
        self.counters: Dict[str, int] = {}

    @contextmanager
    def timed(self, operation: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.metrics.setdefault(operation, []).append(time.perf_counter() - start)

    def increment_counter(self, counter: str, value: int = 1) -> int:
        self.counters[counter] = self.counters.get(counter, 0) + value
        return self.counters[counter]

    def get_metrics(self) -> Dict[str, Any]:
        result: Dict[str, Any] = {"timers": {}, "counters": dict(self.counters)}
        for op, times in self.metrics.items():
            if times:
                result["timers"][op] = {
                    "count": len(times),
                    "total": sum(times),
                    "avg": sum(times) / len(times),
                    "max": max(times),
                }
        return result

    def reset(self) -> None:
        self.metrics = {}
        self.counters = {}

    def summary(self, tablefmt: str = "github") -> str:
        """Timers and counters as tables."""
        metrics = self.get_metrics()
        parts = []
        if metrics["timers"]:
            rows = [[op, s["count"], f"{s['total']:.3f}s", f"{s['avg'] * 1000:.2f}ms", f"{s['max'] * 1000:.2f}ms"]
                    for op, s in sorted(metrics["timers"].items())]
            parts.append(tabulate(rows, headers=["Operation", "Count", "Total", "Average", "Max"],
                                  tablefmt=tablefmt))
        if metrics["counters"]:
            rows = sorted(metrics["counters"].items())
            parts.append(tabulate(rows, headers=["Counter", "Value"], tablefmt=tablefmt))
        return "\n\n".join(parts)

    def print_summary(self, tablefmt: str = "github", file: Optional[TextIO] = None) -> None:
        file = file or sys.stderr
        text = self.summary(tablefmt)
        if text:
            print(f"\n{Fore.CYAN}===== Solver Metrics ====={Style.RESET_ALL}", file=file)
            print(text, file=file)


perf_tracker = PerformanceTracker()
