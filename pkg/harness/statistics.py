#!/usr/bin/env python3

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize, stats


def wilson_interval(count: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    """
    Wilson score interval for a binomial proportion.

    Always contains count/trials; with no trials the interval is [0, 1].
    """
    if trials <= 0:
        return 0.0, 1.0
    if not 0 <= count <= trials:
        raise ValueError(f"count {count} outside 0..{trials}")
    z = stats.norm.ppf(1 - (1 - confidence) / 2)
    p_hat = count / trials
    denominator = 1 + z * z / trials
    center = (p_hat + z * z / (2 * trials)) / denominator
    half = z * math.sqrt(p_hat * (1 - p_hat) / trials + z * z / (4 * trials * trials)) / denominator
    return max(0.0, center - half), min(1.0, center + half)


def conjecture_bound(k: float, c: float, epsilon: float) -> float:
    """1 - (k-c)^-1 (log(k-c))^(-1-eps), defined for k - c > 1."""
    gap = k - c
    if gap <= 1:
        raise ValueError(f"bound needs k - c > 1 (got {gap})")
    return 1.0 - 1.0 / (gap * math.log(gap) ** (1.0 + epsilon))


@dataclass
class FitResult:
    """Least-squares (c, epsilon) for the conjectured curve; descriptive only."""
    c: int
    epsilon: float
    sse: float
    points: int

    def to_dict(self) -> Dict[str, float]:
        return {"c": self.c, "epsilon": self.epsilon, "sse": self.sse, "points": self.points}


def fit_conjecture_curve(ks: Sequence[int], p_hats: Sequence[Optional[float]],
                         c_grid: Optional[Sequence[int]] = None,
                         epsilon_bounds: Tuple[float, float] = (1e-6, 10.0)) -> Optional[FitResult]:
    """
    Fit the conjectured lower-bound curve to estimated probabilities.

    Integer c runs over ``c_grid``; for each, epsilon minimizes the squared
    error over the points with 0 < p < 1 and k - c > 1. Needs at least two
    usable points for some c, else returns None.
    """
    pairs = [(int(k), float(p)) for k, p in zip(ks, p_hats) if p is not None and 0.0 < p < 1.0]
    if len(pairs) < 2:
        return None
    grid = list(c_grid) if c_grid is not None else list(range(-10, max(k for k, _ in pairs) - 1))

    best: Optional[FitResult] = None
    for c in grid:
        usable = [(k, p) for k, p in pairs if k - c > 1]
        if len(usable) < 2:
            continue
        k_arr = np.array([k for k, _ in usable], dtype=float)
        p_arr = np.array([p for _, p in usable])
        gap = k_arr - c
        log_gap = np.log(gap)

        def sse(epsilon: float) -> float:
            predicted = 1.0 - 1.0 / (gap * log_gap ** (1.0 + epsilon))
            return float(np.sum((predicted - p_arr) ** 2))

        result = optimize.minimize_scalar(sse, bounds=epsilon_bounds, method="bounded")
        candidate = FitResult(c, float(result.x), float(result.fun), len(usable))
        if best is None or candidate.sse < best.sse:
            best = candidate
    return best


def interval_width(count: int, trials: int, confidence: float = 0.95) -> float:
    lo, hi = wilson_interval(count, trials, confidence)
    return hi - lo


def summarize_counts(counts: Dict[str, int], trials: int, confidence: float = 0.95) -> List[Dict[str, float]]:
    """Per-event rows of count, p_hat and interval bounds, in sorted event order."""
    rows = []
    for event in sorted(counts):
        count = counts[event]
        lo, hi = wilson_interval(count, trials, confidence)
        rows.append({"event": event, "count": count, "p_hat": count / trials if trials else 0.0,
                     "ci_lo": lo, "ci_hi": hi})
    return rows
