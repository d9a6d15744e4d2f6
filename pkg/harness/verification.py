#!/usr/bin/env python3
"""
Invariant suites behind ``verify``: oracle equivalence of the solvers, the
groundstate energy identity, connecting trails in regular pairs, trail
containment under extension, and the structure of the symmetric difference.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import networkx as nx
import numpy as np
from tqdm import tqdm

from core.events import (EventParams, ObservationOutcome, check_observation1, decompose_symmetric_difference,
                         detect_dual, detect_primal, dual_joins)
from core.groundstate import brute_force_cgroundstate, cgroundstate
from core.instance import sample_couplings, sample_dual_instance
from core.lattice import (build_dual, build_extended_dual, build_strip, embed_edge_ids, parity_blocks)
from core.tjoin import WeightedGraph, brute_force_tjoin, min_tjoin, validate_tjoin
from harness.experiment import trial_seed
from harness.planting import extend_couplings, plant_isolation, sample_regular_pair
from utils.error_handler import ErrorBoundary, ValidationError
from utils.structured_logger import get_logger

logger = get_logger(__name__)

# Grid shapes (rows, columns) with at most 24 edges.
TJOIN_SHAPES = ((2, 2), (2, 3), (3, 3), (2, 4), (3, 4), (2, 5), (2, 6), (4, 4), (1, 8), (3, 2))
DUALITY_SHAPES = ((1, 1), (2, 1), (2, 2))
LEMMA1_SHAPES = ((4, 2), (6, 3))
OBS1_SHAPES = ((2, 2), (3, 2), (3, 3))
DECOMPOSITION_SHAPES = ((4, 2), (6, 3))

DEFAULT_CASES = {
    "lattice": 16,
    "tjoin": 500,
    "duality": 200,
    "lemma1": 500,
    "obs1": 100,
    "decomposition": 1000,
}


def _close(a: float, b: float, rel: float = 1e-9) -> bool:
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    failures: List[str] = field(default_factory=list)
    stats: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def fail(self, case: int, message: str) -> None:
        self.failures.append(f"case {case}: {message}")


def _lattice_case(case: int, seed: int) -> List[str]:
    n, k = case // 4 + 1, case % 4 + 1
    L = build_strip(n, k)
    problems = []
    if L.num_edges != 2 * k * (2 * n + 1) + 2 * n * (2 * k + 1):
        problems.append(f"C({n},{k}) has {L.num_edges} edges")
    for edge in L.edges:
        if L.edge_id(edge.u, edge.v) != edge.id:
            problems.append(f"edge id of {edge.u}-{edge.v} does not round-trip")
            break
    verts, cycle = L.boundary_cycle()
    if len(cycle) != 4 * (n + k) or len(set(cycle)) != len(cycle) or set(cycle) != set(L.boundary_edge_ids):
        problems.append(f"boundary cycle of C({n},{k}) is not the boundary")

    grid = build_dual(L)
    if len(grid.dual_edges) != L.num_edges - len(L.boundary_edge_ids):
        problems.append("dual edge count differs from the interior edge count")
    blocks = parity_blocks(grid)
    if sorted(p for block in blocks for p in block) != sorted(grid.plaquettes):
        problems.append("parity blocks do not partition the plaquettes")
    extended = build_extended_dual(grid)
    if extended.degree(extended.apex_top) != 1 or extended.degree(extended.apex_bottom) != 1:
        problems.append("apexes must have degree one")

    if n > 1 and k > 1:
        small = build_strip(n - 1, k - 1)
        embed = embed_edge_ids(small, L)
        for e in small.edges:
            big = L.edges[int(embed[e.id])]
            if (big.u, big.v) != (e.u, e.v):
                problems.append("sublattice embedding moves an edge")
                break
    return problems


def _tjoin_case(case: int, seed: int) -> List[str]:
    rng = np.random.default_rng(seed)
    rows, cols = TJOIN_SHAPES[case % len(TJOIN_SHAPES)]
    graph = nx.grid_2d_graph(rows, cols)
    for u, v in graph.edges:
        graph.edges[u, v]["weight"] = float(rng.uniform(0.1, 1.0))
    G = WeightedGraph.from_networkx(graph)
    nodes = G.nodes
    chosen = [nodes[i] for i in np.flatnonzero(rng.integers(0, 2, size=len(nodes)))]
    if len(chosen) % 2:
        chosen = chosen[:-1]

    fast = min_tjoin(G, chosen)
    oracle = brute_force_tjoin(G, chosen)
    problems = []
    if not validate_tjoin(G, chosen, fast.edges):
        problems.append("solver result is not a T-join")
    if not _close(fast.weight, oracle.weight):
        problems.append(f"weights differ: solver {fast.weight!r}, oracle {oracle.weight!r}")
    return problems


def _duality_case(case: int, seed: int) -> List[str]:
    n, k = DUALITY_SHAPES[case % len(DUALITY_SHAPES)]
    L = build_strip(n, k)
    J = sample_couplings(L, seed).values
    state = cgroundstate(L, J)
    _, oracle_energy = brute_force_cgroundstate(L, J)

    magnitudes = np.abs(J)
    dis_weight = math.fsum(magnitudes[e] for e in state.dissatisfied.edges)
    join_weight = state.tjoin.weight + (magnitudes[state.sacrificed] if state.sacrificed is not None else 0.0)
    problems = []
    if not _close(state.energy, oracle_energy):
        problems.append(f"energy {state.energy!r} differs from the enumerated minimum {oracle_energy!r}")
    if not _close(state.energy, -math.fsum(magnitudes) + 2.0 * join_weight):
        problems.append("energy differs from -sum|J| + 2 * join weight")
    if not _close(dis_weight, join_weight):
        problems.append("dissatisfied weight differs from the join weight")
    if not state.dissatisfied.parity_ok(L, state.T):
        problems.append("dissatisfied set has the wrong plaquette parities")
    return problems


def _lemma1_case(case: int, seed: int) -> List[str]:
    n, k = LEMMA1_SHAPES[case % len(LEMMA1_SHAPES)]
    L = build_strip(n, k)
    J = sample_regular_pair(L, n - 1, seed, method="affine")
    flags = detect_primal(L, J, EventParams(radius=float(k), vertex_simple_check=False))
    problems = []
    if not flags.lemma1_holds:
        problems.append(f"no connecting trail in the regular pair C({n},{k}), C({n - 1},{k})")
    if not flags.implications_hold():
        problems.append("BA without A")
    return problems


def _obs1_case(case: int, seed: int) -> List[str]:
    n, k = OBS1_SHAPES[case % len(OBS1_SHAPES)]
    n_prime = n + 1 + case % 2
    L, big = build_strip(n, k), build_strip(n_prime, k)
    planted = plant_isolation(L, seed)
    extended = extend_couplings(planted.values, L, big, seed ^ 0x5A5A)
    result = check_observation1(extended.values, k, n, n_prime)
    if result.outcome is ObservationOutcome.VIOLATED:
        return [f"trail edges {result.missing[:5]} of C({n},{k}) missing from C({n_prime},{k})"]
    if result.outcome is ObservationOutcome.INAPPLICABLE:
        return [f"planted instance not applicable: {result.reason}"]
    return []


def _decomposition_case(case: int, seed: int) -> List[str]:
    n, k = DECOMPOSITION_SHAPES[case % len(DECOMPOSITION_SHAPES)]
    L = build_strip(n, k)
    dual = sample_dual_instance(L, seed)
    grid = build_dual(L)
    extended = build_extended_dual(grid)
    graph, r, s = dual_joins(extended, dual.weights, dual.T)
    decomp = decompose_symmetric_difference(graph, r.edges, s.edges, extended.apex_top, extended.apex_bottom)

    problems = []
    odd = {v for v, d in decomp.degrees.items() if d % 2}
    if odd != {extended.apex_top, extended.apex_bottom}:
        problems.append("odd-degree vertices are not the two apexes")
    if sorted(decomp.path + [e for c in decomp.cycles for e in c]) != sorted(decomp.delta):
        problems.append("trail and cycles do not partition the symmetric difference")
    flags = detect_dual(grid, extended, dual.weights, dual.T, EventParams(radius=float(k), vertex_simple_check=False))
    if not flags.implications_hold():
        problems.append("BD without D")
    return problems


SUITES: Dict[str, Callable[[int, int], List[str]]] = {
    "lattice": _lattice_case,
    "tjoin": _tjoin_case,
    "duality": _duality_case,
    "lemma1": _lemma1_case,
    "obs1": _obs1_case,
    "decomposition": _decomposition_case,
}


def run_suite(name: str, seeds: Optional[int] = None, master_seed: int = 0, progress: bool = False) -> SuiteResult:
    """
    Run ``seeds`` cases of one suite; every case is seeded from ``master_seed``.

    Exceptions inside a case count as failures of that case.
    """
    if name not in SUITES:
        raise ValidationError(f"unknown suite '{name}'", details={"suites": sorted(SUITES)})
    cases = DEFAULT_CASES[name] if seeds is None else seeds
    if cases < 1:
        raise ValidationError("a suite needs at least one case")
    if name == "lattice":
        cases = min(cases, DEFAULT_CASES["lattice"])

    result = SuiteResult(name)
    check = SUITES[name]
    with logger.trace_operation("verify_suite", suite=name, cases=cases):
        for case in tqdm(range(cases), desc=name, unit="case", disable=not progress):
            seed = trial_seed(master_seed, f"verify-{name}", 0, case)
            with ErrorBoundary(raise_error=False, context={"suite": name, "case": case}) as boundary:
                for problem in check(case, seed):
                    result.fail(case, problem)
            if boundary.error is not None:
                result.fail(case, f"{boundary.error.__class__.__name__}: {boundary.error.message}")
            result.cases += 1

    result.stats = {"cases": result.cases, "failures": len(result.failures)}
    if result.failures:
        logger.error(f"Suite '{name}' failed", extra={"structured_data": {"failures": result.failures[:10]}})
    return result
