#!/usr/bin/env python3
"""
Minimum-weight T-joins on positively weighted graphs.

The exact solver reduces to shortest paths between T vertices (Dijkstra from
each terminal) plus a minimum-weight perfect matching on the metric closure
(networkx blossom matching). Exhaustive oracles for both stages live here too.
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Hashable, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from config.config_manager import config_manager
from core.performance import perf_tracker
from utils.error_handler import InvariantViolation, NoSolutionError, ValidationError
from utils.structured_logger import get_logger

logger = get_logger(__name__)

Node = Hashable
Pair = Tuple[Node, Node]


class WeightedGraph:
    """
    Undirected simple graph with strictly positive weights and stable integer edge ids.

    The networkx view (``graph``) stores ``id`` and ``weight`` on every edge.
    The lattice duals are connected; other graphs may not be, and the solvers
    then work component by component.
    """

    def __init__(self, nodes: Iterable[Node], edges: Iterable[Tuple[Node, Node, int, float]]):
        self.graph = nx.Graph()
        self.graph.add_nodes_from(nodes)
        self.endpoints: Dict[int, Pair] = {}
        self.weights: Dict[int, float] = {}

        for u, v, eid, w in edges:
            eid = int(eid)
            w = float(w)
            if eid in self.endpoints:
                raise ValidationError(f"duplicate edge id {eid}")
            if not (w > 0 and math.isfinite(w)):
                raise ValidationError(f"edge {eid} has non-positive or non-finite weight {w}")
            if u not in self.graph or v not in self.graph:
                raise ValidationError(f"edge {eid} joins unknown vertices {u!r}, {v!r}")
            if self.graph.has_edge(u, v):
                raise ValidationError(f"parallel edges between {u!r} and {v!r}")
            self.graph.add_edge(u, v, id=eid, weight=w)
            self.endpoints[eid] = (u, v)
            self.weights[eid] = w

        self.edge_ids: Tuple[int, ...] = tuple(sorted(self.endpoints))

    @classmethod
    def from_spec(cls, spec, weights: Sequence[float]) -> "WeightedGraph":
        """Build from a lattice graph spec; ``weights`` is indexed by edge id."""
        return cls(spec.nodes, ((u, v, eid, weights[eid]) for u, v, eid in spec.edges))

    @classmethod
    def from_networkx(cls, graph: nx.Graph, weight: str = "weight") -> "WeightedGraph":
        """Wrap an arbitrary networkx graph; edge ids follow the sorted edge order."""
        nodes = sorted(graph.nodes)
        edges = sorted(tuple(sorted((u, v))) for u, v in graph.edges)
        return cls(nodes, ((u, v, i, graph.edges[u, v].get(weight, 1.0)) for i, (u, v) in enumerate(edges)))

    def __repr__(self) -> str:
        return f"WeightedGraph(vertices={self.num_vertices}, edges={self.num_edges})"

    @property
    def nodes(self) -> List[Node]:
        return list(self.graph.nodes)

    @property
    def num_vertices(self) -> int:
        return self.graph.number_of_nodes()

    @property
    def num_edges(self) -> int:
        return len(self.edge_ids)

    def edge_between(self, u: Node, v: Node) -> int:
        return self.graph.edges[u, v]["id"]

    def weight_of(self, edge_ids: Iterable[int]) -> float:
        return math.fsum(self.weights[e] for e in edge_ids)

    def is_connected(self) -> bool:
        return self.num_vertices > 0 and nx.is_connected(self.graph)

    def component_of(self) -> Dict[Node, int]:
        """Component index per vertex, components numbered by their smallest vertex."""
        components = sorted((sorted(c) for c in nx.connected_components(self.graph)), key=lambda c: c[0])
        return {v: index for index, component in enumerate(components) for v in component}


@dataclass(frozen=True)
class TJoinSolution:
    """An edge set whose odd-degree vertices are exactly T."""
    edges: FrozenSet[int]
    weight: float
    mode: str = "exact"  # exact | oracle
    terminals: Tuple[Node, ...] = ()

    def __contains__(self, edge_id: int) -> bool:
        return edge_id in self.edges

    def __len__(self) -> int:
        return len(self.edges)

    def sorted_edges(self) -> List[int]:
        return sorted(self.edges)


@dataclass
class MetricClosure:
    """Shortest-path distances between terminals, with the paths as edge-id lists."""
    terminals: Tuple[Node, ...]
    distances: Dict[Pair, float] = field(default_factory=dict)
    paths: Dict[Pair, List[int]] = field(default_factory=dict)

    def distance(self, a: Node, b: Node) -> float:
        return self.distances[(a, b)] if (a, b) in self.distances else self.distances[(b, a)]

    def path(self, a: Node, b: Node) -> List[int]:
        return self.paths[(a, b)] if (a, b) in self.paths else list(reversed(self.paths[(b, a)]))


def _sorted_terminals(G: WeightedGraph, T: Iterable[Node]) -> Tuple[Node, ...]:
    terminals = tuple(sorted(set(T)))
    missing = [t for t in terminals if t not in G.graph]
    if missing:
        raise ValidationError(f"T contains vertices not in the graph: {missing[:5]}")
    if len(terminals) % 2:
        raise NoSolutionError(f"no T-join exists: |T| = {len(terminals)} is odd",
                              details={"size": len(terminals)})
    return terminals


def metric_closure(G: WeightedGraph, T: Iterable[Node]) -> MetricClosure:
    """
    Pairwise shortest paths between the vertices of T.

    Pairs in different components have no entry.

    Raises:
        NoSolutionError: |T| is odd
    """
    terminals = _sorted_terminals(G, T)
    closure = MetricClosure(terminals)

    for index, source in enumerate(terminals):
        if index == len(terminals) - 1:
            break
        dist, node_paths = nx.single_source_dijkstra(G.graph, source, weight="weight")
        for target in terminals[index + 1:]:
            if target not in dist:
                continue
            nodes = node_paths[target]
            closure.distances[(source, target)] = dist[target]
            closure.paths[(source, target)] = [G.edge_between(a, b) for a, b in zip(nodes, nodes[1:])]

    return closure


def min_weight_perfect_matching(vertices: Sequence[Node], weights: Dict[Pair, float]) -> List[Pair]:
    """
    Exact minimum-weight perfect matching on a complete graph.

    Weights are turned into ``M + 1 - w`` and handed to the blossom algorithm
    with maximum cardinality, so the maximum-weight matching among perfect
    matchings is the minimum-weight perfect matching. Edges are inserted in
    sorted order, which fixes the tie-break.

    Returns:
        Sorted list of matched pairs, each pair sorted
    """
    vertices = sorted(vertices)
    if len(vertices) % 2:
        raise NoSolutionError(f"no perfect matching on {len(vertices)} vertices")
    if not vertices:
        return []

    def weight(a, b) -> float:
        return weights[(a, b)] if (a, b) in weights else weights[(b, a)]

    top = max(weight(a, b) for i, a in enumerate(vertices) for b in vertices[i + 1:])
    H = nx.Graph()
    H.add_nodes_from(vertices)
    for i, a in enumerate(vertices):
        for b in vertices[i + 1:]:
            H.add_edge(a, b, weight=top + 1.0 - weight(a, b))

    matching = nx.max_weight_matching(H, maxcardinality=True, weight="weight")
    pairs = sorted(tuple(sorted(pair)) for pair in matching)
    if 2 * len(pairs) != len(vertices):
        raise InvariantViolation(f"blossom matching is not perfect ({len(pairs)} pairs on {len(vertices)} vertices)")
    return pairs


def brute_force_matching(vertices: Sequence[Node], weights: Dict[Pair, float],
                         limit: Optional[int] = None) -> Tuple[List[Pair], float]:
    """Exhaustive minimum perfect matching; the first minimum in recursion order wins."""
    limit = limit if limit is not None else config_manager.get("solver.brute_force_matching_limit", 12)
    vertices = sorted(vertices)
    if len(vertices) % 2:
        raise NoSolutionError(f"no perfect matching on {len(vertices)} vertices")
    if len(vertices) > limit:
        raise ValidationError(f"matching oracle limited to {limit} vertices (got {len(vertices)})")

    def weight(a, b) -> float:
        return weights[(a, b)] if (a, b) in weights else weights[(b, a)]

    def best(remaining: Tuple[Node, ...]) -> Tuple[float, List[Pair]]:
        if not remaining:
            return 0.0, []
        first, rest = remaining[0], remaining[1:]
        best_total, best_pairs = math.inf, []
        for i, partner in enumerate(rest):
            sub_total, sub_pairs = best(rest[:i] + rest[i + 1:])
            total = weight(first, partner) + sub_total
            if total < best_total:
                best_total, best_pairs = total, [(first, partner)] + sub_pairs
        return best_total, best_pairs

    total, pairs = best(tuple(vertices))
    return sorted(pairs), total


def _warn_on_ties(G: WeightedGraph, tolerance: float) -> None:
    if G.num_edges < 2 or tolerance <= 0:
        return
    ids = np.array(G.edge_ids, dtype=np.int64)
    w = np.array([G.weights[e] for e in G.edge_ids])
    order = np.argsort(w, kind="stable")
    gaps = np.diff(w[order])
    tied = np.flatnonzero(gaps <= tolerance * max(float(w.max()), 1.0))
    if tied.size:
        pairs = [(int(ids[order[t]]), int(ids[order[t + 1]])) for t in tied[:5]]
        logger.warning(f"Weight ties within {tolerance:g}; breaking by edge id",
                       extra={"structured_data": {"tied_edges": pairs, "tie_count": int(tied.size)}})


def _terminal_groups(G: WeightedGraph, terminals: Sequence[Node]) -> List[List[Node]]:
    component = G.component_of()
    groups: Dict[int, List[Node]] = {}
    for t in terminals:
        groups.setdefault(component[t], []).append(t)
    for index, group in sorted(groups.items()):
        if len(group) % 2:
            raise NoSolutionError(f"no T-join exists: the component of {group[0]!r} holds "
                                  f"{len(group)} T vertices", details={"component": index, "size": len(group)})
    return [groups[index] for index in sorted(groups)]


def min_tjoin(G: WeightedGraph, T: Iterable[Node], tie_tolerance: Optional[float] = None) -> TJoinSolution:
    """
    Exact minimum-weight T-join.

    Args:
        G: Graph with strictly positive weights
        T: Vertex set of even size
        tie_tolerance: Relative gap below which two weights count as tied

    Returns:
        TJoinSolution with mode "exact"

    Raises:
        NoSolutionError: some component of G holds an odd number of T vertices
    """
    tolerance = tie_tolerance if tie_tolerance is not None else config_manager.get("solver.tie_tolerance", 1e-12)
    terminals = _sorted_terminals(G, T)
    if not terminals:
        return TJoinSolution(frozenset(), 0.0, "exact", ())

    with perf_tracker.timed("min_tjoin"), \
            logger.trace_operation("min_tjoin", level=logging.DEBUG, terminals=len(terminals), edges=G.num_edges):
        _warn_on_ties(G, tolerance)
        closure = metric_closure(G, terminals)
        joined: set = set()
        for group in _terminal_groups(G, terminals):
            for a, b in min_weight_perfect_matching(group, closure.distances):
                joined.symmetric_difference_update(closure.path(a, b))

    solution = TJoinSolution(frozenset(joined), G.weight_of(joined), "exact", terminals)
    perf_tracker.increment_counter("tjoins_solved")
    if not validate_tjoin(G, terminals, solution.edges):
        raise InvariantViolation("matched shortest paths do not form a T-join",
                                 details={"terminals": len(terminals)})
    return solution


def validate_tjoin(G: WeightedGraph, T: Iterable[Node], A: Iterable[int]) -> bool:
    """True iff the odd-degree vertices of edge set A are exactly T."""
    degree: Counter = Counter()
    for eid in A:
        if eid not in G.endpoints:
            return False
        u, v = G.endpoints[eid]
        degree[u] += 1
        degree[v] += 1
    odd = {v for v, d in degree.items() if d % 2}
    return odd == set(T)


def _spanning_forest(G: WeightedGraph) -> Tuple[Dict[Node, Optional[Node]], List[Node]]:
    """Parent pointers and BFS order of a spanning forest rooted at each component's smallest vertex."""
    parent: Dict[Node, Optional[Node]] = {}
    order: List[Node] = []
    for component in sorted((sorted(c) for c in nx.connected_components(G.graph)), key=lambda c: c[0]):
        root = component[0]
        parent[root] = None
        order.append(root)
        for u, v in nx.bfs_edges(G.graph, root, sort_neighbors=sorted):
            parent[v] = u
            order.append(v)
    return parent, order


def _tree_path(parent: Dict[Node, Optional[Node]], depth: Dict[Node, int], a: Node, b: Node) -> List[Pair]:
    steps = []
    while depth[a] > depth[b]:
        steps.append((a, parent[a]))
        a = parent[a]
    while depth[b] > depth[a]:
        steps.append((b, parent[b]))
        b = parent[b]
    while a != b:
        steps.append((a, parent[a]))
        steps.append((b, parent[b]))
        a, b = parent[a], parent[b]
    return steps


def brute_force_tjoin(G: WeightedGraph, T: Iterable[Node], edge_limit: Optional[int] = None,
                      chunk_size: int = 1 << 15) -> TJoinSolution:
    """
    Exhaustive minimum T-join.

    Every T-join is a fixed base join XOR an element of the cycle space, so the
    enumeration walks all combinations of fundamental cycles; this visits every
    parity-satisfying subset of E exactly once.

    Raises:
        ValidationError: more edges than the enumeration bound
        NoSolutionError: some component holds an odd number of T vertices
    """
    limit = edge_limit if edge_limit is not None else config_manager.get("solver.brute_force_edge_limit", 24)
    if G.num_edges > limit:
        raise ValidationError(f"T-join oracle limited to {limit} edges (got {G.num_edges})",
                              suggestion="use min_tjoin for larger graphs")
    terminals = _sorted_terminals(G, T)

    index_of = {eid: i for i, eid in enumerate(G.edge_ids)}
    m = G.num_edges
    parent, order = _spanning_forest(G)
    depth: Dict[Node, int] = {}
    for v in order:
        depth[v] = 0 if parent[v] is None else depth[parent[v]] + 1

    # base join: fix parities leaf-up along the forest
    odd = {v: (v in set(terminals)) for v in order}
    base = np.zeros(m, dtype=np.uint8)
    for v in reversed(order):
        if odd[v]:
            if parent[v] is None:
                raise NoSolutionError(f"no T-join exists: the component of {v!r} holds an odd number of T vertices")
            base[index_of[G.edge_between(v, parent[v])]] ^= 1
            odd[parent[v]] = not odd[parent[v]]

    tree_edges = {G.edge_between(v, p) for v, p in parent.items() if p is not None}
    cycles = []
    for eid in G.edge_ids:
        if eid in tree_edges:
            continue
        u, v = G.endpoints[eid]
        row = np.zeros(m, dtype=np.uint8)
        row[index_of[eid]] = 1
        for a, b in _tree_path(parent, depth, u, v):
            row[index_of[G.edge_between(a, b)]] ^= 1
        cycles.append(row)

    weights = np.array([G.weights[e] for e in G.edge_ids])
    best_weight, best_mask = float(base @ weights), base
    dim = len(cycles)
    if dim:
        basis = np.array(cycles, dtype=np.int64)
        shifts = np.arange(dim, dtype=np.int64)
        for start in range(0, 1 << dim, chunk_size):
            combos = np.arange(start, min(start + chunk_size, 1 << dim), dtype=np.int64)
            bits = (combos[:, None] >> shifts) & 1
            masks = ((bits @ basis) + base) & 1
            totals = masks @ weights
            i = int(np.argmin(totals))
            if totals[i] < best_weight:
                best_weight, best_mask = float(totals[i]), masks[i]

    edges = frozenset(G.edge_ids[i] for i in np.flatnonzero(best_mask))
    return TJoinSolution(edges, G.weight_of(edges), "oracle", terminals)


def solution_summary(solution: TJoinSolution) -> Dict[str, Any]:
    return {"mode": solution.mode, "weight": solution.weight, "edges": len(solution.edges),
            "terminals": len(solution.terminals)}
