#!/usr/bin/env python3
"""
Event detectors on strip lattices.

Regular pairs and primal isolation are properties of signed couplings;
dual isolation of weighted dual instances. Both the primal events A/BA and
the dual events D/BD come from the symmetric difference of two joins, split
into one trail between the two odd vertices plus closed trails.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple, Union

import networkx as nx
from networkx.algorithms.connectivity import local_node_connectivity
import numpy as np

from config.config_manager import config_manager
from core.groundstate import cgroundstate
from core.instance import (AffineSystemGF2, CouplingAssignment, DualInstance, dual_view,
                           frustration_from_couplings, frustration_mask, negative_boundary_parity)
from core.lattice import (SIDES, ExtendedDual, Plaquette, PlaquetteGrid, StripLattice, build_dual,
                          build_extended_dual, build_strip, embed_edge_ids, restrict, side_of)
from core.performance import perf_tracker
from core.tjoin import WeightedGraph, min_tjoin
from utils.error_handler import InvariantViolation, ValidationError
from utils.structured_logger import get_logger

logger = get_logger(__name__)


def _values(J: Union[CouplingAssignment, np.ndarray]) -> np.ndarray:
    return J.values if isinstance(J, CouplingAssignment) else np.asarray(J, dtype=float)


@dataclass(frozen=True)
class EventParams:
    """Detector parameters; passed explicitly to worker processes."""
    radius: float = 100.0
    density_side_coeff: float = 100.0
    density_exponent: float = 0.01
    density_threshold: float = 0.01
    search_mode: str = "exhaustive"  # exhaustive | rotation
    enumeration_cap: int = 3 ** 12
    vertex_simple_check: bool = True
    fixed_radius: float = 100.0

    def __post_init__(self):
        if self.search_mode not in ("exhaustive", "rotation"):
            raise ValidationError(f"unknown search mode '{self.search_mode}'")
        if min(self.radius, self.fixed_radius) < 0 or self.density_side_coeff <= 0 or self.enumeration_cap < 1:
            raise ValidationError("radius must be >= 0, density side coefficient and cap positive")

    @classmethod
    def from_config(cls, **overrides) -> "EventParams":
        section = config_manager.get_section("events") or {}
        values = {
            "radius": float(section.get("radius", 100.0)),
            "density_side_coeff": float(section.get("density_side_coeff", 100.0)),
            "density_exponent": float(section.get("density_exponent", 0.01)),
            "density_threshold": float(section.get("density_threshold", 0.01)),
            "search_mode": section.get("search_mode", "exhaustive"),
            "enumeration_cap": int(section.get("enumeration_cap", 3 ** 12)),
            "vertex_simple_check": bool(section.get("vertex_simple_check", True)),
            "fixed_radius": float(section.get("fixed_radius", 100.0)),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def square_side(self, k: int) -> int:
        return int(math.ceil(self.density_side_coeff * k ** self.density_exponent))


class ObservationOutcome(Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    INAPPLICABLE = "inapplicable"


# --- regular pairs ------------------------------------------------------------

def _pair_regions(L_n: StripLattice, m: int) -> Tuple[List[Plaquette], List[Plaquette], Plaquette, Plaquette]:
    """DU and DL plaquettes of C(n,k) minus C(m,k), and their designated middle plaquettes."""
    n, k = L_n.n, L_n.k
    du = [Plaquette(c, r) for r in range(n + m, 2 * n) for c in range(2 * k)]
    dl = [Plaquette(c, r) for r in range(0, n - m) for c in range(2 * k)]
    return du, dl, Plaquette(k, n + m), Plaquette(k, n - m - 1)


def _check_pair(L_n: StripLattice, m: int) -> None:
    if not 1 <= m < L_n.n:
        raise ValidationError(f"regular pair needs 1 <= m < n (got n={L_n.n}, m={m})")


def is_regular_pair(L_n: StripLattice, L_m: Union[StripLattice, int], J: Union[CouplingAssignment, np.ndarray]) -> bool:
    """
    C(n,k), C(m,k) form a regular pair under J (indexed by the edges of C(n,k)).

    Every nested C(n,k'), C(m,k') needs an even number of negative boundary
    couplings, and DU/DL each hold exactly one frustrated plaquette: the middle
    one of DU's lowest row and of DL's highest row.
    """
    m = L_m.n if isinstance(L_m, StripLattice) else int(L_m)
    if isinstance(L_m, StripLattice) and L_m.k != L_n.k:
        raise ValidationError("regular pair lattices must share k")
    _check_pair(L_n, m)
    values = _values(J)

    for k_sub in range(1, L_n.k + 1):
        if negative_boundary_parity(L_n, values, k_sub, L_n.n) or negative_boundary_parity(L_n, values, k_sub, m):
            return False

    frustrated = frustration_mask(L_n, values)
    du, dl, top, bottom = _pair_regions(L_n, m)
    for region, middle in ((du, top), (dl, bottom)):
        hits = [p for p in region if frustrated[L_n.plaquette_index(p)]]
        if hits != [middle]:
            return False
    return True


def regular_pair_constraints(L_n: StripLattice, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    The regular-pair event as A x = b over GF(2), x_e = 1 iff J_e < 0.

    Returns:
        (A, b) with one row per parity condition
    """
    _check_pair(L_n, m)
    rows: List[np.ndarray] = []
    rhs: List[int] = []

    def add(edge_ids: Iterable[int], value: int) -> None:
        row = np.zeros(L_n.num_edges, dtype=np.uint8)
        for e in edge_ids:
            row[e] ^= 1
        rows.append(row)
        rhs.append(value)

    for k_sub in range(1, L_n.k + 1):
        add(L_n.sub_boundary_edges(L_n.n, k_sub), 0)
        add(L_n.sub_boundary_edges(m, k_sub), 0)
    du, dl, top, bottom = _pair_regions(L_n, m)
    for p in du + dl:
        add(L_n.plaquette_edges(p), int(p in (top, bottom)))
    return np.array(rows, dtype=np.uint8), np.array(rhs, dtype=np.uint8)


def regular_pair_system(L_n: StripLattice, m: int) -> AffineSystemGF2:
    return AffineSystemGF2(*regular_pair_constraints(L_n, m))


def is_regular_pair_batch(L_n: StripLattice, m: int, negative_bits: np.ndarray) -> np.ndarray:
    """Vectorized regular-pair test over rows of sign bits (1 = negative)."""
    A, b = regular_pair_constraints(L_n, m)
    bits = np.atleast_2d(np.asarray(negative_bits, dtype=np.int64))
    return np.all((bits @ A.T.astype(np.int64)) % 2 == b, axis=1)


# --- isolation ---------------------------------------------------------------

@dataclass
class IsolationCheck:
    row: int
    only_middle_frustrated: bool
    threshold: float
    heavy_edges: List[int]
    light_heavy_edges: List[int]

    @property
    def holds(self) -> bool:
        return self.only_middle_frustrated and not self.light_heavy_edges


def isolation_row_check(L: StripLattice, J: Union[CouplingAssignment, np.ndarray], row: int,
                        host: Optional[StripLattice] = None) -> IsolationCheck:
    """
    The isolation inequality of one plaquette row of C(n,k).

    With ``host`` (a taller C(N,k)), J is indexed by the host's edges and
    vertical edges above and below the row that exist only in the host count
    toward the threshold sum. Edge ids in the result are host ids.
    """
    H = host or L
    if H.k != L.k or H.n < L.n:
        raise ValidationError(f"{L!r} is not centered inside host {H!r}")
    if not 0 <= row < 2 * L.n:
        raise ValidationError(f"row {row} outside 0..{2 * L.n - 1}")
    values = _values(J)
    if values.shape != (H.num_edges,):
        raise ValidationError(f"expected {H.num_edges} couplings, got {values.shape}")

    k = H.k
    hrow = row + H.n - L.n
    y0 = hrow - H.n
    middle = Plaquette(k, hrow)
    frustrated = frustration_mask(H, values)
    only_middle = [c for c in range(2 * k) if frustrated[H.plaquette_index(Plaquette(c, hrow))]] == [k]

    counted: Set[int] = set(H.plaquette_edges(middle))
    for y in (y0, y0 + 1):
        for x in range(-k, k + 1):
            if y > -H.n:
                counted.add(H.v_edge(x, y - 1))
            if y < H.n:
                counted.add(H.v_edge(x, y))
    threshold = math.fsum(abs(values[e]) for e in sorted(counted))

    heavy = [H.h_edge(x, y) for y in (y0, y0 + 1) for x in range(-k, k) if x != 0]
    light = [e for e in heavy if not abs(values[e]) > threshold]
    return IsolationCheck(row, only_middle, threshold, heavy, light)


def is_isolation_row(L: StripLattice, J: Union[CouplingAssignment, np.ndarray], row: int,
                     host: Optional[StripLattice] = None) -> bool:
    return isolation_row_check(L, J, row, host).holds


def is_isolated(L: StripLattice, J: Union[CouplingAssignment, np.ndarray],
                host: Optional[StripLattice] = None) -> bool:
    """Both boundary plaquette rows of C(n,k) are isolation rows."""
    return is_isolation_row(L, J, 2 * L.n - 1, host) and is_isolation_row(L, J, 0, host)


@dataclass
class DualIsolationCheck:
    row: int
    only_middle_in_T: bool
    threshold: float
    cross_edges: List[int]
    light_cross_edges: List[int]

    @property
    def holds(self) -> bool:
        return self.only_middle_in_T and not self.light_cross_edges


def dual_isolation_row_check(Gp: ExtendedDual, weights: Sequence[float], T: Iterable[Plaquette],
                             row: int) -> DualIsolationCheck:
    """
    Dual isolation of a boundary row of C(n,k)*.

    The row's only T vertex must be its middle r; every vertical dual edge
    leaving the row inward at a column other than r's must outweigh the
    horizontal dual edges of the row and of the adjacent row plus the dual
    edges at r, each counted once.
    """
    L = Gp.lattice
    top = 2 * L.n - 1
    if row not in (0, top):
        raise ValidationError(f"dual isolation is defined on boundary rows 0 and {top} (got {row})")
    k = L.k
    members = set(T)
    in_row = [c for c in range(2 * k) if Plaquette(c, row) in members]
    middle = Plaquette(k, row)

    inner = row - 1 if row == top else row + 1
    y_cross = row - L.n if row == top else row - L.n + 1
    cross = [L.h_edge(c - k, y_cross) for c in range(2 * k) if c != k]

    counted: Set[int] = set()
    for r in (row, inner):
        counted.update(L.v_edge(c + 1 - k, r - L.n) for c in range(2 * k - 1))
    counted.update(Gp.base.incident_dual_edges(middle))
    threshold = math.fsum(float(weights[e]) for e in sorted(counted))

    light = [e for e in cross if not float(weights[e]) > threshold]
    return DualIsolationCheck(row, in_row == [k], threshold, cross, light)


def is_dually_isolated(Gp: ExtendedDual, weights: Sequence[float], T: Iterable[Plaquette]) -> bool:
    """Both boundary rows of the dual are dually isolated."""
    members = frozenset(T)
    top = 2 * Gp.lattice.n - 1
    return dual_isolation_row_check(Gp, weights, members, top).holds and \
        dual_isolation_row_check(Gp, weights, members, 0).holds


# --- decomposition -------------------------------------------------------------

@dataclass
class DomainWallDecomposition:
    """r Δ s split into one trail from x to y plus closed trails."""
    x: Any
    y: Any
    delta: FrozenSet[int]
    path: List[int]
    path_vertices: List[Any]
    cycles: List[List[int]]
    degrees: Dict[Any, int]

    @property
    def crossing_count(self) -> int:
        return sum(1 for d in self.degrees.values() if d == 4)


def _transitions(graph: WeightedGraph, v: Any, edges: List[int], terminal_vertex: bool) -> Dict[int, Optional[int]]:
    """Pairing of the Δ edges at v by the rotation rule; None marks a terminal edge."""
    by_side: Dict[str, int] = {}
    for e in edges:
        a, b = graph.endpoints[e]
        by_side[side_of(v, b if a == v else a)] = e
    present = [by_side[s] for s in SIDES if s in by_side]

    pairing: Dict[int, Optional[int]] = {}
    if len(present) == 4:
        pairs = [(by_side["N"], by_side["E"]), (by_side["S"], by_side["W"])]
    elif len(present) == 3:
        if not terminal_vertex:
            raise InvariantViolation(f"degree 3 at non-terminal vertex {v!r}")
        pairing[present[0]] = None
        pairs = [(present[1], present[2])]
    elif len(present) == 2:
        pairs = [(present[0], present[1])]
    elif len(present) == 1:
        pairing[present[0]] = None
        pairs = []
    else:
        pairs = []
    for a, b in pairs:
        pairing[a] = b
        pairing[b] = a
    return pairing


def decompose_symmetric_difference(graph: WeightedGraph, r: Iterable[int], s: Iterable[int],
                                   x: Any, y: Any) -> DomainWallDecomposition:
    """
    Split r Δ s into a trail from x to y and closed trails.

    At every vertex the edges of r Δ s are paired by the rotation rule
    (N with E, S with W at crossings); the trail is traced from x and the
    leftover edges, smallest id first, close up into cycles.

    Raises:
        InvariantViolation: the odd-degree vertices of r Δ s are not exactly {x, y}
    """
    delta = frozenset(set(r) ^ set(s))
    incident: Dict[Any, List[int]] = {}
    for e in sorted(delta):
        for v in graph.endpoints[e]:
            incident.setdefault(v, []).append(e)
    degrees = {v: len(es) for v, es in incident.items()}
    odd = {v for v, d in degrees.items() if d % 2}
    if odd != {x, y}:
        raise InvariantViolation("odd-degree vertices of the symmetric difference are not the two endpoints",
                                 details={"odd_vertices": sorted(map(tuple, odd))[:10]})

    pairing = {v: _transitions(graph, v, es, v in (x, y)) for v, es in incident.items()}
    used: Set[int] = set()

    def walk(start_vertex: Any, start_edge: int) -> Tuple[List[int], List[Any]]:
        edges, vertices = [], [start_vertex]
        v, e = start_vertex, start_edge
        while e is not None and e not in used:
            used.add(e)
            edges.append(e)
            a, b = graph.endpoints[e]
            v = b if a == v else a
            vertices.append(v)
            e = pairing[v].get(e)
        return edges, vertices

    start = next(e for e, partner in pairing[x].items() if partner is None)
    path, path_vertices = walk(x, start)
    if path_vertices[-1] != y:
        raise InvariantViolation(f"trail from {x!r} ended at {path_vertices[-1]!r}, not {y!r}")

    cycles: List[List[int]] = []
    for e in sorted(delta):
        if e in used:
            continue
        a, _ = graph.endpoints[e]
        cycle, _ = walk(a, e)
        cycles.append(cycle)

    if len(path) + sum(len(c) for c in cycles) != len(delta):
        raise InvariantViolation("decomposition does not conserve the edges of the symmetric difference")
    return DomainWallDecomposition(x, y, delta, path, path_vertices, cycles, degrees)


# --- path events -------------------------------------------------------------

@dataclass
class PathEvent:
    near_origin: bool
    dense: bool
    witness: List[int]
    witness_vertices: List[Any]
    min_distance: float
    density: float
    vertex_simple: Optional[bool] = None
    truncated: bool = False
    fixed_near_origin: bool = False
    fixed_dense: bool = False


def _edge_distances(L: StripLattice, edge_ids: Sequence[int]) -> np.ndarray:
    if not len(edge_ids):
        return np.zeros(0)
    mids = np.array([L.edge_midpoint(e) for e in edge_ids])
    return np.abs(mids).max(axis=1)


def _density(L: StripLattice, edge_ids: Sequence[int], side: int) -> float:
    if not len(edge_ids):
        return 0.0
    mids = np.array([L.edge_midpoint(e) for e in edge_ids])
    inside = np.all(np.abs(mids) <= side / 2.0, axis=1)
    return float(np.count_nonzero(inside)) / float(side * side)


def _component_trail(graph: WeightedGraph, decomp: DomainWallDecomposition) -> Tuple[List[int], List[Any], nx.Graph]:
    """Euler trail from x through x's component of r Δ s."""
    H = nx.Graph()
    for e in sorted(decomp.delta):
        u, v = graph.endpoints[e]
        H.add_edge(u, v, id=e)
    component = H.subgraph(nx.node_connected_component(H, decomp.x)).copy()
    trail_edges, trail_vertices = [], [decomp.x]
    for u, v in nx.eulerian_path(component, source=decomp.x):
        trail_edges.append(component.edges[u, v]["id"])
        trail_vertices.append(v)
    return trail_edges, trail_vertices, component


def _vertex_simple_near(component: nx.Graph, decomp: DomainWallDecomposition, L: StripLattice,
                        radius: float, cap: int) -> Tuple[Optional[bool], bool]:
    """
    Whether some vertex-simple x-y path in ``component`` has an edge within
    ``radius`` of the origin.

    A simple x-y path runs through edge u-v exactly when {x, y} and {u, v} are
    joined by two vertex-disjoint paths, which is a local node connectivity of
    2 between a source on x, y and a sink on u, v. At most ``cap`` near edges
    are tried, nearest first.
    """
    near = []
    for u, v, eid in component.edges(data="id"):
        dist = float(_edge_distances(L, [eid])[0])
        if dist <= radius:
            near.append((dist, u, v))
    if not near:
        return False, False
    source, sink = ("vertex-simple", "source"), ("vertex-simple", "sink")
    for examined, (_, u, v) in enumerate(sorted(near, key=lambda item: item[0])):
        if examined >= cap:
            return None, True
        aux = nx.Graph(component)
        aux.add_edges_from([(source, decomp.x), (source, decomp.y), (u, sink), (v, sink)])
        if local_node_connectivity(aux, source, sink, cutoff=2) >= 2:
            return True, False
    return False, False


def path_event(decomp: DomainWallDecomposition, graph: WeightedGraph, lattice: StripLattice,
               params: EventParams) -> PathEvent:
    """
    Near-origin and density flags of the trail between x and y.

    In exhaustive mode every edge of x's component lies on some edge-simple
    x-y trail, so the component decides the near-origin flag and its Euler
    trail is the witness. Rotation mode uses the rotation-rule trail only.
    """
    component = None
    if params.search_mode == "exhaustive":
        witness, witness_vertices, component = _component_trail(graph, decomp)
    else:
        witness, witness_vertices = list(decomp.path), list(decomp.path_vertices)

    distances = _edge_distances(lattice, witness)
    min_distance = float(distances.min()) if distances.size else math.inf
    side = params.square_side(lattice.k)
    density = _density(lattice, witness, side)
    near = bool(distances.size and min_distance <= params.radius)
    fixed_near = bool(distances.size and min_distance <= params.fixed_radius)

    vertex_simple, truncated = None, False
    if params.vertex_simple_check:
        if component is None:
            H = nx.Graph()
            for e in sorted(decomp.delta):
                u, v = graph.endpoints[e]
                H.add_edge(u, v, id=e)
            component = H.subgraph(nx.node_connected_component(H, decomp.x)).copy()
        vertex_simple, truncated = _vertex_simple_near(component, decomp, lattice, params.radius,
                                                       params.enumeration_cap)
        if truncated:
            perf_tracker.increment_counter("vertex_simple_truncated")

    dense = density >= params.density_threshold
    return PathEvent(near, near and dense, witness, witness_vertices, min_distance, density,
                     vertex_simple, truncated, fixed_near, fixed_near and dense)


# --- detectors ---------------------------------------------------------------

@dataclass
class EventFlags:
    """Outcome of one detection; BA implies A and BD implies D."""
    n: int
    k: int
    regular_pair: Optional[bool] = None
    isolated: Optional[bool] = None
    dually_isolated: Optional[bool] = None
    A: Optional[bool] = None
    BA: Optional[bool] = None
    D: Optional[bool] = None
    BD: Optional[bool] = None
    lemma1_holds: Optional[bool] = None
    vertex_simple: Optional[bool] = None
    truncated: bool = False
    fixed_radius_flags: Dict[str, bool] = field(default_factory=dict)
    witness: List[int] = field(default_factory=list)
    witness_vertices: List[Any] = field(default_factory=list)
    min_distance: Optional[float] = None
    density: Optional[float] = None
    path_length: int = 0
    cycle_count: int = 0

    def implications_hold(self) -> bool:
        return (not self.BA or bool(self.A)) and (not self.BD or bool(self.D))

    def to_dict(self, include_witness: bool = False) -> Dict[str, Any]:
        data = asdict(self)
        data.pop("witness_vertices")
        if not include_witness:
            data.pop("witness")
        if data["min_distance"] is not None and math.isinf(data["min_distance"]):
            data["min_distance"] = None
        return data


def _apply_path_event(flags: EventFlags, event: PathEvent, decomp: DomainWallDecomposition) -> None:
    flags.vertex_simple = event.vertex_simple
    flags.truncated = event.truncated
    flags.witness = event.witness
    flags.witness_vertices = event.witness_vertices
    flags.min_distance = event.min_distance
    flags.density = event.density
    flags.path_length = len(decomp.path)
    flags.cycle_count = len(decomp.cycles)


def primal_difference(L: StripLattice, J: np.ndarray) -> FrozenSet[int]:
    """DIS(r) Δ DIS(s) in the edge ids of C(n,k): r the c-groundstate of C(n-1,k), s that of C(n,k)."""
    small = build_strip(L.n - 1, L.k)
    r = cgroundstate(small, restrict(J, small, L))
    s = cgroundstate(L, J)
    embed = embed_edge_ids(small, L)
    r_edges = {int(embed[e]) for e in r.dissatisfied.edges}
    return frozenset(r_edges ^ set(s.dissatisfied.edges))


def detect_primal(L: StripLattice, J: Union[CouplingAssignment, np.ndarray], params: Optional[EventParams] = None,
                  host: Optional[StripLattice] = None, host_couplings: Optional[np.ndarray] = None) -> EventFlags:
    """
    Events A(n,k) and BA(n,k) for C(n,k), C(n-1,k) under J.

    A requires a regular pair; the trail then runs from the frustrated middle
    plaquette of the top row to that of the bottom row. Isolation is judged
    against ``host`` when given (``host_couplings`` indexed by its edges).
    """
    params = params or EventParams.from_config()
    values = _values(J)
    if L.n < 2:
        raise ValidationError(f"primal events need n >= 2 (got n={L.n})")
    flags = EventFlags(L.n, L.k)

    with logger.trace_operation("detect_primal", level=logging.DEBUG, n=L.n, k=L.k):
        flags.regular_pair = is_regular_pair(L, L.n - 1, values)
        if host is not None:
            flags.isolated = is_isolated(L, host_couplings, host)
        else:
            flags.isolated = is_isolated(L, values)
        grid = build_dual(L)
        flags.dually_isolated = is_dually_isolated(build_extended_dual(grid), np.abs(values),
                                                   frustration_from_couplings(L, values))
        if not flags.regular_pair:
            flags.A = flags.BA = False
            return flags

        delta = primal_difference(L, values)
        graph = grid.weighted_graph(np.abs(values))
        top, bottom = Plaquette(L.k, 2 * L.n - 1), Plaquette(L.k, 0)
        try:
            decomp = decompose_symmetric_difference(graph, delta, (), top, bottom)
        except InvariantViolation as e:
            logger.error("No connecting trail in a regular pair", extra={"structured_data": {
                "n": L.n, "k": L.k, "error": e.message}})
            flags.lemma1_holds = False
            flags.A = flags.BA = False
            return flags

        flags.lemma1_holds = True
        event = path_event(decomp, graph, L, params)
        flags.A, flags.BA = event.near_origin, event.dense
        flags.fixed_radius_flags = {"A": event.fixed_near_origin, "BA": event.fixed_dense}
        _apply_path_event(flags, event, decomp)

    perf_tracker.increment_counter("primal_detections")
    return flags


def dual_joins(Gp: ExtendedDual, weights: Sequence[float], T: Iterable[Plaquette]):
    """Minimum T-join r on C(n,k)* and (T ∪ {x,y})-join s on C'(n,k)."""
    members = frozenset(T)
    base_graph = Gp.base.weighted_graph(weights)
    ext_graph = Gp.weighted_graph(weights)
    r = min_tjoin(base_graph, members)
    s = min_tjoin(ext_graph, members | {Gp.apex_top, Gp.apex_bottom})
    return ext_graph, r, s


def detect_dual(G: PlaquetteGrid, Gp: ExtendedDual, weights: Sequence[float], T: Iterable[Plaquette],
                params: Optional[EventParams] = None) -> EventFlags:
    """Events D(n,k) and BD(n,k) of a dual instance."""
    params = params or EventParams.from_config()
    L = G.lattice
    members = frozenset(T)
    flags = EventFlags(L.n, L.k)

    with logger.trace_operation("detect_dual", level=logging.DEBUG, n=L.n, k=L.k, t_size=len(members)):
        flags.dually_isolated = is_dually_isolated(Gp, weights, members)
        graph, r, s = dual_joins(Gp, weights, members)
        decomp = decompose_symmetric_difference(graph, r.edges, s.edges, Gp.apex_top, Gp.apex_bottom)
        event = path_event(decomp, graph, L, params)
        flags.D, flags.BD = event.near_origin, event.dense
        flags.fixed_radius_flags = {"D": event.fixed_near_origin, "BD": event.fixed_dense}
        _apply_path_event(flags, event, decomp)

    perf_tracker.increment_counter("dual_detections")
    return flags


def detect_dual_instance(dual: DualInstance, params: Optional[EventParams] = None) -> EventFlags:
    grid = build_dual(dual.lattice)
    return detect_dual(grid, build_extended_dual(grid), dual.weights, dual.T, params)


def translate_to_dual(L: StripLattice, J: Union[CouplingAssignment, np.ndarray]) -> DualInstance:
    """
    The dual instance matching C(n,k), C(n-1,k): the dual view of C(n-1,k).

    Shifted up one plaquette row inside C(n,k)*, its apexes sit on the
    middle plaquettes of the top and bottom rows of C(n,k).
    """
    if L.n < 2:
        raise ValidationError(f"translation needs n >= 2 (got n={L.n})")
    small = build_strip(L.n - 1, L.k)
    return dual_view(small, restrict(_values(J), small, L))


def detect_dual_via_translation(L: StripLattice, J: Union[CouplingAssignment, np.ndarray],
                                params: Optional[EventParams] = None) -> EventFlags:
    """D(n-1,k)/BD(n-1,k) of the translated instance; D is false unless the pair is regular."""
    values = _values(J)
    if not is_regular_pair(L, L.n - 1, values):
        small = build_strip(L.n - 1, L.k)
        return EventFlags(small.n, small.k, regular_pair=False, D=False, BD=False)
    flags = detect_dual_instance(translate_to_dual(L, values), params)
    flags.regular_pair = True
    return flags


def dual_subinstance(dual: DualInstance, n_sub: int, k_sub: int) -> DualInstance:
    """Restriction of a dual instance to the centered C(n_sub, k_sub)."""
    L = dual.lattice
    small = build_strip(n_sub, k_sub)
    dc, dr = L.k - k_sub, L.n - n_sub
    T = frozenset(Plaquette(p.col - dc, p.row - dr) for p in dual.T
                  if dc <= p.col < dc + 2 * k_sub and dr <= p.row < dr + 2 * n_sub)
    return DualInstance(small, restrict(dual.weights, small, L), T)


# --- trail containment under extension ------------------------------------------

@dataclass
class Observation1Result:
    outcome: ObservationOutcome
    n: int
    n_prime: int
    path: List[int] = field(default_factory=list)
    path_prime: List[int] = field(default_factory=list)
    missing: List[int] = field(default_factory=list)
    reason: str = ""


def _rotation_trail(L: StripLattice, values: np.ndarray) -> List[int]:
    delta = primal_difference(L, values)
    graph = build_dual(L).weighted_graph(np.abs(values))
    decomp = decompose_symmetric_difference(graph, delta, (), Plaquette(L.k, 2 * L.n - 1), Plaquette(L.k, 0))
    return decomp.path


def check_observation1(J: Union[CouplingAssignment, np.ndarray], k: int, n: int, n_prime: int,
                       host: Optional[StripLattice] = None) -> Observation1Result:
    """
    Containment of the rotation trail of C(n,k) in that of C(n',k).

    J is indexed by the edges of ``host`` (default C(n',k)). Applies when
    C(n,k) is in R(n,k) with isolation judged on C(n',k), and C(n',k),
    C(n'-1,k) is a regular pair; otherwise the outcome is INAPPLICABLE.
    """
    H = host or build_strip(n_prime, k)
    values = _values(J)
    if not (2 <= n <= n_prime <= H.n) or H.k != k:
        return Observation1Result(ObservationOutcome.INAPPLICABLE, n, n_prime,
                                  reason="need 2 <= n <= n' <= host n and a host of width k")
    L = build_strip(n, k)
    L_prime = build_strip(n_prime, k)
    J_prime = restrict(values, L_prime, H)
    J_small = restrict(values, L, H)

    if not is_regular_pair(L, n - 1, J_small):
        return Observation1Result(ObservationOutcome.INAPPLICABLE, n, n_prime, reason="C(n,k) is not a regular pair")
    if not is_isolated(L, J_prime, L_prime):
        return Observation1Result(ObservationOutcome.INAPPLICABLE, n, n_prime, reason="C(n,k) is not isolated")
    if not is_regular_pair(L_prime, n_prime - 1, J_prime):
        return Observation1Result(ObservationOutcome.INAPPLICABLE, n, n_prime,
                                  reason="C(n',k) is not a regular pair")

    to_host = embed_edge_ids(L, H)
    prime_to_host = embed_edge_ids(L_prime, H)
    path = [int(to_host[e]) for e in _rotation_trail(L, J_small)]
    path_prime = [int(prime_to_host[e]) for e in _rotation_trail(L_prime, J_prime)]
    missing = sorted(set(path) - set(path_prime))
    outcome = ObservationOutcome.VIOLATED if missing else ObservationOutcome.HOLDS
    if missing:
        logger.error("Trail of the smaller pair is not contained in the larger one",
                     extra={"structured_data": {"n": n, "n_prime": n_prime, "k": k, "missing": missing[:10]}})
    return Observation1Result(outcome, n, n_prime, path, path_prime, missing)


# --- witness export ----------------------------------------------------------

def witness_coordinates(L: StripLattice, vertices: Sequence[Any]) -> List[List[float]]:
    """Plaquette centers (apexes included) along a witness trail."""
    return [list(L.plaquette_center(Plaquette(*v))) for v in vertices]


def witness_to_json(flags: EventFlags, lattice: Optional[StripLattice] = None) -> Dict[str, Any]:
    L = lattice or build_strip(flags.n, flags.k)
    return {
        "n": flags.n,
        "k": flags.k,
        "edges": list(flags.witness),
        "vertices": witness_coordinates(L, flags.witness_vertices),
        "min_distance": None if flags.min_distance is None or math.isinf(flags.min_distance) else flags.min_distance,
        "density": flags.density,
    }
