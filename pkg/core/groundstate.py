#!/usr/bin/env python3
"""
c-groundstates of C(n,k) from dual T-joins, and a spin-enumeration oracle.
"""

import functools
import logging
import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

import networkx as nx
import numpy as np

from config.config_manager import config_manager
from core.instance import CouplingAssignment, FrustrationSet, frustration_from_couplings
from core.lattice import StripLattice, Vertex, build_dual
from core.performance import perf_tracker
from core.tjoin import TJoinSolution, min_tjoin
from utils.error_handler import InvariantViolation, ValidationError
from utils.structured_logger import get_logger

logger = get_logger(__name__)


def _values(J: Union[CouplingAssignment, np.ndarray]) -> np.ndarray:
    return J.values if isinstance(J, CouplingAssignment) else np.asarray(J, dtype=float)


def _signs(J: np.ndarray) -> np.ndarray:
    return np.where(J < 0, -1, 1).astype(np.int8)


@dataclass
class SpinState:
    """±1 per vertex index of a lattice."""
    lattice: StripLattice
    spins: np.ndarray

    def __getitem__(self, vertex: Vertex) -> int:
        return int(self.spins[self.lattice.vertex_index(*vertex)])

    def flipped(self) -> "SpinState":
        return SpinState(self.lattice, -self.spins)

    def canonical(self) -> "SpinState":
        """The representative with +1 at (-k,-n)."""
        return self if self.spins[0] > 0 else self.flipped()

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpinState):
            return NotImplemented
        return self.lattice is other.lattice and np.array_equal(self.spins, other.spins)


@dataclass(frozen=True)
class DissatisfiedSet:
    edges: FrozenSet[int]

    def __contains__(self, edge_id: int) -> bool:
        return edge_id in self.edges

    def __len__(self) -> int:
        return len(self.edges)

    def mask(self, L: StripLattice) -> np.ndarray:
        m = np.zeros(L.num_edges, dtype=bool)
        m[list(self.edges)] = True
        return m

    def parity_ok(self, L: StripLattice, T: Iterable) -> bool:
        """Odd intersection with exactly the plaquettes of T."""
        odd = self.mask(L)[L.plaquette_edge_array].sum(axis=1) % 2 == 1
        expected = np.zeros(L.num_plaquettes, dtype=bool)
        expected[[L.plaquette_index(p) for p in T]] = True
        return bool(np.array_equal(odd, expected))


@dataclass
class BoundaryCondition:
    """Boundary spins (anchor +1 at (-k,-n)) and the boundary edge given up when negatives are odd."""
    vertices: List[Vertex]
    spins: Dict[Vertex, int]
    sacrificed: Optional[int]


@dataclass
class GroundState:
    spins: SpinState
    dissatisfied: DissatisfiedSet
    energy: float
    tjoin: TJoinSolution
    sacrificed: Optional[int]
    T: FrustrationSet
    T_effective: FrustrationSet

    @property
    def pair(self) -> Tuple[SpinState, SpinState]:
        return self.spins, self.spins.flipped()


def energy(L: StripLattice, J: Union[CouplingAssignment, np.ndarray], sigma: Union[SpinState, np.ndarray]) -> float:
    """E(σ) = -Σ J_uv σ_u σ_v."""
    s = sigma.spins if isinstance(sigma, SpinState) else np.asarray(sigma)
    values = _values(J)
    return -math.fsum(values * s[L.edge_u] * s[L.edge_v])


def dissatisfied_edges(L: StripLattice, J: Union[CouplingAssignment, np.ndarray],
                       sigma: Union[SpinState, np.ndarray]) -> DissatisfiedSet:
    s = sigma.spins if isinstance(sigma, SpinState) else np.asarray(sigma)
    values = _values(J)
    return DissatisfiedSet(frozenset(int(e) for e in np.flatnonzero(values * s[L.edge_u] * s[L.edge_v] < 0)))


def boundary_condition_spins(L: StripLattice, J: Union[CouplingAssignment, np.ndarray]) -> BoundaryCondition:
    """
    Walk the boundary cycle from (-k,-n) with σ = +1, satisfying each edge in turn.

    With an odd number of negative boundary couplings one edge must stay
    dissatisfied: the one with the smallest |J| (lowest id on ties).
    """
    values = _values(J)
    verts, cycle = L.boundary_cycle()
    boundary = np.array(cycle, dtype=np.int64)
    sacrificed = None
    if np.count_nonzero(values[boundary] < 0) % 2:
        ordered = sorted(boundary.tolist(), key=lambda e: (abs(values[e]), e))
        sacrificed = int(ordered[0])

    spins = {verts[0]: 1}
    for t in range(len(verts) - 1):
        e = cycle[t]
        s = -1 if values[e] < 0 else 1
        if e == sacrificed:
            s = -s
        spins[verts[t + 1]] = spins[verts[t]] * s
    return BoundaryCondition(verts, spins, sacrificed)


@functools.lru_cache(maxsize=64)
def _spanning_tree(L: StripLattice) -> Tuple[Tuple[int, int, int], ...]:
    """(parent index, child index, edge id) in BFS order from vertex 0 = (-k,-n)."""
    graph = nx.Graph()
    graph.add_nodes_from(range(L.num_vertices))
    for e in range(L.num_edges):
        graph.add_edge(int(L.edge_u[e]), int(L.edge_v[e]), id=e)
    return tuple((u, v, graph.edges[u, v]["id"]) for u, v in nx.bfs_edges(graph, 0, sort_neighbors=sorted))


def integrate_spins(L: StripLattice, J: np.ndarray, dis_mask: np.ndarray) -> np.ndarray:
    """
    Spins with σ(-k,-n) = +1 whose dissatisfied edges are exactly ``dis_mask``.

    Raises:
        InvariantViolation: the mask is not the dissatisfied set of any state
    """
    signs = _signs(J)
    sigma = np.zeros(L.num_vertices, dtype=np.int8)
    sigma[0] = 1
    for u, v, e in _spanning_tree(L):
        sigma[v] = sigma[u] * signs[e] * (-1 if dis_mask[e] else 1)

    realized = J * sigma[L.edge_u] * sigma[L.edge_v] < 0
    if not np.array_equal(realized, dis_mask):
        bad = np.flatnonzero(realized != dis_mask)
        raise InvariantViolation("dissatisfied set is not consistent with any spin state",
                                 details={"inconsistent_edges": bad[:10].tolist(), "count": int(bad.size)})
    return sigma


def cgroundstate(L: StripLattice, J: Union[CouplingAssignment, np.ndarray],
                 tie_tolerance: Optional[float] = None) -> GroundState:
    """
    The c-groundstate of C(n,k) under couplings J.

    T is the frustration set; the plaquette holding a sacrificed boundary edge
    toggles membership. The minimum T-join on the dual, weighted by |J|, plus the
    sacrificed edge is the dissatisfied set; spins follow by integration.
    """
    values = _values(J)
    if values.shape != (L.num_edges,):
        raise ValidationError(f"expected {L.num_edges} couplings for {L!r}, got {values.shape}")

    with perf_tracker.timed("cgroundstate"), \
            logger.trace_operation("cgroundstate", level=logging.DEBUG, n=L.n, k=L.k):
        bc = boundary_condition_spins(L, values)
        T = frustration_from_couplings(L, values)
        T_eff = set(T)
        if bc.sacrificed is not None:
            T_eff ^= set(L.edge_plaquettes(bc.sacrificed))

        grid = build_dual(L)
        solution = min_tjoin(grid.weighted_graph(np.abs(values)), T_eff, tie_tolerance)

        dis = set(solution.edges)
        if bc.sacrificed is not None:
            dis.add(bc.sacrificed)
        dis_set = DissatisfiedSet(frozenset(dis))
        sigma = integrate_spins(L, values, dis_set.mask(L))

        for vertex, spin in bc.spins.items():
            if sigma[L.vertex_index(*vertex)] != spin:
                raise InvariantViolation(f"boundary spin at {vertex} differs from the boundary condition")

    state = GroundState(SpinState(L, sigma), dis_set, energy(L, values, sigma), solution,
                        bc.sacrificed, T, frozenset(T_eff))
    perf_tracker.increment_counter("groundstates")
    return state


def brute_force_cgroundstate(L: StripLattice, J: Union[CouplingAssignment, np.ndarray],
                             interior_limit: Optional[int] = None,
                             chunk_size: int = 1 << 14) -> Tuple[SpinState, float]:
    """
    Exhaustive minimum energy over interior spins, boundary fixed by boundary_condition_spins.

    Raises:
        ValidationError: more interior vertices than the enumeration bound
    """
    limit = interior_limit if interior_limit is not None else \
        config_manager.get("solver.brute_force_interior_limit", 20)
    values = _values(J)
    interior = np.array([L.vertex_index(*v) for v in L.vertices if not L.is_boundary_vertex(v)], dtype=np.int64)
    if interior.size > limit:
        raise ValidationError(f"spin oracle limited to {limit} interior vertices (got {interior.size})")

    bc = boundary_condition_spins(L, values)
    base = np.zeros(L.num_vertices, dtype=np.int8)
    for vertex, spin in bc.spins.items():
        base[L.vertex_index(*vertex)] = spin

    best_energy, best = math.inf, base
    shifts = np.arange(interior.size, dtype=np.int64)
    for start in range(0, 1 << interior.size, chunk_size):
        combos = np.arange(start, min(start + chunk_size, 1 << interior.size), dtype=np.int64)
        S = np.tile(base, (combos.size, 1))
        if interior.size:
            S[:, interior] = (1 - 2 * ((combos[:, None] >> shifts) & 1)).astype(np.int8)
        energies = -((S[:, L.edge_u] * S[:, L.edge_v]) @ values)
        i = int(np.argmin(energies))
        if energies[i] < best_energy:
            best_energy, best = float(energies[i]), S[i].copy()

    return SpinState(L, best), energy(L, values, best)
