#!/usr/bin/env python3
"""
Strip lattices C(n,k), their plaquette duals and the extended dual C'(n,k).

Coordinates: primal vertices are integer pairs (i, j) with |i| <= k, |j| <= n.
Plaquettes are indexed (col, row) from the lower-left, col in 0..2k-1 and
row in 0..2n-1; plaquette (col, row) has lower-left corner (col-k, row-n).
The middle plaquette of a row is column k (just right of the centerline).

Edge ids:
    horizontal (i,j)-(i+1,j):  (j+n)*2k + (i+k)
    vertical   (i,j)-(i,j+1):  H + (j+n)*(2k+1) + (i+k),  H = 2k*(2n+1)
"""

import functools
from typing import Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from utils.error_handler import ValidationError

Vertex = Tuple[int, int]


class Plaquette(NamedTuple):
    col: int
    row: int


class Edge(NamedTuple):
    id: int
    u: Vertex
    v: Vertex
    horizontal: bool


# Clockwise side order used by the rotation rule
SIDES = ("N", "E", "S", "W")


class StripLattice:
    """The finite grid C(n,k). Immutable after construction."""

    def __init__(self, n: int, k: int):
        if not isinstance(n, (int, np.integer)) or not isinstance(k, (int, np.integer)) or n < 1 or k < 1:
            raise ValidationError(f"strip lattice needs n >= 1 and k >= 1 (got n={n}, k={k})")
        self.n = int(n)
        self.k = int(k)
        self.width = 2 * self.k + 1
        self.height = 2 * self.n + 1
        self.num_vertices = self.width * self.height
        self.num_horizontal = 2 * self.k * self.height
        self.num_edges = self.num_horizontal + 2 * self.n * self.width

        self.vertices: List[Vertex] = [(i, j) for j in range(-self.n, self.n + 1)
                                       for i in range(-self.k, self.k + 1)]
        edges: List[Edge] = []
        for j in range(-self.n, self.n + 1):
            for i in range(-self.k, self.k):
                edges.append(Edge(len(edges), (i, j), (i + 1, j), True))
        for j in range(-self.n, self.n):
            for i in range(-self.k, self.k + 1):
                edges.append(Edge(len(edges), (i, j), (i, j + 1), False))
        self.edges: Tuple[Edge, ...] = tuple(edges)

        self.edge_u = np.array([self.vertex_index(*e.u) for e in edges], dtype=np.int64)
        self.edge_v = np.array([self.vertex_index(*e.v) for e in edges], dtype=np.int64)
        self.boundary_mask = np.array([self.is_boundary_vertex(e.u) and self.is_boundary_vertex(e.v)
                                       and (abs(e.u[1]) == self.n if e.horizontal else abs(e.u[0]) == self.k)
                                       for e in edges], dtype=bool)
        self.boundary_edge_ids: Tuple[int, ...] = tuple(int(x) for x in np.flatnonzero(self.boundary_mask))

        self.num_plaquettes = 4 * self.n * self.k
        self.plaquette_edge_array = np.array(
            [self.plaquette_edges(self.plaquette_from_index(p)) for p in range(self.num_plaquettes)],
            dtype=np.int64,
        ).reshape(self.num_plaquettes, 4)

    def __repr__(self) -> str:
        return f"StripLattice(n={self.n}, k={self.k})"

    # --- vertices and edges -------------------------------------------------

    def contains_vertex(self, v: Vertex) -> bool:
        return abs(v[0]) <= self.k and abs(v[1]) <= self.n

    def vertex_index(self, i: int, j: int) -> int:
        return (j + self.n) * self.width + (i + self.k)

    def is_boundary_vertex(self, v: Vertex) -> bool:
        return abs(v[0]) == self.k or abs(v[1]) == self.n

    def h_edge(self, i: int, j: int) -> int:
        """Id of the horizontal edge (i,j)-(i+1,j)."""
        if not (-self.k <= i < self.k and -self.n <= j <= self.n):
            raise ValidationError(f"no horizontal edge at ({i},{j}) in {self!r}")
        return (j + self.n) * 2 * self.k + (i + self.k)

    def v_edge(self, i: int, j: int) -> int:
        """Id of the vertical edge (i,j)-(i,j+1)."""
        if not (-self.k <= i <= self.k and -self.n <= j < self.n):
            raise ValidationError(f"no vertical edge at ({i},{j}) in {self!r}")
        return self.num_horizontal + (j + self.n) * self.width + (i + self.k)

    def edge_id(self, u: Vertex, v: Vertex) -> int:
        (a, b), (c, d) = sorted((u, v))
        if b == d and c == a + 1:
            return self.h_edge(a, b)
        if a == c and d == b + 1:
            return self.v_edge(a, b)
        raise ValidationError(f"{u} and {v} are not adjacent")

    def is_boundary_edge(self, eid: int) -> bool:
        return bool(self.boundary_mask[eid])

    def edge_midpoint(self, eid: int) -> Tuple[float, float]:
        e = self.edges[eid]
        return ((e.u[0] + e.v[0]) / 2.0, (e.u[1] + e.v[1]) / 2.0)

    def incident_edges(self, v: Vertex) -> List[int]:
        i, j = v
        result = []
        if i > -self.k:
            result.append(self.h_edge(i - 1, j))
        if i < self.k:
            result.append(self.h_edge(i, j))
        if j > -self.n:
            result.append(self.v_edge(i, j - 1))
        if j < self.n:
            result.append(self.v_edge(i, j))
        return sorted(result)

    def boundary_cycle(self) -> Tuple[List[Vertex], List[int]]:
        """
        Boundary vertices counter-clockwise from (-k,-n), and the edges joining
        consecutive vertices (edge t joins vertex t to vertex t+1, cyclically).
        """
        k, n = self.k, self.n
        verts: List[Vertex] = [(i, -n) for i in range(-k, k)]
        verts += [(k, j) for j in range(-n, n)]
        verts += [(i, n) for i in range(k, -k, -1)]
        verts += [(-k, j) for j in range(n, -n, -1)]
        edges = [self.edge_id(verts[t], verts[(t + 1) % len(verts)]) for t in range(len(verts))]
        return verts, edges

    def sub_boundary_edges(self, n_sub: int, k_sub: int) -> List[int]:
        """Edge ids (in this lattice) of the boundary of the centered C(n_sub, k_sub)."""
        if not (1 <= n_sub <= self.n and 1 <= k_sub <= self.k):
            raise ValidationError(f"C({n_sub},{k_sub}) does not fit in {self!r}")
        ids = [self.h_edge(i, j) for j in (-n_sub, n_sub) for i in range(-k_sub, k_sub)]
        ids += [self.v_edge(i, j) for i in (-k_sub, k_sub) for j in range(-n_sub, n_sub)]
        return sorted(ids)

    # --- plaquettes --------------------------------------------------------

    def contains_plaquette(self, p: Plaquette) -> bool:
        return 0 <= p.col < 2 * self.k and 0 <= p.row < 2 * self.n

    def plaquette_index(self, p: Plaquette) -> int:
        return p.row * 2 * self.k + p.col

    def plaquette_from_index(self, index: int) -> Plaquette:
        row, col = divmod(index, 2 * self.k)
        return Plaquette(col, row)

    def plaquette_edges(self, p: Plaquette) -> Tuple[int, int, int, int]:
        """(bottom, top, left, right) edge ids of a plaquette."""
        if not self.contains_plaquette(p):
            raise ValidationError(f"plaquette {tuple(p)} is outside {self!r}")
        i, j = p.col - self.k, p.row - self.n
        return (self.h_edge(i, j), self.h_edge(i, j + 1), self.v_edge(i, j), self.v_edge(i + 1, j))

    def edge_plaquettes(self, eid: int) -> List[Plaquette]:
        """The one or two plaquettes bounded by an edge."""
        e = self.edges[eid]
        i, j = e.u
        if e.horizontal:
            candidates = [Plaquette(i + self.k, j + self.n - 1), Plaquette(i + self.k, j + self.n)]
        else:
            candidates = [Plaquette(i + self.k - 1, j + self.n), Plaquette(i + self.k, j + self.n)]
        return [p for p in candidates if self.contains_plaquette(p)]

    def middle_plaquette(self, row: int) -> Plaquette:
        return Plaquette(self.k, row)

    def plaquette_center(self, p: Plaquette) -> Tuple[float, float]:
        return (p.col - self.k + 0.5, p.row - self.n + 0.5)


class WeightedGraphSpec(NamedTuple):
    """Nodes and (u, v, edge id) triples of a dual graph, before weights are attached."""
    nodes: Tuple[Plaquette, ...]
    edges: Tuple[Tuple[Plaquette, Plaquette, int], ...]


class PlaquetteGrid:
    """C(n,k)*: plaquettes joined across interior primal edges; dual edge id = primal edge id."""

    def __init__(self, lattice: StripLattice):
        self.lattice = lattice
        self.width = 2 * lattice.k
        self.height = 2 * lattice.n
        self.plaquettes: Tuple[Plaquette, ...] = tuple(
            lattice.plaquette_from_index(p) for p in range(lattice.num_plaquettes)
        )
        dual: Dict[int, Tuple[Plaquette, Plaquette]] = {}
        for e in lattice.edges:
            if lattice.is_boundary_edge(e.id):
                continue
            p, q = lattice.edge_plaquettes(e.id)
            dual[e.id] = (p, q)
        self.dual_edges: Dict[int, Tuple[Plaquette, Plaquette]] = dual
        self.dual_edge_ids: Tuple[int, ...] = tuple(sorted(dual))

    def __repr__(self) -> str:
        return f"PlaquetteGrid(width={self.width}, height={self.height})"

    def spec(self) -> WeightedGraphSpec:
        return WeightedGraphSpec(self.plaquettes,
                                 tuple((p, q, eid) for eid, (p, q) in sorted(self.dual_edges.items())))

    def weighted_graph(self, weights: Sequence[float]):
        """tjoin.WeightedGraph over the plaquettes with dual edge weights ``weights[primal id]``."""
        from core.tjoin import WeightedGraph
        return WeightedGraph.from_spec(self.spec(), weights)

    def row(self, row: int) -> List[Plaquette]:
        return [Plaquette(c, row) for c in range(self.width)]

    def incident_dual_edges(self, p: Plaquette) -> List[int]:
        return sorted(eid for eid in self.lattice.plaquette_edges(p) if eid in self.dual_edges)


class ExtendedDual:
    """
    C'(n,k): the dual grid plus apexes x (above) and y (below), each joined to
    the middle plaquette of the top/bottom row. An apex edge carries the id of
    the primal boundary edge it crosses.
    """

    def __init__(self, grid: PlaquetteGrid):
        L = grid.lattice
        self.base = grid
        self.lattice = L
        self.apex_top = Plaquette(L.k, 2 * L.n)
        self.apex_bottom = Plaquette(L.k, -1)
        self.top_anchor = Plaquette(L.k, 2 * L.n - 1)
        self.bottom_anchor = Plaquette(L.k, 0)
        self.apex_top_edge = L.h_edge(0, L.n)
        self.apex_bottom_edge = L.h_edge(0, -L.n)
        self.apex_edges: Dict[int, Tuple[Plaquette, Plaquette]] = {
            self.apex_top_edge: (self.top_anchor, self.apex_top),
            self.apex_bottom_edge: (self.apex_bottom, self.bottom_anchor),
        }
        self.num_vertices = len(grid.plaquettes) + 2

    @property
    def apexes(self) -> Tuple[Plaquette, Plaquette]:
        return (self.apex_top, self.apex_bottom)

    def degree(self, v: Plaquette) -> int:
        return sum(1 for p, q in self.all_edges().values() if v in (p, q))

    def all_edges(self) -> Dict[int, Tuple[Plaquette, Plaquette]]:
        edges = dict(self.base.dual_edges)
        edges.update(self.apex_edges)
        return edges

    def spec(self) -> WeightedGraphSpec:
        nodes = (self.apex_bottom,) + self.base.plaquettes + (self.apex_top,)
        return WeightedGraphSpec(nodes, tuple((p, q, eid) for eid, (p, q) in sorted(self.all_edges().items())))

    def weighted_graph(self, weights: Sequence[float]):
        from core.tjoin import WeightedGraph
        return WeightedGraph.from_spec(self.spec(), weights)


class Annulus(NamedTuple):
    """Plaquettes of C(n,outer) not in C(n,inner)."""
    outer: int
    inner: int
    plaquettes: FrozenSet[Plaquette]


def edge_count(n: int, k: int) -> int:
    """|E| of C(n,k) without building it."""
    return 2 * k * (2 * n + 1) + 2 * n * (2 * k + 1)


@functools.lru_cache(maxsize=64)
def build_strip(n: int, k: int) -> StripLattice:
    return StripLattice(n, k)


@functools.lru_cache(maxsize=64)
def build_dual(lattice: StripLattice) -> PlaquetteGrid:
    return PlaquetteGrid(lattice)


@functools.lru_cache(maxsize=64)
def build_extended_dual(grid: PlaquetteGrid) -> ExtendedDual:
    return ExtendedDual(grid)


def sublattice_plaquettes(grid: PlaquetteGrid, k_sub: int) -> FrozenSet[Plaquette]:
    """Plaquettes of C(n,k_sub) inside C(n,k): columns k-k_sub .. k+k_sub-1."""
    k = grid.lattice.k
    if not 1 <= k_sub <= k:
        raise ValidationError(f"k' must lie in 1..{k} (got {k_sub})")
    return frozenset(Plaquette(c, r) for c in range(k - k_sub, k + k_sub) for r in range(grid.height))


def annulus(grid: PlaquetteGrid, outer: int, inner: int) -> Annulus:
    if not 1 <= inner < outer <= grid.lattice.k:
        raise ValidationError(f"annulus needs 1 <= inner < outer <= k (got {inner}, {outer})")
    return Annulus(outer, inner, sublattice_plaquettes(grid, outer) - sublattice_plaquettes(grid, inner))


def annuli(grid: PlaquetteGrid) -> List[Annulus]:
    """Unit-width rings C(n,k'+1) minus C(n,k') for k' = 1..k-1."""
    return [annulus(grid, k_sub + 1, k_sub) for k_sub in range(1, grid.lattice.k)]


def parity_blocks(grid: PlaquetteGrid) -> List[List[Plaquette]]:
    """The central block C(n,1) followed by the rings; sorted plaquette lists."""
    blocks = [sorted(sublattice_plaquettes(grid, 1))]
    blocks += [sorted(a.plaquettes) for a in annuli(grid)]
    return blocks


def distance_to_origin(obj: Union[Vertex, Plaquette, int, Edge], lattice: Optional[StripLattice] = None) -> float:
    """
    L-infinity distance from the object's center to the origin.

    Vertices need no lattice; plaquettes and edge ids are placed using ``lattice``.
    Dual edges share the midpoint of the primal edge they cross.
    """
    if isinstance(obj, Plaquette):
        if lattice is None:
            raise ValidationError("plaquette distance needs its lattice")
        x, y = lattice.plaquette_center(obj)
    elif isinstance(obj, Edge):
        x, y = (obj.u[0] + obj.v[0]) / 2.0, (obj.u[1] + obj.v[1]) / 2.0
    elif isinstance(obj, (int, np.integer)):
        if lattice is None:
            raise ValidationError("edge distance needs its lattice")
        x, y = lattice.edge_midpoint(int(obj))
    else:
        x, y = float(obj[0]), float(obj[1])
    return max(abs(x), abs(y))


def embed_edge_ids(small: StripLattice, big: StripLattice) -> np.ndarray:
    """Array mapping each edge id of ``small`` to the id of the same edge in ``big``."""
    if small.n > big.n or small.k > big.k:
        raise ValidationError(f"{small!r} does not embed in {big!r}")
    return np.array([big.edge_id(e.u, e.v) for e in small.edges], dtype=np.int64)


def restrict(values: np.ndarray, small: StripLattice, big: StripLattice) -> np.ndarray:
    """Per-edge values of ``big`` restricted to the centered sublattice ``small``."""
    return np.asarray(values)[embed_edge_ids(small, big)]


def embed_plaquette(p: Plaquette, small: StripLattice, big: StripLattice) -> Plaquette:
    return Plaquette(p.col + big.k - small.k, p.row + big.n - small.n)


def side_of(p: Plaquette, q: Plaquette) -> str:
    """Side of ``p`` through which the dual edge p-q leaves."""
    dc, dr = q.col - p.col, q.row - p.row
    if (dc, dr) == (0, 1):
        return "N"
    if (dc, dr) == (1, 0):
        return "E"
    if (dc, dr) == (0, -1):
        return "S"
    if (dc, dr) == (-1, 0):
        return "W"
    raise ValidationError(f"plaquettes {tuple(p)} and {tuple(q)} are not adjacent")


def plaquettes_in(grid: PlaquetteGrid, items: Iterable[Plaquette]) -> List[Plaquette]:
    """Sorted plaquettes of ``items`` that lie in the grid."""
    return sorted(p for p in items if grid.lattice.contains_plaquette(p))
