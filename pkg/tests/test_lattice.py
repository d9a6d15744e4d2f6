import numpy as np
import pytest

from core.lattice import (Plaquette, annuli, build_dual, build_extended_dual, build_strip, distance_to_origin,
                          edge_count, embed_edge_ids, parity_blocks, restrict, side_of, sublattice_plaquettes)
from utils.error_handler import ValidationError

SIZES = [(n, k) for n in range(1, 7) for k in range(1, 7)]


@pytest.mark.parametrize("n,k", SIZES)
def test_edge_count(n, k):
    L = build_strip(n, k)
    assert L.num_edges == 2 * k * (2 * n + 1) + 2 * n * (2 * k + 1)
    assert L.num_edges == edge_count(n, k)
    assert L.num_vertices == (2 * n + 1) * (2 * k + 1)
    assert L.num_plaquettes == 4 * n * k


@pytest.mark.parametrize("n,k", SIZES)
def test_ids_are_consistent(n, k):
    L = build_strip(n, k)
    assert [e.id for e in L.edges] == list(range(L.num_edges))
    assert sorted(L.vertex_index(*v) for v in L.vertices) == list(range(L.num_vertices))
    for e in L.edges:
        assert L.edge_id(e.u, e.v) == e.id
        assert abs(e.u[0] - e.v[0]) + abs(e.u[1] - e.v[1]) == 1
        assert len(L.edge_plaquettes(e.id)) == (1 if L.is_boundary_edge(e.id) else 2)
    for p in range(L.num_plaquettes):
        assert L.plaquette_index(L.plaquette_from_index(p)) == p
    assert len(L.boundary_edge_ids) == 4 * (n + k)
    assert len(build_dual(L).dual_edges) == L.num_edges - 4 * (n + k)


def test_small_strip_has_22_edges(strip_2_1):
    assert strip_2_1.num_edges == 22
    assert strip_2_1.num_horizontal == 10


def test_edge_ids_are_row_major(strip_2_1):
    L = strip_2_1
    assert L.h_edge(-1, -2) == 0
    assert L.h_edge(0, -2) == 1
    assert L.h_edge(-1, -1) == 2
    assert L.v_edge(-1, -2) == L.num_horizontal
    assert L.v_edge(1, 1) == L.num_edges - 1
    for e in L.edges:
        assert L.edge_id(e.u, e.v) == e.id
        assert L.edge_id(e.v, e.u) == e.id


def test_non_adjacent_vertices_rejected(strip_2_1):
    with pytest.raises(ValidationError):
        strip_2_1.edge_id((0, 0), (1, 1))
    with pytest.raises(ValidationError):
        strip_2_1.h_edge(1, 0)


@pytest.mark.parametrize("n,k", [(0, 1), (1, 0), (-2, 3)])
def test_invalid_dimensions(n, k):
    with pytest.raises(ValidationError):
        build_strip(n, k)


def test_boundary_cycle(strip_3_2):
    L = strip_3_2
    verts, cycle = L.boundary_cycle()
    assert verts[0] == (-L.k, -L.n)
    assert len(cycle) == 4 * (L.n + L.k)
    assert len(set(cycle)) == len(cycle)
    assert set(cycle) == set(L.boundary_edge_ids)
    for t, eid in enumerate(cycle):
        e = L.edges[eid]
        assert {e.u, e.v} == {verts[t], verts[(t + 1) % len(verts)]}


def test_sub_boundary_of_whole_lattice_is_boundary(strip_3_2):
    assert strip_3_2.sub_boundary_edges(3, 2) == sorted(strip_3_2.boundary_edge_ids)
    assert len(strip_3_2.sub_boundary_edges(1, 1)) == 8
    with pytest.raises(ValidationError):
        strip_3_2.sub_boundary_edges(4, 1)


def test_plaquette_edges():
    L = build_strip(1, 1)
    assert L.plaquette_edges(Plaquette(0, 0)) == (L.h_edge(-1, -1), L.h_edge(-1, 0), L.v_edge(-1, -1), L.v_edge(0, -1))
    assert L.plaquette_edges(Plaquette(0, 0)) == (0, 2, 6, 7)
    with pytest.raises(ValidationError):
        L.plaquette_edges(Plaquette(2, 0))


def test_edge_plaquettes(strip_3_2):
    L = strip_3_2
    for e in L.edges:
        plaquettes = L.edge_plaquettes(e.id)
        assert len(plaquettes) == (1 if L.is_boundary_edge(e.id) else 2)
        for p in plaquettes:
            assert e.id in L.plaquette_edges(p)


def test_plaquette_index_round_trip(strip_3_2):
    for index in range(strip_3_2.num_plaquettes):
        assert strip_3_2.plaquette_index(strip_3_2.plaquette_from_index(index)) == index


def test_dual_graph(strip_3_2):
    grid = build_dual(strip_3_2)
    assert len(grid.plaquettes) == strip_3_2.num_plaquettes
    assert len(grid.dual_edges) == strip_3_2.num_edges - len(strip_3_2.boundary_edge_ids)


def test_extended_dual_apexes(strip_3_2):
    extended = build_extended_dual(build_dual(strip_3_2))
    assert extended.degree(extended.apex_top) == 1
    assert extended.degree(extended.apex_bottom) == 1
    assert extended.apexes == (extended.apex_top, extended.apex_bottom)
    assert extended.num_vertices == strip_3_2.num_plaquettes + 2


def test_builders_are_cached():
    assert build_strip(2, 2) is build_strip(2, 2)
    assert build_dual(build_strip(2, 2)) is build_dual(build_strip(2, 2))


def test_parity_blocks_partition(strip_3_2):
    grid = build_dual(strip_3_2)
    blocks = parity_blocks(grid)
    assert len(blocks) == strip_3_2.k
    assert all(len(block) == 4 * strip_3_2.n for block in blocks)
    flat = [p for block in blocks for p in block]
    assert sorted(flat) == sorted(grid.plaquettes)


def test_annuli_are_rings():
    grid = build_dual(build_strip(2, 3))
    rings = annuli(grid)
    assert [(a.outer, a.inner) for a in rings] == [(2, 1), (3, 2)]
    assert rings[0].plaquettes.isdisjoint(sublattice_plaquettes(grid, 1))
    with pytest.raises(ValidationError):
        sublattice_plaquettes(grid, 4)


def test_distance_to_origin(strip_2_1):
    L = strip_2_1
    assert distance_to_origin((3, -1)) == 3
    assert distance_to_origin(Plaquette(L.k, L.n), L) == 0.5
    assert distance_to_origin(L.h_edge(0, 0), L) == 0.5
    assert distance_to_origin(L.edges[L.v_edge(1, 1)]) == 1.5
    with pytest.raises(ValidationError):
        distance_to_origin(Plaquette(0, 0))


def test_embedding_preserves_edges():
    small, big = build_strip(2, 1), build_strip(4, 3)
    embed = embed_edge_ids(small, big)
    for e in small.edges:
        assert (big.edges[int(embed[e.id])].u, big.edges[int(embed[e.id])].v) == (e.u, e.v)
    values = np.arange(big.num_edges, dtype=float)
    assert np.array_equal(restrict(values, small, big), embed.astype(float))
    assert np.array_equal(restrict(values, big, big), values)
    with pytest.raises(ValidationError):
        embed_edge_ids(big, small)


def test_side_of():
    p = Plaquette(1, 1)
    assert side_of(p, Plaquette(1, 2)) == "N"
    assert side_of(p, Plaquette(2, 1)) == "E"
    assert side_of(p, Plaquette(1, 0)) == "S"
    assert side_of(p, Plaquette(0, 1)) == "W"
    with pytest.raises(ValidationError):
        side_of(p, Plaquette(2, 2))
