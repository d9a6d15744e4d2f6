import math

import networkx as nx
import numpy as np
import pytest

from core.tjoin import (WeightedGraph, brute_force_matching, brute_force_tjoin, metric_closure,
                        min_tjoin, min_weight_perfect_matching, validate_tjoin)
from utils.error_handler import NoSolutionError, ValidationError


def path_graph():
    return WeightedGraph(range(4), [(0, 1, 0, 1.0), (1, 2, 1, 2.0), (2, 3, 2, 3.0)])


def square():
    return WeightedGraph(range(4), [(0, 1, 0, 1.0), (1, 2, 1, 1.0), (2, 3, 2, 1.0), (3, 0, 3, 5.0)])


def random_grid(seed, rows, cols):
    rng = np.random.default_rng(seed)
    graph = nx.grid_2d_graph(rows, cols)
    for u, v in graph.edges:
        graph.edges[u, v]["weight"] = float(rng.uniform(0.1, 1.0))
    G = WeightedGraph.from_networkx(graph)
    terminals = [G.nodes[i] for i in np.flatnonzero(rng.integers(0, 2, size=G.num_vertices))]
    return G, terminals[: len(terminals) - len(terminals) % 2]


def test_empty_terminal_set():
    solution = min_tjoin(path_graph(), [])
    assert solution.edges == frozenset()
    assert solution.weight == 0.0


def test_path_join():
    solution = min_tjoin(path_graph(), [0, 3])
    assert solution.sorted_edges() == [0, 1, 2]
    assert solution.weight == 6.0
    assert solution.mode == "exact"


def test_prefers_cheaper_detour():
    solution = min_tjoin(square(), [0, 3])
    assert solution.sorted_edges() == [0, 1, 2]
    assert solution.weight == 3.0
    assert 3 not in solution


def test_four_terminals_pair_up_locally():
    solution = min_tjoin(square(), [0, 1, 2, 3])
    assert solution.sorted_edges() == [0, 2]
    assert solution.weight == 2.0


def test_odd_terminal_set():
    with pytest.raises(NoSolutionError):
        min_tjoin(path_graph(), [0, 1, 2])


def test_disconnected_terminals():
    G = WeightedGraph(range(4), [(0, 1, 0, 1.0), (2, 3, 1, 1.0)])
    with pytest.raises(NoSolutionError):
        min_tjoin(G, [0, 2])
    with pytest.raises(NoSolutionError):
        brute_force_tjoin(G, [0, 2])
    assert min_tjoin(G, [0, 1, 2, 3]).weight == 2.0


def test_components_are_solved_separately():
    G = WeightedGraph(range(6), [(0, 1, 0, 1.0), (1, 2, 1, 2.0), (0, 2, 2, 4.0),
                                 (3, 4, 3, 1.0), (4, 5, 4, 1.0)])
    assert not G.is_connected()
    assert G.component_of() == {0: 0, 1: 0, 2: 0, 3: 1, 4: 1, 5: 1}
    fast = min_tjoin(G, [0, 2, 3, 5])
    oracle = brute_force_tjoin(G, [0, 2, 3, 5])
    assert fast.sorted_edges() == oracle.sorted_edges() == [0, 1, 3, 4]
    assert fast.weight == 5.0
    closure = metric_closure(G, [0, 2, 3, 5])
    assert (0, 3) not in closure.distances and (2, 5) not in closure.distances


def test_unknown_terminal():
    with pytest.raises(ValidationError):
        min_tjoin(path_graph(), [0, 9])


@pytest.mark.parametrize("weight", [0.0, -1.0, math.inf, math.nan])
def test_weights_must_be_positive_and_finite(weight):
    with pytest.raises(ValidationError):
        WeightedGraph([0, 1], [(0, 1, 0, weight)])


def test_duplicate_and_parallel_edges():
    with pytest.raises(ValidationError):
        WeightedGraph([0, 1, 2], [(0, 1, 0, 1.0), (1, 2, 0, 1.0)])
    with pytest.raises(ValidationError):
        WeightedGraph([0, 1], [(0, 1, 0, 1.0), (1, 0, 1, 1.0)])


def test_metric_closure_paths():
    closure = metric_closure(square(), [0, 3])
    assert closure.distance(0, 3) == 3.0
    assert closure.distance(3, 0) == 3.0
    assert closure.path(0, 3) == [0, 1, 2]
    assert closure.path(3, 0) == [2, 1, 0]


def test_matching_against_oracle():
    points = [0, 1, 2, 3, 4, 5]
    rng = np.random.default_rng(7)
    weights = {(a, b): float(rng.uniform(1, 10)) for a in points for b in points if a < b}
    pairs = min_weight_perfect_matching(points, weights)
    oracle_pairs, oracle_total = brute_force_matching(points, weights)
    assert math.isclose(sum(weights[p] for p in pairs), oracle_total)
    assert sorted(p for pair in pairs for p in pair) == points
    assert len(oracle_pairs) == 3


def test_matching_needs_even_vertex_count():
    with pytest.raises(NoSolutionError):
        min_weight_perfect_matching([0, 1, 2], {(0, 1): 1.0, (0, 2): 1.0, (1, 2): 1.0})
    assert min_weight_perfect_matching([], {}) == []


@pytest.mark.parametrize("seed", range(12))
def test_solver_matches_oracle_on_grids(seed):
    rows, cols = [(2, 3), (3, 3), (2, 5), (3, 4)][seed % 4]
    G, terminals = random_grid(seed, rows, cols)
    fast = min_tjoin(G, terminals)
    oracle = brute_force_tjoin(G, terminals)
    assert validate_tjoin(G, terminals, fast.edges)
    assert validate_tjoin(G, terminals, oracle.edges)
    assert oracle.mode == "oracle"
    assert math.isclose(fast.weight, oracle.weight, rel_tol=1e-9)


@pytest.mark.parametrize("seed", range(8))
def test_adding_a_pair_moves_the_optimum_by_at_most_its_distance(seed):
    G, _ = random_grid(seed, 3, 4)
    nodes = sorted(G.nodes)
    chosen = [nodes[i] for i in np.random.default_rng(100 + seed).permutation(len(nodes))[:6]]
    T, (u, v) = chosen[:4], chosen[4:]
    base = brute_force_tjoin(G, T).weight
    grown = brute_force_tjoin(G, T + [u, v]).weight
    bound = metric_closure(G, [u, v]).distance(u, v)
    assert abs(grown - base) <= bound * (1 + 1e-9)
    assert math.isclose(min_tjoin(G, T + [u, v]).weight, grown, rel_tol=1e-9)


@pytest.mark.parametrize("seed", range(4))
def test_same_instance_gives_same_edges(seed):
    G, terminals = random_grid(seed, 4, 5)
    again, _ = random_grid(seed, 4, 5)
    first = min_tjoin(G, terminals)
    assert min_tjoin(G, terminals).edges == first.edges
    assert min_tjoin(again, list(reversed(terminals))).edges == first.edges


def test_oracle_edge_limit():
    G, terminals = random_grid(0, 5, 5)
    with pytest.raises(ValidationError):
        brute_force_tjoin(G, terminals)


def test_validate_tjoin_rejects_wrong_parity():
    G = path_graph()
    assert validate_tjoin(G, [0, 3], [0, 1, 2])
    assert not validate_tjoin(G, [0, 3], [0, 1])
    assert not validate_tjoin(G, [0, 3], [0, 1, 7])
    assert validate_tjoin(G, [], [])
