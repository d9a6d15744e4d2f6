import math
from types import SimpleNamespace

import networkx as nx
import numpy as np
import pytest

from core.events import (EventParams, ObservationOutcome, _vertex_simple_near, check_observation1,
                         decompose_symmetric_difference, detect_dual, detect_dual_instance,
                         detect_dual_via_translation, detect_primal, dual_joins, dual_subinstance, is_dually_isolated,
                         is_isolated, is_isolation_row, is_regular_pair, is_regular_pair_batch, isolation_row_check,
                         path_event, regular_pair_system, translate_to_dual, witness_to_json)
from core.instance import nested_parities_even, sample_dual_instance
from core.lattice import Plaquette, build_dual, build_extended_dual, build_strip
from harness.planting import extend_couplings, plant_dual_isolation, plant_isolation, sample_regular_pair
from utils.error_handler import InvariantViolation, ValidationError

WIDE = EventParams(radius=1e9, density_threshold=0.0, vertex_simple_check=False)
NARROW = EventParams(radius=0.0, vertex_simple_check=False)


def test_event_params_validation():
    with pytest.raises(ValidationError):
        EventParams(search_mode="random")
    with pytest.raises(ValidationError):
        EventParams(radius=-1.0)
    assert EventParams(density_side_coeff=100.0, density_exponent=0.01).square_side(2) == 101
    assert EventParams(density_side_coeff=3.0, density_exponent=0.0).square_side(7) == 3


def test_event_params_from_config(isolated_config):
    isolated_config.set("events.radius", 4.5)
    params = EventParams.from_config(search_mode="rotation")
    assert params.radius == 4.5
    assert params.search_mode == "rotation"


def test_fixed_radius_comes_from_config(isolated_config):
    isolated_config.set("events.fixed_radius", 7.0)
    assert EventParams.from_config().fixed_radius == 7.0
    assert EventParams.from_config(fixed_radius=3.0).fixed_radius == 3.0
    with pytest.raises(ValidationError):
        EventParams(fixed_radius=-0.5)


def test_ferromagnet_is_not_a_regular_pair(strip_3_2):
    J = np.ones(strip_3_2.num_edges)
    assert not is_regular_pair(strip_3_2, 2, J)


def test_regular_pair_needs_smaller_m(strip_3_2):
    with pytest.raises(ValidationError):
        is_regular_pair(strip_3_2, 3, np.ones(strip_3_2.num_edges))
    with pytest.raises(ValidationError):
        is_regular_pair(strip_3_2, build_strip(2, 1), np.ones(strip_3_2.num_edges))


@pytest.mark.parametrize("seed", range(8))
def test_batch_test_agrees_with_scalar(seed):
    L = build_strip(3, 1)
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=(64, L.num_edges))
    sampled = sample_regular_pair(L, 2, seed)
    bits[0] = (sampled.values < 0).astype(int)
    flags = is_regular_pair_batch(L, 2, bits)
    for row, flag in zip(bits, flags):
        assert flag == is_regular_pair(L, 2, np.where(row == 1, -1.0, 1.0))
    assert flags[0]


def test_regular_pair_system_is_consistent():
    for n, k in [(2, 1), (3, 2), (4, 3)]:
        assert regular_pair_system(build_strip(n, k), n - 1).consistent


@pytest.mark.parametrize("seed", range(5))
def test_planted_isolation(seed):
    L = build_strip(3, 2)
    J = plant_isolation(L, seed).values
    assert is_isolated(L, J)
    top = isolation_row_check(L, J, 2 * L.n - 1)
    assert top.only_middle_frustrated
    assert all(abs(J[e]) > top.threshold for e in top.heavy_edges)


def test_isolation_row_bounds(strip_3_2):
    with pytest.raises(ValidationError):
        isolation_row_check(strip_3_2, np.ones(strip_3_2.num_edges), 6)
    with pytest.raises(ValidationError):
        isolation_row_check(strip_3_2, np.ones(5), 0)


@pytest.mark.parametrize("seed", range(5))
def test_planted_dual_isolation(seed):
    L = build_strip(3, 2)
    dual = plant_dual_isolation(L, seed)
    grid = build_dual(L)
    assert is_dually_isolated(build_extended_dual(grid), dual.weights, dual.T)
    assert nested_parities_even(grid, dual.T)


@pytest.mark.parametrize("seed", range(10))
def test_symmetric_difference_decomposition(seed):
    L = build_strip(4, 2)
    dual = sample_dual_instance(L, seed)
    extended = build_extended_dual(build_dual(L))
    graph, r, s = dual_joins(extended, dual.weights, dual.T)
    decomp = decompose_symmetric_difference(graph, r.edges, s.edges, extended.apex_top, extended.apex_bottom)
    assert decomp.path_vertices[0] == extended.apex_top
    assert decomp.path_vertices[-1] == extended.apex_bottom
    assert sorted(decomp.path + [e for c in decomp.cycles for e in c]) == sorted(decomp.delta)
    assert extended.apex_top_edge in decomp.path
    assert extended.apex_bottom_edge in decomp.path
    assert all(d in (1, 2, 3, 4) for d in decomp.degrees.values())


def test_radius_decides_dual_event():
    dual = sample_dual_instance(build_strip(3, 2), 17)
    wide = detect_dual_instance(dual, WIDE)
    narrow = detect_dual_instance(dual, NARROW)
    assert wide.D and wide.BD
    assert not narrow.D and not narrow.BD
    assert wide.path_length >= 2
    assert wide.witness
    assert wide.implications_hold() and narrow.implications_hold()


@pytest.mark.parametrize("seed", range(6))
def test_dual_events_imply(seed):
    L = build_strip(4, 2)
    dual = sample_dual_instance(L, seed)
    grid = build_dual(L)
    flags = detect_dual(grid, build_extended_dual(grid), dual.weights, dual.T,
                        EventParams(radius=2.0, enumeration_cap=1000))
    assert flags.implications_hold()
    assert flags.min_distance is not None and flags.min_distance >= 0.5
    assert flags.vertex_simple in (True, False, None)


def test_rotation_mode_uses_the_rotation_trail():
    dual = sample_dual_instance(build_strip(3, 2), 3)
    params = EventParams(radius=1e9, search_mode="rotation", vertex_simple_check=False)
    flags = detect_dual_instance(dual, params)
    assert len(flags.witness) == flags.path_length


@pytest.mark.parametrize("seed", range(6))
def test_regular_pair_has_connecting_trail(seed):
    L = build_strip(4, 2)
    J = sample_regular_pair(L, 3, seed)
    flags = detect_primal(L, J, WIDE)
    assert flags.regular_pair
    assert flags.lemma1_holds
    assert flags.A and flags.BA
    assert not detect_primal(L, J, NARROW).A


def test_primal_without_regular_pair(strip_3_2):
    flags = detect_primal(strip_3_2, np.ones(strip_3_2.num_edges), WIDE)
    assert flags.regular_pair is False
    assert flags.A is False and flags.BA is False
    assert flags.lemma1_holds is None


def test_primal_needs_two_rows():
    L = build_strip(1, 1)
    with pytest.raises(ValidationError):
        detect_primal(L, np.ones(L.num_edges))


def test_translation_shrinks_the_lattice():
    L = build_strip(4, 2)
    J = sample_regular_pair(L, 3, 5)
    dual = translate_to_dual(L, J)
    assert (dual.lattice.n, dual.lattice.k) == (3, 2)
    flags = detect_dual_via_translation(L, J, WIDE)
    assert flags.regular_pair and flags.D
    assert (flags.n, flags.k) == (3, 2)

    unpaired = detect_dual_via_translation(L, np.ones(L.num_edges), WIDE)
    assert unpaired.regular_pair is False and unpaired.D is False


def test_dual_subinstance():
    dual = sample_dual_instance(build_strip(3, 3), 2)
    sub = dual_subinstance(dual, 2, 1)
    assert (sub.lattice.n, sub.lattice.k) == (2, 1)
    assert sub.weights.shape == (sub.lattice.num_edges,)
    assert all(sub.lattice.contains_plaquette(p) for p in sub.T)


@pytest.mark.parametrize("seed", range(6))
def test_trail_containment_on_planted_extension(seed):
    n, k = 3, 2
    L, big = build_strip(n, k), build_strip(n + 1, k)
    planted = plant_isolation(L, seed)
    extended = extend_couplings(planted.values, L, big, seed + 1)
    result = check_observation1(extended.values, k, n, n + 1)
    assert result.outcome is ObservationOutcome.HOLDS
    assert set(result.path) <= set(result.path_prime)


def test_trail_containment_inapplicable():
    k = 2
    big = build_strip(4, k)
    result = check_observation1(np.ones(big.num_edges), k, 3, 4)
    assert result.outcome is ObservationOutcome.INAPPLICABLE
    assert result.reason
    assert check_observation1(np.ones(big.num_edges), k, 5, 4).outcome is ObservationOutcome.INAPPLICABLE


def test_witness_json():
    dual = sample_dual_instance(build_strip(2, 2), 1)
    flags = detect_dual_instance(dual, WIDE)
    data = witness_to_json(flags)
    assert data["n"] == 2 and data["k"] == 2
    assert data["edges"] == flags.witness
    assert len(data["vertices"]) == len(flags.witness) + 1
    assert data["vertices"][0] == [0.5, 2.5]
    assert math.isclose(data["min_distance"], flags.min_distance)
    assert "witness" not in flags.to_dict()
    assert "witness" in flags.to_dict(include_witness=True)


def crossing_instance():
    """A trail turning at (2,2) of C(3,3)* and a 4-cycle through the same plaquette, closer to the origin."""
    L = build_strip(3, 3)
    graph = build_dual(L).weighted_graph(np.ones(L.num_edges))
    trail = [Plaquette(0, 2), Plaquette(1, 2), Plaquette(2, 2), Plaquette(2, 1), Plaquette(2, 0)]
    loop = [Plaquette(2, 2), Plaquette(3, 2), Plaquette(3, 3), Plaquette(2, 3), Plaquette(2, 2)]
    trail_edges = [graph.edge_between(a, b) for a, b in zip(trail, trail[1:])]
    loop_edges = [graph.edge_between(a, b) for a, b in zip(loop, loop[1:])]
    return L, graph, trail_edges, loop_edges


def test_crossing_splits_into_path_and_cycle():
    L, graph, trail_edges, loop_edges = crossing_instance()
    decomp = decompose_symmetric_difference(graph, trail_edges + loop_edges, (), Plaquette(0, 2), Plaquette(2, 0))
    assert decomp.path == trail_edges
    assert len(decomp.cycles) == 1
    assert sorted(decomp.cycles[0]) == sorted(loop_edges)
    assert decomp.crossing_count == 1


def test_corrupted_difference_is_rejected():
    L, graph, trail_edges, loop_edges = crossing_instance()
    stray = graph.edge_between(Plaquette(4, 4), Plaquette(4, 5))
    with pytest.raises(InvariantViolation):
        decompose_symmetric_difference(graph, trail_edges + loop_edges, [stray], Plaquette(0, 2), Plaquette(2, 0))


def test_only_the_component_reaches_the_origin():
    L, graph, trail_edges, loop_edges = crossing_instance()
    decomp = decompose_symmetric_difference(graph, trail_edges + loop_edges, (), Plaquette(0, 2), Plaquette(2, 0))

    rotation = path_event(decomp, graph, L, EventParams(radius=0.75, search_mode="rotation",
                                                        vertex_simple_check=False))
    assert not rotation.near_origin
    assert rotation.min_distance == 1.0

    exhaustive = path_event(decomp, graph, L, EventParams(radius=0.75, vertex_simple_check=False))
    assert exhaustive.near_origin
    assert exhaustive.min_distance == 0.5
    assert sorted(exhaustive.witness) == sorted(trail_edges + loop_edges)


def test_vertex_simple_paths_skip_the_cycle():
    L, graph, trail_edges, loop_edges = crossing_instance()
    decomp = decompose_symmetric_difference(graph, trail_edges + loop_edges, (), Plaquette(0, 2), Plaquette(2, 0))

    event = path_event(decomp, graph, L, EventParams(radius=0.75))
    assert event.near_origin
    assert event.vertex_simple is False and not event.truncated
    assert path_event(decomp, graph, L, EventParams(radius=1.0)).vertex_simple is True

    capped = path_event(decomp, graph, L, EventParams(radius=1e9, enumeration_cap=1))
    assert capped.vertex_simple is None and capped.truncated


def test_vertex_simple_check_on_a_full_grid():
    L = build_strip(8, 8)
    component = nx.Graph()
    for e in L.edges:
        component.add_edge(e.u, e.v, id=e.id)
    ends = SimpleNamespace(x=(-8, -8), y=(8, 8))
    assert _vertex_simple_near(component, ends, L, 0.5, 10) == (True, False)
    assert _vertex_simple_near(component, ends, L, 0.25, 10) == (False, False)


def test_equal_magnitudes_never_isolate(strip_3_2):
    L = strip_3_2
    J = np.ones(L.num_edges)
    J[L.h_edge(0, L.n)] = -1.0
    check = isolation_row_check(L, J, 2 * L.n - 1)
    assert check.only_middle_frustrated
    assert check.light_heavy_edges == check.heavy_edges
    assert not is_isolation_row(L, J, 2 * L.n - 1)


def test_translated_events_agree_on_isolated_instances():
    L = build_strip(4, 2)
    for seed in range(100):
        params = EventParams(radius=(1.0, 2.5, 1e9)[seed % 3], vertex_simple_check=False)
        J = plant_isolation(L, seed).values
        primal = detect_primal(L, J, params)
        assert primal.isolated and primal.regular_pair
        translated = detect_dual_via_translation(L, J, params)
        assert translated.D == primal.A
        assert translated.BD == primal.BA


def test_trail_containment_at_equal_height():
    L = build_strip(3, 2)
    J = plant_isolation(L, 4).values
    result = check_observation1(J, 2, 3, 3)
    assert result.outcome is ObservationOutcome.HOLDS
    assert result.path == result.path_prime
    assert result.missing == []
