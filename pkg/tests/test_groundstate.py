import math

import numpy as np
import pytest

from core.groundstate import (boundary_condition_spins, brute_force_cgroundstate, cgroundstate,
                              dissatisfied_edges, energy, integrate_spins)
from core.instance import sample_couplings
from core.lattice import build_strip
from utils.error_handler import InvariantViolation, ValidationError


def test_ferromagnet(strip_3_2):
    J = np.full(strip_3_2.num_edges, 2.0)
    state = cgroundstate(strip_3_2, J)
    assert np.all(state.spins.spins == 1)
    assert len(state.dissatisfied) == 0
    assert state.sacrificed is None
    assert state.energy == -2.0 * strip_3_2.num_edges


def test_odd_boundary_sacrifices_cheapest_edge(strip_2_1):
    L = strip_2_1
    J = np.full(L.num_edges, 3.0)
    _, cycle = L.boundary_cycle()
    J[cycle[2]] = -3.0
    J[cycle[5]] = 0.5
    bc = boundary_condition_spins(L, J)
    assert bc.sacrificed == cycle[5]
    state = cgroundstate(L, J)
    assert state.sacrificed == cycle[5]
    assert cycle[5] in state.dissatisfied
    assert state.spins[(-L.k, -L.n)] == 1


def test_boundary_walk_satisfies_even_boundary(strip_2_1):
    L = strip_2_1
    J = sample_couplings(L, 4).values
    _, cycle = L.boundary_cycle()
    J[cycle] = np.abs(J[cycle])
    J[cycle[0]] *= -1
    J[cycle[3]] *= -1
    bc = boundary_condition_spins(L, J)
    assert bc.sacrificed is None
    for t, e in enumerate(cycle):
        u, v = bc.vertices[t], bc.vertices[(t + 1) % len(bc.vertices)]
        assert J[e] * bc.spins[u] * bc.spins[v] > 0


@pytest.mark.parametrize("seed", range(15))
@pytest.mark.parametrize("n,k", [(1, 1), (2, 1), (2, 2), (3, 2)])
def test_matches_spin_enumeration(n, k, seed):
    L = build_strip(n, k)
    J = sample_couplings(L, 1000 * n + 100 * k + seed)
    state = cgroundstate(L, J)
    _, oracle_energy = brute_force_cgroundstate(L, J)
    assert math.isclose(state.energy, oracle_energy, rel_tol=1e-9, abs_tol=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_energy_identity(strip_3_2, seed):
    J = sample_couplings(strip_3_2, seed).values
    state = cgroundstate(strip_3_2, J)
    magnitudes = np.abs(J)
    join_weight = state.tjoin.weight + (magnitudes[state.sacrificed] if state.sacrificed is not None else 0.0)
    assert math.isclose(state.energy, -math.fsum(magnitudes) + 2.0 * join_weight, rel_tol=1e-9)
    assert state.dissatisfied == dissatisfied_edges(strip_3_2, J, state.spins)
    assert state.dissatisfied.parity_ok(strip_3_2, state.T)


def test_global_flip_keeps_energy(strip_3_2):
    J = sample_couplings(strip_3_2, 8)
    state = cgroundstate(strip_3_2, J)
    sigma, flipped = state.pair
    assert energy(strip_3_2, J, sigma) == energy(strip_3_2, J, flipped)
    assert flipped.canonical() == sigma


def test_integrate_rejects_inconsistent_mask(strip_2_1):
    J = np.ones(strip_2_1.num_edges)
    mask = np.zeros(strip_2_1.num_edges, dtype=bool)
    mask[strip_2_1.v_edge(0, 0)] = True
    with pytest.raises(InvariantViolation):
        integrate_spins(strip_2_1, J, mask)


def test_wrong_coupling_count(strip_2_1):
    with pytest.raises(ValidationError):
        cgroundstate(strip_2_1, np.ones(5))


def test_oracle_interior_limit():
    L = build_strip(3, 3)
    with pytest.raises(ValidationError):
        brute_force_cgroundstate(L, sample_couplings(L, 0))
