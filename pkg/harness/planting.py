#!/usr/bin/env python3
"""
Conditioned samplers: regular pairs, planted (dual) isolation, instance
extension by fresh rows, and the first regular-and-isolated scale.
"""

from typing import Iterable, List, Optional, Sequence

import numpy as np

from core.events import (dual_isolation_row_check, is_dually_isolated, is_isolated, is_regular_pair,
                         is_regular_pair_batch, isolation_row_check, regular_pair_constraints)
from core.instance import (AffineSystemGF2, CouplingAssignment, DualInstance, SeedLike, make_rng,
                           nested_parities_even, sample_couplings, sample_dual_instance)
from core.lattice import Plaquette, StripLattice, build_dual, build_extended_dual, build_strip, embed_edge_ids, \
    parity_blocks, restrict
from utils.error_handler import InvariantViolation, ValidationError
from utils.structured_logger import get_logger

logger = get_logger(__name__)


def _signed(magnitudes: np.ndarray, negative_bits: np.ndarray) -> np.ndarray:
    return magnitudes * (1.0 - 2.0 * np.asarray(negative_bits, dtype=float))


def sample_regular_pair(L_n: StripLattice, m: int, seed: SeedLike, method: str = "affine",
                        batch: int = 4096, max_batches: int = 256) -> Optional[CouplingAssignment]:
    """
    Gaussian couplings on C(n,k) conditioned on C(n,k), C(m,k) being a regular pair.

    Magnitudes are independent of signs, so conditioning acts on the sign bits
    alone. ``affine`` draws them uniformly from the solutions of the GF(2)
    system; ``rejection`` draws fair bits in batches until one passes and
    returns None when ``max_batches`` batches all fail.
    """
    rng = make_rng(seed)
    magnitudes = np.abs(rng.standard_normal(L_n.num_edges))

    if method == "affine":
        bits = AffineSystemGF2(*regular_pair_constraints(L_n, m)).sample(rng)
    elif method == "rejection":
        bits = None
        for _ in range(max_batches):
            candidates = rng.integers(0, 2, size=(batch, L_n.num_edges), dtype=np.uint8)
            passing = np.flatnonzero(is_regular_pair_batch(L_n, m, candidates))
            if passing.size:
                bits = candidates[passing[0]]
                break
        if bits is None:
            logger.debug("Rejection sampling found no regular pair",
                         extra={"structured_data": {"n": L_n.n, "m": m, "k": L_n.k, "batches": max_batches}})
            return None
    else:
        raise ValidationError(f"unknown regular-pair method '{method}'")

    values = _signed(magnitudes, bits)
    if not is_regular_pair(L_n, m, values):
        raise InvariantViolation("sampled signs do not form a regular pair", details={"method": method})
    return CouplingAssignment(values, seed if isinstance(seed, int) else None, f"gaussian-regular-{method}")


def _repair_signs(L: StripLattice, values: np.ndarray, variables: Sequence[int],
                  A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Flip signs on ``variables`` only, so that the sign bits satisfy A x = b."""
    variables = np.array(sorted(set(int(v) for v in variables)), dtype=np.int64)
    bits = (values < 0).astype(np.uint8)
    fixed = np.setdiff1d(np.arange(L.num_edges), variables)
    rhs = (b.astype(np.int64) + A[:, fixed].astype(np.int64) @ bits[fixed]) % 2
    system = AffineSystemGF2(A[:, variables], rhs)
    if not system.consistent:
        raise ValidationError("sign constraints cannot be met by the chosen edges")
    repaired = bits.copy()
    repaired[variables] = system.repair(bits[variables])
    return np.where(repaired == bits, values, -values)


def _row_edges(L: StripLattice, rows: Iterable[int]) -> List[int]:
    edges = set()
    for row in rows:
        for c in range(2 * L.k):
            edges.update(L.plaquette_edges(Plaquette(c, row)))
    return sorted(edges)


def _row_parity_constraints(L: StripLattice, rows: Iterable[int]):
    A, b = [], []
    for row in rows:
        for c in range(2 * L.k):
            line = np.zeros(L.num_edges, dtype=np.uint8)
            line[list(L.plaquette_edges(Plaquette(c, row)))] = 1
            A.append(line)
            b.append(int(c == L.k))
    return np.array(A, dtype=np.uint8), np.array(b, dtype=np.uint8)


def reinforce_isolation(L: StripLattice, J: np.ndarray, host: Optional[StripLattice] = None) -> np.ndarray:
    """
    Raise the heavy horizontal edges of both boundary rows of C(n,k) to 2S+1.

    J is indexed by ``host`` (default C(n,k)); signs are kept. Only the heavy
    edges change, and none of them enters either row's threshold S.
    """
    H = host or L
    values = np.array(J, dtype=float)
    targets = {}
    for row in (2 * L.n - 1, 0):
        check = isolation_row_check(L, values, row, H)
        for e in check.heavy_edges:
            targets[e] = max(targets.get(e, 0.0), 2.0 * check.threshold + 1.0)
    for e, magnitude in targets.items():
        if abs(values[e]) <= magnitude:
            values[e] = np.copysign(magnitude, values[e])
    return values


def plant_isolation(L: StripLattice, seed: SeedLike, regular_pair: bool = True) -> CouplingAssignment:
    """
    Gaussian couplings on C(n,k) made isolated by construction.

    Signs on the edges of the two boundary plaquette rows are repaired so that
    each row's only frustrated plaquette is its middle one (and, optionally,
    C(n,k), C(n-1,k) is a regular pair); then the heavy edges are raised.
    Every other edge keeps its sampled value.
    """
    rows = (2 * L.n - 1, 0)
    sampled = sample_couplings(L, seed)
    A, b = _row_parity_constraints(L, rows)
    if regular_pair:
        if L.n < 2:
            raise ValidationError("a planted regular pair needs n >= 2")
        A2, b2 = regular_pair_constraints(L, L.n - 1)
        A, b = np.vstack([A, A2]), np.concatenate([b, b2])

    values = _repair_signs(L, sampled.values, _row_edges(L, rows), A, b)
    values = reinforce_isolation(L, values)

    if not is_isolated(L, values) or (regular_pair and not is_regular_pair(L, L.n - 1, values)):
        raise InvariantViolation("planted couplings are not isolated", details={"n": L.n, "k": L.k})
    return CouplingAssignment(values, sampled.seed, "gaussian-planted", planted=True)


def plant_dual_isolation(L: StripLattice, seed: SeedLike) -> DualInstance:
    """
    A parity-sampled dual instance made dually isolated by construction.

    Boundary rows keep only their middle plaquette in T; a block whose parity
    this breaks toggles its plaquette at (first column, row 1). The inward
    vertical dual edges off the middle are raised to 2S+1.
    """
    if L.n < 2:
        raise ValidationError("dual planting needs n >= 2")
    rng = make_rng(seed)
    dual = sample_dual_instance(L, rng)
    G = build_dual(L)
    top = 2 * L.n - 1

    T = {p for p in dual.T if p.row not in (0, top)}
    T |= {Plaquette(L.k, 0), Plaquette(L.k, top)}
    for block in parity_blocks(G):
        if sum(1 for p in block if p in T) % 2:
            T ^= {Plaquette(min(p.col for p in block), 1)}

    weights = np.array(dual.weights, dtype=float)
    Gp = build_extended_dual(G)
    for row in (top, 0):
        check = dual_isolation_row_check(Gp, weights, T, row)
        for e in check.cross_edges:
            weights[e] = max(weights[e], 2.0 * check.threshold + 1.0)

    planted = DualInstance(L, weights, frozenset(T))
    if not is_dually_isolated(Gp, weights, planted.T) or not nested_parities_even(G, planted.T):
        raise InvariantViolation("planted dual instance is not dually isolated", details={"n": L.n, "k": L.k})
    return planted


def extend_couplings(J: np.ndarray, small: StripLattice, big: StripLattice, seed: SeedLike,
                     regular_pair: bool = True) -> CouplingAssignment:
    """
    Grow couplings on C(n,k) to C(n',k) with fresh Gaussian rows.

    Signs of the new edges are repaired so that C(n',k), C(n'-1,k) is a
    regular pair; the heavy edges of C(n,k) are then raised against the
    thresholds of the taller lattice, which keeps C(n,k) isolated there.
    """
    if small.k != big.k or big.n < small.n:
        raise ValidationError(f"{small!r} does not extend to {big!r}")
    rng = make_rng(seed)
    values = rng.standard_normal(big.num_edges)
    embed = embed_edge_ids(small, big)
    values[embed] = np.asarray(J, dtype=float)

    if regular_pair and big.n > small.n:
        fresh = np.setdiff1d(np.arange(big.num_edges), embed)
        A, b = regular_pair_constraints(big, big.n - 1)
        values = _repair_signs(big, values, fresh, A, b)
    if is_isolated(small, restrict(values, small, big)):
        values = reinforce_isolation(small, values, big)
    return CouplingAssignment(values, seed if isinstance(seed, int) else None, "gaussian-extended", planted=True)


def find_first_regular(J: np.ndarray, k: int, n_max: int, host: Optional[StripLattice] = None) -> Optional[int]:
    """
    Smallest n in max(k,2)..n_max with C(n,k) in R(n,k), or None.

    J is indexed by ``host`` (default C(n_max,k)), whose couplings also decide
    isolation.
    """
    H = host or build_strip(n_max, k)
    values = np.asarray(J, dtype=float)
    if values.shape != (H.num_edges,):
        raise ValidationError(f"expected {H.num_edges} couplings for {H!r}, got {values.shape}")
    for n in range(max(k, 2), min(n_max, H.n) + 1):
        L = build_strip(n, k)
        if is_regular_pair(L, n - 1, restrict(values, L, H)) and is_isolated(L, values, H):
            return n
    return None
