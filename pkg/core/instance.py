#!/usr/bin/env python3
"""
Problem instances: Gaussian couplings, frustration sets, parity-constrained T
samples, GF(2) affine systems over sign bits, and the text instance format.
"""

import struct
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Union

import numpy as np

from core.lattice import (Plaquette, PlaquetteGrid, StripLattice, build_dual, build_strip, edge_count,
                          parity_blocks)
from utils.error_handler import ParseError, ValidationError
from utils.structured_logger import get_logger

logger = get_logger(__name__)

FORMAT_NAME = "frustra-instance"
FORMAT_VERSION = "v1"
MODES = ("signed", "dual", "planted")

FrustrationSet = FrozenSet[Plaquette]
SeedLike = Union[int, np.random.Generator, None]
Sampler = Callable[[np.random.Generator, int], np.ndarray]


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def gaussian_sampler(rng: np.random.Generator, size: int) -> np.ndarray:
    return rng.standard_normal(size)


@dataclass
class CouplingAssignment:
    """Signed coupling per edge id, with the seed and sampler that produced it."""
    values: np.ndarray
    seed: Optional[int] = None
    generator: str = "gaussian"
    planted: bool = False

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CouplingAssignment):
            return NotImplemented
        return (self.values.tobytes() == other.values.tobytes() and self.seed == other.seed
                and self.generator == other.generator and self.planted == other.planted)


@dataclass
class DualInstance:
    """Weights on C(n,k)* and a plaquette set T."""
    lattice: StripLattice
    weights: np.ndarray
    T: FrustrationSet

    @property
    def grid(self) -> PlaquetteGrid:
        return build_dual(self.lattice)


@dataclass
class Instance:
    """
    A serializable instance on C(n,k).

    ``couplings`` is present for signed and planted instances (``weights`` is
    then ``|couplings|`` and ``T`` their frustration set); dual instances carry
    weights and T only.
    """
    n: int
    k: int
    weights: np.ndarray
    T: FrustrationSet
    couplings: Optional[np.ndarray] = None
    seed: Optional[int] = None
    mode: str = "signed"
    planted: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"unknown instance mode '{self.mode}'")
        if np.any(~(self.weights > 0)):
            raise ValidationError("instance weights must be strictly positive")
        L = self.lattice
        outside = [p for p in self.T if not L.contains_plaquette(p)]
        if outside:
            raise ValidationError(f"T holds plaquettes outside {L!r}: {sorted(outside)[:5]}")

    @property
    def lattice(self) -> StripLattice:
        return build_strip(self.n, self.k)

    @property
    def signed(self) -> bool:
        return self.couplings is not None

    def to_dual(self) -> DualInstance:
        return DualInstance(self.lattice, self.weights, self.T)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        same_couplings = (self.couplings is None and other.couplings is None) or (
            self.couplings is not None and other.couplings is not None
            and self.couplings.tobytes() == other.couplings.tobytes())
        return (self.n, self.k, self.seed, self.mode, self.planted, self.T) == \
            (other.n, other.k, other.seed, other.mode, other.planted, other.T) \
            and self.weights.tobytes() == other.weights.tobytes() and same_couplings

    @classmethod
    def from_couplings(cls, L: StripLattice, J: Union[CouplingAssignment, np.ndarray],
                       seed: Optional[int] = None) -> "Instance":
        values = J.values if isinstance(J, CouplingAssignment) else np.asarray(J, dtype=float)
        planted = isinstance(J, CouplingAssignment) and J.planted
        if seed is None and isinstance(J, CouplingAssignment):
            seed = J.seed
        return cls(L.n, L.k, np.abs(values), frustration_from_couplings(L, values), values.copy(), seed,
                   "planted" if planted else "signed", planted)

    @classmethod
    def from_dual(cls, dual: DualInstance, seed: Optional[int] = None, planted: bool = False) -> "Instance":
        L = dual.lattice
        return cls(L.n, L.k, np.asarray(dual.weights, dtype=float), frozenset(dual.T), None, seed, "dual", planted)


# --- sampling ---------------------------------------------------------------

def sample_couplings(L: StripLattice, seed: SeedLike, sampler: Optional[Sampler] = None) -> CouplingAssignment:
    """i.i.d. couplings per edge (standard normal unless another sampler is plugged in)."""
    rng = make_rng(seed)
    draw = sampler or gaussian_sampler
    values = np.asarray(draw(rng, L.num_edges), dtype=float)
    if values.shape != (L.num_edges,) or not np.all(np.isfinite(values)):
        raise ValidationError("coupling sampler must return one finite value per edge")
    return CouplingAssignment(values, seed if isinstance(seed, int) else None,
                              getattr(draw, "__name__", "custom").replace("_sampler", ""))


def frustration_mask(L: StripLattice, J: np.ndarray) -> np.ndarray:
    """Boolean per plaquette index: odd number of negative bounding edges."""
    negative = np.asarray(J) < 0
    return (negative[..., L.plaquette_edge_array].sum(axis=-1) % 2).astype(bool)


def frustration_from_couplings(L: StripLattice, J: Union[CouplingAssignment, np.ndarray]) -> FrustrationSet:
    values = J.values if isinstance(J, CouplingAssignment) else J
    return frozenset(L.plaquette_from_index(int(p)) for p in np.flatnonzero(frustration_mask(L, values)))


def negative_boundary_parity(L: StripLattice, J: np.ndarray, k_sub: Optional[int] = None,
                             n_sub: Optional[int] = None) -> int:
    """Parity (0 or 1) of the negative couplings on the boundary of the centered C(n_sub, k_sub)."""
    ids = L.sub_boundary_edges(n_sub or L.n, k_sub or L.k)
    return int(np.count_nonzero(np.asarray(J)[ids] < 0) % 2)


def sample_T_parity(G: PlaquetteGrid, seed: SeedLike) -> FrustrationSet:
    """
    Uniform T subject to |T ∩ C(n,k')| even for every k' <= k.

    Each parity block (central block, then each unit ring) gets fair bits on
    all but its last plaquette; the last bit repairs the block's parity.
    """
    rng = make_rng(seed)
    chosen: List[Plaquette] = []
    for block in parity_blocks(G):
        bits = rng.integers(0, 2, size=len(block))
        bits[-1] = int(bits[:-1].sum() % 2)
        chosen.extend(p for p, bit in zip(block, bits) if bit)
    return frozenset(chosen)


def nested_parities_even(G: PlaquetteGrid, T: Iterable[Plaquette]) -> bool:
    members = set(T)
    return all(sum(1 for p in block if p in members) % 2 == 0 for block in parity_blocks(G))


def sample_dual_instance(L: StripLattice, seed: SeedLike) -> DualInstance:
    """Weights |N(0,1)| and a parity-sampled T, both from one seeded stream."""
    rng = make_rng(seed)
    weights = np.abs(rng.standard_normal(L.num_edges))
    return DualInstance(L, weights, sample_T_parity(build_dual(L), rng))


def dual_view(L: StripLattice, J: Union[CouplingAssignment, np.ndarray]) -> DualInstance:
    """The dual instance of signed couplings: weights |J| and T the frustrated plaquettes."""
    values = J.values if isinstance(J, CouplingAssignment) else np.asarray(J)
    return DualInstance(L, np.abs(values), frustration_from_couplings(L, values))


# --- GF(2) affine systems -------------------------------------------------------

class AffineSystemGF2:
    """
    Solutions of A x = b over GF(2), kept in reduced row echelon form.

    Columns are eliminated in the given order, so variables listed first
    become pivots (the ones rewritten by ``repair``).
    """

    def __init__(self, A: np.ndarray, b: np.ndarray):
        A = np.asarray(A, dtype=np.uint8) % 2
        b = np.asarray(b, dtype=np.uint8) % 2
        if A.ndim != 2 or b.shape != (A.shape[0],):
            raise ValidationError(f"affine system shapes do not match: {A.shape} vs {b.shape}")
        self.num_vars = A.shape[1]
        M = np.concatenate([A, b[:, None]], axis=1)
        pivots: List[int] = []
        r = 0
        for c in range(self.num_vars):
            if r == M.shape[0]:
                break
            hits = np.flatnonzero(M[r:, c])
            if hits.size == 0:
                continue
            p = r + int(hits[0])
            if p != r:
                M[[r, p]] = M[[p, r]]
            others = np.flatnonzero(M[:, c])
            others = others[others != r]
            M[others] ^= M[r]
            pivots.append(c)
            r += 1
        self.consistent = not bool(M[r:, -1].any())
        self.reduced = M[:r]
        self.pivots = np.array(pivots, dtype=np.int64)
        pivot_set = set(pivots)
        self.free = np.array([c for c in range(self.num_vars) if c not in pivot_set], dtype=np.int64)

    @property
    def dimension(self) -> int:
        return int(self.free.size)

    def _complete(self, free_values: np.ndarray) -> np.ndarray:
        if not self.consistent:
            raise ValidationError("affine system over GF(2) has no solution")
        x = np.zeros(self.num_vars, dtype=np.uint8)
        x[self.free] = free_values
        if self.pivots.size:
            R = self.reduced[:, :-1]
            x[self.pivots] = (self.reduced[:, -1] + R[:, self.free] @ free_values) % 2
        return x

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """A uniform solution: free variables fair, pivots determined."""
        return self._complete(rng.integers(0, 2, size=self.free.size).astype(np.uint8))

    def repair(self, x: np.ndarray) -> np.ndarray:
        """The solution agreeing with ``x`` on every free variable."""
        return self._complete(np.asarray(x, dtype=np.uint8)[self.free] % 2)

    def satisfied_by(self, x: np.ndarray) -> bool:
        if not self.consistent:
            return False
        R = self.reduced[:, :-1]
        return bool(np.all((R.astype(np.int64) @ np.asarray(x, dtype=np.int64)) % 2 == self.reduced[:, -1]))


def solve_affine_gf2(A: np.ndarray, b: np.ndarray) -> AffineSystemGF2:
    return AffineSystemGF2(A, b)


# --- serialization -------------------------------------------------------------

def _encode_float(value: float) -> str:
    return struct.pack(">d", float(value)).hex()


def _decode_float(text: str, line: int, field: str) -> float:
    if len(text) != 16:
        raise ParseError(f"expected 16 hex digits, got '{text}'", line=line, field=field)
    try:
        return struct.unpack(">d", bytes.fromhex(text))[0]
    except ValueError:
        raise ParseError(f"invalid hex float '{text}'", line=line, field=field)


def serialize(instance: Instance) -> bytes:
    """Line-oriented text; signed/planted instances store J, dual instances store weights."""
    L = instance.lattice
    values = instance.couplings if instance.couplings is not None else instance.weights
    seed = "none" if instance.seed is None else str(instance.seed)
    lines = [f"{FORMAT_NAME} {FORMAT_VERSION} n={L.n} k={L.k} seed={seed} "
             f"mode={instance.mode} planted={'true' if instance.planted else 'false'}"]
    for e in L.edges:
        lines.append(f"E {e.id} {e.u[0]} {e.u[1]} {e.v[0]} {e.v[1]} {_encode_float(values[e.id])}")
    T = sorted(instance.T)
    lines.extend(f"T {p.col} {p.row}" for p in T)
    lines.append(f"END {L.num_edges} {len(T)}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _parse_int(text: str, line: int, field: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"expected an integer, got '{text}'", line=line, field=field)


def _parse_header(text: str) -> Dict[str, str]:
    tokens = text.split()
    if len(tokens) < 2 or tokens[0] != FORMAT_NAME:
        raise ParseError(f"not a {FORMAT_NAME} file", line=1, field="header")
    if tokens[1] != FORMAT_VERSION:
        raise ParseError(f"unsupported version '{tokens[1]}'", line=1, field="version")
    fields: Dict[str, str] = {}
    for token in tokens[2:]:
        if "=" not in token:
            raise ParseError(f"malformed header token '{token}'", line=1, field="header")
        key, value = token.split("=", 1)
        if key not in ("n", "k", "seed", "mode", "planted"):
            raise ParseError(f"unknown header field '{key}'", line=1, field=key)
        fields[key] = value
    for required in ("n", "k", "seed"):
        if required not in fields:
            raise ParseError(f"header is missing '{required}'", line=1, field=required)
    return fields


def deserialize(data: Union[bytes, str]) -> Instance:
    """
    Parse the instance format; nothing is returned unless the whole file is valid.

    Raises:
        ParseError: with the offending line number and field
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"instance file is not UTF-8: {e}", line=None, field="encoding")
    lines = data.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError("empty instance file", line=1, field="header")

    header = _parse_header(lines[0])
    n = _parse_int(header["n"], 1, "n")
    k = _parse_int(header["k"], 1, "k")
    if n < 1 or k < 1:
        raise ParseError(f"n and k must be positive (n={n}, k={k})", line=1, field="n" if n < 1 else "k")
    seed = None if header["seed"] == "none" else _parse_int(header["seed"], 1, "seed")
    mode = header.get("mode", "signed")
    if mode not in MODES:
        raise ParseError(f"unknown mode '{mode}'", line=1, field="mode")
    planted_text = header.get("planted", "false")
    if planted_text not in ("true", "false"):
        raise ParseError(f"planted must be true or false, got '{planted_text}'", line=1, field="planted")

    expected = edge_count(n, k)
    edge_lines = sum(1 for raw in lines[1:] if raw.split()[:1] == ["E"])
    if edge_lines < expected:
        raise ParseError(f"truncated instance: {edge_lines} of {expected} edges",
                         line=len(lines) + 1, field="END")

    L = build_strip(n, k)
    values = np.empty(L.num_edges, dtype=float)
    T: List[Plaquette] = []
    edges_read = 0
    end_seen = False

    for line_number, raw in enumerate(lines[1:], start=2):
        parts = raw.split()
        if not parts:
            continue
        if end_seen:
            raise ParseError("content after END", line=line_number, field="END")
        tag = parts[0]
        if tag == "E":
            if len(parts) != 7:
                raise ParseError("edge lines need 7 fields", line=line_number, field="E")
            if T:
                raise ParseError("edge line after T lines", line=line_number, field="E")
            eid = _parse_int(parts[1], line_number, "id")
            if eid != edges_read or eid >= L.num_edges:
                raise ParseError(f"expected edge id {edges_read}, got {eid}", line=line_number, field="id")
            coords = [_parse_int(x, line_number, "coordinates") for x in parts[2:6]]
            e = L.edges[eid]
            if (coords[0], coords[1]) != e.u or (coords[2], coords[3]) != e.v:
                raise ParseError(f"coordinates {coords} do not match edge {eid}", line=line_number,
                                 field="coordinates")
            value = _decode_float(parts[6], line_number, "value")
            if not np.isfinite(value) or value == 0 or (mode == "dual" and value < 0):
                raise ParseError(f"invalid edge value {value!r}", line=line_number, field="value")
            values[eid] = value
            edges_read += 1
        elif tag == "T":
            if len(parts) != 3:
                raise ParseError("T lines need 3 fields", line=line_number, field="T")
            p = Plaquette(_parse_int(parts[1], line_number, "col"), _parse_int(parts[2], line_number, "row"))
            if not L.contains_plaquette(p):
                raise ParseError(f"plaquette {tuple(p)} outside the lattice", line=line_number, field="T")
            if p in T:
                raise ParseError(f"duplicate plaquette {tuple(p)}", line=line_number, field="T")
            T.append(p)
        elif tag == "END":
            if len(parts) != 3:
                raise ParseError("END line needs 3 fields", line=line_number, field="END")
            declared_edges = _parse_int(parts[1], line_number, "END")
            declared_t = _parse_int(parts[2], line_number, "END")
            if declared_edges != L.num_edges or edges_read != L.num_edges:
                raise ParseError(f"expected {L.num_edges} edges, read {edges_read}", line=line_number, field="END")
            if declared_t != len(T):
                raise ParseError(f"END declares {declared_t} T lines, read {len(T)}", line=line_number,
                                 field="END")
            end_seen = True
        else:
            raise ParseError(f"unknown line tag '{tag}'", line=line_number, field="tag")

    if not end_seen:
        raise ParseError(f"truncated instance: {edges_read} of {L.num_edges} edges, no END line",
                         line=len(lines) + 1, field="END")

    T_set = frozenset(T)
    if mode == "dual":
        return Instance(n, k, values, T_set, None, seed, mode, planted_text == "true")

    derived = frustration_from_couplings(L, values)
    if derived != T_set:
        raise ParseError("T lines disagree with the frustration of the couplings", line=None, field="T")
    return Instance(n, k, np.abs(values), T_set, values, seed, mode, planted_text == "true")
