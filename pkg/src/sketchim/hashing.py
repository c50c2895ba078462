"""Murmur3 edge hashing, per-simulation salts and the fused-sampling predicate.

An edge (u, v) is live in simulation r iff ``(salt[r] ^ h(u, v)) / H_MAX < w``.
Kernels use an equivalent integer test ``(salt[r] ^ h) < threshold(w)`` where the
threshold is found by bisection on the very same double-precision expression;
correctly rounded division by a positive constant is monotone, so both tests agree
for every 31-bit input.
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from typing import IO, Union

import numba as nb
import numpy as np

from .errors import ValidationError
from .graph import CsrGraph

H_MAX = 2**31 - 1
HASH_MASK = 0x7FFFFFFF
EDGE_SEED = 0

_C1 = 0xCC9E2D51
_C2 = 0x1B873593
_M32 = 0xFFFFFFFF


def _fmix(h: int) -> int:
    h ^= h >> 16
    h = (h * 0x85EBCA6B) & _M32
    h ^= h >> 13
    h = (h * 0xC2B2AE35) & _M32
    h ^= h >> 16
    return h


def murmur3_32(data: bytes, seed: int = 0) -> int:
    """MurmurHash3 x86_32 of ``data``."""
    data = bytes(data)
    length = len(data)
    h = seed & _M32
    nblocks = length // 4
    for (k,) in struct.iter_unpack("<I", data[: nblocks * 4]):
        k = (k * _C1) & _M32
        k = ((k << 15) | (k >> 17)) & _M32
        k = (k * _C2) & _M32
        h ^= k
        h = ((h << 13) | (h >> 19)) & _M32
        h = (h * 5 + 0xE6546B64) & _M32
    tail = data[nblocks * 4:]
    if tail:
        k = int.from_bytes(tail, "little")
        k = (k * _C1) & _M32
        k = ((k << 15) | (k >> 17)) & _M32
        k = (k * _C2) & _M32
        h ^= k
    return _fmix(h ^ length)


@nb.njit(inline="always")
def _rotl(x, r):
    return ((x << np.uint32(r)) | (x >> np.uint32(32 - r))) & np.uint32(0xFFFFFFFF)


@nb.njit(inline="always")
def _mix_block(h, k):
    k = np.uint32(k * np.uint32(_C1))
    k = _rotl(k, 15)
    k = np.uint32(k * np.uint32(_C2))
    h = h ^ k
    h = _rotl(h, 13)
    return np.uint32(h * np.uint32(5) + np.uint32(0xE6546B64))


@nb.njit(inline="always")
def _finalize(h, length):
    h = h ^ np.uint32(length)
    h ^= h >> np.uint32(16)
    h = np.uint32(h * np.uint32(0x85EBCA6B))
    h ^= h >> np.uint32(13)
    h = np.uint32(h * np.uint32(0xC2B2AE35))
    h ^= h >> np.uint32(16)
    return h


@nb.njit(cache=True)
def murmur3_u32(x, seed):
    """Murmur3 of the 4-byte little-endian encoding of ``x``."""
    return _finalize(_mix_block(np.uint32(seed), np.uint32(x)), 4)


@nb.njit(cache=True)
def murmur3_u32x2(a, b, seed):
    """Murmur3 of the 8-byte little-endian concatenation a || b."""
    h = _mix_block(np.uint32(seed), np.uint32(a))
    h = _mix_block(h, np.uint32(b))
    return _finalize(h, 8)


def edge_hash(u: int, v: int) -> int:
    """h(u, v) = Murmur3(u || v) mod 2^31 with u, v as 32-bit little-endian words."""
    return murmur3_32(struct.pack("<II", u, v), EDGE_SEED) & HASH_MASK


@nb.njit(cache=True)
def _edge_hashes(xadj, adj, out):
    n = xadj.shape[0] - 1
    for u in range(n):
        for e in range(xadj[u], xadj[u + 1]):
            out[e] = murmur3_u32x2(u, adj[e], EDGE_SEED) & np.uint32(HASH_MASK)


@dataclass(frozen=True)
class EdgeHashCache:
    hashes: np.ndarray  # uint32, per CSR edge slot

    @classmethod
    def build(cls, graph: CsrGraph) -> "EdgeHashCache":
        out = np.empty(graph.m, dtype=np.uint32)
        _edge_hashes(graph.xadj, graph.adj, out)
        out.flags.writeable = False
        return cls(out)


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step; returns (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return state, z ^ (z >> 31)


@dataclass(frozen=True)
class SimulationSet:
    """Salts X_r, one per simulation; together with the graph they fix every sample."""

    salts: np.ndarray
    master_seed: int = 0
    h_max: int = field(default=H_MAX)

    @classmethod
    def from_seed(cls, J: int, master_seed: int = 0) -> "SimulationSet":
        if J < 1:
            raise ValidationError(f"J must be >= 1, got {J}")
        state = master_seed & 0xFFFFFFFFFFFFFFFF
        salts = np.empty(J, dtype=np.uint32)
        for r in range(J):
            state, z = splitmix64(state)
            salts[r] = z >> 33
        salts.flags.writeable = False
        return cls(salts, master_seed)

    @property
    def J(self) -> int:
        return len(self.salts)


def sample_probability(h: int, r: int, sims: SimulationSet) -> float:
    return float(int(sims.salts[r]) ^ int(h)) / float(sims.h_max)


def edge_live(h: int, r: int, sims: SimulationSet, w: float) -> bool:
    return sample_probability(h, r, sims) < w


@nb.njit(cache=True)
def _live_thresholds(weight, h_max, out):
    # out[e] = #{x in [0, 2^31) : x / h_max < weight[e]}
    hm = float(h_max)
    for e in range(weight.shape[0]):
        w = weight[e]
        lo = 0
        hi = 2**31
        while lo < hi:
            mid = (lo + hi) // 2
            if float(mid) / hm < w:
                lo = mid + 1
            else:
                hi = mid
        out[e] = lo


def live_thresholds(weight: np.ndarray, h_max: int = H_MAX) -> np.ndarray:
    """Per-edge integer thresholds; ``(salt ^ h) < t`` iff the edge is live."""
    out = np.empty(len(weight), dtype=np.int64)
    _live_thresholds(np.asarray(weight, dtype=np.float64), h_max, out)
    return out


@dataclass(frozen=True)
class SampledGraph:
    """Everything a fused-sampling kernel needs, precomputed once per graph."""

    graph: CsrGraph
    sims: SimulationSet
    hashes: np.ndarray
    thresholds: np.ndarray

    @classmethod
    def build(cls, graph: CsrGraph, sims: SimulationSet) -> "SampledGraph":
        return cls(graph, sims, EdgeHashCache.build(graph).hashes,
                   live_thresholds(graph.weight, sims.h_max))

    def live_mask(self, r: int) -> np.ndarray:
        """Boolean mask over CSR edge slots for simulation r."""
        x = self.hashes.astype(np.int64) ^ int(self.sims.salts[r])
        return x < self.thresholds


@dataclass
class BiasReport:
    edges: np.ndarray  # bin edges, length bins+1
    counts: np.ndarray
    draws: int
    cdf_deciles: np.ndarray  # empirical CDF at 0.1, 0.2, ..., 1.0
    max_deviation: float  # sup_x |F(x) - x|

    @property
    def expected(self) -> np.ndarray:
        return np.full(len(self.counts), self.draws / len(self.counts))

    @property
    def bias(self) -> np.ndarray:
        return (self.counts - self.expected) / self.expected

    def rows(self):
        for lo, hi, c, ex, b in zip(self.edges[:-1], self.edges[1:], self.counts,
                                    self.expected, self.bias):
            yield float(lo), float(hi), int(c), float(ex), float(b)

    def write_csv(self, fh: IO[str]) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin_lo", "bin_hi", "count", "expected", "bias"])
        for lo, hi, c, ex, b in self.rows():
            writer.writerow([f"{lo:.6g}", f"{hi:.6g}", c, f"{ex:.6g}", f"{b:.6g}"])


def bias_report(graph: CsrGraph, sims: SimulationSet, samples: Union[int, None] = None,
                bins: int = 100) -> BiasReport:
    """Empirical distribution of P(u,v)_r over the first ``samples`` (edge, r) pairs.

    Pairs are enumerated edge-major in CSR order; ``samples=None`` uses all m*J.
    """
    if graph.m == 0:
        raise ValidationError("bias report needs a graph with at least one edge")
    total = graph.m * sims.J
    if samples is None:
        samples = total
    if not 1 <= samples <= total:
        raise ValidationError(f"samples must be in [1, m*J={total}], got {samples}")
    hashes = EdgeHashCache.build(graph).hashes
    n_edges = -(-samples // sims.J)
    x = (hashes[:n_edges, None] ^ sims.salts[None, :]).ravel()[:samples]
    p = np.sort(x.astype(np.float64) / float(sims.h_max))

    k = np.arange(1, samples + 1)
    ks = max(np.max(k / samples - p), np.max(p - (k - 1) / samples))
    deciles = np.searchsorted(p, np.linspace(0.1, 1.0, 10), side="right") / samples
    edges = np.linspace(0.0, 1.0, bins + 1)
    counts, _ = np.histogram(p, bins=edges)
    return BiasReport(edges, counts, samples, deciles, float(ks))
