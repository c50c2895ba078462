"""Independent sample-then-diffuse Monte-Carlo evaluator and a greedy baseline.

Round r draws one mt19937 output per edge, in CSR order, from a generator seeded
with ``(rng_seed + r) mod 2^32``. An edge is kept when ``x / 2^32 < w``. Nothing
here touches the hash-based samples used by the seeder.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import IO, Iterable, Optional, Sequence

import numba as nb
import numpy as np

from ._parallel import thread_limit
from .errors import ValidationError
from .graph import CsrGraph

DEFAULT_R = 10_000
GREEDY_SIZE_WARNING = 50_000

_N = 624
_M = 397


@nb.njit(cache=True)
def mt_seed(state, seed):
    state[0] = np.uint32(seed)
    for i in range(1, _N):
        prev = state[i - 1]
        state[i] = np.uint32(np.uint32(1812433253) * (prev ^ (prev >> np.uint32(30))) + np.uint32(i))


@nb.njit(cache=True)
def mt_twist(state):
    upper = np.uint32(0x80000000)
    lower = np.uint32(0x7FFFFFFF)
    mag = np.uint32(0x9908B0DF)
    one = np.uint32(1)
    zero = np.uint32(0)
    for i in range(_N - _M):
        y = (state[i] & upper) | (state[i + 1] & lower)
        state[i] = state[i + _M] ^ (y >> one) ^ (mag if y & one else zero)
    for i in range(_N - _M, _N - 1):
        y = (state[i] & upper) | (state[i + 1] & lower)
        state[i] = state[i + _M - _N] ^ (y >> one) ^ (mag if y & one else zero)
    y = (state[_N - 1] & upper) | (state[0] & lower)
    state[_N - 1] = state[_M - 1] ^ (y >> one) ^ (mag if y & one else zero)


@nb.njit(cache=True)
def mt_temper(y):
    y ^= y >> np.uint32(11)
    y ^= (y << np.uint32(7)) & np.uint32(0x9D2C5680)
    y ^= (y << np.uint32(15)) & np.uint32(0xEFC60000)
    y ^= y >> np.uint32(18)
    return y


@nb.njit(cache=True)
def mt_fill(seed, out):
    """First out.size outputs of std::mt19937(seed)."""
    state = np.empty(_N, dtype=np.uint32)
    mt_seed(state, seed)
    i = _N
    for k in range(out.shape[0]):
        if i >= _N:
            mt_twist(state)
            i = 0
        out[k] = mt_temper(state[i])
        i += 1


@nb.njit(cache=True)
def _sample_live(seed, weight, state, live):
    mt_seed(state, seed)
    i = _N
    for e in range(weight.shape[0]):
        if i >= _N:
            mt_twist(state)
            i = 0
        x = mt_temper(state[i])
        i += 1
        live[e] = float(x) * 2.3283064365386963e-10 < weight[e]


@nb.njit(cache=True)
def _bfs(sources, xadj, adj, live, seen, queue, blocked):
    # marks reached vertices in `seen`; they are listed in queue[:return value]
    head = 0
    tail = 0
    for s in sources:
        if not seen[s] and not blocked[s]:
            seen[s] = True
            queue[tail] = s
            tail += 1
    while head < tail:
        u = queue[head]
        head += 1
        for e in range(xadj[u], xadj[u + 1]):
            v = adj[e]
            if live[e] and not seen[v] and not blocked[v]:
                seen[v] = True
                queue[tail] = v
                tail += 1
    return tail


@nb.njit(cache=True)
def _bfs_count(sources, xadj, adj, live, seen, queue, blocked):
    # seen must be all False on entry and is left that way
    tail = _bfs(sources, xadj, adj, live, seen, queue, blocked)
    for k in range(tail):
        seen[queue[k]] = False
    return tail


@nb.njit(parallel=True, cache=True)
def _influence_rounds(seeds, xadj, adj, weight, rng_seed, R, nt, counts):
    n = xadj.shape[0] - 1
    m = adj.shape[0]
    for t in nb.prange(nt):
        state = np.empty(_N, dtype=np.uint32)
        live = np.empty(m, dtype=np.bool_)
        seen = np.zeros(n, dtype=np.bool_)
        queue = np.empty(n, dtype=np.int64)
        none = np.zeros(n, dtype=np.bool_)
        for r in range(t, R, nt):
            _sample_live((rng_seed + r) & 0xFFFFFFFF, weight, state, live)
            counts[r] = _bfs_count(seeds, xadj, adj, live, seen, queue, none)


@dataclass(frozen=True)
class OracleConfig:
    R: int = DEFAULT_R
    rng_seed: int = 0

    def __post_init__(self):
        if self.R < 1:
            raise ValidationError(f"R must be >= 1, got {self.R}")
        if not 0 <= self.rng_seed < 2**64:
            raise ValidationError("rng_seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class OracleScore:
    mean: float
    stderr: float
    R: int
    seed_set_size: int


def round_counts(graph: CsrGraph, seeds: Sequence[int], config: OracleConfig,
                 threads: Optional[int] = None) -> np.ndarray:
    """Number of vertices reached from ``seeds`` in each of the R rounds."""
    seeds = np.unique(np.asarray(list(seeds), dtype=np.int64))
    if len(seeds) and (seeds.min() < 0 or seeds.max() >= graph.n):
        raise ValidationError("seed vertex out of range")
    counts = np.zeros(config.R, dtype=np.int64)
    if len(seeds) == 0:
        return counts
    with thread_limit(threads):
        _influence_rounds(seeds, graph.xadj, graph.adj, graph.weight,
                          config.rng_seed & 0xFFFFFFFF, config.R, nb.get_num_threads(), counts)
    return counts


def oracle_influence(graph: CsrGraph, seeds: Sequence[int], config: OracleConfig = OracleConfig(),
                     threads: Optional[int] = None) -> OracleScore:
    counts = round_counts(graph, seeds, config, threads).astype(np.float64)
    k = len(set(int(s) for s in seeds))
    stderr = float(counts.std(ddof=1) / math.sqrt(config.R)) if config.R > 1 else 0.0
    return OracleScore(float(counts.mean()), stderr, config.R, k)


def write_scores_csv(scores: Iterable[OracleScore], fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["seed_set_size", "mean", "stderr", "R"])
    for s in scores:
        writer.writerow([s.seed_set_size, f"{s.mean:.6f}", f"{s.stderr:.6f}", s.R])


@nb.njit(parallel=True, cache=True)
def _greedy_gains(in_seed, seeds, xadj, adj, weight, base_seed, R, gains):
    # gains[t, v] accumulates |reach(v) \ reach(S)| over the rounds handled by thread t
    n = xadj.shape[0] - 1
    m = adj.shape[0]
    nt = gains.shape[0]
    for t in nb.prange(nt):
        state = np.empty(_N, dtype=np.uint32)
        live = np.empty(m, dtype=np.bool_)
        seen = np.zeros(n, dtype=np.bool_)
        queue = np.empty(n, dtype=np.int64)
        blocked = np.zeros(n, dtype=np.bool_)
        none = np.zeros(n, dtype=np.bool_)
        single = np.empty(1, dtype=np.int64)
        for r in range(t, R, nt):
            _sample_live((base_seed + r) & 0xFFFFFFFF, weight, state, live)
            blocked[:] = False
            if seeds.shape[0] > 0:
                _bfs(seeds, xadj, adj, live, blocked, queue, none)
            for v in range(n):
                if in_seed[v] or blocked[v]:
                    continue
                has_out = False
                for e in range(xadj[v], xadj[v + 1]):
                    if live[e] and not blocked[adj[e]]:
                        has_out = True
                        break
                if not has_out:
                    gains[t, v] += 1
                    continue
                single[0] = v
                gains[t, v] += _bfs_count(single, xadj, adj, live, seen, queue, blocked)


def greedy_baseline(graph: CsrGraph, K: int, config: OracleConfig = OracleConfig(),
                    threads: Optional[int] = None) -> list[int]:
    """Classic Monte-Carlo greedy; step k uses R fresh rounds seeded rng_seed + k*R + r."""
    n = graph.n
    if K < 0 or K > n:
        raise ValidationError(f"K must be in [0, n={n}], got {K}")
    if n > GREEDY_SIZE_WARNING:
        warnings.warn(f"greedy baseline on n={n} vertices is O(K R n sigma) and may be very slow")
    seeds: list[int] = []
    in_seed = np.zeros(n, dtype=np.bool_)
    with thread_limit(threads):
        nt = nb.get_num_threads()
        for k in range(K):
            gains = np.zeros((nt, n), dtype=np.int64)
            _greedy_gains(in_seed, np.asarray(seeds, dtype=np.int64), graph.xadj, graph.adj,
                          graph.weight, (config.rng_seed + k * config.R) & 0xFFFFFFFF, config.R, gains)
            total = gains.sum(axis=0)
            total[in_seed] = -1
            s = int(np.argmax(total))
            seeds.append(s)
            in_seed[s] = True
    return seeds
