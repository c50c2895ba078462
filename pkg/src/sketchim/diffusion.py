"""Pull-based fused-sampling diffusion over the sketch registers.

Each iteration, every vertex u with at least one live out-neighbor v pulls
``M_u[j] = max(M_u[j], M_v[j])`` for every simulation j where (u, v) is sampled
and u is not already reached by the seed set. Vertices whose registers changed
form the next live set.

In ``strict`` mode reads come from a snapshot of the previous iteration, so the
result does not depend on scheduling or thread count. ``relaxed`` mode reads
rows in place; with ``eps_c=0`` it reaches the same fixpoint.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numba as nb
import numpy as np

from ._parallel import thread_limit
from .errors import ValidationError
from .graph import CsrGraph
from .hashing import SampledGraph, SimulationSet
from .sketch import SketchMatrix

log = logging.getLogger(__name__)

DEFAULT_EPS_C = 0.02
MODES = ("strict", "relaxed")


@dataclass
class ReachSet:
    """bits[j, v] is True iff v is reached from the seed set in simulation j."""

    bits: np.ndarray

    @classmethod
    def empty(cls, J: int, n: int) -> "ReachSet":
        return cls(np.zeros((J, n), dtype=bool))

    @property
    def J(self) -> int:
        return self.bits.shape[0]

    @property
    def n(self) -> int:
        return self.bits.shape[1]

    def sizes(self) -> np.ndarray:
        return self.bits.sum(axis=1)

    def sigma(self) -> float:
        return float(self.bits.sum()) / self.J

    def blocked_everywhere(self) -> np.ndarray:
        return self.bits.all(axis=0)


@dataclass
class FrontierState:
    live: np.ndarray  # vertex ids of L
    iteration: int
    elapsed: float = 0.0


def frontier_stats(state: FrontierState) -> dict:
    return {"live_count": int(len(state.live)), "iteration": state.iteration}


@nb.njit(parallel=True, cache=True)
def _mark_in_neighbors(live, rxadj, radj, mark):
    for i in nb.prange(live.shape[0]):
        v = live[i]
        for k in range(rxadj[v], rxadj[v + 1]):
            mark[radj[k]] = 1


@nb.njit(parallel=True, cache=True)
def _pull(cand, xadj, adj, hashes, thr, salts, live_flag, blocked, bcount, src, regs, changed):
    J = regs.shape[1]
    for i in nb.prange(cand.shape[0]):
        u = cand[i]
        c = False
        partial = bcount[u] > 0
        for e in range(xadj[u], xadj[u + 1]):
            v = adj[e]
            t = thr[e]
            if live_flag[v] == 0 or t == 0:
                continue
            h = hashes[e]
            for j in range(J):
                if np.int64(salts[j] ^ h) < t:
                    if partial and blocked[u, j]:
                        continue
                    val = src[v, j]
                    if val > regs[u, j]:
                        regs[u, j] = val
                        c = True
        changed[u] = c


@nb.njit(parallel=True, cache=True)
def _sync_rows(dst, src, rows):
    for i in nb.prange(rows.shape[0]):
        u = rows[i]
        for j in range(src.shape[1]):
            dst[u, j] = src[u, j]


def simulate(
    graph: CsrGraph,
    matrix: SketchMatrix,
    sims: SimulationSet,
    reach: Optional[ReachSet] = None,
    eps_c: float = DEFAULT_EPS_C,
    mode: str = "strict",
    threads: Optional[int] = None,
    sampled: Optional[SampledGraph] = None,
    on_iteration: Optional[Callable[[FrontierState], None]] = None,
) -> SketchMatrix:
    """Converge ``matrix`` in place and return it.

    Stops once ``|L| / n <= eps_c`` (or L is empty).
    """
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")
    if eps_c < 0:
        raise ValidationError("eps_c must be >= 0")
    n, J = graph.n, sims.J
    if matrix.regs.shape != (n, J):
        raise ValidationError(f"matrix shape {matrix.regs.shape} != ({n}, {J})")
    if sampled is None:
        sampled = SampledGraph.build(graph, sims)
    rxadj, radj, _ = graph.reverse

    if reach is None:
        blocked = np.zeros((1, J), dtype=np.uint8)
        bcount = np.zeros(n, dtype=np.int64)
    else:
        if reach.bits.shape != (J, n):
            raise ValidationError("reach set shape does not match (J, n)")
        blocked = np.ascontiguousarray(reach.bits.T).view(np.uint8)
        bcount = reach.bits.sum(axis=0).astype(np.int64)
    unblocked = bcount < J

    regs = matrix.regs
    src = regs.copy() if mode == "strict" else regs
    live = np.arange(n, dtype=np.int64)
    live_flag = np.ones(n, dtype=np.uint8)
    mark = np.zeros(n, dtype=np.uint8)
    changed = np.zeros(n, dtype=np.bool_)
    state = FrontierState(live, 0)
    t0 = time.perf_counter()

    with thread_limit(threads):
        while len(live) > 0 and len(live) / n > eps_c:
            mark[:] = 0
            _mark_in_neighbors(live, rxadj, radj, mark)
            cand = np.flatnonzero(mark.view(bool) & unblocked)
            changed[:] = False
            _pull(cand, graph.xadj, graph.adj, sampled.hashes, sampled.thresholds,
                  sims.salts, live_flag, blocked, bcount, src, regs, changed)
            live = np.flatnonzero(changed)
            live_flag[:] = 0
            live_flag[live] = 1
            if mode == "strict":
                _sync_rows(src, regs, live)
            state = FrontierState(live, state.iteration + 1, time.perf_counter() - t0)
            log.debug("diffusion iteration=%d live_count=%d elapsed=%.4f",
                      state.iteration, len(live), state.elapsed)
            if on_iteration is not None:
                on_iteration(state)
    return matrix
