"""Greedy seed selection over sketch estimates with error-adaptive rebuilding."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numba as nb
import numpy as np

from ._parallel import thread_limit
from .diffusion import DEFAULT_EPS_C, ReachSet, simulate
from .errors import ValidationError
from .graph import CsrGraph
from .hashing import SampledGraph, SimulationSet
from .sketch import SeedSketch, SketchMatrix, estimate_from_sum, init_vertex_registers

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
DEFAULT_J = 256
DEFAULT_EPS_L = 0.3
DEFAULT_EPS_G = 0.01


@dataclass(frozen=True)
class ErrorPolicy:
    eps_l: float = DEFAULT_EPS_L
    eps_g: float = DEFAULT_EPS_G
    eps_c: float = DEFAULT_EPS_C

    def __post_init__(self):
        if min(self.eps_l, self.eps_g, self.eps_c) < 0:
            raise ValidationError("error thresholds must be >= 0")

    @classmethod
    def never_rebuild(cls, eps_c: float = DEFAULT_EPS_C) -> "ErrorPolicy":
        return cls(math.inf, math.inf, eps_c)

    @classmethod
    def always_rebuild(cls, eps_c: float = DEFAULT_EPS_C) -> "ErrorPolicy":
        return cls(0.0, 0.0, eps_c)


def estimation_errors(e: float, delta: float, sigma: float) -> tuple[float, float]:
    """(err_l, err_g); err_l is +inf when the marginal gain is not positive."""
    err_l = abs((e - delta) / delta) if delta > 0 else math.inf
    err_g = abs((e - delta) / sigma)
    return err_l, err_g


def should_rebuild(e: float, delta: float, sigma: float, policy: ErrorPolicy) -> bool:
    if sigma <= 0:
        raise ValidationError("sigma must be positive")
    err_l, err_g = estimation_errors(e, delta, sigma)
    return not (err_l < policy.eps_l or err_g < policy.eps_g)


@nb.njit(parallel=True, cache=True)
def _extend_reach(bits, sources, xadj, adj, hashes, thr, salts):
    # BFS per simulation from `sources`, skipping already-reached vertices
    J, n = bits.shape
    for j in nb.prange(J):
        queue = np.empty(n, dtype=np.int64)
        head = 0
        tail = 0
        row = bits[j]
        salt = salts[j]
        for s in sources:
            if not row[s]:
                row[s] = True
                queue[tail] = s
                tail += 1
        while head < tail:
            u = queue[head]
            head += 1
            for e in range(xadj[u], xadj[u + 1]):
                v = adj[e]
                if not row[v] and np.int64(salt ^ hashes[e]) < thr[e]:
                    row[v] = True
                    queue[tail] = v
                    tail += 1


def exact_reach(graph: CsrGraph, seeds: Sequence[int], sims: SimulationSet,
                sampled: Optional[SampledGraph] = None,
                threads: Optional[int] = None) -> tuple[ReachSet, float]:
    """Per-simulation reach of ``seeds`` on the same fused samples the sketches use."""
    if len(seeds) == 0:
        raise ValidationError("seed set must be nonempty")
    if sampled is None:
        sampled = SampledGraph.build(graph, sims)
    reach = ReachSet.empty(sims.J, graph.n)
    with thread_limit(threads):
        _extend_reach(reach.bits, np.asarray(seeds, dtype=np.int64), graph.xadj, graph.adj,
                      sampled.hashes, sampled.thresholds, sims.salts)
    return reach, reach.sigma()


@nb.njit(parallel=True, cache=True)
def _merged_sums(regs, ms, excluded, out):
    n, J = regs.shape
    for v in nb.prange(n):
        if excluded[v]:
            out[v] = -1
            continue
        s = 0
        for j in range(J):
            a = regs[v, j]
            b = ms[j]
            s += a if a > b else b
        out[v] = s


@dataclass
class Step:
    vertex: int
    estimate: float
    delta: float
    sigma: float
    err_l: float
    err_g: float
    rebuilt: bool


@dataclass
class SeedResult:
    seeds: list[int]
    steps: list[Step] = field(default_factory=list)
    sigma_final: float = 0.0
    builds: int = 0  # number of simulate passes, including the initial one

    @property
    def rebuilds(self) -> int:
        return sum(s.rebuilt for s in self.steps)

    def to_dict(self, graph: Optional[CsrGraph] = None, config: Optional[dict] = None) -> dict:
        def label(v):
            return int(graph.ids[v]) if graph is not None else int(v)

        def num(x):
            return None if math.isinf(x) or math.isnan(x) else x

        steps = []
        for s in self.steps:
            d = asdict(s)
            d["vertex"] = label(s.vertex)
            d["err_l"] = num(s.err_l)
            d["err_g"] = num(s.err_g)
            steps.append(d)
        return {
            "format_version": FORMAT_VERSION,
            "seeds": [label(v) for v in self.seeds],
            "steps": steps,
            "sigma_final": self.sigma_final,
            "builds": self.builds,
            "config": config or {},
        }

    def to_json(self, graph: Optional[CsrGraph] = None, config: Optional[dict] = None) -> str:
        return json.dumps(self.to_dict(graph, config), indent=2, sort_keys=True) + "\n"


def select_seeds(
    graph: CsrGraph,
    K: int,
    sims: SimulationSet,
    policy: ErrorPolicy = ErrorPolicy(),
    mode: str = "strict",
    threads: Optional[int] = None,
) -> SeedResult:
    """Pick K seeds greedily by sketch estimate, rebuilding sketches when they drift."""
    n, J = graph.n, sims.J
    if K < 0 or K > n:
        raise ValidationError(f"K must be in [0, n={n}], got {K}")
    result = SeedResult(seeds=[])
    if K == 0:
        return result

    sampled = SampledGraph.build(graph, sims)
    matrix = SketchMatrix.zeros(n, J)

    def build(reach: Optional[ReachSet]):
        init_vertex_registers(matrix, sims)
        simulate(graph, matrix, sims, reach, policy.eps_c, mode, threads, sampled)
        result.builds += 1

    build(None)
    ms = SeedSketch(J)
    reach = ReachSet.empty(J, n)
    in_seed = np.zeros(n, dtype=bool)
    stale = np.zeros(n, dtype=bool)  # blocked in every simulation as of the last rebuild
    sums = np.empty(n, dtype=np.int64)
    base = 0.0  # influence at the last rebuild

    for k in range(K):
        excluded = in_seed | stale
        if excluded.all():
            excluded = in_seed
        with thread_limit(threads):
            _merged_sums(matrix.regs, ms.regs, excluded, sums)
            s = int(np.argmax(sums))
            e = estimate_from_sum(int(sums[s]), J)
            in_seed[s] = True
            result.seeds.append(s)
            _extend_reach(reach.bits, np.array([s], dtype=np.int64), graph.xadj, graph.adj,
                          sampled.hashes, sampled.thresholds, sims.salts)
        sigma = reach.sigma()
        delta = sigma - base
        err_l, err_g = estimation_errors(e, delta, sigma)
        rebuild = not (err_l < policy.eps_l or err_g < policy.eps_g)
        if rebuild:
            if k + 1 < K:  # a rebuild after the last pick would never be read
                build(reach)
            ms.reset()
            base = sigma
            stale = reach.blocked_everywhere()
        else:
            ms.absorb(matrix.regs[s])
        result.steps.append(Step(s, e, delta, sigma, err_l, err_g, rebuild))
        log.debug("k=%d vertex=%d e=%.3f delta=%.3f sigma=%.3f err_l=%.4f err_g=%.4f rebuilt=%s",
                 k + 1, int(graph.ids[s]), e, delta, sigma, err_l, err_g, rebuild)
    result.sigma_final = reach.sigma()
    return result
