"""Per-vertex Flajolet-Martin register matrices."""
from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from .errors import ValidationError
from .hashing import SimulationSet, murmur3_u32

PHI = 0.77351
SEED_VERTEX = 0x5BD1E995
SEED_SIM = 0x27D4EB2F
MAX_REGISTER = 32


@nb.njit(cache=True)
def clz32(x):
    x = np.uint32(x)
    if x == 0:
        return 32
    n = 0
    while not (x & np.uint32(0x80000000)):
        x = np.uint32(x << np.uint32(1))
        n += 1
    return n


@nb.njit(cache=True)
def _init_registers(regs):
    n, J = regs.shape
    hj = np.empty(J, dtype=np.uint32)
    for j in range(J):
        hj[j] = murmur3_u32(j, SEED_SIM)
    for v in range(n):
        hv = murmur3_u32(v, SEED_VERTEX)
        for j in range(J):
            regs[v, j] = clz32(hv ^ hj[j])


@nb.njit(cache=True)
def _union_registers(items, out):
    J = out.shape[0]
    hj = np.empty(J, dtype=np.uint32)
    for j in range(J):
        hj[j] = murmur3_u32(j, SEED_SIM)
    for i in range(items.shape[0]):
        hv = murmur3_u32(items[i], SEED_VERTEX)
        for j in range(J):
            r = clz32(hv ^ hj[j])
            if r > out[j]:
                out[j] = r


def count_distinct_registers(items, J: int) -> np.ndarray:
    """Merged registers of an arbitrary multiset of 32-bit item ids."""
    items = np.asarray(items, dtype=np.uint32)
    out = np.zeros(J, dtype=np.uint8)
    _union_registers(items, out)
    return out


def init_registers(n: int, J: int) -> np.ndarray:
    """M_v[j] = clz(hash(v) ^ hash(j)) as an (n, J) uint8 array."""
    regs = np.empty((n, J), dtype=np.uint8)
    _init_registers(regs)
    return regs


@dataclass
class SketchMatrix:
    """n x J registers, row-major so the J registers of a vertex are contiguous."""

    regs: np.ndarray

    @classmethod
    def zeros(cls, n: int, J: int) -> "SketchMatrix":
        return cls(np.zeros((n, J), dtype=np.uint8))

    @property
    def n(self) -> int:
        return self.regs.shape[0]

    @property
    def J(self) -> int:
        return self.regs.shape[1]

    def row(self, v: int) -> np.ndarray:
        return self.regs[v]

    def copy(self) -> "SketchMatrix":
        return SketchMatrix(self.regs.copy())


def init_vertex_registers(matrix: SketchMatrix, sims: SimulationSet) -> None:
    if matrix.J != sims.J:
        raise ValidationError(f"matrix has {matrix.J} registers per vertex, sims has J={sims.J}")
    _init_registers(matrix.regs)


def merge(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValidationError(f"register length mismatch: {a.shape} vs {b.shape}")
    return np.maximum(a, b)


def estimate(regs: np.ndarray) -> float:
    """2^mean(M) / phi."""
    regs = np.asarray(regs)
    if regs.size == 0:
        raise ValidationError("cannot estimate from an empty register vector")
    return float(2.0 ** (regs.astype(np.float64).mean()) / PHI)


@nb.njit(cache=True)
def merged_sum(a, b):
    s = 0
    for j in range(a.shape[0]):
        s += max(a[j], b[j])
    return s


def estimate_from_sum(total: int, J: int) -> float:
    return float(2.0 ** (total / J) / PHI)


def estimate_merged(seed_sketch: np.ndarray, vertex_row: np.ndarray) -> float:
    """estimate(merge(seed_sketch, vertex_row)) without building the merged vector."""
    if seed_sketch.shape != vertex_row.shape:
        raise ValidationError("register length mismatch")
    return estimate_from_sum(int(merged_sum(seed_sketch, vertex_row)), len(seed_sketch))


class SeedSketch:
    """Registers M_S' summarising the seeds picked since the last rebuild."""

    def __init__(self, J: int):
        self.regs = np.zeros(J, dtype=np.uint8)

    def absorb(self, row: np.ndarray) -> None:
        np.maximum(self.regs, row, out=self.regs)

    def reset(self) -> None:
        self.regs[:] = 0

    def estimate_with(self, row: np.ndarray) -> float:
        return estimate_merged(self.regs, row)
