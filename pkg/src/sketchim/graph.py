"""Edge-list parsing, diffusion weights and the CSR graph used by every kernel."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import IO, Iterable, Optional, Union

import numpy as np

from .errors import ParseError, ValidationError

CACHE_MAGIC = b"CSR1"


@dataclass
class EdgeList:
    """Edges over compacted vertex IDs 0..n-1, possibly with duplicates."""

    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    ids: np.ndarray  # ids[i] is the original label of vertex i

    @property
    def n(self) -> int:
        return len(self.ids)

    def __len__(self) -> int:
        return len(self.src)

    def triples(self) -> list[tuple[int, int, float]]:
        return [(int(u), int(v), float(w)) for u, v, w in zip(self.src, self.dst, self.weight)]


def parse_edge_list(
    stream: Union[IO[str], Iterable[str]],
    directed: bool = True,
    comment_prefix: str = "#",
) -> EdgeList:
    """Read "u v" or "u v w" lines; IDs are compacted in first-appearance order."""
    index: dict[int, int] = {}
    src: list[int] = []
    dst: list[int] = []
    wts: list[float] = []

    def vid(label: int) -> int:
        i = index.get(label)
        if i is None:
            i = index[label] = len(index)
        return i

    for lineno, line in enumerate(stream, start=1):
        text = line.strip()
        if not text or (comment_prefix and text.startswith(comment_prefix)):
            continue
        parts = text.split()
        if len(parts) not in (2, 3):
            raise ParseError(lineno, text, "expected 'u v' or 'u v w'")
        try:
            a, b = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise ParseError(lineno, text, "non-numeric field") from None
        if w < 0 or not np.isfinite(w):
            raise ValidationError(f"line {lineno}: invalid weight {w}")
        u, v = vid(a), vid(b)
        src.append(u)
        dst.append(v)
        wts.append(w)
        if not directed:
            src.append(v)
            dst.append(u)
            wts.append(w)

    ids = np.empty(len(index), dtype=np.int64)
    for label, i in index.items():
        ids[i] = label
    return EdgeList(
        src=np.asarray(src, dtype=np.int64),
        dst=np.asarray(dst, dtype=np.int64),
        weight=np.asarray(wts, dtype=np.float64),
        ids=ids,
    )


def edges_from_arrays(src, dst, n: Optional[int] = None, weight=None) -> EdgeList:
    """Wrap already-compact integer arrays (generators, tests)."""
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    if n is None:
        n = int(max(src.max(initial=-1), dst.max(initial=-1))) + 1
    if weight is None:
        weight = np.ones(len(src))
    return EdgeList(src, dst, np.asarray(weight, dtype=np.float64), np.arange(n, dtype=np.int64))


@dataclass(frozen=True)
class Constant:
    w: float


@dataclass(frozen=True)
class WeightedCascade:
    pass


WeightModel = Union[Constant, WeightedCascade]


def parse_weight_model(spec: str) -> WeightModel:
    """``"const:0.01"`` or ``"wc"``."""
    spec = spec.strip().lower()
    if spec == "wc":
        return WeightedCascade()
    if spec.startswith("const:"):
        try:
            w = float(spec[len("const:"):])
        except ValueError:
            raise ValidationError(f"bad weight model {spec!r}") from None
        if not 0.0 <= w <= 1.0:
            raise ValidationError(f"constant weight must be in [0, 1], got {w}")
        return Constant(w)
    raise ValidationError(f"unknown weight model {spec!r} (use 'const:<w>' or 'wc')")


def _dedup_keys(edges: EdgeList) -> np.ndarray:
    keep = edges.src != edges.dst
    return np.unique(edges.src[keep] * max(edges.n, 1) + edges.dst[keep])


def assign_weights(edges: EdgeList, model: WeightModel) -> EdgeList:
    if isinstance(model, Constant):
        if not 0.0 <= model.w <= 1.0:
            raise ValidationError(f"constant weight must be in [0, 1], got {model.w}")
        weight = np.full(len(edges), float(model.w))
    elif isinstance(model, WeightedCascade):
        keys = _dedup_keys(edges)
        indeg = np.bincount(keys % max(edges.n, 1), minlength=edges.n)
        d = indeg[edges.dst]
        # self-loops are dropped at build time, their weight is irrelevant
        weight = np.where(d > 0, 1.0 / np.maximum(d, 1), 1.0)
    else:
        raise ValidationError(f"unknown weight model {model!r}")
    return EdgeList(edges.src, edges.dst, weight, edges.ids)


@dataclass(eq=False)
class CsrGraph:
    """Directed graph in compressed sparse row form. Treat as immutable."""

    xadj: np.ndarray  # int64, n+1
    adj: np.ndarray  # int32, m
    weight: np.ndarray  # float64, m
    in_degree: np.ndarray  # int64, n
    ids: np.ndarray  # original vertex labels

    def __post_init__(self):
        for a in (self.xadj, self.adj, self.weight, self.in_degree, self.ids):
            a.flags.writeable = False

    @property
    def n(self) -> int:
        return len(self.xadj) - 1

    @property
    def m(self) -> int:
        return len(self.adj)

    def out_degree(self) -> np.ndarray:
        return np.diff(self.xadj)

    def neighbors(self, u: int) -> np.ndarray:
        return self.adj[self.xadj[u]:self.xadj[u + 1]]

    def edges(self):
        """Yield (u, v, w) in CSR order."""
        for u in range(self.n):
            for e in range(self.xadj[u], self.xadj[u + 1]):
                yield u, int(self.adj[e]), float(self.weight[e])

    def sources(self) -> np.ndarray:
        return np.repeat(np.arange(self.n, dtype=np.int64), self.out_degree())

    @cached_property
    def reverse(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Transpose as (rxadj, radj, redge): in-neighbors u of v and forward edge slots."""
        order = np.argsort(self.adj, kind="stable")
        rxadj = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.adj, minlength=self.n), out=rxadj[1:])
        radj = self.sources()[order].astype(np.int32)
        return rxadj, radj, order.astype(np.int64)

    def index_of(self, labels: Iterable[int]) -> list[int]:
        lookup = {int(x): i for i, x in enumerate(self.ids)}
        out = []
        for label in labels:
            if int(label) not in lookup:
                raise ValidationError(f"unknown vertex id {label}")
            out.append(lookup[int(label)])
        return out


def build_csr(edges: EdgeList) -> CsrGraph:
    """Drop self-loops, merge duplicate (u, v) pairs keeping the max weight."""
    n = edges.n
    src, dst, w = edges.src, edges.dst, edges.weight
    if len(src) and (src.max() >= n or dst.max() >= n or min(src.min(), dst.min()) < 0):
        raise ValidationError("vertex id out of range")
    if len(w) and not (np.all(w >= 0) and np.all(w <= 1)):
        raise ValidationError("edge weights must be probabilities in [0, 1]; assign a weight model")
    keep = src != dst
    src, dst, w = src[keep], dst[keep], w[keep]
    # sort by (u, v, -w): first entry of each run carries the max weight
    order = np.lexsort((-w, dst, src))
    src, dst, w = src[order], dst[order], w[order]
    first = np.ones(len(src), dtype=bool)
    first[1:] = (src[1:] != src[:-1]) | (dst[1:] != dst[:-1])
    src, dst, w = src[first], dst[first], w[first]

    xadj = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=xadj[1:])
    return CsrGraph(
        xadj=xadj,
        adj=dst.astype(np.int32),
        weight=w.astype(np.float64),
        in_degree=np.bincount(dst, minlength=n).astype(np.int64),
        ids=np.asarray(edges.ids, dtype=np.int64).copy(),
    )


def load_graph(path: Union[str, Path], directed: bool = True,
               model: Optional[WeightModel] = None) -> CsrGraph:
    """Parse an edge list (or a CSR1 cache file) and build the graph."""
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == CACHE_MAGIC:
        g = read_csr_cache(path)
        if model is not None:
            g = reweight(g, model)
        return g
    with open(path) as fh:
        edges = parse_edge_list(fh, directed=directed)
    if model is not None:
        edges = assign_weights(edges, model)
    return build_csr(edges)


def reweight(g: CsrGraph, model: WeightModel) -> CsrGraph:
    if isinstance(model, Constant):
        if not 0.0 <= model.w <= 1.0:
            raise ValidationError(f"constant weight must be in [0, 1], got {model.w}")
        w = np.full(g.m, float(model.w))
    else:
        w = 1.0 / g.in_degree[g.adj].astype(np.float64)
    return CsrGraph(g.xadj.copy(), g.adj.copy(), w, g.in_degree.copy(), g.ids.copy())


def write_csr_cache(g: CsrGraph, path: Union[str, Path]) -> None:
    """Little-endian: "CSR1", n, m (u64), xadj, adj (u32), weight (f32)."""
    if g.m >= 2**32:
        raise ValidationError("graph too large for the 32-bit CSR cache")
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<QQ", g.n, g.m))
        fh.write(g.xadj.astype("<u4").tobytes())
        fh.write(g.adj.astype("<u4").tobytes())
        fh.write(g.weight.astype("<f4").tobytes())


def read_csr_cache(path: Union[str, Path]) -> CsrGraph:
    raw = Path(path).read_bytes()
    if raw[:4] != CACHE_MAGIC:
        raise ValidationError(f"{path}: not a CSR1 cache file")
    n, m = struct.unpack_from("<QQ", raw, 4)
    off = 20
    xadj = np.frombuffer(raw, "<u4", n + 1, off).astype(np.int64)
    off += 4 * (n + 1)
    adj = np.frombuffer(raw, "<u4", m, off).astype(np.int32)
    off += 4 * m
    weight = np.frombuffer(raw, "<f4", m, off).astype(np.float64)
    if off + 4 * m != len(raw) or xadj[0] != 0 or xadj[-1] != m:
        raise ValidationError(f"{path}: corrupt CSR1 cache")
    return CsrGraph(xadj, adj, weight, np.bincount(adj, minlength=n).astype(np.int64),
                    np.arange(n, dtype=np.int64))
