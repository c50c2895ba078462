"""Small graph generators for tests, benchmarks and desk-scale fixtures."""
from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .graph import EdgeList, edges_from_arrays


def star(leaves: int, center: int = 0) -> EdgeList:
    others = [v for v in range(leaves + 1) if v != center]
    return edges_from_arrays([center] * leaves, others, n=leaves + 1)


def disjoint_stars(*sizes: int) -> EdgeList:
    src, dst, base = [], [], 0
    for size in sizes:
        src += [base] * size
        dst += list(range(base + 1, base + size + 1))
        base += size + 1
    return edges_from_arrays(src, dst, n=base)


def path(n: int) -> EdgeList:
    return edges_from_arrays(np.arange(n - 1), np.arange(1, n), n=n)


def erdos_renyi(n: int, p: float, seed: int = 0, directed: bool = True) -> EdgeList:
    """G(n, p) without self-loops."""
    rng = np.random.default_rng(seed)
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    if not directed:
        mask = np.triu(mask, 1)
        mask = mask | mask.T
    src, dst = np.nonzero(mask)
    return edges_from_arrays(src, dst, n=n)


def gnm(n: int, m: int, seed: int = 0) -> EdgeList:
    """Directed graph with m uniformly drawn (u, v) pairs; duplicates merge at build time."""
    rng = np.random.default_rng(seed)
    src = rng.integers(0, n, size=m)
    dst = rng.integers(0, n, size=m)
    return edges_from_arrays(src, dst, n=n)


def preferential_attachment(n: int, k: int, seed: int = 0) -> EdgeList:
    """Undirected Barabasi-Albert graph (both directions emitted)."""
    import networkx as nx

    g = nx.barabasi_albert_graph(n, k, seed=seed)
    e = np.asarray(list(g.edges()), dtype=np.int64).reshape(-1, 2)
    return edges_from_arrays(np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]], n=n)


def from_spec(spec: str) -> EdgeList:
    """Parse ``"kind:key=val,..."``, e.g. ``"gnm:n=1000,m=5000,seed=1"`` or ``"ba:n=15235,k=2"``."""
    kind, _, rest = spec.partition(":")
    kw = {}
    for item in filter(None, rest.split(",")):
        key, _, val = item.partition("=")
        kw[key.strip()] = float(val) if "." in val else int(val)
    makers = {
        "star": lambda: star(int(kw["leaves"])),
        "path": lambda: path(int(kw["n"])),
        "er": lambda: erdos_renyi(int(kw["n"]), float(kw["p"]), int(kw.get("seed", 0))),
        "gnm": lambda: gnm(int(kw["n"]), int(kw["m"]), int(kw.get("seed", 0))),
        "ba": lambda: preferential_attachment(int(kw["n"]), int(kw["k"]), int(kw.get("seed", 0))),
    }
    if kind not in makers:
        raise ValidationError(f"unknown generator {kind!r}; choose from {sorted(makers)}")
    try:
        return makers[kind]()
    except KeyError as exc:
        raise ValidationError(f"generator {kind!r} needs parameter {exc}") from None
