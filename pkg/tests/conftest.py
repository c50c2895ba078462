import io

import numpy as np
import pytest
from hypothesis import settings

from sketchim.graph import Constant, assign_weights, build_csr, edges_from_arrays, parse_edge_list

# first calls pay for JIT compilation
settings.register_profile("default", deadline=None)
settings.load_profile("default")

# 4 vertices / 6 directed edges with labels 1..4 (compacted to 0..3)
TOY_EDGES = "1 2\n1 3\n1 4\n2 3\n4 3\n3 2\n"

_acceptance_lines: list[str] = []


def record_criterion(number: int, name: str, ok: bool, detail: str) -> None:
    line = f"[criterion {number}] {'PASS' if ok else 'FAIL'} {name}: {detail}"
    _acceptance_lines.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture
def toy_graph():
    edges = parse_edge_list(io.StringIO(TOY_EDGES))
    return build_csr(assign_weights(edges, Constant(0.5)))


def random_graph(rng, n, p, w_lo=0.05, w_hi=1.0):
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    src, dst = np.nonzero(mask)
    weight = rng.uniform(w_lo, w_hi, size=len(src))
    return build_csr(edges_from_arrays(src, dst, n=n, weight=weight))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
