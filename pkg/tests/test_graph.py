import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sketchim.errors import ParseError, ValidationError
from sketchim.graph import (
    Constant,
    WeightedCascade,
    assign_weights,
    build_csr,
    edges_from_arrays,
    load_graph,
    parse_edge_list,
    parse_weight_model,
    read_csr_cache,
    reweight,
    write_csr_cache,
)


def parse(text, **kw):
    return parse_edge_list(io.StringIO(text), **kw)


def test_parse_directed():
    e = parse("0 1\n1 2\n")
    assert e.triples() == [(0, 1, 1.0), (1, 2, 1.0)]


def test_parse_undirected_emits_both_directions():
    e = parse("0 1\n", directed=False)
    assert sorted(e.triples()) == [(0, 1, 1.0), (1, 0, 1.0)]


def test_duplicates_merge_at_build():
    g = build_csr(parse("5 9\n9 5\n5 9\n"))
    assert g.m == 2
    assert list(g.ids) == [5, 9]


def test_ids_compacted_in_first_appearance_order():
    e = parse("# header\n100 7\n\n7 3 0.5\n")
    assert list(e.ids) == [100, 7, 3]
    assert e.triples() == [(0, 1, 1.0), (1, 2, 0.5)]


@pytest.mark.parametrize("line", ["1\n", "1 2 3 4\n", "a b\n", "1 2 x\n"])
def test_malformed_line_reports_line_number(line):
    with pytest.raises(ParseError) as info:
        parse("0 1\n" + line)
    assert info.value.lineno == 2


def test_negative_weight_rejected():
    with pytest.raises(ValidationError):
        parse("0 1 -0.5\n")


def test_constant_weights():
    e = assign_weights(parse("0 1\n1 2\n"), Constant(0.01))
    assert np.all(e.weight == 0.01)


@pytest.mark.parametrize("w", [-0.1, 1.5])
def test_constant_out_of_range(w):
    with pytest.raises(ValidationError):
        assign_weights(parse("0 1\n"), Constant(w))


def test_weighted_cascade():
    # vertex 4 has in-degree 4, vertex 5 in-degree 1; duplicates don't count twice
    e = parse("0 4\n1 4\n2 4\n3 4\n0 4\n4 5\n")
    e = assign_weights(e, WeightedCascade())
    g = build_csr(e)
    by_edge = {(int(g.ids[u]), int(g.ids[v])): w for u, v, w in g.edges()}
    assert all(by_edge[(u, 4)] == 0.25 for u in range(4))
    assert by_edge[(4, 5)] == 1.0


def test_parse_weight_model():
    assert parse_weight_model("const:0.1") == Constant(0.1)
    assert parse_weight_model("WC") == WeightedCascade()
    for bad in ["const:2", "const:x", "lt"]:
        with pytest.raises(ValidationError):
            parse_weight_model(bad)


def test_csr_small():
    g = build_csr(edges_from_arrays([0, 0, 1], [1, 2, 2], n=3))
    assert list(g.xadj) == [0, 2, 3, 3]
    assert list(g.adj) == [1, 2, 2]
    assert list(g.in_degree) == [0, 1, 2]


def test_csr_empty():
    g = build_csr(edges_from_arrays([], [], n=3))
    assert list(g.xadj) == [0, 0, 0, 0]
    assert g.m == 0


def test_toy_graph(toy_graph):
    assert (toy_graph.n, toy_graph.m) == (4, 6)
    # labels 1..4 compact to 0..3
    assert list(toy_graph.out_degree()) == [3, 1, 1, 1]
    assert list(toy_graph.in_degree) == [0, 2, 3, 1]


def test_self_loops_dropped_and_max_weight_kept():
    g = build_csr(edges_from_arrays([0, 0, 0, 1], [0, 1, 1, 0], n=2, weight=[1.0, 0.2, 0.7, 0.3]))
    assert list(g.edges()) == [(0, 1, 0.7), (1, 0, 0.3)]


def test_graph_arrays_read_only(toy_graph):
    with pytest.raises(ValueError):
        toy_graph.adj[0] = 3


def test_reverse_matches_forward(toy_graph):
    rxadj, radj, redge = toy_graph.reverse
    src = toy_graph.sources()
    for v in range(toy_graph.n):
        for k in range(rxadj[v], rxadj[v + 1]):
            e = redge[k]
            assert toy_graph.adj[e] == v and src[e] == radj[k]
    assert rxadj[-1] == toy_graph.m


def test_cache_round_trip(tmp_path, toy_graph):
    path = tmp_path / "g.csr"
    write_csr_cache(toy_graph, path)
    raw = path.read_bytes()
    assert raw[:4] == b"CSR1"
    assert len(raw) == 4 + 16 + 4 * (toy_graph.n + 1) + 8 * toy_graph.m
    g = read_csr_cache(path)
    assert np.array_equal(g.xadj, toy_graph.xadj)
    assert np.array_equal(g.adj, toy_graph.adj)
    assert np.allclose(g.weight, toy_graph.weight)
    assert np.array_equal(g.in_degree, toy_graph.in_degree)
    assert load_graph(path).m == toy_graph.m


def test_reweight_wc(toy_graph):
    g = reweight(toy_graph, WeightedCascade())
    for u, v, w in g.edges():
        assert w == 1.0 / toy_graph.in_degree[v]


edge_lists = st.lists(st.tuples(st.integers(0, 30), st.integers(0, 30),
                                st.floats(0, 1, allow_nan=False)), max_size=80)


@settings(max_examples=150, deadline=None)
@given(edge_lists, st.booleans())
def test_csr_invariants_and_round_trip(triples, directed):
    text = "".join(f"{u} {v} {w!r}\n" for u, v, w in triples)
    e = parse(text, directed=directed)
    g = build_csr(e)
    assert g.xadj[0] == 0 and g.xadj[-1] == g.m
    assert np.all(np.diff(g.xadj) >= 0)
    assert np.all(g.adj < max(g.n, 1))
    assert np.all((g.weight >= 0) & (g.weight <= 1))
    assert g.out_degree().sum() == g.m == g.in_degree.sum()

    expected = {}
    for u, v, w in e.triples():
        if u != v:
            expected[(u, v)] = max(w, expected.get((u, v), -1.0))
    assert {(u, v): w for u, v, w in g.edges()} == expected
    assert len(expected) == g.m


@settings(max_examples=100, deadline=None)
@given(edge_lists)
def test_weighted_cascade_incoming_equal(triples):
    text = "".join(f"{u} {v}\n" for u, v, _ in triples)
    g = build_csr(assign_weights(parse(text), WeightedCascade()))
    for u, v, w in g.edges():
        assert w == pytest.approx(1.0 / g.in_degree[v])


def test_raw_weight_above_one_needs_model():
    e = parse("0 1 2\n")
    with pytest.raises(ValidationError):
        build_csr(e)
    assert build_csr(assign_weights(e, Constant(0.1))).weight[0] == 0.1
