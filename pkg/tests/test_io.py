from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coexnet.cluster import cluster_network
from coexnet.data import DataMatrix, read_data, read_labels, tiny_dataset_path, write_data
from coexnet.errors import DegenerateColumnError, ParseError
from coexnet.graph import UndirectedGraph
from coexnet.io import (
    GraphDocument,
    cluster_graph_document,
    cluster_table,
    gene_table,
    graph_from_dot,
    graph_from_graphml,
    graph_from_json,
    labels_document,
    model_from_json,
    model_to_json,
    read_cluster_table,
    read_gene_table,
    read_graph,
    write_cluster_rows,
    write_gene_rows,
    write_graph,
)
from coexnet.stats import fit_model

READERS = {"json": graph_from_json, "graphml": graph_from_graphml, "dot": graph_from_dot}


def fig2_documents(fig2):
    g, lab = fig2
    names = [f"v{k + 1}" for k in range(11)]
    cg, genes = cluster_network(g, lab, Fraction(6, 11))
    return labels_document(g, names, lab), cluster_graph_document(cg), (cg, genes, names, lab)


@pytest.mark.parametrize("fmt", ["json", "graphml", "dot"])
def test_graph_round_trip_is_byte_identical(fig2, fmt):
    for doc in fig2_documents(fig2)[:2]:
        text = write_graph(doc, fmt)
        back = READERS[fmt](text)
        assert back.graph == doc.graph
        assert write_graph(back, fmt) == text


@pytest.mark.parametrize("fmt", ["graphml", "dot"])
def test_cross_format_preserves_json(fig2, fmt):
    doc = fig2_documents(fig2)[1]
    ref = write_graph(doc, "json")
    assert write_graph(READERS[fmt](write_graph(doc, fmt)), "json") == ref


def test_dot_colours_and_labels(fig2):
    text = write_graph(fig2_documents(fig2)[0], "dot")
    assert text.startswith("graph")
    assert 'label="v5"' in text and "red" in text and "blue" in text
    assert "0 -- 1;" in text


def test_read_graph_dispatch(tmp_path, fig2):
    doc = fig2_documents(fig2)[0]
    for fmt, suffix in (("json", ".json"), ("graphml", ".graphml"), ("dot", ".dot")):
        path = tmp_path / f"g{suffix}"
        path.write_text(write_graph(doc, fmt))
        assert read_graph(path).graph == doc.graph
    with pytest.raises(ValueError):
        write_graph(doc, "csv")


def test_bad_graph_json():
    with pytest.raises(ParseError):
        graph_from_json("{not json")
    with pytest.raises(ParseError):
        graph_from_json('{"format": "coexnet.graph/0", "vertex_count": 1, "edges": []}')
    with pytest.raises(ParseError):
        graph_from_json('{"format": "coexnet.graph/1", "vertex_count": 2, "edges": [[0, 5]]}')
    with pytest.raises(ParseError):
        graph_from_json('{"format": "coexnet.graph/1", "vertex_count": 2, "edges": [], "attrs": {"name": ["a"]}}')


@settings(max_examples=80, deadline=None)
@given(
    st.integers(1, 8).flatmap(
        lambda p: st.tuples(
            st.just(p),
            st.lists(st.tuples(st.integers(0, p - 1), st.integers(0, p - 1)).filter(lambda e: e[0] != e[1])),
            st.lists(st.text(st.characters(blacklist_categories=("Cs", "Cc")), min_size=1, max_size=6), min_size=p, max_size=p, unique=True),
            st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=p, max_size=p),
        )
    ),
    st.sampled_from(["json", "graphml", "dot"]),
)
def test_round_trip_property(case, fmt):
    p, edges, names, weights = case
    doc = GraphDocument(UndirectedGraph(p, edges), {"name": names, "rho": weights, "de": [k % 2 for k in range(p)]})
    text = write_graph(doc, fmt)
    back = READERS[fmt](text)
    assert back.graph == doc.graph
    assert back.attrs["name"] == names
    assert write_graph(back, fmt) == text


def test_cluster_and_gene_tables(fig2):
    _, _, (cg, genes, names, lab) = fig2_documents(fig2)
    ct = cluster_table(cg, names)
    rows = read_cluster_table(ct)
    assert [r["members"] for r in rows] == [["v1", "v3", "v10"], ["v2", "v5", "v6", "v7"], ["v4", "v8", "v9", "v11"]]
    assert write_cluster_rows(rows) == ct
    gt = gene_table(cg, genes, names, lab)
    grows = read_gene_table(gt)
    assert [r["rho"] is None for r in grows] == [not x for x in lab]
    assert write_gene_rows(grows) == gt
    with pytest.raises(ParseError):
        read_cluster_table("a,b\n")
    with pytest.raises(ParseError):
        read_gene_table("")


def test_model_snapshot(rng):
    d = DataMatrix(rng.standard_normal((20, 4)))
    m = fit_model(d, UndirectedGraph(4, [(0, 1), (1, 2)]))
    text = model_to_json(m, d.names, "sigma.npy")
    body = model_from_json(text)
    assert body["bic"] == m.bic and body["kappa"] == m.kappa
    assert body["sequence"].cliques == m.sequence.cliques
    assert body["sequence"].separators == m.sequence.separators
    with pytest.raises(ParseError):
        model_from_json('{"format": "x"}')


class TestDataFiles:
    def test_tiny_dataset(self):
        d = read_data(tiny_dataset_path())
        assert (d.n, d.p) == (10, 6)
        assert d.names[0] == "gene1"

    def test_write_read_round_trip(self, tmp_path, rng):
        d = DataMatrix(rng.standard_normal((5, 3)), ("a", "b", "c"))
        write_data(tmp_path / "x.csv", d)
        back = read_data(tmp_path / "x.csv")
        np.testing.assert_array_equal(back.values, d.values)
        assert back.names == d.names

    def test_tsv_and_log2(self, tmp_path):
        path = tmp_path / "x.tsv"
        path.write_text("a\tb\n1\t8\n2\t2\n4\t1\n")
        d = read_data(path, log2=True)
        np.testing.assert_allclose(d.values, [[0, 3], [1, 1], [2, 0]])
        path.write_text("a\tb\n0\t8\n2\t2\n4\t1\n")
        with pytest.raises(ParseError):
            read_data(path, log2=True)

    def test_parse_errors_name_the_line(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("a,b\n1,2\n3,oops\n")
        with pytest.raises(ParseError, match=r"x.csv:3"):
            read_data(path)
        path.write_text("a,b\n1,2\n3\n")
        with pytest.raises(ParseError, match=r"x.csv:3"):
            read_data(path)
        path.write_text("a,b\n")
        with pytest.raises(ParseError):
            read_data(path)

    def test_degenerate_and_duplicate_columns(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("a,b\n1,2\n3,2\n")
        with pytest.raises(DegenerateColumnError) as info:
            read_data(path)
        assert info.value.exit_code == 2
        path.write_text("a,a\n1,2\n3,4\n")
        with pytest.raises(ParseError, match="a"):
            read_data(path)

    def test_labels(self, tmp_path, caplog):
        path = tmp_path / "lab.csv"
        path.write_text("name,de\nb,1\na,0\n")
        assert list(read_labels(path, ["a", "b", "c"])) == [False, True, False]
        assert "c" in caplog.text
        path.write_text("a,1\nzz,1\n")
        with pytest.raises(ParseError, match="zz"):
            read_labels(path, ["a", "b"])
