import io
import os
import tempfile

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockergm import (
    GraphDataError,
    MultilevelGraph,
    empty_graph,
    hamming_distance,
    load_graph,
    save_graph,
    toggle_edge,
    uniform_partition,
)
from conftest import build_graph, triangle


def test_uniform_partition_shape():
    part = uniform_partition(3, 5)
    assert len(part) == 3
    assert part[0][0] == "n0"
    assert part[2][1][4] == "n2.4"


def test_empty_graph_counts():
    g = empty_graph(uniform_partition(4, 6))
    assert g.n_neighborhoods == 4
    assert g.sizes == (6, 6, 6, 6)
    assert g.total_dyads == 4 * 15
    assert g.edge_count() == 0
    assert not g.directed


def test_directed_dyad_count():
    g = empty_graph(uniform_partition(2, 4), directed=True)
    assert g.dyad_counts() == (12, 12)


def test_edge_count_and_edges_iter(two_block_graph):
    g = two_block_graph
    assert g.edge_count() == 6
    edges = list(g.edges())
    assert ("n0.0", "n0.1") in edges
    assert len(edges) == 6
    # undirected edges reported once, lexicographic within pair
    for tail, head in edges:
        assert tail < head


def test_locate(two_block_graph):
    assert two_block_graph.locate("n1.2") == (1, 2)
    with pytest.raises(GraphDataError):
        two_block_graph.locate("nope")


def test_rejects_duplicate_neighborhood_ids():
    part = [("a", ["a.0"]), ("a", ["a.1"])]
    with pytest.raises(GraphDataError):
        empty_graph(part)


def test_rejects_duplicate_node_ids():
    part = [("a", ["x", "x"])]
    with pytest.raises(GraphDataError):
        empty_graph(part)


def test_rejects_bad_adjacency():
    part = [("a", ["a.0", "a.1"])]
    with pytest.raises(GraphDataError):
        MultilevelGraph(False, part, [np.ones((3, 3), dtype=np.uint8)])
    bad_diag = np.eye(2, dtype=np.uint8)
    with pytest.raises(GraphDataError):
        MultilevelGraph(False, part, [bad_diag])
    asym = np.array([[0, 1], [0, 0]], dtype=np.uint8)
    with pytest.raises(GraphDataError):
        MultilevelGraph(False, part, [asym])
    # directed graphs accept the asymmetric matrix
    g = MultilevelGraph(True, part, [asym])
    assert g.edge_count() == 1


def test_rejects_entries_outside_01():
    part = [("a", ["a.0", "a.1"])]
    two = np.array([[0, 2], [2, 0]], dtype=np.uint8)
    with pytest.raises(GraphDataError):
        MultilevelGraph(False, part, [two])


def test_toggle_edge_round_trip(two_block_graph):
    g = two_block_graph
    g2 = toggle_edge(g, ("n0.0", "n0.3"))
    assert g2.edge_count() == g.edge_count() + 1
    g3 = toggle_edge(g2, ("n0.0", "n0.3"))
    assert g3 == g
    assert hamming_distance(g, g2) == 1


def test_toggle_rejects_cross_neighborhood(two_block_graph):
    with pytest.raises(GraphDataError):
        toggle_edge(two_block_graph, ("n0.0", "n1.0"))


def test_toggle_rejects_self_loop(two_block_graph):
    with pytest.raises(GraphDataError):
        toggle_edge(two_block_graph, ("n0.1", "n0.1"))


def test_hamming_requires_same_partition():
    g1 = empty_graph(uniform_partition(2, 3))
    g2 = empty_graph(uniform_partition(3, 3))
    with pytest.raises(GraphDataError):
        hamming_distance(g1, g2)


def test_hamming_counts_directed_separately():
    base = empty_graph(uniform_partition(1, 3), directed=True)
    g1 = toggle_edge(base, ("n0.0", "n0.1"))
    g2 = toggle_edge(base, ("n0.1", "n0.0"))
    assert hamming_distance(g1, g2) == 2
    assert hamming_distance(base, g1) == 1


NODES_CSV = """node_id,neighborhood_id,color
a1,A,red
a2,A,blue
a3,A,red
b1,B,blue
b2,B,blue
"""

EDGES_CSV = """tail,head
a1,a2
a2,a3
b1,b2
"""


def test_load_graph_from_strings():
    g = load_graph(io.StringIO(NODES_CSV), io.StringIO(EDGES_CSV))
    assert g.n_neighborhoods == 2
    assert g.sizes == (3, 2)
    assert g.edge_count() == 3
    assert g.attribute_names == ("color",)
    assert list(g.attribute_values("color", 0)) == ["red", "blue", "red"]


def test_load_graph_bad_header():
    with pytest.raises(GraphDataError, match="header"):
        load_graph(io.StringIO("id,block\na,A\n"), io.StringIO(EDGES_CSV))
    with pytest.raises(GraphDataError, match="header"):
        load_graph(io.StringIO(NODES_CSV), io.StringIO("from,to\na1,a2\n"))


def test_load_graph_unknown_node():
    with pytest.raises(GraphDataError, match="unknown"):
        load_graph(io.StringIO(NODES_CSV), io.StringIO("tail,head\na1,zz\n"))


def test_load_graph_cross_neighborhood_edge():
    with pytest.raises(GraphDataError, match="neighborhood"):
        load_graph(io.StringIO(NODES_CSV), io.StringIO("tail,head\na1,b1\n"))


def test_load_graph_self_loop():
    with pytest.raises(GraphDataError, match="loop"):
        load_graph(io.StringIO(NODES_CSV), io.StringIO("tail,head\na1,a1\n"))


def test_load_graph_duplicate_edge():
    bad = "tail,head\na1,a2\na2,a1\n"
    with pytest.raises(GraphDataError, match="duplicate"):
        load_graph(io.StringIO(NODES_CSV), io.StringIO(bad))


def test_load_graph_duplicate_node():
    bad = "node_id,neighborhood_id\na1,A\na1,A\n"
    with pytest.raises(GraphDataError, match="duplicate"):
        load_graph(io.StringIO(bad), io.StringIO("tail,head\n"))


def test_save_load_round_trip(tmp_path, two_block_graph):
    nodes = tmp_path / "nodes.csv"
    edges = tmp_path / "edges.csv"
    save_graph(two_block_graph, nodes, edges)
    g2 = load_graph(nodes, edges)
    assert g2 == two_block_graph


def test_save_load_round_trip_attrs(tmp_path):
    g = build_graph([2, 2], [(0, 0, 1)],
                    attrs=[[{"grp": "x"}, {"grp": "y"}],
                           [{"grp": "x"}, {"grp": "x"}]])
    save_graph(g, tmp_path / "n.csv", tmp_path / "e.csv")
    g2 = load_graph(tmp_path / "n.csv", tmp_path / "e.csv")
    assert g2 == g
    # second save is byte-identical
    save_graph(g2, tmp_path / "n2.csv", tmp_path / "e2.csv")
    assert (tmp_path / "n.csv").read_bytes() == (tmp_path / "n2.csv").read_bytes()
    assert (tmp_path / "e.csv").read_bytes() == (tmp_path / "e2.csv").read_bytes()


def test_replace_adjacency(two_block_graph):
    g = two_block_graph
    new = [np.zeros((4, 4), dtype=np.uint8), g.adjacency[1].copy()]
    g2 = g.replace_adjacency(new)
    assert g2.edge_count() == 3
    assert g.edge_count() == 6  # original untouched


def test_adjacency_is_read_only(two_block_graph):
    with pytest.raises(ValueError):
        two_block_graph.adjacency[0][0, 1] = 0


@st.composite
def random_graph(draw):
    sizes = draw(st.lists(st.integers(2, 5), min_size=1, max_size=3))
    directed = draw(st.booleans())
    dyads = []
    for k, s in enumerate(sizes):
        if directed:
            dyads += [(k, i, j) for i in range(s) for j in range(s) if i != j]
        else:
            dyads += [(k, i, j) for i in range(s) for j in range(i + 1, s)]
    edges = [d for d in dyads if draw(st.booleans())]
    return build_graph(sizes, edges, directed=directed), dyads


@given(random_graph())
@settings(max_examples=60, deadline=None)
def test_toggle_is_involution(data):
    g, dyads = data
    for k, i, j in dyads[:3]:
        nid, nodes = g.neighborhoods[k]
        dyad = (nodes[i], nodes[j])
        assert toggle_edge(toggle_edge(g, dyad), dyad) == g


@given(random_graph(), random_graph())
@settings(max_examples=40, deadline=None)
def test_hamming_metric_axioms(a, b):
    g1, dyads = a
    g2, _ = b
    assert hamming_distance(g1, g1) == 0
    if g1.same_partition(g2) and g1.directed == g2.directed:
        assert hamming_distance(g1, g2) == hamming_distance(g2, g1)


@given(random_graph())
@settings(max_examples=60, deadline=None)
def test_round_trip_random(data):
    g, _ = data
    with tempfile.TemporaryDirectory() as d:
        nodes, edges = os.path.join(d, "n.csv"), os.path.join(d, "e.csv")
        save_graph(g, nodes, edges)
        assert load_graph(nodes, edges, directed=g.directed) == g
