"""Multilevel graph data model and CSV I/O.

A multilevel graph is a node set partitioned into neighborhoods, with
binary edges stored only inside neighborhoods. Graphs are treated as
immutable once built; `toggle_edge` returns a modified copy.
"""

from __future__ import annotations

import csv
import io
import os
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GraphDataError",
    "MultilevelGraph",
    "load_graph",
    "save_graph",
    "empty_graph",
    "uniform_partition",
    "hamming_distance",
    "toggle_edge",
]


class GraphDataError(ValueError):
    """Invalid graph data: bad files, partition violations, bad dyads."""


class MultilevelGraph:
    """Binary within-neighborhood adjacency over a partitioned node set.

    Parameters
    ----------
    directed : bool
        Whether dyads are ordered pairs.
    neighborhoods : sequence of (str, sequence of str)
        Ordered (neighborhood id, node id list) pairs. Node ids are
        arbitrary strings, mapped internally to dense local indices.
    adjacency : sequence of ndarray, optional
        One (n_k, n_k) binary matrix per neighborhood. Defaults to empty.
    node_attributes : dict, optional
        Maps node id to a dict of named attribute values.
    attribute_names : sequence of str, optional
        Attribute column order, preserved by save_graph.
    """

    def __init__(self, directed, neighborhoods, adjacency=None,
                 node_attributes=None, attribute_names=None):
        self.directed = bool(directed)
        self.neighborhoods = tuple(
            (str(nid), tuple(str(v) for v in nodes)) for nid, nodes in neighborhoods
        )
        if not self.neighborhoods:
            raise GraphDataError("graph has no neighborhoods")

        self._index = {}
        seen_nbhd = set()
        for k, (nid, nodes) in enumerate(self.neighborhoods):
            if nid in seen_nbhd:
                raise GraphDataError(f"duplicate neighborhood id {nid!r}")
            seen_nbhd.add(nid)
            if not nodes:
                raise GraphDataError(f"neighborhood {nid!r} is empty")
            for i, v in enumerate(nodes):
                if v in self._index:
                    raise GraphDataError(f"duplicate node id {v!r}")
                self._index[v] = (k, i)

        sizes = [len(nodes) for _, nodes in self.neighborhoods]
        if adjacency is None:
            adjacency = [np.zeros((n, n), dtype=np.uint8) for n in sizes]
        if len(adjacency) != len(sizes):
            raise GraphDataError("adjacency list does not match neighborhoods")
        mats = []
        for k, a in enumerate(adjacency):
            # private copy: freezing a caller-owned array would be a side
            # effect
            a = np.array(a, dtype=np.uint8)
            n = sizes[k]
            if a.shape != (n, n):
                raise GraphDataError(f"adjacency {k} has shape {a.shape}, expected {(n, n)}")
            if a.max(initial=0) > 1:
                raise GraphDataError("adjacency entries must be 0 or 1")
            if np.any(np.diag(a)):
                raise GraphDataError("self-loops are not allowed")
            if not self.directed and not np.array_equal(a, a.T):
                raise GraphDataError("undirected adjacency must be symmetric")
            a.setflags(write=False)
            mats.append(a)
        self.adjacency = tuple(mats)

        self.node_attributes = {}
        node_attributes = node_attributes or {}
        for v, attrs in node_attributes.items():
            if v not in self._index:
                raise GraphDataError(f"attribute for unknown node id {v!r}")
            self.node_attributes[v] = dict(attrs)
        if attribute_names is None:
            names = []
            for attrs in self.node_attributes.values():
                for name in attrs:
                    if name not in names:
                        names.append(name)
            attribute_names = names
        self.attribute_names = tuple(attribute_names)
        for v in self._index:
            attrs = self.node_attributes.setdefault(v, {})
            missing = [n for n in self.attribute_names if n not in attrs]
            if missing and attrs:
                raise GraphDataError(f"node {v!r} missing attributes {missing}")

    # -- basic structure --------------------------------------------------

    @property
    def n_neighborhoods(self):
        return len(self.neighborhoods)

    @property
    def sizes(self):
        return tuple(len(nodes) for _, nodes in self.neighborhoods)

    @property
    def max_size(self):
        return max(self.sizes)

    def dyad_counts(self):
        """Per-neighborhood dyad counts: C(n,2) undirected, n(n-1) directed."""
        if self.directed:
            return tuple(n * (n - 1) for n in self.sizes)
        return tuple(n * (n - 1) // 2 for n in self.sizes)

    @property
    def total_dyads(self):
        return sum(self.dyad_counts())

    def edge_count(self):
        total = 0
        for a in self.adjacency:
            s = int(a.sum())
            total += s if self.directed else s // 2
        return total

    def locate(self, node_id):
        """Return (neighborhood index, local index) for a node id."""
        try:
            return self._index[str(node_id)]
        except KeyError:
            raise GraphDataError(f"unknown node id {node_id!r}") from None

    def attribute_values(self, name, k):
        """Attribute values of neighborhood k's nodes, in local index order."""
        _, nodes = self.neighborhoods[k]
        out = []
        for v in nodes:
            attrs = self.node_attributes.get(v, {})
            if name not in attrs:
                raise GraphDataError(f"node {v!r} has no attribute {name!r}")
            out.append(attrs[name])
        return out

    def same_partition(self, other):
        return (
            self.directed == other.directed
            and self.neighborhoods == other.neighborhoods
        )

    def replace_adjacency(self, adjacency):
        """New graph with the same partition and attributes, new edges."""
        return MultilevelGraph(
            self.directed,
            self.neighborhoods,
            adjacency=adjacency,
            node_attributes=self.node_attributes,
            attribute_names=self.attribute_names,
        )

    def edges(self):
        """Yield (tail id, head id); undirected dyads once, low index first."""
        for k, (_, nodes) in enumerate(self.neighborhoods):
            a = self.adjacency[k]
            for i, j in zip(*np.nonzero(a)):
                if not self.directed and i > j:
                    continue
                yield nodes[i], nodes[j]

    def __eq__(self, other):
        if not isinstance(other, MultilevelGraph):
            return NotImplemented
        return (
            self.same_partition(other)
            and all(np.array_equal(a, b) for a, b in zip(self.adjacency, other.adjacency))
            and self.node_attributes == other.node_attributes
            and self.attribute_names == other.attribute_names
        )

    def __repr__(self):
        kind = "directed" if self.directed else "undirected"
        return (
            f"MultilevelGraph({kind}, K={self.n_neighborhoods}, "
            f"nodes={sum(self.sizes)}, edges={self.edge_count()})"
        )


def uniform_partition(n_neighborhoods, size, prefix="n"):
    """Partition spec with `n_neighborhoods` blocks of `size` nodes each."""
    out = []
    for k in range(n_neighborhoods):
        nid = f"{prefix}{k}"
        out.append((nid, [f"{nid}.{i}" for i in range(size)]))
    return out


def empty_graph(partition, directed=False, node_attributes=None):
    """Edgeless MultilevelGraph over the given (id, nodes) partition."""
    return MultilevelGraph(directed, partition, node_attributes=node_attributes)


def _open_source(source):
    if hasattr(source, "read"):
        return source, False
    return open(os.fspath(source), "r", encoding="utf-8", newline=""), True


def _read_rows(source, what):
    fh, should_close = _open_source(source)
    try:
        rows = list(csv.reader(fh))
    finally:
        if should_close:
            fh.close()
    if not rows:
        raise GraphDataError(f"{what} file is empty")
    return rows


def load_graph(nodes_source, edges_source, directed=False):
    """Load a MultilevelGraph from nodes and edges CSV sources.

    The nodes file has header ``node_id,neighborhood_id[,attr1,...]``; the
    edges file has header ``tail,head``. Sources may be paths or open
    file objects. Edges must join two nodes of the same neighborhood.
    """
    node_rows = _read_rows(nodes_source, "nodes")
    header = node_rows[0]
    if len(header) < 2 or header[0] != "node_id" or header[1] != "neighborhood_id":
        raise GraphDataError(
            "nodes header must be node_id,neighborhood_id[,attr1,...], "
            f"got {','.join(header)}"
        )
    attr_names = header[2:]

    order = []
    members = {}
    attributes = {}
    seen_nodes = set()
    for lineno, row in enumerate(node_rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise GraphDataError(f"nodes line {lineno}: expected {len(header)} fields")
        node_id, nbhd_id = row[0], row[1]
        if node_id in seen_nodes:
            raise GraphDataError(f"nodes line {lineno}: duplicate node id {node_id!r}")
        seen_nodes.add(node_id)
        if nbhd_id not in members:
            members[nbhd_id] = []
            order.append(nbhd_id)
        members[nbhd_id].append(node_id)
        if attr_names:
            attributes[node_id] = dict(zip(attr_names, row[2:]))

    neighborhoods = [(nid, members[nid]) for nid in order]
    graph = MultilevelGraph(
        directed, neighborhoods, node_attributes=attributes, attribute_names=attr_names
    )

    edge_rows = _read_rows(edges_source, "edges")
    if edge_rows[0] != ["tail", "head"]:
        raise GraphDataError(f"edges header must be tail,head, got {','.join(edge_rows[0])}")
    adjacency = [a.copy() for a in graph.adjacency]
    for lineno, row in enumerate(edge_rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise GraphDataError(f"edges line {lineno}: expected 2 fields")
        tail, head = row
        if tail not in graph._index:
            raise GraphDataError(f"edges line {lineno}: unknown node id {tail!r}")
        if head not in graph._index:
            raise GraphDataError(f"edges line {lineno}: unknown node id {head!r}")
        if tail == head:
            raise GraphDataError(f"edges line {lineno}: self-loop at {tail!r}")
        kt, it = graph._index[tail]
        kh, ih = graph._index[head]
        if kt != kh:
            raise GraphDataError(
                f"edges line {lineno}: edge ({tail!r}, {head!r}) crosses neighborhoods "
                f"{graph.neighborhoods[kt][0]!r} and {graph.neighborhoods[kh][0]!r}"
            )
        a = adjacency[kt]
        if a[it, ih]:
            raise GraphDataError(f"edges line {lineno}: duplicate edge ({tail!r}, {head!r})")
        a[it, ih] = 1
        if not directed:
            a[ih, it] = 1
    return graph.replace_adjacency(adjacency)


def save_graph(graph, nodes_path, edges_path):
    """Write nodes and edges CSVs that load_graph round-trips bit-exactly."""
    with open(os.fspath(nodes_path), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id", "neighborhood_id", *graph.attribute_names])
        for nid, nodes in graph.neighborhoods:
            for v in nodes:
                attrs = graph.node_attributes.get(v, {})
                w.writerow([v, nid, *(attrs[a] for a in graph.attribute_names)])
    with open(os.fspath(edges_path), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tail", "head"])
        for tail, head in graph.edges():
            w.writerow([tail, head])


def hamming_distance(g1, g2):
    """Number of dyads at which the two graphs disagree.

    Both graphs must share the partition and directedness; undirected
    dyads are counted once.
    """
    if not g1.same_partition(g2):
        raise GraphDataError("hamming_distance requires identical partitions")
    total = 0
    for a, b in zip(g1.adjacency, g2.adjacency):
        diff = int(np.sum(a != b))
        total += diff if g1.directed else diff // 2
    return total


def toggle_edge(graph, dyad):
    """Return a copy of `graph` with one dyad's state flipped.

    `dyad` is a (tail id, head id) pair inside one neighborhood. For
    undirected graphs the symmetric entry flips too.
    """
    tail, head = dyad
    kt, it = graph.locate(tail)
    kh, ih = graph.locate(head)
    if (kt, it) == (kh, ih):
        raise GraphDataError(f"cannot toggle self-loop at {tail!r}")
    if kt != kh:
        raise GraphDataError(f"dyad ({tail!r}, {head!r}) crosses neighborhoods")
    adjacency = list(graph.adjacency)
    a = adjacency[kt].copy()
    a[it, ih] ^= 1
    if not graph.directed:
        a[ih, it] ^= 1
    adjacency[kt] = a
    return graph.replace_adjacency(adjacency)
