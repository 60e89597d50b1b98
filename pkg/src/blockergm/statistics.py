"""Sufficient statistics and their change scores.

Each term maps one neighborhood's adjacency block to a statistic vector.
Change scores are computed incrementally from the edge-off state of the
toggled dyad; tests cross-check them against full recomputation.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .graphs import GraphDataError, MultilevelGraph


class ModelError(ValueError):
    """Invalid model specification."""

__all__ = [
    "Edges",
    "MutualEdges",
    "NodeMatch",
    "TransitiveEdges",
    "ESPCounts",
    "TermSet",
    "parse_terms",
    "compute_stats",
    "change_stat",
    "gof_summaries",
]


def _attr_codes(graph, name, k):
    """Integer codes for one attribute over neighborhood k's nodes."""
    values = graph.attribute_values(name, k)
    seen = {}
    codes = np.empty(len(values), dtype=np.int64)
    for i, v in enumerate(values):
        codes[i] = seen.setdefault(v, len(seen))
    return codes


class Edges:
    """Edge count."""

    name = "edges"
    kind = "edges"

    def dim(self, graph, k):
        return 1

    def labels(self, graph, k):
        return ["edges"]

    def compute(self, graph, k):
        s = int(graph.adjacency[k].sum())
        return np.array([float(s if graph.directed else s // 2)])

    def change_on(self, graph, k, a0, i, j):
        return np.array([1.0])


class MutualEdges:
    """Count of mutually connected ordered pairs; directed graphs only."""

    name = "mutual"
    kind = "mutual"

    def dim(self, graph, k):
        return 1

    def labels(self, graph, k):
        return ["mutual"]

    def compute(self, graph, k):
        if not graph.directed:
            raise ModelError("mutual term requires a directed graph")
        a = graph.adjacency[k]
        return np.array([float(int((a & a.T).sum()) // 2)])

    def change_on(self, graph, k, a0, i, j):
        return np.array([float(a0[j, i])])


class NodeMatch:
    """Count of edges joining nodes with equal values of one attribute."""

    kind = "nodematch"

    def __init__(self, attribute):
        self.attribute = str(attribute)
        self.name = f"nodematch:{self.attribute}"

    def dim(self, graph, k):
        return 1

    def labels(self, graph, k):
        return [self.name]

    def compute(self, graph, k):
        a = graph.adjacency[k]
        codes = _attr_codes(graph, self.attribute, k)
        match = (codes[:, None] == codes[None, :]).astype(np.uint8)
        s = int((a & match).sum())
        return np.array([float(s if graph.directed else s // 2)])

    def change_on(self, graph, k, a0, i, j):
        codes = _attr_codes(graph, self.attribute, k)
        return np.array([1.0 if codes[i] == codes[j] else 0.0])


def _two_paths(a):
    # undirected: common neighbours; directed: sp[i, j] = #{h: i->h->j}
    a64 = a.astype(np.int64)
    return a64 @ a64


class TransitiveEdges:
    """Count of edges closed by at least one two-path.

    Undirected: edges whose endpoints share a neighbour. Directed: edges
    (i, j) with some h on a path i -> h -> j.
    """

    name = "transitive"
    kind = "transitive"

    def dim(self, graph, k):
        return 1

    def labels(self, graph, k):
        return ["transitive"]

    def compute(self, graph, k):
        a = graph.adjacency[k]
        sp = _two_paths(a)
        closed = (a > 0) & (sp > 0)
        s = int(closed.sum())
        return np.array([float(s if graph.directed else s // 2)])

    def change_on(self, graph, k, a0, i, j):
        sp = _two_paths(a0)
        if graph.directed:
            delta = 1.0 if sp[i, j] > 0 else 0.0
            heads = np.nonzero((a0[i] > 0) & (a0[j] > 0))[0]
            for b in heads:
                if sp[i, b] == 0:
                    delta += 1.0
            tails = np.nonzero((a0[:, i] > 0) & (a0[:, j] > 0))[0]
            for t in tails:
                if sp[t, j] == 0:
                    delta += 1.0
        else:
            delta = 1.0 if sp[i, j] > 0 else 0.0
            common = np.nonzero((a0[i] > 0) & (a0[j] > 0))[0]
            for h in common:
                if sp[i, h] == 0:
                    delta += 1.0
                if sp[j, h] == 0:
                    delta += 1.0
        return np.array([delta])


class ESPCounts:
    """Histogram of per-edge shared-partner counts, bins 1..(n-2).

    Undirected: shared partners are common neighbours of the endpoints.
    Directed: two-path counts from tail to head; edges are ordered pairs.
    """

    name = "esp"
    kind = "esp"

    def dim(self, graph, k):
        return max(graph.sizes[k] - 2, 0)

    def labels(self, graph, k):
        return [f"esp{b}" for b in range(1, self.dim(graph, k) + 1)]

    def compute(self, graph, k):
        a = graph.adjacency[k]
        d = self.dim(graph, k)
        out = np.zeros(d)
        if d == 0:
            return out
        sp = _two_paths(a)
        if graph.directed:
            ii, jj = np.nonzero(a)
        else:
            ii, jj = np.nonzero(np.triu(a, 1))
        for i, j in zip(ii, jj):
            b = int(sp[i, j])
            if b >= 1:
                out[b - 1] += 1.0
        return out

    def change_on(self, graph, k, a0, i, j):
        d = self.dim(graph, k)
        delta = np.zeros(d)
        if d == 0:
            return delta
        sp = _two_paths(a0)

        def move_up(c):
            # one edge moves from shared-partner bin c to c + 1
            if c >= 1:
                delta[c - 1] -= 1.0
            delta[c] += 1.0

        if graph.directed:
            if sp[i, j] >= 1:
                delta[sp[i, j] - 1] += 1.0
            for b in np.nonzero((a0[i] > 0) & (a0[j] > 0))[0]:
                move_up(int(sp[i, b]))
            for t in np.nonzero((a0[:, i] > 0) & (a0[:, j] > 0))[0]:
                move_up(int(sp[t, j]))
        else:
            if sp[i, j] >= 1:
                delta[sp[i, j] - 1] += 1.0
            for h in np.nonzero((a0[i] > 0) & (a0[j] > 0))[0]:
                move_up(int(sp[i, h]))
                move_up(int(sp[j, h]))
        return delta


_TERM_KINDS = {
    "edges": Edges,
    "mutual": MutualEdges,
    "transitive": TransitiveEdges,
    "esp": ESPCounts,
}


def parse_terms(specs):
    """Build a TermSet from strings like 'edges' or 'nodematch:group'."""
    terms = []
    for raw in specs:
        spec = str(raw).strip()
        if spec.startswith("nodematch:"):
            attr = spec.split(":", 1)[1]
            if not attr:
                raise ModelError("nodematch term needs an attribute name")
            terms.append(NodeMatch(attr))
        elif spec in _TERM_KINDS:
            terms.append(_TERM_KINDS[spec]())
        else:
            raise ModelError(f"unknown statistic term {spec!r}")
    return TermSet(terms)


class TermSet:
    """Ordered collection of statistic terms shared by all neighborhoods."""

    def __init__(self, terms):
        self.terms = tuple(terms)
        if not self.terms:
            raise ModelError("term set is empty")
        names = [t.name for t in self.terms]
        if len(set(names)) != len(names):
            raise ModelError(f"duplicate terms in {names}")

    def __iter__(self):
        return iter(self.terms)

    def __len__(self):
        return len(self.terms)

    def dim(self, graph, k):
        return sum(t.dim(graph, k) for t in self.terms)

    def dims(self, graph):
        return [self.dim(graph, k) for k in range(graph.n_neighborhoods)]

    def total_dim(self, graph):
        return sum(self.dims(graph))

    def labels(self, graph, k):
        out = []
        for t in self.terms:
            out.extend(t.labels(graph, k))
        return out

    def compute_k(self, graph, k):
        parts = [t.compute(graph, k) for t in self.terms]
        return np.concatenate(parts) if parts else np.zeros(0)

    def compute(self, graph):
        return [self.compute_k(graph, k) for k in range(graph.n_neighborhoods)]

    def change_k(self, graph, k, i, j):
        """Statistic difference on-state minus off-state for dyad (i, j).

        The same vector regardless of the dyad's current state.
        """
        a0 = graph.adjacency[k].copy()
        a0[i, j] = 0
        if not graph.directed:
            a0[j, i] = 0
        parts = [t.change_on(graph, k, a0, i, j) for t in self.terms]
        return np.concatenate(parts)

    def aggregate_labels(self, graph):
        """Coordinate labels of the across-neighborhood pooled statistic."""
        out = []
        for t in self.terms:
            d = max(t.dim(graph, k) for k in range(graph.n_neighborhoods))
            if t.kind == "esp":
                out.extend(f"esp{b}" for b in range(1, d + 1))
            else:
                out.extend(t.labels(graph, 0))
        return out

    def aggregate(self, graph, stats=None):
        """Pool per-neighborhood statistics: sums, with esp bins padded."""
        if stats is None:
            stats = self.compute(graph)
        widths = []
        for t in self.terms:
            widths.append(max(t.dim(graph, k) for k in range(graph.n_neighborhoods)))
        out = np.zeros(sum(widths))
        for k in range(graph.n_neighborhoods):
            s = stats[k]
            pos_in = 0
            pos_out = 0
            for t, w in zip(self.terms, widths):
                d = t.dim(graph, k)
                out[pos_out:pos_out + d] += s[pos_in:pos_in + d]
                pos_in += d
                pos_out += w
        return out


def compute_stats(graph, terms):
    """Per-neighborhood sufficient statistic vectors, as a list of arrays."""
    return terms.compute(graph)


def change_stat(graph, terms, dyad):
    """Stacked change in all neighborhoods' statistics when `dyad` toggles.

    The result has one block per neighborhood; blocks outside the dyad's
    neighborhood are zero.
    """
    tail, head = dyad
    kt, it = graph.locate(tail)
    kh, ih = graph.locate(head)
    if (kt, it) == (kh, ih):
        raise GraphDataError(f"cannot toggle self-loop at {tail!r}")
    if kt != kh:
        raise GraphDataError(f"dyad ({tail!r}, {head!r}) crosses neighborhoods")
    dims = terms.dims(graph)
    out = np.zeros(sum(dims))
    offset = sum(dims[:kt])
    out[offset:offset + dims[kt]] = terms.change_k(graph, kt, it, ih)
    return out


def _geodesic_counts(a, directed, n_bins):
    """Counts of finite path lengths 1..n_bins plus unreachable pairs."""
    n = a.shape[0]
    out = np.zeros(n_bins + 1)
    if n < 2:
        return out
    dist = shortest_path(a.astype(np.float64), method="D", directed=directed,
                         unweighted=True)
    if directed:
        mask = ~np.eye(n, dtype=bool)
        vals = dist[mask]
    else:
        iu = np.triu_indices(n, 1)
        vals = dist[iu]
    finite = np.isfinite(vals)
    for v in vals[finite].astype(np.int64):
        out[v - 1] += 1.0
    out[n_bins] = float(np.sum(~finite))
    return out


def summary_labels(graph):
    """(statistic, bin) label pairs for `gof_summaries` vectors."""
    max_sp = max(graph.max_size - 2, 0)
    max_geo = max(graph.max_size - 1, 1)
    labels = []
    labels += [("esp", str(b)) for b in range(1, max_sp + 1)]
    labels += [("dsp", str(b)) for b in range(1, max_sp + 1)]
    labels += [("geodesic", str(b)) for b in range(1, max_geo + 1)]
    labels += [("geodesic", "inf")]
    return labels


def block_summaries(a, directed, max_sp, max_geo):
    """One adjacency block's (esp, dsp, geodesic) histogram contribution."""
    esp = np.zeros(max_sp)
    dsp = np.zeros(max_sp)
    n = a.shape[0]
    if n >= 3:
        sp = _two_paths(a)
        if directed:
            ii, jj = np.nonzero(~np.eye(n, dtype=bool))
        else:
            ii, jj = np.triu_indices(n, 1)
        for i, j in zip(ii, jj):
            b = int(sp[i, j])
            if b >= 1:
                dsp[b - 1] += 1.0
                if a[i, j]:
                    esp[b - 1] += 1.0
    geo = _geodesic_counts(a, directed, max_geo)
    return np.concatenate([esp, dsp, geo])


def gof_summaries(graph):
    """Structural summaries pooled across neighborhoods.

    Returns (labels, values) where labels are (statistic, bin) pairs for
    shared-partner histograms of edges (esp) and of all dyads (dsp), and
    the geodesic distance histogram with unreachable pairs in bin 'inf'.
    """
    max_sp = max(graph.max_size - 2, 0)
    max_geo = max(graph.max_size - 1, 1)
    values = np.zeros(2 * max_sp + max_geo + 1)
    for k in range(graph.n_neighborhoods):
        values += block_summaries(graph.adjacency[k], graph.directed,
                                  max_sp, max_geo)
    return summary_labels(graph), values
