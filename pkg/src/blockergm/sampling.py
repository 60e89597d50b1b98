"""Metropolis sampling of multilevel graphs, one chain per neighborhood.

Proposals toggle a uniformly chosen within-neighborhood dyad and are
accepted with probability min(1, exp(coefficient . change)). Chains are
driven by counter-based random streams derived from (seed, neighborhood
index), so results do not depend on execution order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import _kernel
from .graphs import GraphDataError, MultilevelGraph, empty_graph
from .models import ModelError

__all__ = ["SamplerConfig", "SampleBatch", "simulate", "simulate_graph",
           "sample_neighborhood"]

_SEED_LIMIT = 1 << 64

# fixed stream tags keep the random streams of different pipeline stages
# disjoint under one master seed
STREAM_SIMULATE = 101
STREAM_ESTIMATE = 102
STREAM_BOOTSTRAP = 103
STREAM_GOF = 104
STREAM_EXPERIMENT = 105


@dataclass(frozen=True)
class SamplerConfig:
    """Chain tuning: draw count, spacing, burn-in, and master seed.

    burn_in and interval default (when None) to 20 * dyads and dyads of
    each neighborhood respectively.
    """

    n_draws: int = 1000
    burn_in: Optional[int] = None
    interval: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if int(self.n_draws) < 1:
            raise ModelError(f"n_draws must be >= 1, got {self.n_draws}")
        if self.burn_in is not None and int(self.burn_in) < 0:
            raise ModelError(f"burn_in must be >= 0, got {self.burn_in}")
        if self.interval is not None and int(self.interval) < 1:
            raise ModelError(f"interval must be >= 1, got {self.interval}")
        if not 0 <= int(self.seed) < _SEED_LIMIT:
            raise ModelError("seed must fit in 64 bits")

    def resolved(self, n_dyads):
        burn = 20 * n_dyads if self.burn_in is None else int(self.burn_in)
        interval = max(n_dyads, 1) if self.interval is None else int(self.interval)
        return burn, interval


def _rng_for(seed, stream, k):
    entropy = [int(seed), *[int(s) for s in stream], int(k)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def _dyad_arrays(n, directed):
    if directed:
        pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    else:
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if not pairs:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    di, dj = zip(*pairs)
    return np.array(di, dtype=np.int64), np.array(dj, dtype=np.int64)


def _term_tables(model, graph, k):
    terms = model.terms
    codes = []
    offsets = [0]
    n = graph.sizes[k]
    attr_codes = np.zeros((len(terms.terms), n), dtype=np.int64)
    for t_idx, t in enumerate(terms):
        codes.append(_kernel.TERM_CODE[t.kind])
        offsets.append(offsets[-1] + t.dim(graph, k))
        if t.kind == "nodematch":
            values = graph.attribute_values(t.attribute, k)
            seen = {}
            for i, v in enumerate(values):
                attr_codes[t_idx, i] = seen.setdefault(v, len(seen))
    return (np.array(codes, dtype=np.int64), np.array(offsets, dtype=np.int64),
            attr_codes)


@dataclass
class _NeighborhoodSample:
    stats: np.ndarray
    edges: np.ndarray
    masks: Optional[np.ndarray]
    adjs: Optional[np.ndarray]
    final_adj: np.ndarray


def sample_neighborhood(model, theta, graph, k, config, stream=(),
                        record_graphs=False):
    """Run neighborhood k's chain from its state in `graph`.

    Returns per-draw statistics, edge counts, a state bitmask per draw
    when the neighborhood has at most 62 dyads, optionally every drawn
    adjacency matrix, and the final adjacency matrix.
    """
    theta = model.validate_theta(theta)
    terms = model.terms
    n = graph.sizes[k]
    dim = terms.dim(graph, k)
    n_draws = int(config.n_draws)
    eta = model.eta_k(theta, graph, k)
    cur = terms.compute_k(graph, k).astype(np.float64)
    adj = graph.adjacency[k].copy()

    di, dj = _dyad_arrays(n, graph.directed)
    n_dyads = di.shape[0]
    if n_dyads == 0:
        stats = np.tile(cur, (n_draws, 1))
        edges = np.zeros(n_draws, dtype=np.int64)
        masks = np.zeros(n_draws, dtype=np.int64)
        adjs = np.tile(adj, (n_draws, 1, 1)) if record_graphs else None
        return _NeighborhoodSample(stats, edges, masks, adjs, adj)

    burn, interval = config.resolved(n_dyads)
    n_steps = burn + n_draws * interval
    rng = _rng_for(config.seed, stream, k)
    which = rng.integers(0, n_dyads, size=n_steps)
    log_u = np.log(rng.random(n_steps))
    prop_i = di[which]
    prop_j = dj[which]

    term_codes, term_offsets, attr_codes = _term_tables(model, graph, k)
    a64 = adj.astype(np.int64)
    sp = a64 @ a64

    out_stats = np.zeros((n_draws, dim))
    out_edges = np.zeros(n_draws, dtype=np.int64)
    record_masks = n_dyads <= 62
    out_masks = np.zeros(n_draws if record_masks else 0, dtype=np.int64)
    out_adj = np.zeros((n_draws if record_graphs else 0, n, n), dtype=np.uint8)

    _kernel.run_chain(adj, sp, eta, cur, term_codes, term_offsets, attr_codes,
                      prop_i, prop_j, log_u, burn, interval, n_draws,
                      out_stats, out_edges, out_masks, di, dj, record_masks,
                      out_adj, record_graphs, graph.directed)
    return _NeighborhoodSample(out_stats, out_edges,
                               out_masks if record_masks else None,
                               out_adj if record_graphs else None, adj)


@dataclass
class SampleBatch:
    """Per-neighborhood chain output for one simulation run."""

    graph: MultilevelGraph
    stats: list
    edge_counts: np.ndarray
    masks: list
    final: MultilevelGraph
    config: SamplerConfig
    terms: object = field(repr=False, default=None)

    @property
    def n_draws(self):
        return self.edge_counts.shape[1]

    @property
    def n_neighborhoods(self):
        return len(self.stats)

    def aggregate_stats(self):
        """Pooled statistics per draw: scalar sums, esp bins padded."""
        graph = self.graph
        terms = self.terms
        widths = [max(t.dim(graph, k) for k in range(graph.n_neighborhoods))
                  for t in terms]
        out = np.zeros((self.n_draws, sum(widths)))
        for k in range(graph.n_neighborhoods):
            pos_in = 0
            pos_out = 0
            for t, w in zip(terms, widths):
                d = t.dim(graph, k)
                out[:, pos_out:pos_out + d] += self.stats[k][:, pos_in:pos_in + d]
                pos_in += d
                pos_out += w
        return out

    def degenerate(self, threshold=0.95, margin=2):
        """Per-neighborhood flag: most draws nearly empty or complete."""
        flags = np.zeros(self.n_neighborhoods, dtype=bool)
        for k, d in enumerate(self.graph.dyad_counts()):
            if d == 0:
                continue
            e = self.edge_counts[k]
            near = (e <= margin) | (e >= d - margin)
            flags[k] = float(np.mean(near)) > threshold
        return flags


def simulate(model, theta, graph, config, stream=()):
    """Sample every neighborhood's chain, starting from `graph`'s edges."""
    samples = [
        sample_neighborhood(model, theta, graph, k, config, stream=stream)
        for k in range(graph.n_neighborhoods)
    ]
    final = graph.replace_adjacency([s.final_adj for s in samples])
    return SampleBatch(
        graph=graph,
        stats=[s.stats for s in samples],
        edge_counts=np.stack([s.edges for s in samples]),
        masks=[s.masks for s in samples],
        final=final,
        config=config,
        terms=model.terms,
    )


def simulate_graph(model, theta, partition, config, stream=(), directed=False,
                   node_attributes=None):
    """One simulated graph over `partition`, from an empty start.

    `partition` may also be a MultilevelGraph, whose structure and
    attributes are reused (its edges are ignored).
    """
    if isinstance(partition, MultilevelGraph):
        start = empty_graph(partition.neighborhoods, directed=partition.directed,
                            node_attributes=partition.node_attributes)
    else:
        start = empty_graph(partition, directed=directed,
                            node_attributes=node_attributes)
    one = replace(config, n_draws=1)
    return simulate(model, theta, start, one, stream=stream).final
