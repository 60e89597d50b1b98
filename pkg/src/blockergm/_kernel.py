"""Jitted Metropolis kernels for within-neighborhood sampling.

One chain runs per neighborhood. The kernel keeps the adjacency matrix,
a matrix of two-path counts, and the running statistic vector in sync
through incremental updates; all randomness (proposal dyads and
log-uniform acceptance draws) is pre-generated by the caller so runs are
reproducible and the kernel itself is deterministic.

Term codes: 0 edges, 1 mutual, 2 nodematch, 3 transitive, 4 esp.
"""

from __future__ import annotations

import numpy as np
from numba import njit

TERM_CODE = {"edges": 0, "mutual": 1, "nodematch": 2, "transitive": 3, "esp": 4}


@njit(cache=True, nogil=True)
def _apply_toggle(adj, sp, i, j, v, directed):
    # flip dyad (i, j) by v (+1 add, -1 remove) and patch two-path counts
    n = adj.shape[0]
    if v > 0:
        adj[i, j] = 1
        if not directed:
            adj[j, i] = 1
    else:
        adj[i, j] = 0
        if not directed:
            adj[j, i] = 0
    if directed:
        for b in range(n):
            if b != i and b != j and adj[j, b] == 1:
                sp[i, b] += v
        for a in range(n):
            if a != i and a != j and adj[a, i] == 1:
                sp[a, j] += v
    else:
        for h in range(n):
            if h == i or h == j:
                continue
            if adj[i, h] == 1:
                sp[j, h] += v
                sp[h, j] += v
            if adj[j, h] == 1:
                sp[i, h] += v
                sp[h, i] += v


@njit(cache=True, nogil=True)
def _delta_on(adj, sp, i, j, term_codes, term_offsets, attr_codes, delta, directed):
    # statistic change for adding dyad (i, j); adj and sp hold the
    # edge-off state
    delta[:] = 0.0
    n = adj.shape[0]
    for t in range(term_codes.shape[0]):
        code = term_codes[t]
        off = term_offsets[t]
        if code == 0:
            delta[off] += 1.0
        elif code == 1:
            if adj[j, i] == 1:
                delta[off] += 1.0
        elif code == 2:
            if attr_codes[t, i] == attr_codes[t, j]:
                delta[off] += 1.0
        elif code == 3:
            d = 0.0
            if sp[i, j] > 0:
                d += 1.0
            if directed:
                for b in range(n):
                    if b != i and b != j and adj[i, b] == 1 and adj[j, b] == 1:
                        if sp[i, b] == 0:
                            d += 1.0
                for a in range(n):
                    if a != i and a != j and adj[a, i] == 1 and adj[a, j] == 1:
                        if sp[a, j] == 0:
                            d += 1.0
            else:
                for h in range(n):
                    if h != i and h != j and adj[i, h] == 1 and adj[j, h] == 1:
                        if sp[i, h] == 0:
                            d += 1.0
                        if sp[j, h] == 0:
                            d += 1.0
            delta[off] += d
        elif code == 4:
            width = term_offsets[t + 1] - term_offsets[t]
            if width <= 0:
                continue
            c = sp[i, j]
            if c >= 1:
                delta[off + c - 1] += 1.0
            if directed:
                for b in range(n):
                    if b != i and b != j and adj[i, b] == 1 and adj[j, b] == 1:
                        c = sp[i, b]
                        if c >= 1:
                            delta[off + c - 1] -= 1.0
                        delta[off + c] += 1.0
                for a in range(n):
                    if a != i and a != j and adj[a, i] == 1 and adj[a, j] == 1:
                        c = sp[a, j]
                        if c >= 1:
                            delta[off + c - 1] -= 1.0
                        delta[off + c] += 1.0
            else:
                for h in range(n):
                    if h != i and h != j and adj[i, h] == 1 and adj[j, h] == 1:
                        c = sp[i, h]
                        if c >= 1:
                            delta[off + c - 1] -= 1.0
                        delta[off + c] += 1.0
                        c = sp[j, h]
                        if c >= 1:
                            delta[off + c - 1] -= 1.0
                        delta[off + c] += 1.0


@njit(cache=True, nogil=True)
def run_chain(adj, sp, eta, cur_stats, term_codes, term_offsets, attr_codes,
              prop_i, prop_j, log_u, burn_in, interval, n_draws,
              out_stats, out_edges, out_masks, mask_i, mask_j, record_masks,
              out_adj, record_adj, directed):
    """Metropolis chain over one neighborhood with uniform dyad proposals.

    Mutates adj, sp, and cur_stats in place; records a statistics row,
    the edge count, and optionally the state bitmask after the burn-in
    and then after every `interval` further steps.
    """
    dim = cur_stats.shape[0]
    delta = np.zeros(dim)
    n = adj.shape[0]
    cur_edges = 0
    for a in range(n):
        for b in range(n):
            cur_edges += adj[a, b]
    if not directed:
        cur_edges //= 2
    step = 0
    for d in range(-1, n_draws):
        block = burn_in if d < 0 else interval
        for _ in range(block):
            i = prop_i[step]
            j = prop_j[step]
            lu = log_u[step]
            step += 1
            if adj[i, j] == 1:
                _apply_toggle(adj, sp, i, j, -1, directed)
                _delta_on(adj, sp, i, j, term_codes, term_offsets, attr_codes,
                          delta, directed)
                q = 0.0
                for c in range(dim):
                    q += eta[c] * delta[c]
                if lu < -q:
                    for c in range(dim):
                        cur_stats[c] -= delta[c]
                    cur_edges -= 1
                else:
                    _apply_toggle(adj, sp, i, j, 1, directed)
            else:
                _delta_on(adj, sp, i, j, term_codes, term_offsets, attr_codes,
                          delta, directed)
                q = 0.0
                for c in range(dim):
                    q += eta[c] * delta[c]
                if lu < q:
                    _apply_toggle(adj, sp, i, j, 1, directed)
                    for c in range(dim):
                        cur_stats[c] += delta[c]
                    cur_edges += 1
        if d >= 0:
            for c in range(dim):
                out_stats[d, c] = cur_stats[c]
            out_edges[d] = cur_edges
            if record_masks:
                m = np.int64(0)
                for b in range(mask_i.shape[0]):
                    if adj[mask_i[b], mask_j[b]] == 1:
                        m |= np.int64(1) << np.int64(b)
                out_masks[d] = m
            if record_adj:
                for a in range(n):
                    for b in range(n):
                        out_adj[d, a, b] = adj[a, b]
