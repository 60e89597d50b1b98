"""Exact small-graph computations by state enumeration.

Per-neighborhood state spaces are walked in Gray-code order over dyad
bitmasks, updating statistics incrementally, so normalizing constants,
moments, and maximum likelihood estimates can be computed exactly for
small neighborhoods. Intended for tests and cross-checks.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit, logsumexp

from .statistics import NodeMatch, _attr_codes

__all__ = [
    "ExactError",
    "BoundaryError",
    "EnumerationBudget",
    "dyad_order",
    "state_matrix",
    "state_distribution",
    "exact_psi",
    "exact_loglik",
    "exact_moments",
    "exact_mle",
    "bernoulli_transitive_mean",
    "conditional_bounds",
]


class ExactError(RuntimeError):
    """Exact computation cannot be carried out as requested."""


class BoundaryError(ExactError):
    """The maximum likelihood estimate does not exist (data on boundary)."""


class EnumerationBudget:
    """Cap on enumerated states per neighborhood."""

    def __init__(self, max_states=2 ** 24):
        self.max_states = int(max_states)

    def check(self, graph, k=None):
        counts = graph.dyad_counts()
        if k is not None:
            counts = counts[k:k + 1]
        for d in counts:
            if d >= 63 or (1 << d) > self.max_states:
                raise ExactError(
                    f"neighborhood with {d} dyads needs 2**{d} states, "
                    f"over the budget of {self.max_states}"
                )


def dyad_order(graph, k):
    """Fixed dyad ordering for neighborhood k's state bitmask."""
    n = graph.sizes[k]
    if graph.directed:
        return [(i, j) for i in range(n) for j in range(n) if i != j]
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def state_matrix(terms, graph, k, budget=None):
    """Statistics of every state of neighborhood k.

    Returns (S, masks): S has one row per state, masks the dyad bitmask
    of each row, with bit b of a mask set when dyad b of `dyad_order` is
    an edge. Rows follow Gray-code order, so masks are not sorted.
    """
    (budget or EnumerationBudget()).check(graph, k)
    dyads = dyad_order(graph, k)
    n_dyads = len(dyads)
    n = graph.sizes[k]
    dim = terms.dim(graph, k)
    n_states = 1 << n_dyads
    S = np.zeros((n_states, dim))
    masks = np.zeros(n_states, dtype=np.int64)
    a = np.zeros((n, n), dtype=np.uint8)
    cur = np.zeros(dim)  # every term vanishes on the empty graph
    for t in range(1, n_states):
        bit = (t & -t).bit_length() - 1
        i, j = dyads[bit]
        if a[i, j]:
            a[i, j] = 0
            if not graph.directed:
                a[j, i] = 0
            delta = np.concatenate([tm.change_on(graph, k, a, i, j) for tm in terms])
            cur = cur - delta
        else:
            delta = np.concatenate([tm.change_on(graph, k, a, i, j) for tm in terms])
            cur = cur + delta
            a[i, j] = 1
            if not graph.directed:
                a[j, i] = 1
        S[t] = cur
        masks[t] = t ^ (t >> 1)
    return S, masks


def state_distribution(model, theta, graph, k, budget=None):
    """Exact state probabilities of neighborhood k under the model.

    Returns (masks, probabilities) aligned with `dyad_order` bitmasks.
    """
    S, masks = state_matrix(model.terms, graph, k, budget=budget)
    scores = S @ model.eta_k(theta, graph, k)
    scores -= scores.max()
    w = np.exp(scores)
    return masks, w / w.sum()


def exact_psi(model, theta, graph, k=None, budget=None):
    """Log normalizing constant: one neighborhood, or summed over all."""
    which = range(graph.n_neighborhoods) if k is None else [k]
    total = 0.0
    for kk in which:
        S, _ = state_matrix(model.terms, graph, kk, budget=budget)
        total += float(logsumexp(S @ model.eta_k(theta, graph, kk)))
    return total


def exact_loglik(model, theta, graph, stats=None, budget=None):
    """Exact log likelihood of the observed graph."""
    return model.log_unnormalized(theta, graph, stats=stats) - exact_psi(
        model, theta, graph, budget=budget
    )


def exact_moments(model, theta, graph, budget=None):
    """Exact per-neighborhood statistic means and covariances."""
    (budget or EnumerationBudget()).check(graph)
    means = []
    covs = []
    for k in range(graph.n_neighborhoods):
        S, _ = state_matrix(model.terms, graph, k)
        scores = S @ model.eta_k(theta, graph, k)
        scores -= scores.max()
        w = np.exp(scores)
        w /= w.sum()
        mean = w @ S
        centered = S - mean
        cov = centered.T @ (w[:, None] * centered)
        means.append(mean)
        covs.append(cov)
    return means, covs


_SCALAR_KINDS = {"edges", "mutual", "nodematch", "transitive"}


def _neighborhood_key(graph, terms, k):
    """Cache key: neighborhoods with identical statistic tables share it."""
    parts = [graph.sizes[k], graph.directed]
    for t in terms:
        if isinstance(t, NodeMatch):
            parts.append((t.name, tuple(_attr_codes(graph, t.attribute, k).tolist())))
        else:
            parts.append(t.name)
    return tuple(parts)


def _state_matrices(terms, graph, budget=None):
    """Per-neighborhood enumeration tables, deduplicated across blocks."""
    cache = {}
    out = []
    for k in range(graph.n_neighborhoods):
        key = _neighborhood_key(graph, terms, k)
        if key not in cache:
            cache[key] = state_matrix(terms, graph, k, budget=budget)[0]
        out.append(cache[key])
    return out


def _boundary_screen(model, graph, stats, s_list=None):
    """Raise if a pooled scalar statistic sits on its support boundary."""
    terms = model.terms
    if s_list is None:
        s_list = _state_matrices(terms, graph)
    mins = [S.min(axis=0) for S in s_list]
    maxs = [S.max(axis=0) for S in s_list]
    agg_obs = terms.aggregate(graph, stats=stats)
    agg_min = terms.aggregate(graph, stats=mins)
    agg_max = terms.aggregate(graph, stats=maxs)
    labels = terms.aggregate_labels(graph)
    pos = 0
    for t in terms:
        width = max(t.dim(graph, k) for k in range(graph.n_neighborhoods))
        if t.kind in _SCALAR_KINDS:
            for j in range(pos, pos + width):
                if agg_obs[j] <= agg_min[j] or agg_obs[j] >= agg_max[j]:
                    raise BoundaryError(
                        f"no maximum likelihood estimate: pooled {labels[j]!r} "
                        f"equals its support bound ({agg_obs[j]:g})"
                    )
        pos += width


def exact_mle(model, graph, theta0=None, tol=1e-10, max_iter=200, budget=None):
    """Maximum likelihood estimate by Fisher scoring on exact moments.

    Raises BoundaryError when the estimate does not exist and ExactError
    when scoring fails to converge.
    """
    (budget or EnumerationBudget()).check(graph)
    stats = model.terms.compute(graph)
    s_list = _state_matrices(model.terms, graph, budget=budget)
    _boundary_screen(model, graph, stats, s_list=s_list)

    theta = model.default_theta() if theta0 is None else np.asarray(theta0, dtype=np.float64)
    theta = model.validate_theta(theta)

    def loglik(th):
        total = 0.0
        for k, S in enumerate(s_list):
            eta = model.eta_k(th, graph, k)
            total += float(stats[k] @ eta) - float(logsumexp(S @ eta))
        return total

    cur = loglik(theta)
    for _ in range(max_iter):
        jacs = model.eta_jacobians(theta, graph)
        grad = np.zeros(model.n_parameters)
        info = np.zeros((model.n_parameters, model.n_parameters))
        for k, S in enumerate(s_list):
            scores = S @ model.eta_k(theta, graph, k)
            scores -= scores.max()
            w = np.exp(scores)
            w /= w.sum()
            mean = w @ S
            centered = S - mean
            cov = centered.T @ (w[:, None] * centered)
            grad += jacs[k].T @ (stats[k] - mean)
            info += jacs[k].T @ cov @ jacs[k]
        # first-order condition with decay coordinates allowed to press
        # against the domain floor
        pinned = model.pinned_decays(theta)
        active = grad.copy()
        for i in pinned:
            if active[i] < 0.0:
                active[i] = 0.0
        if np.max(np.abs(active)) < tol:
            if pinned:
                raise BoundaryError(
                    "no maximum likelihood estimate: geometric decay pinned "
                    "at the edge of its domain")
            return theta
        # active-set Newton step: coordinates pressed against the floor
        # by the gradient stay put, the rest take the reduced step
        frozen = [i for i in pinned if grad[i] < 0.0]
        free = [i for i in range(model.n_parameters) if i not in frozen]
        step = np.zeros(model.n_parameters)
        sub = info[np.ix_(free, free)]
        try:
            step[free] = np.linalg.solve(sub + 1e-12 * np.eye(len(free)),
                                         grad[free])
        except np.linalg.LinAlgError:
            raise ExactError("singular information matrix in exact scoring") from None
        # damped step: halve until the likelihood improves
        alpha = 1.0
        improved = False
        for _ in range(60):
            cand = model.project_theta(theta + alpha * step)
            new = loglik(cand)
            if new >= cur - 1e-13 and float(np.linalg.norm(cand - theta)) > 0.0:
                theta = cand
                cur = new
                improved = True
                break
            alpha *= 0.5
        if not improved:
            raise ExactError("exact scoring step search failed")
        if np.max(np.abs(theta)) > 80.0:
            raise BoundaryError("exact scoring diverged: estimate is unbounded")
    raise ExactError(f"exact scoring did not converge in {max_iter} iterations")


def bernoulli_transitive_mean(p, size):
    """Expected count of edges closed by a shared neighbour, Bernoulli(p).

    For an undirected Bernoulli graph on `size` nodes each of the
    C(size, 2) dyads is an edge with a shared neighbour with probability
    p * (1 - (1 - p**2)**(size - 2)).
    """
    if size < 3:
        return 0.0
    dyads = size * (size - 1) // 2
    return float(p * (1.0 - (1.0 - p * p) ** (size - 2)) * dyads)


def conditional_bounds(theta1, theta2, size):
    """Envelope of conditional edge probabilities, edges+transitive model.

    For coefficient vector (theta1, theta2) with theta2 >= 0 on an
    undirected neighborhood of `size` nodes, every conditional edge
    probability lies in [logistic(theta1), logistic(theta1 + theta2 *
    (2 * size - 3))], and both ends are attained at some state.
    """
    if theta2 < 0:
        raise ExactError("conditional bounds need a nonnegative transitivity weight")
    if size < 3:
        raise ExactError("conditional bounds need at least three nodes")
    low = float(expit(theta1))
    high = float(expit(theta1 + theta2 * (2 * size - 3)))
    return low, high
