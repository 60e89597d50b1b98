"""Estimation: pseudolikelihood start, Monte Carlo MLE, bootstrap SEs.

The Monte Carlo likelihood ratio against a reference parameter is built
per neighborhood from sampled statistics and maximized by damped Newton
steps inside a trust region around the reference; the outer loop
refreshes the sample at the current estimate until the step and the
dyad-normalized score are both small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logsumexp

from .models import GeometricWeights, ModelError
from .sampling import (
    STREAM_BOOTSTRAP,
    STREAM_ESTIMATE,
    SamplerConfig,
    simulate,
    simulate_graph,
)

__all__ = [
    "EstimationError",
    "EffectiveSampleSizeError",
    "EstimatorConfig",
    "EstimateResult",
    "BootstrapResult",
    "mple",
    "mc_loglik_ratio",
    "mc_score_info",
    "mcmle",
    "bootstrap_se",
]

# pseudolikelihood coordinates at or beyond this magnitude are treated as
# separation (a boundary estimate on the logit scale)
SEPARATION_MAGNITUDE = 10.0


class EstimationError(RuntimeError):
    """Estimation failed (nonexistence, too many failures, bad input)."""


class EffectiveSampleSizeError(EstimationError):
    """Importance weights have collapsed; resample before continuing."""


@dataclass(frozen=True)
class EstimatorConfig:
    """Monte Carlo MLE tuning.

    n_draws is per neighborhood and outer iteration; burn_in/interval of
    None take the sampler defaults. tol_step bounds the outer step norm
    and tol_score the score norm divided by the total dyad count.
    """

    n_draws: int = 5000
    tol_step: float = 1e-4
    tol_score: float = 1e-4
    max_outer: int = 30
    trust_radius: float = 0.5
    max_inner: int = 30
    min_ess_fraction: float = 0.05
    seed: int = 0
    burn_in: Optional[int] = None
    interval: Optional[int] = None
    theta0: Optional[tuple] = None

    def __post_init__(self):
        if int(self.n_draws) < 1:
            raise ModelError(f"n_draws must be >= 1, got {self.n_draws}")
        if int(self.max_outer) < 1:
            raise ModelError("max_outer must be >= 1")
        for name in ("tol_step", "tol_score", "trust_radius"):
            if not getattr(self, name) > 0:
                raise ModelError(f"{name} must be positive")
        if not 0 < self.min_ess_fraction <= 1:
            raise ModelError("min_ess_fraction must be in (0, 1]")

    def sampler_config(self):
        return SamplerConfig(n_draws=self.n_draws, burn_in=self.burn_in,
                             interval=self.interval, seed=self.seed)


@dataclass
class EstimateResult:
    """Fit output: the estimate, its status, and the outer trajectory.

    status is 'converged', 'max-iters', or 'boundary-suspect'. When
    status is 'converged' the final step and normalized score norms are
    below their tolerances. se is filled by the bootstrap when run.
    """

    theta: np.ndarray
    status: str
    iterations: int
    score_norm: float
    trajectory: list = field(default_factory=list)
    labels: tuple = ()
    se: Optional[np.ndarray] = None


def _dyad_designs(graph, terms):
    """Per neighborhood: (edge-on change rows, observed dyad states)."""
    designs = []
    for k in range(graph.n_neighborhoods):
        a = graph.adjacency[k]
        n = graph.sizes[k]
        if graph.directed:
            dyads = [(i, j) for i in range(n) for j in range(n) if i != j]
        else:
            dyads = [(i, j) for i in range(n) for j in range(i + 1, n)]
        rows = np.zeros((len(dyads), terms.dim(graph, k)))
        y = np.zeros(len(dyads))
        for r, (i, j) in enumerate(dyads):
            rows[r] = terms.change_k(graph, k, i, j)
            if a[i, j]:
                y[r] = 1.0
        designs.append((rows, y))
    return designs


def mple(graph, model, theta0=None):
    """Maximum pseudolikelihood estimate from per-dyad conditional logits.

    Maximizes the product of full-conditional edge probabilities by
    quasi-Newton with the analytic gradient. Geometric decay coordinates
    are held at their starting value (1.0 by default): the
    pseudolikelihood is poorly behaved in the decay direction and this
    estimate is a starting point, not an end product. Perfect separation
    shows up as a huge coordinate and is reported as status
    'boundary-suspect'.
    """
    designs = _dyad_designs(graph, model.terms)
    x0 = model.default_theta() if theta0 is None else np.asarray(theta0, float)
    decay_slots = set()
    for rule in model.eta_map.rules:
        if isinstance(rule, GeometricWeights):
            decay_slots.add(rule.decay_index)
    bounds = [(x0[i], x0[i]) if i in decay_slots else (None, None)
              for i in range(model.n_parameters)]

    def negative_pll(theta):
        value = 0.0
        grad = np.zeros(model.n_parameters)
        for k, (rows, y) in enumerate(designs):
            eta = model.eta_k(theta, graph, k)
            z = rows @ eta
            value += float(y @ z - np.logaddexp(0.0, z).sum())
            jac = model.eta_jacobian_k(theta, graph, k)
            grad += jac.T @ (rows.T @ (y - expit(z)))
        return -value, -grad

    res = minimize(negative_pll, x0, jac=True, method="L-BFGS-B", bounds=bounds)
    theta = np.asarray(res.x, dtype=np.float64)
    grad_norm = float(np.linalg.norm(res.jac))
    if np.max(np.abs(theta)) >= SEPARATION_MAGNITUDE:
        status = "boundary-suspect"
    elif res.success:
        status = "converged"
    else:
        status = "max-iters"
    return EstimateResult(theta=theta, status=status, iterations=int(res.nit),
                          score_norm=grad_norm, labels=model.parameter_labels)


def mc_loglik_ratio(model, theta, theta_ref, observed_stats, batch):
    """Monte Carlo estimate of loglik(theta) - loglik(theta_ref).

    `batch` must have been sampled at theta_ref. Exactly zero when theta
    equals theta_ref.
    """
    graph = batch.graph
    m = batch.n_draws
    log_m = math.log(m)
    total = 0.0
    for k in range(graph.n_neighborhoods):
        d_eta = model.eta_k(theta, graph, k) - model.eta_k(theta_ref, graph, k)
        q_obs = float(d_eta @ observed_stats[k])
        q_draws = batch.stats[k] @ d_eta
        total += q_obs - (float(logsumexp(q_draws)) - log_m)
    return total


def mc_score_info(model, theta, theta_ref, observed_stats, batch,
                  min_ess_fraction=0.05):
    """Gradient and information of the Monte Carlo loglik ratio.

    Uses self-normalized importance weights per neighborhood. Refuses
    with EffectiveSampleSizeError when any neighborhood's weight ESS
    drops below min_ess_fraction of the draw count; the caller should
    resample at the current theta.
    """
    graph = batch.graph
    m = batch.n_draws
    p = model.n_parameters
    grad = np.zeros(p)
    info = np.zeros((p, p))
    for k in range(graph.n_neighborhoods):
        d_eta = model.eta_k(theta, graph, k) - model.eta_k(theta_ref, graph, k)
        q = batch.stats[k] @ d_eta
        q -= q.max()
        w = np.exp(q)
        w /= w.sum()
        ess = 1.0 / float(w @ w)
        if ess < min_ess_fraction * m:
            raise EffectiveSampleSizeError(
                f"weight ESS {ess:.1f} of {m} draws in neighborhood {k}; "
                "resample at the current parameters"
            )
        jac = model.eta_jacobian_k(theta, graph, k)
        mean = w @ batch.stats[k]
        grad += jac.T @ (observed_stats[k] - mean)
        centered = batch.stats[k] - mean
        cov = centered.T @ (w[:, None] * centered)
        info += jac.T @ cov @ jac
    return grad, info


def _capped(base, target, step, radius):
    """target + step, pulled back onto the ball of `radius` around base."""
    cand = target + step
    dist = float(np.linalg.norm(cand - base))
    if dist > radius:
        cand = base + (cand - base) * (radius / dist)
    return cand


def mcmle(graph, model, config=None, stream=()):
    """Monte Carlo maximum likelihood with per-neighborhood sampling.

    Starts from the pseudolikelihood estimate, then alternates sampling
    at the current estimate with trust-region Newton steps on the Monte
    Carlo likelihood ratio. The outer loop stops once an update falls
    below tol_step or below the Monte Carlo resolution of the estimate,
    whichever is larger. Reports 'boundary-suspect' when, three outer
    iterations in a row, the observed pooled statistic falls outside the
    sampled hull or the sample collapses to a single state, and when the
    start itself shows separation.
    """
    config = config or EstimatorConfig()
    terms = model.terms
    obs = terms.compute(graph)
    agg_obs = terms.aggregate(graph, stats=obs)
    total_dyads = max(graph.total_dyads, 1)

    if config.theta0 is not None:
        theta = model.validate_theta(np.asarray(config.theta0, dtype=np.float64))
        start = None
    else:
        start = mple(graph, model)
        theta = start.theta
        if start.status == "boundary-suspect":
            return EstimateResult(theta=theta, status="boundary-suspect",
                                  iterations=0, score_norm=float("inf"),
                                  trajectory=[], labels=model.parameter_labels)

    trajectory = []
    hull_strikes = 0
    pinned_strikes = 0
    status = "max-iters"
    iterations = config.max_outer
    score_norm = float("inf")
    for outer in range(1, config.max_outer + 1):
        batch = simulate(model, theta, graph, config.sampler_config(),
                         stream=(*stream, STREAM_ESTIMATE, outer))
        agg = batch.aggregate_stats()
        outside = bool(np.any(agg_obs < agg.min(axis=0))
                       or np.any(agg_obs > agg.max(axis=0)))
        # a sample with zero spread on every coordinate is stuck at a
        # single state and cannot certify anything either
        frozen = bool(np.all(agg.max(axis=0) == agg.min(axis=0)))
        strike = outside or frozen
        hull_strikes = hull_strikes + 1 if strike else 0
        if hull_strikes >= 3:
            status = "boundary-suspect"
            iterations = outer
            trajectory.append({"iteration": outer, "theta": theta.copy(),
                               "step_norm": 0.0, "score_norm": score_norm,
                               "hull_violation": True})
            break

        theta_ref = theta
        th = theta.copy()
        radius = config.trust_radius
        cur_ratio = 0.0
        for _ in range(config.max_inner):
            try:
                g, info = mc_score_info(model, th, theta_ref, obs, batch,
                                        config.min_ess_fraction)
            except EffectiveSampleSizeError:
                break
            ridge = 1e-8 * max(float(np.max(np.diag(info))), 1.0)
            step = np.linalg.solve(info + ridge * np.eye(len(info)), g)
            cand = model.project_theta(_capped(theta_ref, th, step, radius))
            improved = False
            for _ in range(40):
                if np.all(np.isfinite(cand)):
                    ratio = mc_loglik_ratio(model, cand, theta_ref, obs, batch)
                    if ratio > cur_ratio + 1e-12:
                        improved = True
                        break
                radius *= 0.5
                if radius < 1e-12:
                    break
                cand = model.project_theta(_capped(theta_ref, th, step, radius))
            if not improved:
                break
            moved = float(np.linalg.norm(cand - th))
            th = cand
            cur_ratio = ratio
            if moved < 0.1 * config.tol_step:
                break

        step_norm = float(np.linalg.norm(th - theta_ref))
        noise_floor = 0.0
        try:
            g_final, info_final = mc_score_info(model, th, theta_ref, obs, batch,
                                                config.min_ess_fraction)
            score_norm = float(np.linalg.norm(g_final)) / total_dyads
            # the estimate cannot be resolved more finely than the Monte
            # Carlo error of one update, Cov(step) ~ info^-1 / draws
            ridge = 1e-8 * max(float(np.max(np.diag(info_final))), 1.0)
            inv = np.linalg.inv(info_final + ridge * np.eye(len(info_final)))
            noise_floor = 2.0 * float(np.sqrt(max(np.trace(inv), 0.0)
                                              / batch.n_draws))
        except EffectiveSampleSizeError:
            score_norm = float("inf")
        theta = th
        trajectory.append({"iteration": outer, "theta": theta.copy(),
                           "step_norm": step_norm, "score_norm": score_norm,
                           "hull_violation": strike})
        if (not strike
                and step_norm < max(config.tol_step, noise_floor)
                and score_norm < config.tol_score):
            status = "converged"
            iterations = outer
            break
        pinned_strikes = pinned_strikes + 1 if model.pinned_decays(theta) else 0
        if pinned_strikes >= 3:
            iterations = outer
            break
    if model.pinned_decays(theta):
        # estimate pressed against the open edge of the decay domain
        status = "boundary-suspect"
    return EstimateResult(theta=theta, status=status, iterations=iterations,
                          score_norm=score_norm, trajectory=trajectory,
                          labels=model.parameter_labels)


@dataclass
class BootstrapResult:
    """Parametric bootstrap output: SEs plus the replicate estimates."""

    se: np.ndarray
    estimates: np.ndarray
    n_failed: int
    labels: tuple = ()


def bootstrap_se(model, theta_hat, graph, n_replications, config=None,
                 stream=()):
    """Parametric bootstrap standard errors at theta_hat.

    Simulates `n_replications` datasets over the partition of `graph`,
    refits each, and returns per-coordinate standard deviations. Failed
    refits (errors or boundary-suspect fits) are excluded and counted;
    more than 20% failures is an error, as is n_replications < 2.
    """
    if int(n_replications) < 2:
        raise EstimationError(
            f"bootstrap needs at least 2 replications, got {n_replications}"
        )
    config = config or EstimatorConfig()
    theta_hat = model.validate_theta(theta_hat)
    estimates = []
    n_failed = 0
    for b in range(int(n_replications)):
        data_cfg = SamplerConfig(n_draws=1, burn_in=config.burn_in,
                                 interval=config.interval, seed=config.seed)
        data = simulate_graph(model, theta_hat, graph, data_cfg,
                              stream=(*stream, STREAM_BOOTSTRAP, 2 * b))
        try:
            fit = mcmle(data, model, config,
                        stream=(*stream, STREAM_BOOTSTRAP, 2 * b + 1))
        except EstimationError:
            n_failed += 1
            continue
        if fit.status == "boundary-suspect":
            n_failed += 1
            continue
        estimates.append(fit.theta)
    if n_failed > 0.2 * n_replications:
        raise EstimationError(
            f"{n_failed} of {n_replications} bootstrap refits failed"
        )
    est = np.array(estimates)
    se = est.std(axis=0, ddof=1)
    return BootstrapResult(se=se, estimates=est, n_failed=n_failed,
                           labels=model.parameter_labels)
