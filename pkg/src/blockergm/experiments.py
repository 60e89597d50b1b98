"""Replicated simulation experiments.

Two designs over a grid of neighborhood counts K:

* consistency: simulate N datasets at a known parameter, refit each,
  and summarize estimation error per coordinate as K grows.
* concentration: draw N graphs per K and track how the overall edge
  fraction tightens around its mean as K grows.

Both write a per-replication CSV and a summary CSV that can be
recomputed from it. Replications are independent tasks with their own
seed streams, so results are identical whether they run serially or on
a worker pool (`BLOCKERGM_WORKERS`).
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .estimation import EstimationError, EstimatorConfig, mcmle
from .graphs import empty_graph
from .models import Model, ModelError
from .sampling import STREAM_EXPERIMENT, SamplerConfig, simulate, simulate_graph

__all__ = [
    "ExperimentConfig",
    "run_consistency",
    "run_concentration",
    "worker_count",
]

WORKERS_ENV = "BLOCKERGM_WORKERS"

# summary statistics only use replications whose fit produced a usable
# estimate; boundary-suspect and errored fits are excluded
USABLE_STATUSES = ("converged", "max-iters")

_TASK_DATA = 1
_TASK_FIT = 2
_TASK_DRAW = 3


DESIGNS = ("consistency", "concentration")


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings shared by both experiment designs."""

    design: str
    model: Model
    theta_star: tuple
    k_grid: tuple
    n_replications: int
    partition_table: dict = field(default_factory=dict)
    directed: bool = False
    seed: int = 0
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise ModelError(f"unknown experiment design {self.design!r}; "
                             f"expected one of {DESIGNS}")
        if not self.k_grid:
            raise ModelError("experiment needs a nonempty K grid")
        if any(int(k) < 1 for k in self.k_grid):
            raise ModelError("every K in the grid must be >= 1")
        if self.n_replications < 2:
            raise ModelError("experiment needs at least 2 replications")
        theta = np.asarray(self.theta_star, dtype=np.float64)
        self.model.validate_theta(theta)

    def theta(self):
        return np.asarray(self.theta_star, dtype=np.float64)

    def partition(self, n_neighborhoods):
        from .config import partition_spec

        return partition_spec(self.partition_table,
                              n_neighborhoods=int(n_neighborhoods))


def worker_count():
    """Worker pool size from the environment, default 1 (serial)."""
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ModelError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise ModelError(f"{WORKERS_ENV} must be >= 1, got {n}")
    return n


def _run_tasks(task_fn, args, workers):
    if workers <= 1 or len(args) <= 1:
        return [task_fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task_fn, args, chunksize=1))


def _consistency_task(args):
    config, k = args[0], args[1]
    r = args[2]
    partition = config.partition(k)
    data_cfg = replace(config.sampler, n_draws=1)
    data = simulate_graph(config.model, config.theta(), partition, data_cfg,
                          stream=(STREAM_EXPERIMENT, _TASK_DATA, k, r),
                          directed=config.directed)
    try:
        fit = mcmle(data, config.model, config.estimator,
                    stream=(STREAM_EXPERIMENT, _TASK_FIT, k, r))
        return k, r, fit.status, np.asarray(fit.theta, dtype=np.float64)
    except EstimationError:
        return k, r, "error", None


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x):
    return repr(float(x))


def run_consistency(config, out_dir, workers=None):
    """Simulate-and-refit study; writes replications.csv and summary.csv.

    Returns the summary rows as a list of dicts. Failed or
    boundary-suspect fits appear in replications.csv with an empty
    estimate column and are left out of the error summaries.
    """
    if config.design != "consistency":
        raise ModelError(f"config is for the {config.design} design")
    if workers is None:
        workers = worker_count()
    os.makedirs(out_dir, exist_ok=True)
    labels = config.model.parameter_labels
    theta_star = config.theta()

    args = [(config, int(k), r)
            for k in config.k_grid
            for r in range(config.n_replications)]
    results = _run_tasks(_consistency_task, args, workers)

    rep_rows = []
    estimates = {int(k): [] for k in config.k_grid}
    for k, r, status, theta in results:
        for c, label in enumerate(labels):
            value = "" if theta is None else _fmt(theta[c])
            rep_rows.append([k, r, label, value, status])
        if status in USABLE_STATUSES and theta is not None:
            estimates[k].append(theta)
    _write_rows(os.path.join(out_dir, "replications.csv"),
                ["K", "replication", "coordinate", "estimate", "status"],
                rep_rows)

    summary = []
    for k in config.k_grid:
        k = int(k)
        used = np.asarray(estimates[k], dtype=np.float64)
        n_used = used.shape[0]
        n_failed = config.n_replications - n_used
        for c, label in enumerate(labels):
            if n_used == 0:
                rmse = bias = float("nan")
            else:
                err = used[:, c] - theta_star[c]
                rmse = float(np.sqrt(np.mean(err ** 2)))
                bias = float(np.mean(err))
            summary.append({"K": k, "coordinate": label, "rmse": rmse,
                            "bias": bias, "n_used": n_used,
                            "n_failed": n_failed})
    _write_rows(os.path.join(out_dir, "summary.csv"),
                ["K", "coordinate", "rmse", "bias", "n_used", "n_failed"],
                [[s["K"], s["coordinate"], _fmt(s["rmse"]), _fmt(s["bias"]),
                  s["n_used"], s["n_failed"]] for s in summary])
    return summary


def _concentration_task(args):
    config, k = args[0], args[1]
    partition = config.partition(k)
    start = empty_graph(partition, directed=config.directed)
    draw_cfg = replace(config.sampler, n_draws=config.n_replications)
    batch = simulate(config.model, config.theta(), start, draw_cfg,
                     stream=(STREAM_EXPERIMENT, _TASK_DRAW, k))
    edges = batch.edge_counts.sum(axis=0)
    return k, int(start.total_dyads), edges


def run_concentration(config, out_dir, workers=None):
    """Edge-fraction spread study; writes replications.csv and summary.csv.

    Returns the summary rows as a list of dicts, one per K, with the
    mean and standard deviation of the overall edge fraction.
    """
    if config.design != "concentration":
        raise ModelError(f"config is for the {config.design} design")
    if workers is None:
        workers = worker_count()
    os.makedirs(out_dir, exist_ok=True)

    args = [(config, int(k)) for k in config.k_grid]
    results = _run_tasks(_concentration_task, args, workers)

    rep_rows = []
    summary = []
    for k, dyads, edges in results:
        fractions = edges / float(dyads)
        deviations = np.abs(edges - np.mean(edges)) / float(dyads)
        for r in range(config.n_replications):
            rep_rows.append([k, r, int(edges[r]), dyads,
                             _fmt(fractions[r]), _fmt(deviations[r])])
        summary.append({
            "K": int(k),
            "dyads": dyads,
            "mean_fraction": float(np.mean(fractions)),
            "sd_fraction": float(np.std(fractions, ddof=1)),
        })
    _write_rows(os.path.join(out_dir, "replications.csv"),
                ["K", "replication", "edges", "dyads", "fraction", "deviation"],
                rep_rows)
    _write_rows(os.path.join(out_dir, "summary.csv"),
                ["K", "dyads", "mean_fraction", "sd_fraction"],
                [[s["K"], s["dyads"], _fmt(s["mean_fraction"]),
                  _fmt(s["sd_fraction"])] for s in summary])
    return summary
