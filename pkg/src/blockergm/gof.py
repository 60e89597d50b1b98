"""Goodness of fit: observed graph vs the simulated reference
distribution at the fitted parameters.

Simulates R graphs, then compares the observed value of each pooled
model statistic, shared-partner histogram (edges and all dyads), and
geodesic histogram against the simulated mean and 5%/95% quantiles. The
root-mean-squared error of the mean predicted edgewise shared-partner
vector is the scalar summary of fit.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .sampling import STREAM_GOF, SamplerConfig, sample_neighborhood
from .statistics import block_summaries, gof_summaries, summary_labels

__all__ = ["GofError", "GofRow", "GofReport", "goodness_of_fit"]


class GofError(ValueError):
    """Invalid goodness-of-fit request."""


@dataclass
class GofRow:
    statistic: str
    bin: str
    simulated_mean: float
    simulated_q05: float
    simulated_q95: float
    observed: float

    def covered(self):
        return self.simulated_q05 <= self.observed <= self.simulated_q95


@dataclass
class GofReport:
    rows: list
    esp_rmse: float
    n_simulations: int

    def coverage(self):
        """Fraction of rows whose observed value falls in [q05, q95]."""
        return float(np.mean([r.covered() for r in self.rows]))

    def write_csv(self, path):
        with open(os.fspath(path), "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["statistic", "bin", "simulated_mean", "simulated_q05",
                        "simulated_q95", "observed"])
            for r in self.rows:
                w.writerow([r.statistic, r.bin, repr(r.simulated_mean),
                            repr(r.simulated_q05), repr(r.simulated_q95),
                            repr(r.observed)])


def goodness_of_fit(model, theta, graph, n_simulations=1000, config=None,
                    stream=()):
    """Simulate at theta and compare summaries against `graph`.

    `config` supplies chain tuning and the seed (n_draws is overridden
    by n_simulations). Fewer than 10 simulations are rejected.
    """
    if int(n_simulations) < 10:
        raise GofError(f"need at least 10 simulations, got {n_simulations}")
    n_simulations = int(n_simulations)
    config = config or SamplerConfig()
    run_cfg = SamplerConfig(n_draws=n_simulations, burn_in=config.burn_in,
                            interval=config.interval, seed=config.seed)
    theta = model.validate_theta(theta)
    terms = model.terms

    max_sp = max(graph.max_size - 2, 0)
    max_geo = max(graph.max_size - 1, 1)
    sum_labels = summary_labels(graph)
    _, observed_summary = gof_summaries(graph)
    agg_labels = terms.aggregate_labels(graph)
    observed_agg = terms.aggregate(graph)

    widths = [max(t.dim(graph, k) for k in range(graph.n_neighborhoods))
              for t in terms]
    sim_agg = np.zeros((n_simulations, sum(widths)))
    sim_summary = np.zeros((n_simulations, len(sum_labels)))
    for k in range(graph.n_neighborhoods):
        sample = sample_neighborhood(model, theta, graph, k, run_cfg,
                                     stream=(*stream, STREAM_GOF),
                                     record_graphs=True)
        pos_in = 0
        pos_out = 0
        for t, w in zip(terms, widths):
            d = t.dim(graph, k)
            sim_agg[:, pos_out:pos_out + d] += sample.stats[:, pos_in:pos_in + d]
            pos_in += d
            pos_out += w
        for d in range(n_simulations):
            sim_summary[d] += block_summaries(sample.adjs[d], graph.directed,
                                              max_sp, max_geo)

    rows = []

    def add_rows(name_bins, sims, observed):
        means = sims.mean(axis=0)
        # order-statistic quantiles, widened where ties would put the
        # band on one side of the mean
        q05 = np.minimum(np.quantile(sims, 0.05, axis=0), means)
        q95 = np.maximum(np.quantile(sims, 0.95, axis=0), means)
        for idx, (statistic, bin_label) in enumerate(name_bins):
            rows.append(GofRow(statistic, bin_label, float(means[idx]),
                               float(q05[idx]), float(q95[idx]),
                               float(observed[idx])))

    # scalar model terms; esp coordinates are covered by the summary rows
    scalar_cols = []
    pos = 0
    for t, w in zip(terms, widths):
        if t.kind != "esp":
            scalar_cols.extend(range(pos, pos + w))
        pos += w
    if scalar_cols:
        add_rows([(agg_labels[c], "") for c in scalar_cols],
                 sim_agg[:, scalar_cols], observed_agg[scalar_cols])
    add_rows(sum_labels, sim_summary, observed_summary)

    esp_idx = [i for i, (s, _) in enumerate(sum_labels) if s == "esp"]
    if esp_idx:
        diff = sim_summary[:, esp_idx].mean(axis=0) - observed_summary[esp_idx]
        esp_rmse = float(np.sqrt(np.mean(diff ** 2)))
    else:
        esp_rmse = 0.0
    return GofReport(rows=rows, esp_rmse=esp_rmse, n_simulations=n_simulations)
