"""Run configuration files.

One TOML file drives every CLI command. Recognized tables: [model]
(terms and coefficient rules), [theta] (parameter values), [partition]
(synthetic node partition), [sampler], [estimator], [bootstrap], [gof],
and [experiment]; top-level keys `directed` and `seed`. The README
documents the full schema.
"""

from __future__ import annotations

import os

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from .estimation import EstimatorConfig
from .graphs import GraphDataError
from .models import Model, ModelError, model_from_config
from .sampling import SamplerConfig

__all__ = [
    "load_config",
    "build_model",
    "build_theta",
    "build_partition",
    "build_sampler_config",
    "build_estimator_config",
    "build_experiment_config",
]


def load_config(path):
    """Parse a TOML config file into a plain dict."""
    try:
        with open(os.fspath(path), "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise GraphDataError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ModelError(f"config file {path} is not valid TOML: {exc}") from None


def build_model(cfg):
    if "model" not in cfg:
        raise ModelError("config needs a [model] table")
    return model_from_config(cfg["model"])


def build_theta(cfg, model, override=None):
    """Parameter vector from [theta].values (or an explicit override)."""
    if override is not None:
        values = override
    else:
        values = cfg.get("theta", {}).get("values")
        if values is None:
            raise ModelError("config needs [theta] values (or a --theta override)")
    theta = np.asarray([float(v) for v in values], dtype=np.float64)
    return model.validate_theta(theta)


def mixed_counts(fractions, n_neighborhoods):
    """Integer bucket counts for `fractions` of n_neighborhoods blocks."""
    fractions = [float(f) for f in fractions]
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ModelError(f"partition fractions must sum to 1, got {fractions}")
    counts = [int(np.floor(f * n_neighborhoods)) for f in fractions]
    short = n_neighborhoods - sum(counts)
    remainders = [f * n_neighborhoods - c for f, c in zip(fractions, counts)]
    for idx in np.argsort(remainders)[::-1][:short]:
        counts[int(idx)] += 1
    return counts


def partition_spec(table, n_neighborhoods=None):
    """(neighborhood id, node ids) list from a [partition] table.

    Either `neighborhoods` and `size` (uniform), or `sizes` with
    `counts` or `fractions` (mixed). `n_neighborhoods` overrides the
    block count, scaling mixed fractions.
    """
    if "size" in table:
        k = int(n_neighborhoods if n_neighborhoods is not None
                else table.get("neighborhoods", 0))
        if k < 1:
            raise ModelError("partition needs neighborhoods >= 1")
        size = int(table["size"])
        if size < 1:
            raise ModelError("partition size must be >= 1")
        sizes = [size] * k
    elif "sizes" in table:
        block_sizes = [int(s) for s in table["sizes"]]
        if "counts" in table and n_neighborhoods is None:
            counts = [int(c) for c in table["counts"]]
        elif "fractions" in table:
            k = int(n_neighborhoods if n_neighborhoods is not None
                    else table.get("neighborhoods", 0))
            if k < 1:
                raise ModelError("partition with fractions needs a neighborhood count")
            counts = mixed_counts(table["fractions"], k)
        elif "counts" in table:
            base = [int(c) for c in table["counts"]]
            total = sum(base)
            counts = mixed_counts([c / total for c in base], int(n_neighborhoods))
        else:
            raise ModelError("mixed partition needs counts or fractions")
        if len(counts) != len(block_sizes):
            raise ModelError("one count per size required")
        sizes = []
        for s, c in zip(block_sizes, counts):
            sizes.extend([s] * c)
    else:
        raise ModelError("partition needs size or sizes")
    out = []
    for k, s in enumerate(sizes):
        nid = f"n{k}"
        out.append((nid, [f"{nid}.{i}" for i in range(s)]))
    return out


def build_partition(cfg, n_neighborhoods=None):
    if "partition" not in cfg:
        raise ModelError("config needs a [partition] table (or node/edge files)")
    return partition_spec(cfg["partition"], n_neighborhoods=n_neighborhoods)


def build_sampler_config(cfg, seed=None, n_draws=None):
    table = cfg.get("sampler", {})
    return SamplerConfig(
        n_draws=int(n_draws if n_draws is not None else table.get("n_draws", 1000)),
        burn_in=table.get("burn_in"),
        interval=table.get("interval"),
        seed=int(seed if seed is not None else cfg.get("seed", 0)),
    )


def build_estimator_config(cfg, seed=None, n_draws=None):
    table = cfg.get("estimator", {})
    sampler = cfg.get("sampler", {})
    return EstimatorConfig(
        n_draws=int(n_draws if n_draws is not None else table.get("n_draws", 5000)),
        tol_step=float(table.get("tol_step", 1e-4)),
        tol_score=float(table.get("tol_score", 1e-4)),
        max_outer=int(table.get("max_outer", 30)),
        trust_radius=float(table.get("trust_radius", 0.5)),
        min_ess_fraction=float(table.get("min_ess_fraction", 0.05)),
        seed=int(seed if seed is not None else cfg.get("seed", 0)),
        burn_in=sampler.get("burn_in"),
        interval=sampler.get("interval"),
        theta0=tuple(float(v) for v in table["theta0"]) if "theta0" in table else None,
    )


def build_experiment_config(cfg, design=None, seed=None):
    """ExperimentConfig from the [experiment] table plus shared tables.

    [theta].values is the data-generating parameter. `design` overrides
    the design key (the CLI passes its subcommand here).
    """
    from .experiments import ExperimentConfig

    table = cfg.get("experiment")
    if table is None:
        raise ModelError("config needs an [experiment] table")
    design = design if design is not None else table.get("design")
    if design is None:
        raise ModelError("experiment design not specified")
    if "k_grid" not in table:
        raise ModelError("experiment needs a k_grid list")
    model = build_model(cfg)
    theta = build_theta(cfg, model)
    master = int(seed if seed is not None else cfg.get("seed", 0))
    return ExperimentConfig(
        design=str(design),
        model=model,
        theta_star=tuple(float(v) for v in theta),
        k_grid=tuple(int(k) for k in table["k_grid"]),
        n_replications=int(table.get("replications", 2)),
        partition_table=cfg.get("partition", {}),
        directed=bool(cfg.get("directed", False)),
        seed=master,
        sampler=build_sampler_config(cfg, seed=master),
        estimator=build_estimator_config(cfg, seed=master),
    )
