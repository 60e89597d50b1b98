"""Command-line interface.

Subcommands: simulate, estimate, gof, bootstrap, experiment
{consistency, concentration}. Every command reads one TOML config file
(see the README for the schema) plus flag overrides, writes CSV files
only, and is byte-for-byte reproducible from (config, seed). Exit
codes: 0 success, 1 usage error, 2 estimation failure, 3 data error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import config as cfgmod
from .estimation import EstimationError, bootstrap_se, mcmle
from .exact import BoundaryError, ExactError, exact_mle, exact_moments, exact_psi
from .gof import GofError, goodness_of_fit
from .graphs import GraphDataError, empty_graph, load_graph, save_graph
from .models import ModelError
from .sampling import STREAM_SIMULATE, sample_neighborhood
from .experiments import run_concentration, run_consistency, worker_count

__all__ = ["main"]


def _theta_flag(raw):
    try:
        return [float(v) for v in raw.split(",")]
    except ValueError:
        raise ModelError(f"--theta expects comma-separated numbers, got {raw!r}") from None


def _load_inputs(args, need_data=False):
    """(config dict, model, graph) from common flags."""
    cfg = cfgmod.load_config(args.config)
    model = cfgmod.build_model(cfg)
    if args.nodes or args.edges:
        if not (args.nodes and args.edges):
            raise GraphDataError("--nodes and --edges go together")
        graph = load_graph(args.nodes, args.edges,
                           directed=bool(cfg.get("directed", False)))
    elif need_data:
        raise GraphDataError("this command needs --nodes and --edges")
    else:
        partition = cfgmod.build_partition(cfg)
        graph = empty_graph(partition, directed=bool(cfg.get("directed", False)))
    return cfg, model, graph


def _theta_from(args, cfg, model):
    override = _theta_flag(args.theta) if args.theta else None
    return cfgmod.build_theta(cfg, model, override=override)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt(x):
    return repr(float(x))


def _cmd_simulate(args):
    cfg, model, graph = _load_inputs(args)
    theta = _theta_from(args, cfg, model)
    sampler = cfgmod.build_sampler_config(cfg, seed=args.seed, n_draws=args.draws)
    os.makedirs(args.out, exist_ok=True)

    samples = [
        sample_neighborhood(model, theta, graph, k, sampler,
                            stream=(STREAM_SIMULATE,), record_graphs=True)
        for k in range(graph.n_neighborhoods)
    ]

    stat_rows = []
    for k, s in enumerate(samples):
        nid = graph.neighborhoods[k][0]
        labels = model.terms.labels(graph, k)
        for d in range(sampler.n_draws):
            for c, label in enumerate(labels):
                stat_rows.append([nid, d, label, _fmt(s.stats[d, c])])
    _write_csv(os.path.join(args.out, "stats.csv"),
               ["neighborhood", "draw", "statistic", "value"], stat_rows)

    for d in range(sampler.n_draws):
        drawn = graph.replace_adjacency([s.adjs[d] for s in samples])
        save_graph(drawn,
                   os.path.join(args.out, "nodes.csv"),
                   os.path.join(args.out, f"edges_{d:04d}.csv"))
    return 0


def _cmd_estimate(args):
    cfg, model, graph = _load_inputs(args, need_data=True)
    estimator = cfgmod.build_estimator_config(cfg, seed=args.seed, n_draws=args.draws)
    os.makedirs(args.out, exist_ok=True)

    fit = mcmle(graph, model, estimator)

    se = [""] * model.n_parameters
    if args.bootstrap:
        if fit.status != "converged":
            raise EstimationError(
                f"bootstrap needs a converged fit, status is {fit.status}")
        boot = bootstrap_se(model, fit.theta, graph, args.bootstrap,
                            config=estimator)
        se = [_fmt(v) for v in boot.se]

    _write_csv(os.path.join(args.out, "estimates.csv"),
               ["coordinate", "estimate", "se", "status"],
               [[label, _fmt(fit.theta[c]), se[c], fit.status]
                for c, label in enumerate(fit.labels)])
    _write_csv(os.path.join(args.out, "trace.csv"),
               ["iteration", "coordinate", "estimate", "step_norm",
                "score_norm", "hull_violation"],
               [[entry["iteration"], label, _fmt(entry["theta"][c]),
                 _fmt(entry["step_norm"]), _fmt(entry["score_norm"]),
                 int(entry["hull_violation"])]
                for entry in fit.trajectory
                for c, label in enumerate(fit.labels)])
    return 0 if fit.status == "converged" else 2


def _cmd_gof(args):
    cfg, model, graph = _load_inputs(args, need_data=True)
    theta = _theta_from(args, cfg, model)
    draws = args.draws if args.draws is not None else cfg.get("gof", {}).get("draws", 1000)
    sampler = cfgmod.build_sampler_config(cfg, seed=args.seed, n_draws=1)
    os.makedirs(args.out, exist_ok=True)
    report = goodness_of_fit(model, theta, graph, n_simulations=int(draws),
                             config=sampler)
    report.write_csv(os.path.join(args.out, "gof.csv"))
    return 0


def _cmd_bootstrap(args):
    cfg, model, graph = _load_inputs(args, need_data=True)
    theta = _theta_from(args, cfg, model)
    estimator = cfgmod.build_estimator_config(cfg, seed=args.seed, n_draws=args.draws)
    b = args.replications if args.replications is not None \
        else cfg.get("bootstrap", {}).get("replications", 50)
    os.makedirs(args.out, exist_ok=True)
    boot = bootstrap_se(model, theta, graph, int(b), config=estimator)
    n_ok = boot.estimates.shape[0]
    _write_csv(os.path.join(args.out, "bootstrap.csv"),
               ["coordinate", "se", "n_used", "n_failed"],
               [[label, _fmt(boot.se[c]), n_ok, boot.n_failed]
                for c, label in enumerate(boot.labels)])
    _write_csv(os.path.join(args.out, "bootstrap_replications.csv"),
               ["replication", "coordinate", "estimate"],
               [[b_i, label, _fmt(boot.estimates[b_i, c])]
                for b_i in range(n_ok)
                for c, label in enumerate(boot.labels)])
    return 0


def _cmd_experiment(args):
    cfg = cfgmod.load_config(args.config)
    experiment = cfgmod.build_experiment_config(cfg, design=args.design,
                                               seed=args.seed)
    run = run_consistency if experiment.design == "consistency" else run_concentration
    run(experiment, args.out, workers=worker_count())
    return 0


def _cmd_oracle(args):
    cfg, model, graph = _load_inputs(args, need_data=True)
    theta = _theta_from(args, cfg, model)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["quantity", "coordinate", "value"])
    w.writerow(["psi", "", _fmt(exact_psi(model, theta, graph))])
    means, _ = exact_moments(model, theta, graph)
    for k, mean in enumerate(means):
        nid = graph.neighborhoods[k][0]
        for label, v in zip(model.terms.labels(graph, k), mean):
            w.writerow(["mean", f"{nid}:{label}", _fmt(v)])
    if args.mle:
        fit = exact_mle(model, graph)
        for label, v in zip(model.parameter_labels, fit):
            w.writerow(["mle", label, _fmt(v)])
    return 0


def _add_common(p, data=False, theta=False, draws=False):
    p.add_argument("--config", required=True, help="TOML config file")
    p.add_argument("--seed", type=int, default=None, help="master seed override")
    p.add_argument("--nodes", default=None, help="nodes CSV" + ("" if data else " (optional)"))
    p.add_argument("--edges", default=None, help="edges CSV" + ("" if data else " (optional)"))
    if theta:
        p.add_argument("--theta", default=None,
                       help="comma-separated parameter values")
    if draws:
        p.add_argument("--draws", type=int, default=None, help="draw count override")


def _parser():
    parser = argparse.ArgumentParser(
        prog="blockergm",
        description="Block-structured random graph simulation and estimation.")
    sub = parser.add_subparsers(
        dest="command", required=True,
        metavar="{simulate,estimate,gof,bootstrap,experiment}")

    p = sub.add_parser("simulate", help="sample graphs from a model")
    _add_common(p, theta=True, draws=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="fit a model to observed data")
    _add_common(p, data=True, draws=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--bootstrap", type=int, default=0, metavar="B",
                   help="add bootstrap standard errors from B replications")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("gof", help="goodness-of-fit summaries at given parameters")
    _add_common(p, data=True, theta=True, draws=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_gof)

    p = sub.add_parser("bootstrap", help="bootstrap standard errors at given parameters")
    _add_common(p, data=True, theta=True, draws=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--replications", type=int, default=None, metavar="B")
    p.set_defaults(func=_cmd_bootstrap)

    p = sub.add_parser("experiment", help="replicated simulation studies")
    p.add_argument("design", choices=["consistency", "concentration"])
    p.add_argument("--config", required=True, help="TOML config file")
    p.add_argument("--seed", type=int, default=None, help="master seed override")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("oracle")  # debugging aid, not advertised
    _add_common(p, data=True, theta=True)
    p.add_argument("--mle", action="store_true", help="also compute the exact MLE")
    p.set_defaults(func=_cmd_oracle)

    return parser


def main(argv=None):
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (EstimationError, BoundaryError) as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return 2
    except (GraphDataError, ModelError, GofError, ExactError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
