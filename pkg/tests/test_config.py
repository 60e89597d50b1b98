import numpy as np
import pytest

from blockergm import (
    GraphDataError,
    ModelError,
    build_estimator_config,
    build_experiment_config,
    build_model,
    build_partition,
    build_sampler_config,
    build_theta,
    load_config,
)
from blockergm.config import mixed_counts, partition_spec

BASIC = """
seed = 42
[model]
terms = ["edges", "transitive"]
[theta]
values = [-1.0, 0.5]
[partition]
neighborhoods = 3
size = 4
"""


def write(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_config_round_trip(tmp_path):
    cfg = load_config(write(tmp_path, BASIC))
    assert cfg["seed"] == 42
    assert cfg["model"]["terms"] == ["edges", "transitive"]


def test_load_config_missing_file(tmp_path):
    with pytest.raises(GraphDataError, match="not found"):
        load_config(tmp_path / "absent.toml")


def test_load_config_bad_toml(tmp_path):
    with pytest.raises(ModelError, match="TOML"):
        load_config(write(tmp_path, "[model\nterms ="))


def test_build_model_and_theta(tmp_path):
    cfg = load_config(write(tmp_path, BASIC))
    model = build_model(cfg)
    assert model.parameter_labels == ("edges", "transitive")
    theta = build_theta(cfg, model)
    assert theta == pytest.approx([-1.0, 0.5])
    override = build_theta(cfg, model, override=[0.0, 0.25])
    assert override == pytest.approx([0.0, 0.25])


def test_build_model_requires_table():
    with pytest.raises(ModelError, match="model"):
        build_model({})


def test_build_theta_requires_values():
    model = build_model({"model": {"terms": ["edges"]}})
    with pytest.raises(ModelError, match="theta"):
        build_theta({}, model)
    with pytest.raises(ModelError):
        build_theta({"theta": {"values": [1.0, 2.0]}}, model)


def test_mixed_counts_largest_remainder():
    assert mixed_counts([0.25, 0.5, 0.25], 25) == [6, 13, 6]
    assert mixed_counts([0.5, 0.5], 5) == [2, 3]
    assert mixed_counts([1.0], 7) == [7]


def test_mixed_counts_requires_unit_sum():
    with pytest.raises(ModelError, match="sum to 1"):
        mixed_counts([0.5, 0.4], 10)


def test_partition_spec_uniform():
    spec = partition_spec({"neighborhoods": 3, "size": 2})
    assert [nid for nid, _ in spec] == ["n0", "n1", "n2"]
    assert spec[1][1] == ["n1.0", "n1.1"]
    bigger = partition_spec({"neighborhoods": 3, "size": 2}, n_neighborhoods=5)
    assert len(bigger) == 5


def test_partition_spec_mixed():
    spec = partition_spec({"sizes": [2, 4], "counts": [1, 2]})
    assert [len(nodes) for _, nodes in spec] == [2, 4, 4]
    by_fraction = partition_spec({"sizes": [2, 4], "fractions": [0.5, 0.5]},
                                 n_neighborhoods=4)
    assert [len(nodes) for _, nodes in by_fraction] == [2, 2, 4, 4]
    # counts rescale proportionally when the block count is overridden
    scaled = partition_spec({"sizes": [2, 4], "counts": [1, 3]},
                            n_neighborhoods=8)
    assert [len(nodes) for _, nodes in scaled] == [2, 2] + [4] * 6


def test_partition_spec_errors():
    with pytest.raises(ModelError, match="size"):
        partition_spec({})
    with pytest.raises(ModelError, match="neighborhoods"):
        partition_spec({"size": 3})
    with pytest.raises(ModelError, match=">= 1"):
        partition_spec({"size": 0, "neighborhoods": 2})
    with pytest.raises(ModelError, match="counts or fractions"):
        partition_spec({"sizes": [2, 3]})
    with pytest.raises(ModelError, match="one count per size"):
        partition_spec({"sizes": [2, 3], "counts": [1]})


def test_build_partition_requires_table():
    with pytest.raises(ModelError, match="partition"):
        build_partition({})


def test_sampler_config_defaults_and_seed(tmp_path):
    cfg = load_config(write(tmp_path, BASIC))
    sub = build_sampler_config(cfg)
    assert (sub.n_draws, sub.seed, sub.burn_in, sub.interval) == (1000, 42, None, None)
    assert build_sampler_config(cfg, seed=7).seed == 7
    assert build_sampler_config(cfg, n_draws=50).n_draws == 50


def test_estimator_config_from_tables(tmp_path):
    text = BASIC + """
[sampler]
burn_in = 12
interval = 3
[estimator]
n_draws = 800
tol_step = 0.001
theta0 = [0.5, 0.0]
"""
    cfg = load_config(write(tmp_path, text))
    est = build_estimator_config(cfg)
    assert est.n_draws == 800
    assert est.tol_step == 0.001
    assert est.seed == 42
    assert est.burn_in == 12 and est.interval == 3
    assert est.theta0 == (0.5, 0.0)


def test_experiment_config_wiring(tmp_path):
    text = BASIC + """
[experiment]
design = "consistency"
k_grid = [2, 4]
replications = 3
"""
    cfg = load_config(write(tmp_path, text))
    exp = build_experiment_config(cfg)
    assert exp.design == "consistency"
    assert exp.k_grid == (2, 4)
    assert exp.n_replications == 3
    assert exp.theta_star == (-1.0, 0.5)
    assert exp.seed == exp.sampler.seed == exp.estimator.seed == 42
    assert [len(nodes) for _, nodes in exp.partition(2)] == [4, 4]
    forced = build_experiment_config(cfg, design="concentration", seed=9)
    assert forced.design == "concentration"
    assert forced.seed == 9


def test_experiment_config_requires_fields(tmp_path):
    cfg = load_config(write(tmp_path, BASIC))
    with pytest.raises(ModelError, match="experiment"):
        build_experiment_config(cfg)
    cfg["experiment"] = {"k_grid": [2]}
    with pytest.raises(ModelError, match="design"):
        build_experiment_config(cfg)
    cfg["experiment"] = {"design": "consistency"}
    with pytest.raises(ModelError, match="k_grid"):
        build_experiment_config(cfg)
