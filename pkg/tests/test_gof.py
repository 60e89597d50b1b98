import numpy as np
import pytest

from blockergm import SamplerConfig, model_from_config
from blockergm.gof import GofError, goodness_of_fit
from blockergm.statistics import gof_summaries
from conftest import build_graph


def edge_trans_model():
    return model_from_config({"terms": ["edges", "transitive"]})


def test_too_few_simulations_rejected(two_block_graph):
    with pytest.raises(GofError, match="at least 10"):
        goodness_of_fit(edge_trans_model(), np.array([0.0, 0.0]),
                        two_block_graph, n_simulations=9)


def test_report_shape_and_labels(two_block_graph):
    report = goodness_of_fit(edge_trans_model(), np.array([-0.5, 0.2]),
                             two_block_graph, n_simulations=50,
                             config=SamplerConfig(seed=4), stream=(1,))
    assert report.n_simulations == 50
    stats = [r.statistic for r in report.rows]
    assert stats[:2] == ["edges", "transitive"]
    assert "esp" in stats and "dsp" in stats and "geodesic" in stats
    # n=4 blocks: 2 shared-partner bins, geodesic 1..3 plus unreachable
    esp_bins = [r.bin for r in report.rows if r.statistic == "esp"]
    geo_bins = [r.bin for r in report.rows if r.statistic == "geodesic"]
    assert esp_bins == ["1", "2"]
    assert geo_bins == ["1", "2", "3", "inf"]


def test_bands_bracket_mean(two_block_graph):
    report = goodness_of_fit(edge_trans_model(), np.array([-0.5, 0.2]),
                             two_block_graph, n_simulations=60,
                             config=SamplerConfig(seed=9), stream=(2,))
    for r in report.rows:
        assert r.simulated_q05 <= r.simulated_mean <= r.simulated_q95


def test_deterministic_given_seed(two_block_graph):
    kw = dict(n_simulations=40, config=SamplerConfig(seed=11), stream=(3,))
    a = goodness_of_fit(edge_trans_model(), np.array([-0.5, 0.2]),
                        two_block_graph, **kw)
    b = goodness_of_fit(edge_trans_model(), np.array([-0.5, 0.2]),
                        two_block_graph, **kw)
    assert [vars(r) for r in a.rows] == [vars(r) for r in b.rows]
    assert a.esp_rmse == b.esp_rmse
    c = goodness_of_fit(edge_trans_model(), np.array([-0.5, 0.2]),
                        two_block_graph, n_simulations=40,
                        config=SamplerConfig(seed=12), stream=(3,))
    assert [vars(r) for r in a.rows] != [vars(r) for r in c.rows]


def test_observed_column_matches_graph(two_block_graph):
    report = goodness_of_fit(edge_trans_model(), np.array([0.0, 0.0]),
                             two_block_graph, n_simulations=20,
                             config=SamplerConfig(seed=1))
    labels, observed = gof_summaries(two_block_graph)
    by_key = {(r.statistic, r.bin): r.observed for r in report.rows}
    for (stat, bin_label), value in zip(labels, observed):
        assert by_key[(stat, bin_label)] == value
    assert by_key[("edges", "")] == 6.0
    assert by_key[("transitive", "")] == 3.0


def test_esp_rmse_small_at_true_parameters():
    # fit summary should be near zero when judging the model against a
    # graph drawn from itself
    m = edge_trans_model()
    g = build_graph([5, 5], [(0, 0, 1), (0, 2, 3), (1, 1, 2), (1, 3, 4)])
    report = goodness_of_fit(m, np.array([-1.0, 0.0]), g, n_simulations=400,
                             config=SamplerConfig(seed=2), stream=(5,))
    assert report.esp_rmse < 2.0
    assert 0.0 <= report.coverage() <= 1.0


def test_write_csv_schema(two_block_graph, tmp_path):
    report = goodness_of_fit(edge_trans_model(), np.array([-0.5, 0.2]),
                             two_block_graph, n_simulations=20,
                             config=SamplerConfig(seed=1))
    out = tmp_path / "gof.csv"
    report.write_csv(out)
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == ("statistic,bin,simulated_mean,simulated_q05,"
                        "simulated_q95,observed")
    assert len(lines) == len(report.rows) + 1
    first = lines[1].split(",")
    assert first[0] == "edges"
    assert float(first[2]) == report.rows[0].simulated_mean
