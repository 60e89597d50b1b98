import numpy as np
import pytest

from blockergm import (
    EstimatorConfig,
    ModelError,
    SamplerConfig,
    model_from_config,
    simulate,
    simulate_graph,
    uniform_partition,
)
from blockergm.estimation import (
    EffectiveSampleSizeError,
    EstimationError,
    bootstrap_se,
    mc_loglik_ratio,
    mc_score_info,
    mcmle,
    mple,
)
from blockergm.exact import exact_loglik, exact_mle
from conftest import build_graph


def edge_trans_model():
    return model_from_config({"terms": ["edges", "transitive"]})


def edges_model():
    return model_from_config({"terms": ["edges"]})


def small_dataset():
    m = edge_trans_model()
    g = simulate_graph(m, np.array([-0.3, 0.2]), uniform_partition(2, 4),
                       SamplerConfig(seed=5), stream=(1,))
    return m, g


def test_config_validation():
    with pytest.raises(ModelError, match="n_draws"):
        EstimatorConfig(n_draws=0)
    with pytest.raises(ModelError, match="max_outer"):
        EstimatorConfig(max_outer=0)
    with pytest.raises(ModelError, match="tol_step"):
        EstimatorConfig(tol_step=0.0)
    with pytest.raises(ModelError, match="trust_radius"):
        EstimatorConfig(trust_radius=-1.0)
    with pytest.raises(ModelError, match="min_ess_fraction"):
        EstimatorConfig(min_ess_fraction=0.0)
    cfg = EstimatorConfig(n_draws=77, seed=5, burn_in=10, interval=3)
    sub = cfg.sampler_config()
    assert (sub.n_draws, sub.seed, sub.burn_in, sub.interval) == (77, 5, 10, 3)


def test_mple_edge_only_matches_logit_density():
    # 3 edges over 12 dyads
    g = build_graph([4, 4], [(0, 0, 1), (0, 2, 3), (1, 1, 2)])
    fit = mple(g, edges_model())
    assert fit.status == "converged"
    assert fit.theta[0] == pytest.approx(np.log(1 / 3), abs=1e-5)
    assert fit.labels == ("edges",)


def test_mple_complete_graph_reports_separation():
    g = build_graph([4], [(0, i, j) for i in range(4) for j in range(i + 1, 4)])
    fit = mple(g, edges_model())
    assert fit.status == "boundary-suspect"
    assert fit.theta[0] > 5.0


def test_mple_holds_decay_at_start():
    m = model_from_config({"terms": ["edges", "esp"], "eta": {"esp": "geometric"}})
    g = build_graph([5], [(0, 0, 1), (0, 1, 2), (0, 0, 2), (0, 1, 3)])
    fit = mple(g, m)
    assert fit.theta[2] == 1.0
    fit2 = mple(g, m, theta0=np.array([0.0, 0.0, 1.7]))
    assert fit2.theta[2] == 1.7


def test_mc_ratio_zero_at_reference():
    m, g = small_dataset()
    obs = m.terms.compute(g)
    ref = np.array([-0.3, 0.2])
    batch = simulate(m, ref, g, SamplerConfig(n_draws=200, seed=8), stream=(2,))
    assert mc_loglik_ratio(m, ref, ref, obs, batch) == 0.0


def test_mc_ratio_tracks_exact_loglik():
    m, g = small_dataset()
    obs = m.terms.compute(g)
    ref = np.array([-0.3, 0.2])
    batch = simulate(m, ref, g, SamplerConfig(n_draws=4000, seed=8), stream=(2,))
    for th in ([0.0, 0.0], [-0.5, 0.4]):
        got = mc_loglik_ratio(m, np.array(th), ref, obs, batch)
        want = exact_loglik(m, np.array(th), g) - exact_loglik(m, ref, g)
        assert got == pytest.approx(want, abs=0.05)


def test_mc_score_uniform_weights_at_reference():
    m, g = small_dataset()
    obs = m.terms.compute(g)
    ref = np.array([-0.3, 0.2])
    batch = simulate(m, ref, g, SamplerConfig(n_draws=500, seed=8), stream=(2,))
    grad, info = mc_score_info(m, ref, ref, obs, batch)
    want = np.zeros(2)
    for k in range(g.n_neighborhoods):
        want += obs[k] - batch.stats[k].mean(axis=0)
    assert grad == pytest.approx(want)
    assert info == pytest.approx(info.T)
    assert np.all(np.linalg.eigvalsh(info) > -1e-10)


def test_mc_score_refuses_collapsed_weights():
    m, g = small_dataset()
    obs = m.terms.compute(g)
    ref = np.array([-0.3, 0.2])
    batch = simulate(m, ref, g, SamplerConfig(n_draws=4000, seed=8), stream=(2,))
    with pytest.raises(EffectiveSampleSizeError, match="resample"):
        mc_score_info(m, np.array([5.0, 5.0]), ref, obs, batch)


def test_mcmle_is_deterministic():
    m, g = small_dataset()
    cfg = EstimatorConfig(n_draws=1000, seed=3)
    a = mcmle(g, m, cfg, stream=(7,))
    b = mcmle(g, m, cfg, stream=(7,))
    assert np.array_equal(a.theta, b.theta)
    assert a.status == b.status == "converged"
    assert a.iterations == b.iterations
    c = mcmle(g, m, EstimatorConfig(n_draws=1000, seed=4), stream=(7,))
    assert not np.array_equal(a.theta, c.theta)


def test_mcmle_close_to_exact():
    m, g = small_dataset()
    fit = mcmle(g, m, EstimatorConfig(n_draws=4000, seed=3), stream=(7,))
    assert fit.status == "converged"
    assert fit.score_norm < 1e-4
    assert fit.theta == pytest.approx(exact_mle(m, g), abs=0.05)


def test_mcmle_trajectory_schema():
    m, g = small_dataset()
    fit = mcmle(g, m, EstimatorConfig(n_draws=1000, seed=3), stream=(7,))
    assert len(fit.trajectory) == fit.iterations
    row = fit.trajectory[-1]
    assert set(row) == {"iteration", "theta", "step_norm", "score_norm",
                        "hull_violation"}
    assert row["iteration"] == fit.iterations
    assert row["hull_violation"] is False


def test_mcmle_separation_stops_at_start():
    g = build_graph([4], [(0, i, j) for i in range(4) for j in range(i + 1, 4)])
    fit = mcmle(g, edges_model(), EstimatorConfig(n_draws=200, seed=1))
    assert fit.status == "boundary-suspect"
    assert fit.iterations == 0
    assert fit.trajectory == []


def test_mcmle_flags_unreachable_data():
    # complete data with the separation screen bypassed by an explicit
    # start: the sample either excludes the observation or freezes solid
    g = build_graph([5, 5], [(k, i, j) for k in range(2)
                             for i in range(5) for j in range(i + 1, 5)])
    fit = mcmle(g, edges_model(),
                EstimatorConfig(n_draws=300, seed=1, theta0=(0.0,)), stream=(3,))
    assert fit.status == "boundary-suspect"
    assert fit.trajectory[-1]["hull_violation"] is True


def test_mcmle_theta0_start_used():
    m, g = small_dataset()
    fit = mcmle(g, m, EstimatorConfig(n_draws=2000, seed=3, theta0=(0.5, -0.5)),
                stream=(7,))
    assert fit.status == "converged"
    assert fit.theta == pytest.approx(exact_mle(m, g), abs=0.08)


def test_bootstrap_needs_two_replications():
    m, g = small_dataset()
    with pytest.raises(EstimationError, match="at least 2"):
        bootstrap_se(m, np.array([-0.3, 0.2]), g, 1)


def test_bootstrap_shapes_and_determinism():
    _, g = small_dataset()
    m = edges_model()
    cfg = EstimatorConfig(n_draws=600, seed=3)
    a = bootstrap_se(m, np.array([-0.2]), g, 6, cfg, stream=(9,))
    assert a.se.shape == (1,)
    assert a.se[0] > 0
    assert a.estimates.shape == (6 - a.n_failed, 1)
    assert a.n_failed == 0
    assert a.labels == ("edges",)
    b = bootstrap_se(m, np.array([-0.2]), g, 6, cfg, stream=(9,))
    assert np.array_equal(a.estimates, b.estimates)
    assert a.se == pytest.approx(b.se)
