import numpy as np
import pytest

from sise import (
    InvalidConfigError,
    ScenarioConfig,
    lognormal_params,
    presets,
    run_scenario,
    run_split_evaluation,
    s1_cell,
    s1_grid,
    simulate_cohort,
    true_cdf,
    true_survival,
)

TINY = ScenarioConfig(
    name="tiny", n=30, onset_components=((1.0, 45.0, 10.0),), prevalence=0.8,
    n_visits=2, n_replicates=2, global_budget=20, seed=0,
)


def test_lognormal_params_roundtrip():
    mu, sigma = lognormal_params(50.0, 10.0)
    mean = np.exp(mu + sigma**2 / 2.0)
    var = (np.exp(sigma**2) - 1.0) * np.exp(2.0 * mu + sigma**2)
    assert mean == pytest.approx(50.0, rel=1e-12)
    assert np.sqrt(var) == pytest.approx(10.0, rel=1e-12)


def test_cohort_shapes_and_lattice():
    cohort = simulate_cohort(TINY, seed=3)
    assert cohort.visit_times.shape == (30, 2)
    assert cohort.statuses.shape == (30, 2)
    assert np.all(np.diff(cohort.visit_times, axis=1) > 0)
    # all times live on the two-decimal lattice
    np.testing.assert_allclose(cohort.visit_times, np.round(cohort.visit_times, 2))
    assert np.all(cohort.visit_times > 0.0)
    assert np.all(cohort.visit_times < TINY.frame_right)


def test_cohort_onset_sentinel():
    cohort = simulate_cohort(TINY, seed=3)
    diseased = cohort.has_onset
    assert np.all(cohort.onset[~diseased] == TINY.point_mass)
    assert np.all(cohort.onset[diseased] >= 0.01)
    assert np.all(cohort.onset[diseased] < TINY.point_mass)
    # statuses are exactly "onset reached by this visit"
    expected = cohort.visit_times >= cohort.onset[:, None]
    np.testing.assert_array_equal(cohort.statuses, expected)


def test_cohort_full_prevalence_all_diseased():
    cfg = ScenarioConfig(n=50, prevalence=1.0, n_visits=3)
    cohort = simulate_cohort(cfg, seed=1)
    assert cohort.has_onset.all()


def test_cohort_intervals_bracket_onsets():
    cohort = simulate_cohort(TINY, seed=11)
    assert cohort.bracket_violations() == 0
    left, right = cohort.intervals
    x, seen = cohort.onset, cohort.has_onset
    assert np.all(left[seen] < x[seen])
    assert np.all(x[seen] <= right[seen])
    # never-diseased rows are right-censored at their last visit
    assert np.all(np.isinf(right[~seen]))


def test_cohort_deterministic_by_seed():
    a = simulate_cohort(TINY, seed=5)
    b = simulate_cohort(TINY, seed=5)
    c = simulate_cohort(TINY, seed=6)
    np.testing.assert_array_equal(a.visit_times, b.visit_times)
    np.testing.assert_array_equal(a.onset, b.onset)
    assert not np.array_equal(a.visit_times, c.visit_times)


def test_true_curves_identities():
    taus = np.linspace(0.0, 100.0, 11)
    s = true_survival(TINY, taus)
    f = true_cdf(TINY, taus)
    np.testing.assert_allclose(s + f, 1.0, atol=1e-12)
    assert s[0] == pytest.approx(1.0, abs=1e-12)
    # never-diseased individuals keep survival above 1 - prevalence
    assert s[-1] >= 1.0 - TINY.prevalence - 1e-12
    assert np.all(np.diff(s) <= 1e-12)


def test_true_cdf_matches_monte_carlo():
    # independent check of the mixture CDF against raw lognormal draws
    rng = np.random.default_rng(9)
    mu, sigma = lognormal_params(45.0, 10.0)
    draws = np.maximum(np.round(rng.lognormal(mu, sigma, size=200_000), 2), 0.01)
    for t in (30.0, 45.0, 60.0):
        mc = TINY.prevalence * np.mean(draws <= t)
        assert true_cdf(TINY, [t])[0] == pytest.approx(mc, abs=5e-3)


def test_scenario_config_validation():
    with pytest.raises(InvalidConfigError):
        ScenarioConfig(prevalence=0.0)
    with pytest.raises(InvalidConfigError):
        ScenarioConfig(n_visits=0)
    with pytest.raises(InvalidConfigError):
        ScenarioConfig(point_mass=150.0, frame_right=100.0)
    with pytest.raises(InvalidConfigError):
        ScenarioConfig(onset_components=((0.5, 50.0, -1.0),))


def test_component_weights_are_normalized():
    # weights are relative; scaling them all changes nothing
    a = ScenarioConfig(onset_components=((2.0, 40.0, 8.0), (6.0, 60.0, 8.0)))
    b = ScenarioConfig(onset_components=((0.25, 40.0, 8.0), (0.75, 60.0, 8.0)))
    taus = np.linspace(0.0, 100.0, 21)
    np.testing.assert_allclose(true_cdf(a, taus), true_cdf(b, taus), atol=1e-14)


def test_scenario_config_roundtrip_and_unknown_field():
    cfg = s1_cell(100, 50.0, 1.0, 6)
    assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg
    bad = cfg.to_dict()
    bad["bogus_knob"] = 1
    with pytest.raises(InvalidConfigError, match="bogus_knob"):
        ScenarioConfig.from_dict(bad)


def test_presets_cover_the_study_cells():
    p = presets()
    assert {"s1-desk", "s2-desk", "s3-desk", "s1-full", "s2-full", "s3-full"} <= set(p)
    assert len(p["s1-full"]) == 108
    names = {c.name for c in p["s1-desk"]}
    assert "s1-n100-u50-p100-m6" in names
    assert "s1-n50-u30-p10-m2" in names
    s3 = p["s3-desk"][0]
    assert (s3.n, s3.prevalence, s3.n_visits) == (100, 1.0, 6)
    assert s3.bootstrap_replicates == 100
    assert s3.n_replicates == 20


def test_s1_grid_size():
    cells = s1_grid(n_replicates=7)
    assert len(cells) == 108
    assert all(c.n_replicates == 7 for c in cells)
    assert len({c.name for c in cells}) == 108


def test_run_scenario_structure_and_determinism():
    res = run_scenario(TINY)
    assert set(res.replicates) >= {
        "rise_tb_raw", "rise_km_raw", "rise_tb_smooth", "rise_km_smooth",
        "rmse_w_raw", "rmse_w_smooth", "bandwidth_tb", "bandwidth_km",
    }
    assert all(len(v) == 2 for v in res.replicates.values())
    summary = res.summary()
    assert summary["n_replicates"] == 2
    assert summary["rise_tb"]["pct_change"]["n"] == 2
    again = run_scenario(TINY)
    for k, v in res.replicates.items():
        np.testing.assert_array_equal(v, again.replicates[k], err_msg=k)


@pytest.mark.filterwarnings("ignore::sise.NonConvergenceWarning")
def test_run_scenario_bootstrap_coverage_summary():
    cfg = ScenarioConfig(
        name="tiny-boot", n=25, prevalence=1.0, n_visits=2, n_replicates=2,
        bootstrap_replicates=8, bootstrap_budget=10, global_budget=15, seed=2,
    )
    res = run_scenario(cfg)
    summary = res.summary()
    assert "coverage" in summary
    assert 0.0 <= summary["coverage"]["raw_mean"] <= 1.0
    assert 0.0 <= summary["coverage"]["smooth_mean"] <= 1.0


def test_run_split_evaluation_smoke():
    cohort = simulate_cohort(
        ScenarioConfig(n=80, prevalence=1.0, n_visits=4, seed=0), seed=12
    )
    left, right = cohort.intervals
    out = run_split_evaluation(
        (left, right), cohort.onset, seed=4, global_budget=20
    )
    assert out["n_scored"] > 0
    assert out["rmse_raw"] > 0.0
    assert out["rmse_smoothed"] > 0.0


def test_to_dict_includes_point_mass():
    d = TINY.to_dict()
    assert d["point_mass"] == 1000.0
    assert d["name"] == "tiny"
