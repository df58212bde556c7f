import numpy as np
import pytest

from sise import (
    INF,
    BandwidthResult,
    GriddedDensity,
    OptimizerConfig,
    PenaltyFloorWarning,
    bic_objective,
    effective_sample_size,
    optimize_bandwidth,
    penalty_weight,
    smoothing_bic,
    step_to_grid,
    turnbull_fit,
)


def test_optimizer_finds_convex_minimum():
    res = optimize_bandwidth(lambda d: (d - 0.3) ** 2, upper=1.0)
    assert isinstance(res, BandwidthResult)
    assert abs(res.bandwidth - 0.3) < 1e-2
    assert res.score < 1e-4


def test_optimizer_respects_bounds():
    # minimum outside the box: the search must settle on the boundary
    res = optimize_bandwidth(lambda d: (d - 5.0) ** 2, upper=1.0)
    assert res.bandwidth == pytest.approx(1.0, abs=1e-2)
    res0 = optimize_bandwidth(lambda d: d * d, upper=1.0)
    assert res0.bandwidth == pytest.approx(0.0, abs=1e-2)


def test_optimizer_deterministic():
    calls = []

    def f(d):
        calls.append(d)
        return np.sin(7 * d) + 0.5 * d

    a = optimize_bandwidth(f, upper=2.0, config=OptimizerConfig(seed=4))
    b = optimize_bandwidth(f, upper=2.0, config=OptimizerConfig(seed=4))
    assert a == b


def test_optimizer_budget_is_respected():
    count = [0]

    def f(d):
        count[0] += 1
        return (d - 0.5) ** 2

    cfg = OptimizerConfig(global_budget=30, population=10, local_max_iter=50)
    optimize_bandwidth(f, upper=1.0, config=cfg)
    # memoization keeps the true evaluation count near budget + local stage
    assert count[0] <= 30 + 10 + 2 * 50


def test_optimizer_zero_upper_disables_smoothing():
    res = optimize_bandwidth(lambda d: d + 1.0, upper=0.0)
    assert res == BandwidthResult(0.0, 1.0, 1)


def test_optimizer_rejects_bad_upper():
    with pytest.raises(ValueError):
        optimize_bandwidth(lambda d: d, upper=-1.0)
    with pytest.raises(ValueError):
        optimize_bandwidth(lambda d: d, upper=INF)


def test_optimizer_never_beats_grid_by_much():
    rng = np.random.default_rng(2)
    for _ in range(5):
        a, b, c = rng.uniform(0.5, 3.0, size=3)

        def f(d):
            return a * np.sin(b * 5 * d) + c * (d - 0.4) ** 2

        res = optimize_bandwidth(f, upper=1.0, config=OptimizerConfig(seed=int(a * 100)))
        grid = np.linspace(0.0, 1.0, 200)
        assert res.score <= min(f(d) for d in grid) + 1e-2


def _toy_fit():
    data = [(0.0, 2.0), (1.0, 3.0), (2.0, 4.0), (2.5, 2.5), (3.0, INF)]
    est = turnbull_fit(data)
    dens = step_to_grid(est, step=0.05)
    return data, est, dens


def test_penalty_weight_kinds():
    data, est, _ = _toy_fit()
    assert penalty_weight("n", data) == pytest.approx(np.log(5.0))
    counts = np.array([2, 3, 2, 1, 4])
    assert penalty_weight("nm", data, visit_counts=counts) == pytest.approx(np.log(12.0))
    ne = effective_sample_size(data, est)
    assert penalty_weight("ne", data, raw_fit=est) == pytest.approx(np.log(ne))


def test_penalty_weight_floor_and_errors():
    # ln of a single observation is 0; the floor keeps it from going negative
    with pytest.warns(PenaltyFloorWarning):
        assert penalty_weight("n", [(0.0, 1.0)]) == 0.0
    with pytest.raises(Exception):
        penalty_weight("nm", [(0.0, 1.0)])
    with pytest.raises(Exception):
        penalty_weight("bogus", [(0.0, 1.0)])


def test_effective_sample_size_bounds():
    data, est, _ = _toy_fit()
    ne = effective_sample_size(data, est)
    assert 0.0 < ne <= 5.0
    # exact observations carry full information
    exact = [(1.0, 1.0), (2.0, 2.0)]
    est_e = turnbull_fit(exact)
    assert effective_sample_size(exact, est_e) == pytest.approx(2.0, abs=1e-9)


def test_effective_sample_size_wide_interval_is_uninformative():
    # the interval covering the whole support contributes ~nothing
    data = [(1.0, 1.0), (2.0, 2.0), (0.0, INF)]
    est = turnbull_fit(data)
    ne = effective_sample_size(data, est)
    assert ne == pytest.approx(2.0, abs=1e-6)


def test_bic_objective_at_zero_matches_raw_report():
    data, est, dens = _toy_fit()
    pen = penalty_weight("n", data)
    obj = bic_objective(dens, data, pen)
    report = smoothing_bic(dens, data, pen)
    assert obj(0.0) == pytest.approx(report.bic_s, abs=1e-12)
    assert report.bic_s == pytest.approx(
        -2.0 * report.log_likelihood + report.turning_points * pen, abs=1e-12
    )


def test_smoothing_bic_records_ne():
    data, est, dens = _toy_fit()
    ne = effective_sample_size(data, est)
    report = smoothing_bic(dens, data, penalty=np.log(ne), n_e=ne)
    assert report.n_e == pytest.approx(ne)
    assert report.penalty_weight == pytest.approx(np.log(ne))
