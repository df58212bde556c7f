"""Synthetic screening cohorts and the simulation benchmark harness.

A cohort is a panel of scheduled disease-screening visits: each individual
has a latent onset age drawn from a lognormal mixture (or never develops
disease), visits at roughly evenly spaced ages, and at each visit a binary
diseased / disease-free status. The harness fits the interval-censored
pipeline and a perfect-diagnosis product-limit comparator on each simulated
replicate, measures curve recovery and imputation accuracy against the known
truth, and aggregates percent changes of smoothed over raw fits.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtr
from scipy.stats import truncnorm

from .data import INF, ObservationRecord, TimeFrame
from .estimator import SmoothedSurvivalEstimator, smooth_step_fit
from .exceptions import InvalidConfigError, ZeroPrevalenceError
from .inference import (
    band_coverage,
    bootstrap_bands,
    impute_event_times,
    observed_prevalence,
)
from .npmle import km_fit, step_to_grid, turnbull_fit
from .utils import derive_rng, derive_seed, thread_map
from .validation import interval_arrays

# replicate-level seed stream tags
_SEED_EST = 0
_SEED_OOS = 1
_SEED_TB_OPT = 2
_SEED_KM_OPT = 3
_SEED_BOOT = 4


def lognormal_params(mean: float, sd: float) -> tuple[float, float]:
    """(mu, sigma) of the lognormal with the given mean and std deviation."""
    if mean <= 0 or sd <= 0:
        raise InvalidConfigError("lognormal mean and sd must be positive")
    sigma2 = math.log(1.0 + (sd / mean) ** 2)
    mu = math.log(mean) - 0.5 * sigma2
    return mu, math.sqrt(sigma2)


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation cell: cohort design, fitting knobs, replication plan.

    onset_components is a tuple of (weight, mean, sd) lognormal components;
    weights are normalized. prevalence is the fraction of individuals who
    ever develop disease. Visits start at a truncated-normal baseline age and
    step by positive truncated-normal gaps averaging followup_length /
    (n_visits - 1), so each series spans about followup_length years and
    stays below frame_right. max_bandwidth defaults to frame_right * delta_t.
    """

    name: str = "custom"
    n: int = 100
    onset_components: tuple = ((1.0, 50.0, 10.0),)
    prevalence: float = 1.0
    n_visits: int = 6
    frame_right: float = 100.0
    baseline_mean: float = 40.0
    baseline_sd: float = 10.0
    followup_length: float = 20.0
    gap_sd: float = 0.2
    point_mass: float = 1000.0
    delta_t: float = 0.01
    penalty: str = "ne"
    max_bandwidth: float = 1.0
    n_replicates: int = 30
    bootstrap_replicates: int = 0
    bootstrap_budget: int = 40
    global_budget: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.n_visits < 1 or self.n_replicates < 1:
            raise InvalidConfigError("n, n_visits and n_replicates must be >= 1")
        if not 0.0 < self.prevalence <= 1.0:
            raise InvalidConfigError(f"prevalence must be in (0, 1], got {self.prevalence!r}")
        if self.frame_right <= 0 or self.baseline_sd <= 0 or self.gap_sd <= 0:
            raise InvalidConfigError("frame_right, baseline_sd and gap_sd must be positive")
        if self.followup_length <= 0:
            raise InvalidConfigError("followup_length must be positive")
        # never-diseased sentinel onset must sit far beyond any visit age
        if self.point_mass <= 2.0 * self.frame_right:
            raise InvalidConfigError(
                f"point_mass must exceed 2 * frame_right, got {self.point_mass!r}"
            )
        if self.delta_t <= 0 or self.max_bandwidth < 0:
            raise InvalidConfigError("delta_t must be positive and max_bandwidth >= 0")
        if self.bootstrap_replicates < 0:
            raise InvalidConfigError("bootstrap_replicates must be >= 0")
        comps = tuple(tuple(float(x) for x in c) for c in self.onset_components)
        if not comps or any(len(c) != 3 for c in comps):
            raise InvalidConfigError("onset_components must be (weight, mean, sd) triples")
        if any(w <= 0 or m <= 0 or s <= 0 for w, m, s in comps):
            raise InvalidConfigError("component weights, means and sds must be positive")
        object.__setattr__(self, "onset_components", comps)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "onset_components": [list(c) for c in self.onset_components],
            "prevalence": self.prevalence,
            "n_visits": self.n_visits,
            "frame_right": self.frame_right,
            "baseline_mean": self.baseline_mean,
            "baseline_sd": self.baseline_sd,
            "followup_length": self.followup_length,
            "gap_sd": self.gap_sd,
            "point_mass": self.point_mass,
            "delta_t": self.delta_t,
            "penalty": self.penalty,
            "max_bandwidth": self.max_bandwidth,
            "n_replicates": self.n_replicates,
            "bootstrap_replicates": self.bootstrap_replicates,
            "bootstrap_budget": self.bootstrap_budget,
            "global_budget": self.global_budget,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ScenarioConfig":
        kwargs = dict(payload)
        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(kwargs) - known)
        if unknown:
            raise InvalidConfigError(f"unknown config field(s): {', '.join(unknown)}")
        if "onset_components" in kwargs:
            kwargs["onset_components"] = tuple(tuple(c) for c in kwargs["onset_components"])
        return cls(**kwargs)


def _mixture_cdf(cfg: ScenarioConfig, t: np.ndarray) -> np.ndarray:
    comps = np.asarray(cfg.onset_components, dtype=float)
    wts = comps[:, 0] / comps[:, 0].sum()
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    if np.any(pos):
        logt = np.log(t[pos])
        acc = np.zeros(logt.shape)
        for w, (mu, sg) in zip(wts, (lognormal_params(m, s) for _, m, s in comps)):
            acc += w * ndtr((logt - mu) / sg)
        out[pos] = acc
    return out


def true_cdf(cfg: ScenarioConfig, times) -> np.ndarray:
    """Unconditional P(onset age <= t): prevalence times the mixture CDF."""
    return cfg.prevalence * _mixture_cdf(cfg, times)


def true_survival(cfg: ScenarioConfig, times) -> np.ndarray:
    """Unconditional P(onset age > t), counting never-diseased as survivors."""
    return 1.0 - true_cdf(cfg, times)


@dataclass(frozen=True)
class SimulatedCohort:
    """One simulated screening panel with its latent truth attached.

    visit_times is (n, n_visits) with strictly increasing rows; onset holds
    the true onset age per individual (the config's point_mass sentinel,
    far beyond any visit age, when never diseased); statuses is the diseased
    indicator at each visit. All times carry two decimals.
    """

    config: ScenarioConfig
    visit_times: np.ndarray
    onset: np.ndarray
    statuses: np.ndarray

    @property
    def n(self) -> int:
        return self.visit_times.shape[0]

    @property
    def has_onset(self) -> np.ndarray:
        return self.onset < self.config.point_mass

    @property
    def frame(self) -> TimeFrame:
        return TimeFrame(float(self.visit_times.min()), float(self.visit_times.max()))

    @property
    def intervals(self) -> tuple[np.ndarray, np.ndarray]:
        """Censoring intervals (left, right]: last disease-free visit to
        first diseased visit, with 0 / +inf when a side was never seen."""
        t, z = self.visit_times, self.statuses
        disease_free = np.where(~z, t, -INF).max(axis=1)
        left = np.where(np.isneginf(disease_free), 0.0, disease_free)
        right = np.where(z, t, INF).min(axis=1)
        return left, right

    def to_records(self) -> list[ObservationRecord]:
        out = []
        for i in range(self.n):
            for j in range(self.visit_times.shape[1]):
                out.append(
                    ObservationRecord(
                        individual_id=str(i),
                        time=float(self.visit_times[i, j]),
                        status=int(self.statuses[i, j]),
                    )
                )
        return out

    def bracket_violations(self) -> int:
        """Number of diseased individuals whose interval misses their onset."""
        left, right = self.intervals
        x = self.onset
        ok = (left < x) & (x <= right)
        return int(np.sum(~ok[self.has_onset]))


def _truncated_normal(rng, mean, sd: float, low, high) -> np.ndarray:
    """Normal(mean, sd) draws conditioned on the open interval (low, high)."""
    mean = np.asarray(mean, dtype=float)
    a = (np.asarray(low, dtype=float) - mean) / sd
    b = (np.asarray(high, dtype=float) - mean) / sd
    return truncnorm.rvs(a, b, loc=mean, scale=sd, random_state=rng)


def simulate_cohort(cfg: ScenarioConfig, seed: int | None = None) -> SimulatedCohort:
    """Draw one cohort: onsets, visit schedules, statuses (all rounded 2dp)."""
    rng = derive_rng(cfg.seed if seed is None else seed)
    n, m = cfg.n, cfg.n_visits

    comps = np.asarray(cfg.onset_components, dtype=float)
    wts = comps[:, 0] / comps[:, 0].sum()
    params = np.array([lognormal_params(mean, sd) for _, mean, sd in comps])
    pick = np.searchsorted(np.cumsum(wts), rng.random(n), side="right")
    pick = np.clip(pick, 0, len(wts) - 1)
    raw_onset = np.exp(params[pick, 0] + params[pick, 1] * rng.standard_normal(n))
    diseased = rng.random(n) < cfg.prevalence
    onset = np.where(diseased, np.maximum(np.round(raw_onset, 2), 0.01), cfg.point_mass)

    base = _truncated_normal(
        rng, np.full(n, cfg.baseline_mean), cfg.baseline_sd, 0.0, cfg.frame_right
    )
    times = np.empty((n, m))
    times[:, 0] = base
    if m > 1:
        # each gap averages followup_length / (m - 1), so a full series spans
        # about followup_length years; the next visit must stay below the cap
        gap_mean = np.full(n, cfg.followup_length / (m - 1))
        prev = base.copy()
        for j in range(1, m):
            gap = _truncated_normal(rng, gap_mean, cfg.gap_sd, 0.0, cfg.frame_right - prev)
            prev = prev + gap
            times[:, j] = prev
    times = np.round(times, 2)

    statuses = times >= onset[:, None]
    return SimulatedCohort(config=cfg, visit_times=times, onset=onset, statuses=statuses)


def rise(estimated, truth, prevalence: float) -> float:
    """Root integrated squared error of a survival curve, scaled by 1/p.

    Both curves must be evaluated on the same grid; the error is the RMS
    pointwise gap divided by the prevalence so cells with rare disease are
    judged on the scale of the signal they contain.
    """
    if prevalence <= 0:
        raise ZeroPrevalenceError("prevalence must be positive to scale the error")
    a = np.asarray(estimated, dtype=float)
    b = np.asarray(truth, dtype=float)
    if a.shape != b.shape:
        raise InvalidConfigError("estimated and truth curves must share a grid")
    return float(np.sqrt(np.mean((a - b) ** 2)) / prevalence)


def rmse_imputation(imputed, actual) -> float:
    a = np.asarray(imputed, dtype=float)
    b = np.asarray(actual, dtype=float)
    if a.shape != b.shape:
        raise InvalidConfigError("imputed and actual times must align")
    if a.size == 0:
        return float("nan")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def _km_view(cohort: SimulatedCohort):
    """Perfect-diagnosis comparator data: the true onset age is an exact
    event when it falls inside follow-up, otherwise censoring at last visit."""
    t_last = cohort.visit_times[:, -1]
    events = cohort.onset <= t_last
    durations = np.where(events, cohort.onset, t_last)
    km_right = np.where(events, durations, INF)
    return durations, events.astype(np.int64), (durations, km_right)


def _masked_rmse(density, left, right, keep, actual) -> float:
    """Imputation RMSE over rows in keep whose interval overlaps the grid."""
    if not np.any(keep):
        return float("nan")
    imputed, valid = impute_event_times(density, (left[keep], right[keep]), skip_empty=True)
    if not np.any(valid):
        return float("nan")
    return rmse_imputation(imputed[valid], np.asarray(actual)[keep][valid])


@dataclass(frozen=True)
class ScenarioResult:
    """Per-replicate metrics plus aggregation for one scenario cell."""

    config: ScenarioConfig
    replicates: dict = field(default_factory=dict)

    def summary(self) -> dict:
        r = {k: np.asarray(v, dtype=float) for k, v in self.replicates.items()}

        def pct(raw_key, smooth_key):
            raw, smooth = r[raw_key], r[smooth_key]
            ok = np.isfinite(raw) & np.isfinite(smooth) & (raw > 0)
            if not np.any(ok):
                return {"median": None, "min": None, "max": None, "n": 0}
            change = 100.0 * (smooth[ok] - raw[ok]) / raw[ok]
            return {
                "median": float(np.median(change)),
                "min": float(np.min(change)),
                "max": float(np.max(change)),
                "n": int(ok.sum()),
            }

        def med(key):
            v = r[key]
            v = v[np.isfinite(v)]
            return float(np.median(v)) if v.size else None

        out = {
            "name": self.config.name,
            "n_replicates": int(len(r["rise_tb_raw"])),
            "rise_tb": {
                "raw_median": med("rise_tb_raw"),
                "smooth_median": med("rise_tb_smooth"),
                "pct_change": pct("rise_tb_raw", "rise_tb_smooth"),
            },
            "rise_km": {
                "raw_median": med("rise_km_raw"),
                "smooth_median": med("rise_km_smooth"),
                "pct_change": pct("rise_km_raw", "rise_km_smooth"),
            },
            "rmse_within": {
                "raw_median": med("rmse_w_raw"),
                "smooth_median": med("rmse_w_smooth"),
                "pct_change": pct("rmse_w_raw", "rmse_w_smooth"),
            },
            "rmse_oos_tb": {
                "raw_median": med("rmse_o_tb_raw"),
                "smooth_median": med("rmse_o_tb_smooth"),
                "pct_change": pct("rmse_o_tb_raw", "rmse_o_tb_smooth"),
            },
            "rmse_oos_km": {
                "raw_median": med("rmse_o_km_raw"),
                "smooth_median": med("rmse_o_km_smooth"),
                "pct_change": pct("rmse_o_km_raw", "rmse_o_km_smooth"),
            },
            "bandwidth": {"tb_median": med("bandwidth_tb"), "km_median": med("bandwidth_km")},
        }
        if "coverage_raw" in r:
            cov_r = r["coverage_raw"][np.isfinite(r["coverage_raw"])]
            cov_s = r["coverage_smooth"][np.isfinite(r["coverage_smooth"])]
            out["coverage"] = {
                "raw_mean": float(np.mean(cov_r)) if cov_r.size else None,
                "smooth_mean": float(np.mean(cov_s)) if cov_s.size else None,
                "n": int(cov_r.size),
            }
        return out

    def to_dict(self) -> dict:
        reps = {
            k: [None if not np.isfinite(x) else float(x) for x in np.asarray(v, dtype=float)]
            for k, v in self.replicates.items()
        }
        return {"config": self.config.to_dict(), "replicates": reps, "summary": self.summary()}


def _run_replicate(cfg: ScenarioConfig, r: int) -> dict:
    est_cohort = simulate_cohort(cfg, derive_seed(cfg.seed, r, _SEED_EST))
    oos_cohort = simulate_cohort(cfg, derive_seed(cfg.seed, r, _SEED_OOS))
    frame = est_cohort.frame

    left, right = est_cohort.intervals
    tb_data = (left, right)
    raw_tb = turnbull_fit(tb_data, frame=frame)
    tb = smooth_step_fit(
        raw_tb,
        tb_data,
        frame=frame,
        penalty=cfg.penalty,
        delta_t=cfg.delta_t,
        max_bandwidth=cfg.max_bandwidth,
        seed=derive_seed(cfg.seed, r, _SEED_TB_OPT),
        global_budget=cfg.global_budget,
    )

    durations, events, (km_left, km_right) = _km_view(est_cohort)
    raw_km = km_fit(durations, events, frame=frame)
    km = smooth_step_fit(
        raw_km,
        (km_left, km_right),
        frame=frame,
        penalty="ne",
        delta_t=cfg.delta_t,
        max_bandwidth=cfg.max_bandwidth,
        seed=derive_seed(cfg.seed, r, _SEED_KM_OPT),
        global_budget=cfg.global_budget,
    )

    taus = tb.raw_density.taus
    truth = true_survival(cfg, taus)
    p = cfg.prevalence
    out = {
        "rise_tb_raw": rise(raw_tb.survival_at(taus), truth, p),
        "rise_tb_smooth": rise(tb.density.survival(), truth, p),
        "rise_km_raw": rise(raw_km.survival_at(taus), truth, p),
        "rise_km_smooth": rise(km.density.survival(), truth, p),
        "bandwidth_tb": tb.bandwidth,
        "bandwidth_km": km.bandwidth,
    }

    # imputation is scored on interval-censored rows only (finite right
    # endpoint); in this generator those are exactly the rows whose onset
    # was bracketed by two visits, so the truth is known for each
    strict = est_cohort.has_onset & np.isfinite(right)
    out["rmse_w_raw"] = _masked_rmse(tb.raw_density, left, right, strict, est_cohort.onset)
    out["rmse_w_smooth"] = _masked_rmse(tb.density, left, right, strict, est_cohort.onset)

    o_left, o_right = oos_cohort.intervals
    keep = oos_cohort.has_onset & np.isfinite(o_right)
    onset = oos_cohort.onset
    out["rmse_o_tb_raw"] = _masked_rmse(tb.raw_density, o_left, o_right, keep, onset)
    out["rmse_o_tb_smooth"] = _masked_rmse(tb.density, o_left, o_right, keep, onset)
    out["rmse_o_km_raw"] = _masked_rmse(km.raw_density, o_left, o_right, keep, onset)
    out["rmse_o_km_smooth"] = _masked_rmse(km.density, o_left, o_right, keep, onset)

    if cfg.bootstrap_replicates > 0:
        def refit(b_left, b_right, rep_seed):
            raw = turnbull_fit((b_left, b_right), frame=frame)
            res = smooth_step_fit(
                raw,
                (b_left, b_right),
                frame=frame,
                penalty=cfg.penalty,
                delta_t=cfg.delta_t,
                max_bandwidth=cfg.max_bandwidth,
                seed=rep_seed,
                global_budget=cfg.bootstrap_budget,
            )
            return raw, res.density

        bands = bootstrap_bands(
            tb_data,
            refit,
            grid=taus,
            n_boot=cfg.bootstrap_replicates,
            seed=derive_seed(cfg.seed, r, _SEED_BOOT),
        )
        # coverage is scored once per age band of the point fit (the grid
        # bin holding each support interval's right endpoint), not at every
        # tau: below the first band every resampled curve is identically 1,
        # so full-grid coverage would only measure how far truth sits from 1
        band_right = np.array([min(p, frame.right) for _, p in raw_tb.support])
        idx = np.clip(np.searchsorted(taus, band_right, side="right") - 1, 0, taus.size - 1)
        where = np.zeros(taus.size, dtype=bool)
        where[idx] = True
        cov_raw, cov_smooth = band_coverage(bands, truth, where=where)
        out["coverage_raw"] = cov_raw
        out["coverage_smooth"] = cov_smooth
    return out


def run_scenario(cfg: ScenarioConfig, threads: int = 1, progress=None) -> ScenarioResult:
    """Run all replicates of one scenario cell and collect the metrics."""
    done = [0]

    def one(r: int) -> dict:
        metrics = _run_replicate(cfg, r)
        done[0] += 1
        if progress is not None:
            progress(done[0], cfg.n_replicates)
        return metrics

    rows = thread_map(one, range(cfg.n_replicates), threads=threads)
    keys = rows[0].keys()
    replicates = {k: [row[k] for row in rows] for k in keys}
    return ScenarioResult(config=cfg, replicates=replicates)


def s1_cell(n: int, onset_mean: float, prevalence: float, n_visits: int, **overrides) -> ScenarioConfig:
    """One unimodal-onset factorial cell with a systematic name."""
    name = f"s1-n{n}-u{int(onset_mean)}-p{int(round(prevalence * 100))}-m{n_visits}"
    base = ScenarioConfig(
        name=name,
        n=n,
        onset_components=((1.0, onset_mean, 10.0),),
        prevalence=prevalence,
        n_visits=n_visits,
    )
    return replace(base, **overrides) if overrides else base


def s1_grid(n_replicates: int = 100, **overrides) -> list[ScenarioConfig]:
    """Full 108-cell factorial: cohort size x onset mean x prevalence x visits."""
    cells = []
    for n, u, p, m in itertools.product(
        (50, 100, 1000, 5000), (30.0, 50.0, 70.0), (0.1, 0.5, 1.0), (2, 4, 6)
    ):
        cells.append(s1_cell(n, u, p, m, n_replicates=n_replicates, **overrides))
    return cells


def _bimodal_cell(n_replicates: int) -> ScenarioConfig:
    return ScenarioConfig(
        name="s2-bimodal",
        n=500,
        onset_components=((0.5, 30.0, 10.0), (0.5, 60.0, 10.0)),
        prevalence=0.75,
        n_visits=2,
        n_replicates=n_replicates,
    )


def presets() -> dict[str, list[ScenarioConfig]]:
    """Named benchmark suites: desk-scale variants plus the full-size runs."""
    return {
        "s1-desk": [s1_cell(100, 50.0, 1.0, 6), s1_cell(50, 30.0, 0.1, 2)],
        "s2-desk": [_bimodal_cell(30)],
        "s3-desk": [
            s1_cell(
                100, 50.0, 1.0, 6,
                name="s3-coverage",
                n_replicates=20,
                bootstrap_replicates=100,
            )
        ],
        "s1-full": s1_grid(),
        "s2-full": [_bimodal_cell(500)],
        "s3-full": [
            s1_cell(
                100, 50.0, 1.0, 6,
                name="s3-coverage",
                n_replicates=100,
                bootstrap_replicates=200,
            )
        ],
    }


def run_split_evaluation(
    data,
    onsets,
    seed: int = 0,
    test_fraction: float = 0.5,
    **estimator_kwargs,
) -> dict:
    """Holdout check on real data with known onset ages.

    Fits on a random train split, imputes the held-out intervals from both
    the raw and smoothed densities, and scores them against the provided
    onsets. Only interval-censored rows (finite right endpoint) with a known
    finite onset are scored. Returns a flat summary dict.
    """
    left, right, _ = interval_arrays(data, expand=True)
    onsets = np.asarray(onsets, dtype=float)
    if onsets.shape != left.shape:
        raise InvalidConfigError("need one onset value per expanded observation")
    if not 0.0 < test_fraction < 1.0:
        raise InvalidConfigError("test_fraction must be in (0, 1)")

    rng = derive_rng(seed, 0x5B)
    order = rng.permutation(left.size)
    n_test = max(1, int(round(test_fraction * left.size)))
    test, train = order[:n_test], order[n_test:]
    if train.size == 0:
        raise InvalidConfigError("train split is empty; lower test_fraction")

    est = SmoothedSurvivalEstimator(seed=seed, **estimator_kwargs)
    est.fit((left[train], right[train]))

    keep = np.isfinite(onsets[test]) & np.isfinite(right[test])
    rmse_raw = _masked_rmse(est.raw_density_, left[test], right[test], keep, onsets[test])
    rmse_smooth = _masked_rmse(est.density_, left[test], right[test], keep, onsets[test])
    return {
        "n_train": int(train.size),
        "n_test": int(test.size),
        "n_scored": int(keep.sum()),
        "prevalence_hat": observed_prevalence((left, right)),
        "bandwidth": est.bandwidth_,
        "rmse_raw": None if math.isnan(rmse_raw) else rmse_raw,
        "rmse_smoothed": None if math.isnan(rmse_smooth) else rmse_smooth,
    }
