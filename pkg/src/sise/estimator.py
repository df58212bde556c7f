"""End-to-end smoothed survival estimation.

smooth_step_fit chains the pieces: a raw step estimate is binned onto a
uniform grid, the penalty weight is fixed from the raw fit, the bandwidth is
chosen by minimizing the penalized score, and the winning smoothed density is
reported next to the raw one. SmoothedSurvivalEstimator wraps the chain in a
scikit-learn style fit/predict interface around the self-consistency NPMLE.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .bandwidth import BandwidthResult, OptimizerConfig, bic_objective, optimize_bandwidth
from .data import TimeFrame
from .exceptions import InvalidConfigError
from .inference import ConfidenceBands, bootstrap_bands, impute_event_times
from .npmle import GriddedDensity, StepEstimate, step_to_grid, turnbull_fit
from .smoothing import (
    FitReport,
    effective_sample_size,
    interval_log_likelihood,
    nw_smooth,
    penalty_weight,
    smoothing_bic,
)
from .validation import interval_arrays


@dataclass(frozen=True)
class PipelineResult:
    """Everything produced by one raw-fit-to-smoothed-density run."""

    raw_estimate: StepEstimate
    raw_density: GriddedDensity
    density: GriddedDensity
    bandwidth: float
    raw_report: FitReport
    report: FitReport
    n_e: float
    penalty_weight: float
    frame: TimeFrame
    search: BandwidthResult


def default_max_bandwidth(frame: TimeFrame, delta_t: float) -> float:
    """Search-box cap: the frame's right edge scaled by the grid step.

    Keeps the kernel width proportional to both the time scale of the data
    and the resolution it was recorded at, and rules out absurdly wide
    kernels; at the defaults (ages up to ~100, two-decimal times) the cap
    is about one year.
    """
    return max(delta_t, frame.right * delta_t)


def smooth_step_fit(
    raw_estimate: StepEstimate,
    data,
    frame: TimeFrame | None = None,
    penalty: str = "ne",
    delta_t: float = 0.01,
    max_bandwidth: float | None = None,
    seed: int = 0,
    global_budget: int = 100,
    population: int = 20,
    local_tol: float = 1e-4,
    visit_counts=None,
) -> PipelineResult:
    """Grid a step estimate, pick a bandwidth, and smooth.

    The penalty weight (and the effective sample size feeding penalty "ne")
    is computed once from the raw estimate and held fixed while candidate
    bandwidths are scored, so the search compares likelihood and roughness
    only.
    """
    if frame is None:
        frame = raw_estimate.frame
    raw_density = step_to_grid(raw_estimate, frame=frame, step=delta_t)
    frame = frame or TimeFrame(raw_density.grid_start, raw_density.grid_end)
    n_e = effective_sample_size(data, raw_estimate)
    weight = penalty_weight(penalty, data, raw_fit=raw_estimate, visit_counts=visit_counts)

    if raw_density.n_bins < 3:
        # the grid cannot hold a turning point and the kernel has nowhere to
        # move mass (all support collapsed to at most two bins); the raw fit
        # is the smoothed fit
        ll = interval_log_likelihood(raw_density, data)
        report = FitReport(
            bandwidth=0.0,
            log_likelihood=ll,
            turning_points=0,
            penalty_weight=weight,
            bic_s=-2.0 * ll,
            n_e=n_e,
        )
        return PipelineResult(
            raw_estimate=raw_estimate,
            raw_density=raw_density,
            density=raw_density,
            bandwidth=0.0,
            raw_report=report,
            report=report,
            n_e=n_e,
            penalty_weight=weight,
            frame=frame,
            search=BandwidthResult(0.0, -2.0 * ll, 1),
        )

    raw_report = smoothing_bic(raw_density, data, weight, n_e=n_e)

    upper = max_bandwidth if max_bandwidth is not None else default_max_bandwidth(frame, delta_t)
    cfg = OptimizerConfig(
        seed=seed,
        global_budget=global_budget,
        population=population,
        local_tol=local_tol,
    )
    search = optimize_bandwidth(bic_objective(raw_density, data, weight, n_e), upper, cfg)
    density = nw_smooth(raw_density, search.bandwidth)
    report = smoothing_bic(density, data, weight, n_e=n_e)
    return PipelineResult(
        raw_estimate=raw_estimate,
        raw_density=raw_density,
        density=density,
        bandwidth=search.bandwidth,
        raw_report=raw_report,
        report=report,
        n_e=n_e,
        penalty_weight=weight,
        frame=frame,
        search=search,
    )


class SmoothedSurvivalEstimator(BaseEstimator):
    """Penalized kernel-smoothed NPMLE for arbitrarily censored event times.

    fit(X) accepts censoring intervals as a list of CensoredInterval, an
    (n, 2) or (n, 3) array of (left, right[, multiplicity]), or a tuple of
    those columns; +inf right endpoints mean right-censored. After fitting,
    predict(X) imputes event times for new intervals and predict_survival
    evaluates the smoothed survival curve.

    Parameters
    ----------
    penalty : "n" | "nm" | "ne"
        Sample-size measure whose log multiplies the turning-point count.
    delta_t : float
        Grid step for the binned density.
    max_bandwidth : float or None
        Upper edge of the bandwidth search box; None uses one percent of
        the frame width.
    em_tol, em_max_iter : float, int
        Stopping rule for the self-consistency EM.
    seed, global_budget, population, local_tol
        Bandwidth-search determinism and budget knobs.
    """

    def __init__(
        self,
        penalty: str = "ne",
        delta_t: float = 0.01,
        max_bandwidth: float | None = None,
        em_tol: float = 1e-8,
        em_max_iter: int = 20000,
        seed: int = 0,
        global_budget: int = 100,
        population: int = 20,
        local_tol: float = 1e-4,
    ):
        self.penalty = penalty
        self.delta_t = delta_t
        self.max_bandwidth = max_bandwidth
        self.em_tol = em_tol
        self.em_max_iter = em_max_iter
        self.seed = seed
        self.global_budget = global_budget
        self.population = population
        self.local_tol = local_tol

    def fit(self, X, y=None, frame: TimeFrame | None = None, visit_counts=None):
        left, right, mult = interval_arrays(X)
        raw = turnbull_fit(
            (left, right, mult), tol=self.em_tol, max_iter=self.em_max_iter, frame=frame
        )
        result = smooth_step_fit(
            raw,
            (left, right, mult),
            frame=frame,
            penalty=self.penalty,
            delta_t=self.delta_t,
            max_bandwidth=self.max_bandwidth,
            seed=self.seed,
            global_budget=self.global_budget,
            population=self.population,
            local_tol=self.local_tol,
            visit_counts=visit_counts,
        )
        self._fit_data = (left, right, mult)
        self.raw_estimate_ = result.raw_estimate
        self.raw_density_ = result.raw_density
        self.density_ = result.density
        self.bandwidth_ = result.bandwidth
        self.raw_report_ = result.raw_report
        self.report_ = result.report
        self.n_e_ = result.n_e
        self.penalty_weight_ = result.penalty_weight
        self.frame_ = result.frame
        self.n_iter_ = result.raw_estimate.n_iter
        return self

    def _check_fitted(self):
        if not hasattr(self, "density_"):
            raise NotFittedError("call fit before using this estimator")

    def predict(self, X):
        """Impute event times for censoring intervals under the smoothed fit."""
        self._check_fitted()
        return impute_event_times(self.density_, X)

    def predict_survival(self, times, smoothed: bool = True):
        self._check_fitted()
        if smoothed:
            return self.density_.survival_at(times)
        return self.raw_estimate_.survival_at(times)

    def predict_density(self, times):
        self._check_fitted()
        return self.density_.density_at(times)

    def survival_curve(self, smoothed: bool = True):
        """(grid, survival) pair on the fitted grid's left bin edges."""
        self._check_fitted()
        density = self.density_ if smoothed else self.raw_density_
        return density.taus, density.survival()

    def score(self, X=None, y=None) -> float:
        """Negative penalized score of the selected fit (higher is better)."""
        self._check_fitted()
        return -self.report_.bic_s

    def bootstrap(
        self,
        n_boot: int = 200,
        seed: int = 0,
        level: float = 0.95,
        reuse_bandwidth: bool = False,
    ) -> ConfidenceBands:
        """Pointwise survival bands by refitting on resampled observations.

        Each replicate reruns the EM and, unless reuse_bandwidth is set, the
        full bandwidth search with a replicate-specific seed.
        """
        self._check_fitted()
        if self.penalty == "nm":
            raise InvalidConfigError(
                'bootstrap does not support the visit-count penalty "nm"; '
                'refit with "n" or "ne"'
            )

        def refit(left, right, rep_seed):
            mult = np.ones(left.size, dtype=np.int64)
            raw = turnbull_fit(
                (left, right, mult),
                tol=self.em_tol,
                max_iter=self.em_max_iter,
                frame=self.frame_,
            )
            if reuse_bandwidth:
                grid = step_to_grid(raw, frame=self.frame_, step=self.delta_t)
                return raw, nw_smooth(grid, self.bandwidth_)
            result = smooth_step_fit(
                raw,
                (left, right, mult),
                frame=self.frame_,
                penalty=self.penalty,
                delta_t=self.delta_t,
                max_bandwidth=self.max_bandwidth,
                seed=rep_seed,
                global_budget=self.global_budget,
                population=self.population,
                local_tol=self.local_tol,
            )
            return raw, result.density

        return bootstrap_bands(
            self._fit_data,
            refit,
            grid=self.raw_density_.taus,
            n_boot=n_boot,
            seed=seed,
            level=level,
        )
