"""Nonparametric maximum-likelihood survival estimation.

Two step-function estimators and the bridge onto a uniform evaluation grid:

* ``km_fit`` - the product-limit estimator for exact + right-censored data.
* ``turnbull_fit`` - the self-consistency EM over maximal-intersection
  support intervals for arbitrarily censored data.
* ``step_to_grid`` / ``grid_to_survival`` - convert a step estimate into a
  binned density / survival curve on a uniform grid.

Censoring intervals are half-open (left, right]: a disease-free visit at t
implies the event is strictly after t, a diseased visit at t implies the
event is at or before t. Exact events are width-zero intervals.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from sklearn.base import BaseEstimator

from .data import INF, TimeFrame
from .exceptions import (
    AllCensoredWarning,
    DegenerateDensityError,
    EmptyDataError,
    NoFeasibleSupportError,
    NonConvergenceWarning,
    StepTooCoarseWarning,
)
from .validation import check_durations, check_positive, interval_arrays

# Edge lookups tolerate this much relative slack when binning a time point,
# so t == grid_start + j*step lands in bin j despite float rounding.
_EDGE_FUZZ = 1e-9


@dataclass(frozen=True)
class StepEstimate:
    """A distribution supported on ordered intervals with point masses.

    support holds (q, p) pairs, q <= p, pairwise disjoint and ascending;
    q == p is a point mass and p may be +inf (mass beyond the last
    observation). masses are the corresponding probabilities and sum to one.
    """

    support: tuple
    masses: np.ndarray
    frame: TimeFrame | None = None
    converged: bool = True
    n_iter: int = 0
    residual: float = 0.0
    all_censored: bool = False
    log_likelihoods: np.ndarray | None = None

    def __post_init__(self):
        support = tuple((float(q), float(p)) for q, p in self.support)
        masses = np.asarray(self.masses, dtype=float)
        if len(support) != masses.size or masses.size == 0:
            raise EmptyDataError("support and masses must be non-empty and aligned")
        if np.any(masses < -1e-9):
            raise ValueError("masses must be non-negative")
        masses = np.clip(masses, 0.0, None)
        if abs(masses.sum() - 1.0) > 1e-8:
            raise ValueError(f"masses must sum to 1, got {masses.sum()!r}")
        prev_p = -INF
        for q, p in support:
            if p < q or q < prev_p:
                raise ValueError("support intervals must be ordered and disjoint")
            prev_p = p
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "masses", masses)

    @cached_property
    def _rights(self) -> np.ndarray:
        return np.array([p for _, p in self.support], dtype=float)

    @cached_property
    def _cum_masses(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.masses)])

    def survival_at(self, times):
        """Step survival S(t) = 1 - sum of masses realized by time t.

        A support element's mass is realized once its right endpoint has been
        passed (right-continuous step curve; +inf endpoints never realize).
        """
        t = np.asarray(times, dtype=float)
        idx = np.searchsorted(self._rights, t, side="right")
        out = 1.0 - self._cum_masses[idx]
        return out if out.shape else float(out)


@dataclass(frozen=True)
class GriddedDensity:
    """A non-negative density tabulated on a uniform grid.

    Bin j covers [grid_start + j*step, grid_start + (j+1)*step); values are
    densities (mass per unit time). bandwidth records the kernel width that
    produced the grid (0 for a raw, unsmoothed fit).
    """

    grid_start: float
    step: float
    values: np.ndarray
    bandwidth: float = 0.0

    def __post_init__(self):
        check_positive("step", self.step)
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise DegenerateDensityError("values must be a non-empty 1-D array")
        if np.any(~np.isfinite(values)) or np.any(values < -1e-9):
            raise DegenerateDensityError("density values must be finite and non-negative")
        object.__setattr__(self, "values", np.clip(values, 0.0, None))
        if self.bandwidth < 0:
            raise ValueError("bandwidth cannot be negative")

    @property
    def n_bins(self) -> int:
        return self.values.size

    @property
    def grid_end(self) -> float:
        return self.grid_start + self.n_bins * self.step

    @property
    def total_mass(self) -> float:
        return float(self.step * self.values.sum())

    @cached_property
    def edges(self) -> np.ndarray:
        return self.grid_start + self.step * np.arange(self.n_bins + 1)

    @cached_property
    def taus(self) -> np.ndarray:
        """Left bin edges; the grid positions used in reports and curves."""
        return self.edges[:-1]

    @cached_property
    def _cum(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.values) * self.step])

    def cdf_at(self, times):
        """Cumulative mass up to t, linear within bins (exact proration)."""
        t = np.asarray(times, dtype=float)
        return np.interp(t, self.edges, self._cum)

    def integrate(self, a, b):
        return self.cdf_at(b) - self.cdf_at(a)

    def _bin_index(self, times, n_max: int):
        t = np.asarray(times, dtype=float)
        idx = np.floor((t - self.grid_start) / self.step + _EDGE_FUZZ)
        idx = np.clip(idx, 0, n_max)
        return idx.astype(np.int64)

    def density_at(self, times):
        """Density of the bin containing t (nearest bin at the boundaries)."""
        out = self.values[self._bin_index(times, self.n_bins - 1)]
        return out if out.shape else float(out)

    def survival_at(self, times):
        """Right-continuous step survival lookup on the grid edges."""
        total = self.total_mass
        surv_edges = total - self._cum
        out = surv_edges[self._bin_index(times, self.n_bins)]
        return out if out.shape else float(out)

    def survival(self) -> np.ndarray:
        """Survival evaluated at the left bin edges (aligned with taus)."""
        return self.total_mass - self._cum[:-1]

    def with_values(self, values, bandwidth: float) -> "GriddedDensity":
        return GriddedDensity(self.grid_start, self.step, values, bandwidth)


def grid_to_survival(density: GriddedDensity) -> np.ndarray:
    """Survival curve on the density's own grid (left bin edges).

    S(tau_j) = total_mass - cumulative integral up to tau_j, so the curve
    starts at total_mass and would reach zero at the right frame edge.
    """
    return density.survival()


def km_fit(durations, events=None, frame: TimeFrame | None = None) -> StepEstimate:
    """Product-limit estimate for exact event times with right censoring.

    At each distinct event time t_j with d_j events and n_j at risk
    (censored individuals at t_j still count as at risk), survival multiplies
    by (1 - d_j / n_j). Mass remaining after the last event time stays on
    (last event time, +inf); gridding later clamps it into the frame.
    """
    t, e = check_durations(durations, events)
    if frame is None and t.min() < t.max():
        frame = TimeFrame(float(t.min()), float(t.max()))

    if e.sum() == 0:
        warnings.warn(
            "all observations are right-censored; survival curve is identically 1",
            AllCensoredWarning,
        )
        anchor = float(t.max())
        return StepEstimate(
            support=((anchor, INF),),
            masses=np.array([1.0]),
            frame=frame,
            all_censored=True,
        )

    ts = np.sort(t)
    event_times, deaths = np.unique(t[e == 1], return_counts=True)
    deaths = deaths.astype(float)
    at_risk = t.size - np.searchsorted(ts, event_times, side="left")
    surv = np.cumprod(1.0 - deaths / at_risk)

    drops = -np.diff(np.concatenate([[1.0], surv]))
    support = [(float(tau), float(tau)) for tau in event_times]
    masses = list(drops)
    residual_mass = float(surv[-1])
    if residual_mass > 1e-12:
        support.append((float(event_times[-1]), INF))
        masses.append(residual_mass)
    else:
        # fold rounding dust into the last event so masses sum to one
        masses[-1] += residual_mass
    return StepEstimate(support=tuple(support), masses=np.array(masses), frame=frame)


# Mark kinds for the endpoint sweep; the order at equal values encodes the
# half-open (left, right] interval semantics: an exact point (t-, t] opens
# just below t, a censored interval (L, R] opens just above L.
_EXACT_LEFT = 0
_RIGHT = 1
_CENSORED_LEFT = 2


def turnbull_intervals(data) -> list[tuple[float, float]]:
    """Maximal-intersection support intervals of arbitrarily censored data.

    Sweeps the interval endpoints in sorted order; every left mark immediately
    followed by a right mark delimits a support interval (q, p], q == p for a
    point supported by an exact observation. The NPMLE can only place mass on
    these intervals.
    """
    left, right, _ = interval_arrays(data)
    marks = []
    for l, r in zip(left, right):
        if l == r:
            marks.append((l, _EXACT_LEFT))
            marks.append((l, _RIGHT))
        else:
            marks.append((l, _CENSORED_LEFT))
            marks.append((r, _RIGHT))
    marks.sort()
    out = []
    for (v1, k1), (v2, k2) in zip(marks[:-1], marks[1:]):
        if k1 != _RIGHT and k2 == _RIGHT:
            ti = (float(v1), float(v2))
            if not out or out[-1] != ti:
                out.append(ti)
    return out


def _compatibility(left, right, q, p) -> np.ndarray:
    """alpha[i, k] = 1 if support interval k can carry observation i's event.

    Non-degenerate (q, p] fits inside (L, R] iff q >= L and p <= R; a point
    {q} needs L < q <= R; an exact observation {t} carries only the point {t}.
    """
    l_col = left[:, None]
    r_col = right[:, None]
    q_row = q[None, :]
    p_row = p[None, :]
    degenerate = (q == p)[None, :]
    inside = (p_row <= r_col) & np.where(degenerate, q_row > l_col, q_row >= l_col)
    exact_obs = (left == right)[:, None]
    inside = np.where(exact_obs, (q_row == l_col) & degenerate, inside)
    return inside.astype(float)


def turnbull_fit(
    data,
    tol: float = 1e-8,
    max_iter: int = 20000,
    frame: TimeFrame | None = None,
) -> StepEstimate:
    """Self-consistency EM for the NPMLE over the support intervals.

    Starting from uniform masses, each iteration redistributes every
    observation's weight over its compatible support intervals in proportion
    to the current masses and averages:

        m_k <- (1/N) * sum_i alpha_ik * m_k / sum_l alpha_il * m_l

    Stops when the largest mass change falls below tol. The log-likelihood
    path is recorded every iteration (it is non-decreasing for EM).
    """
    check_positive("tol", tol)
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    left, right, mult = interval_arrays(data)

    # collapse duplicate intervals into multiplicities; the EM is identical
    pairs = np.column_stack([left, right])
    uniq, inverse = np.unique(pairs, axis=0, return_inverse=True)
    weights = np.zeros(len(uniq), dtype=float)
    np.add.at(weights, inverse.reshape(-1), mult.astype(float))
    u_left, u_right = uniq[:, 0], uniq[:, 1]

    all_censored = bool(np.all(np.isinf(u_right)))
    if all_censored:
        warnings.warn(
            "every observation is censored to +inf; all mass sits beyond the "
            "last disease-free time",
            AllCensoredWarning,
        )

    tis = turnbull_intervals((u_left, u_right, np.ones(len(uniq), dtype=np.int64)))
    q = np.array([a for a, _ in tis])
    p = np.array([b for _, b in tis])
    alpha = _compatibility(u_left, u_right, q, p)
    if np.any(alpha.sum(axis=1) == 0):
        bad = int(np.argmax(alpha.sum(axis=1) == 0))
        raise NoFeasibleSupportError(
            f"interval ({u_left[bad]!r}, {u_right[bad]!r}] contains no support interval"
        )

    n_total = float(mult.sum())
    m = np.full(len(tis), 1.0 / len(tis))
    lls = []
    converged = False
    residual = INF
    it = 0
    for it in range(1, max_iter + 1):
        denom = alpha @ m
        lls.append(float(weights @ np.log(denom)))
        m_new = m * (alpha.T @ (weights / denom)) / n_total
        residual = float(np.max(np.abs(m_new - m)))
        m = m_new
        if residual < tol:
            converged = True
            break
    lls.append(float(weights @ np.log(alpha @ m)))
    if not converged:
        warnings.warn(
            f"EM stopped after {max_iter} iterations with residual {residual:.3e}",
            NonConvergenceWarning,
        )

    m = np.clip(m, 0.0, None)
    m /= m.sum()
    return StepEstimate(
        support=tuple(zip(q.tolist(), p.tolist())),
        masses=m,
        frame=frame,
        converged=converged,
        n_iter=it,
        residual=residual,
        all_censored=all_censored,
        log_likelihoods=np.asarray(lls),
    )


def _resolve_frame(est: StepEstimate, frame: TimeFrame | None, step: float) -> TimeFrame:
    if frame is not None:
        return frame
    if est.frame is not None:
        return est.frame
    lo = min(q for q, _ in est.support)
    hi = max((p for _, p in est.support if math.isfinite(p)), default=lo)
    if hi <= lo:
        # degenerate support (e.g. identical exact points): one-bin frame
        hi = lo + step
    return TimeFrame(lo, hi)


def step_to_grid(
    est: StepEstimate, frame: TimeFrame | None = None, step: float = 0.01
) -> GriddedDensity:
    """Spread a step estimate's masses uniformly over a uniform grid.

    The grid spans the frame; +inf right endpoints are clamped to the frame's
    right edge first (the estimate is read as a distribution truncated to the
    frame), and any support mass outside the frame is squeezed into the
    nearest covered bins. Degenerate points put all their mass into the
    containing bin. total mass is preserved.
    """
    check_positive("step", step)
    frame = _resolve_frame(est, frame, step)
    lo = frame.left
    n_bins = max(1, int(math.ceil((frame.right - lo) / step - _EDGE_FUZZ)))
    end = lo + n_bins * step
    values = np.zeros(n_bins)

    coarse = False
    for (q, p), mass in zip(est.support, est.masses):
        if mass <= 0.0:
            continue
        a = min(max(q, lo), end)
        b = min(max(p, lo), end)
        if 0.0 < p - q < step * (1.0 - 1e-9):
            coarse = True
        # widths below float dust are point masses (possibly created by the
        # clamp itself, e.g. a tail interval squeezed against the frame edge)
        if b - a <= step * 1e-9:
            j = min(max(int((a - lo) / step + _EDGE_FUZZ), 0), n_bins - 1)
            if a >= end - step * 1e-9:
                j = n_bins - 1
            values[j] += mass / step
            continue
        j0 = min(int((a - lo) / step + _EDGE_FUZZ), n_bins - 1)
        j1 = min(int(math.ceil((b - lo) / step - _EDGE_FUZZ)), n_bins)
        idx = np.arange(j0, j1)
        seg_lo = np.maximum(lo + idx * step, a)
        seg_hi = np.minimum(lo + (idx + 1) * step, b)
        overlap = np.clip(seg_hi - seg_lo, 0.0, None)
        values[idx] += mass * overlap / (b - a) / step
    if coarse:
        warnings.warn(
            "some support intervals are narrower than the grid step and were "
            "merged into single bins",
            StepTooCoarseWarning,
        )
    return GriddedDensity(grid_start=lo, step=step, values=values, bandwidth=0.0)


class KaplanMeierEstimator(BaseEstimator):
    """Product-limit survival estimator with a scikit-learn style interface.

    fit takes durations as X and event indicators as y (1 = event observed,
    0 = right-censored).
    """

    def fit(self, X, y=None):
        self.estimate_ = km_fit(X, y)
        self.support_ = self.estimate_.support
        self.masses_ = self.estimate_.masses
        self.event_times_ = np.array(
            [q for q, p in self.estimate_.support if p == q], dtype=float
        )
        self.all_censored_ = self.estimate_.all_censored
        return self

    def predict_survival(self, times):
        return self.estimate_.survival_at(times)


class TurnbullEstimator(BaseEstimator):
    """Self-consistency NPMLE for arbitrarily censored data, sklearn style.

    Parameters
    ----------
    tol : float
        EM stopping tolerance on the largest mass change per iteration.
    max_iter : int
        Iteration cap; hitting it warns and sets converged_ to False.
    """

    def __init__(self, tol: float = 1e-8, max_iter: int = 20000):
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        self.estimate_ = turnbull_fit(X, tol=self.tol, max_iter=self.max_iter)
        self.support_ = self.estimate_.support
        self.masses_ = self.estimate_.masses
        self.converged_ = self.estimate_.converged
        self.n_iter_ = self.estimate_.n_iter
        return self

    def predict_survival(self, times):
        return self.estimate_.survival_at(times)
