"""Event-time imputation and bootstrap uncertainty bands.

Imputation replaces a censoring interval with the conditional mean of a
fitted gridded density restricted to that interval. Bands come from refitting
the whole pipeline on multinomial resamples of the observations and taking
pointwise quantiles of the resulting survival curves.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import (
    DegenerateDensityError,
    EmptyIntervalError,
    EstimationError,
    InvalidConfigError,
    ZeroPrevalenceError,
)
from .npmle import GriddedDensity
from .utils import derive_rng
from .validation import interval_arrays


class _ConditionalMean:
    """Conditional means of a gridded density over clamped intervals.

    Zero-mass bins are inflated by a tiny epsilon so conditioning on an
    interval the fit assigns no mass still returns its barycenter instead of
    dividing by zero.
    """

    def __init__(self, density: GriddedDensity):
        total = density.total_mass
        if total <= 0:
            raise DegenerateDensityError("cannot impute from an all-zero density")
        eps = 1e-12 * total / (density.step * density.n_bins)
        vt = np.where(density.values > 0, density.values, eps)
        self.lo = density.grid_start
        self.end = density.grid_end
        self.step = density.step
        self.edges = density.edges
        self.vt = vt
        self.wcum = np.concatenate([[0.0], np.cumsum(vt) * density.step])
        mids = 0.5 * (self.edges[:-1] + self.edges[1:])
        self.mcum = np.concatenate([[0.0], np.cumsum(vt * density.step * mids)])

    def _bin(self, t):
        j = np.searchsorted(self.edges, t, side="right") - 1
        return np.clip(j, 0, self.vt.size - 1)

    def _w(self, t):
        j = self._bin(t)
        return self.wcum[j] + self.vt[j] * (t - self.edges[j])

    def _m(self, t):
        j = self._bin(t)
        e = self.edges[j]
        # factored difference of squares; keeps shift-equivariance tight
        return self.mcum[j] + self.vt[j] * (t - e) * (t + e) * 0.5

    def over(self, a, b):
        weight = self._w(b) - self._w(a)
        return (self._m(b) - self._m(a)) / weight


def impute_event_times(density: GriddedDensity, data, skip_empty: bool = False):
    """Conditional-mean event times for censored observations.

    Exact observations return their own time; censored intervals return the
    mean of the density restricted to the interval clamped to the grid, which
    always lands strictly inside it. Intervals with no grid overlap raise
    EmptyIntervalError, or are masked out when skip_empty is set.

    Returns imputed times, or (imputed times, valid mask) with skip_empty.
    """
    left, right, _ = interval_arrays(data)
    cm = _ConditionalMean(density)
    a = np.clip(left, cm.lo, cm.end)
    b = np.clip(right, cm.lo, cm.end)
    exact = left == right
    empty = ~exact & (b <= a)
    if np.any(empty) and not skip_empty:
        i = int(np.argmax(empty))
        raise EmptyIntervalError(
            f"interval ({left[i]!r}, {right[i]!r}] does not overlap the grid "
            f"[{cm.lo!r}, {cm.end!r}]"
        )
    ok = ~exact & ~empty
    out = np.where(exact, left, np.nan)
    if np.any(ok):
        out[ok] = cm.over(a[ok], b[ok])
    if skip_empty:
        return out, ~empty
    return out


def impute_event_time(density: GriddedDensity, left: float, right: float) -> float:
    """Scalar convenience wrapper around impute_event_times."""
    out = impute_event_times(density, ([left], [right]))
    return float(out[0])


def observed_prevalence(data) -> float:
    """Fraction of observations seen diseased by their last visit."""
    left, right, mult = interval_arrays(data)
    total = float(mult.sum())
    diseased = float(mult[np.isfinite(right)].sum())
    if diseased == 0:
        raise ZeroPrevalenceError("no observation was ever seen diseased")
    return diseased / total


@dataclass(frozen=True)
class PrevalenceEstimate:
    """Prevalence bookkeeping for a frame-truncated density fit.

    truncated_mass is the density's integral over its grid (1 by
    construction). prevalence and survival_beyond_frame are only filled in
    when an external lifetime prevalence is supplied; a fit truncated to the
    observed frame cannot identify them on its own, which
    unconditional_unidentified records.
    """

    truncated_mass: float
    prevalence: float | None
    survival_beyond_frame: float | None
    unconditional_unidentified: bool


def prevalence_from_fit(
    density: GriddedDensity, frame=None, p_hint: float | None = None
) -> PrevalenceEstimate:
    """Relate a frame-truncated fit to unconditional lifetime prevalence.

    The fitted density describes event times conditional on falling inside
    the frame. With a known prevalence p (from the sampling design or an
    external source) the unconditional survival at the frame's right edge is
    1 - p: the never-affected share. Without one, only the truncated mass is
    returned and the flag marks prevalence as unidentified. frame is accepted
    for signature symmetry with the fitting API; the arithmetic needs only
    the density.
    """
    mass = float(density.total_mass)
    if p_hint is None:
        return PrevalenceEstimate(mass, None, None, True)
    p = float(p_hint)
    if not 0.0 < p <= 1.0:
        raise InvalidConfigError(f"p_hint must be in (0, 1], got {p_hint!r}")
    return PrevalenceEstimate(mass, p, 1.0 - p, False)


@dataclass(frozen=True)
class ConfidenceBands:
    """Pointwise bootstrap quantile bands for raw and smoothed survival."""

    grid: np.ndarray
    raw_lower: np.ndarray
    raw_upper: np.ndarray
    smooth_lower: np.ndarray
    smooth_upper: np.ndarray
    level: float
    n_success: int
    n_failed: int

    @cached_property
    def width(self) -> float:
        return float(np.mean(self.smooth_upper - self.smooth_lower))


def bootstrap_bands(
    data,
    refit,
    grid,
    n_boot: int = 200,
    seed: int = 0,
    level: float = 0.95,
) -> ConfidenceBands:
    """Pointwise survival bands from refitting on multinomial resamples.

    refit(left, right, replicate_seed) must rerun the full pipeline on the
    resampled intervals and return (step estimate, smoothed gridded density);
    both survival curves are evaluated on grid. Replicates whose refit raises
    an estimation error are dropped and counted in n_failed.
    """
    if n_boot < 2:
        raise InvalidConfigError(f"need at least 2 bootstrap replicates, got {n_boot}")
    if not 0 < level < 1:
        raise InvalidConfigError(f"level must be in (0, 1), got {level!r}")
    left, right, _ = interval_arrays(data, expand=True)
    n = left.size
    grid = np.asarray(grid, dtype=float)

    raw_curves, smooth_curves = [], []
    n_failed = 0
    for b in range(n_boot):
        rng = derive_rng(seed, b)
        idx = rng.integers(0, n, n)
        rep_seed = int(rng.integers(0, 2**31 - 1))
        try:
            raw, smooth = refit(left[idx], right[idx], rep_seed)
        except EstimationError:
            n_failed += 1
            continue
        raw_curves.append(np.asarray(raw.survival_at(grid), dtype=float))
        smooth_curves.append(np.asarray(smooth.survival_at(grid), dtype=float))

    if not raw_curves:
        raise EstimationError(f"all {n_boot} bootstrap replicates failed to fit")
    alpha = (1.0 - level) / 2.0
    r_lo, r_hi = np.quantile(np.vstack(raw_curves), [alpha, 1.0 - alpha], axis=0)
    s_lo, s_hi = np.quantile(np.vstack(smooth_curves), [alpha, 1.0 - alpha], axis=0)
    return ConfidenceBands(
        grid=grid,
        raw_lower=r_lo,
        raw_upper=r_hi,
        smooth_lower=s_lo,
        smooth_upper=s_hi,
        level=level,
        n_success=len(raw_curves),
        n_failed=n_failed,
    )


def band_coverage(bands: ConfidenceBands, truth, where=None) -> tuple[float, float]:
    """Fraction of grid points whose true value lies inside each band.

    where, when given, is a boolean mask over the grid restricting which
    points count. Survival estimators carry no information at ages where no
    censoring endpoint ever falls (the curve is flat 1 there in every
    resample), so callers scoring coverage typically restrict to the ages
    where the fitted curve actually moves.
    """
    t = np.asarray(truth, dtype=float)
    if t.shape != bands.grid.shape:
        raise InvalidConfigError("truth must be evaluated on the band grid")
    keep = np.ones(t.shape, dtype=bool) if where is None else np.asarray(where, dtype=bool)
    if keep.shape != t.shape:
        raise InvalidConfigError("where mask must match the band grid")
    if not np.any(keep):
        raise InvalidConfigError("where mask selects no grid points")
    tol = 1e-12
    tk = t[keep]
    raw = np.mean(
        (bands.raw_lower[keep] - tol <= tk) & (tk <= bands.raw_upper[keep] + tol)
    )
    smooth = np.mean(
        (bands.smooth_lower[keep] - tol <= tk) & (tk <= bands.smooth_upper[keep] + tol)
    )
    return float(raw), float(smooth)
