"""Bandwidth selection by minimizing the penalized fit score.

The objective (score as a function of bandwidth) is piecewise flat in the
turning-point term and can be multimodal, so a gradient-free two-stage search
is used: a small evolution strategy with self-adapted step sizes explores the
box [0, upper], then a one-dimensional Nelder-Mead polishes the best point.
Every evaluation is memoized; the reported optimum is the best bandwidth ever
evaluated, which in particular can never lose to the unsmoothed fit because
bandwidth 0 is always scored first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .npmle import GriddedDensity
from .smoothing import interval_log_likelihood, nw_smooth, smoothing_bic
from .utils import derive_rng
from .validation import check_positive

# memoization resolution: bandwidths closer than this are the same evaluation
_MEMO_SCALE = 1e10


@dataclass(frozen=True)
class OptimizerConfig:
    """Search-budget and tolerance knobs for bandwidth selection."""

    seed: int = 0
    global_budget: int = 100
    population: int = 20
    local_tol: float = 1e-4
    local_max_iter: int = 200

    def __post_init__(self):
        if self.global_budget < 0 or self.population < 1 or self.local_max_iter < 0:
            raise ValueError("budgets must be non-negative and population >= 1")
        check_positive("local_tol", self.local_tol)


@dataclass(frozen=True)
class BandwidthResult:
    bandwidth: float
    score: float
    n_evaluations: int


def optimize_bandwidth(
    objective,
    upper: float,
    config: OptimizerConfig | None = None,
) -> BandwidthResult:
    """Minimize objective(d) over d in [0, upper]; lower score wins.

    Deterministic for a fixed config.seed. Ties in score resolve to the
    smaller bandwidth.
    """
    if not np.isfinite(upper) or upper < 0:
        raise ValueError(f"upper must be finite and >= 0, got {upper!r}")
    if upper == 0.0:
        # a zero cap disables smoothing outright
        return BandwidthResult(0.0, float(objective(0.0)), 1)
    cfg = config or OptimizerConfig()
    rng = derive_rng(cfg.seed, 0xBD)

    memo: dict[int, tuple[float, float]] = {}
    fresh = [0]

    def ev(d: float) -> float:
        d = min(max(float(d), 0.0), upper)
        key = round(d * _MEMO_SCALE)
        hit = memo.get(key)
        if hit is None:
            fresh[0] += 1
            hit = (float(objective(d)), d)
            memo[key] = hit
        return hit[0]

    ev(0.0)

    # global stage: (mu, lambda) evolution strategy, stratified start
    lam = cfg.population
    mu = max(1, lam // 7)
    tau = 0.7
    pos = upper * (np.arange(lam) + rng.random(lam)) / lam
    sig = np.full(lam, upper / 6.0)
    max_generations = cfg.global_budget // lam + 5
    for _ in range(max_generations):
        if fresh[0] >= cfg.global_budget:
            break
        scores = np.array([ev(d) for d in pos])
        elite = np.argsort(scores, kind="stable")[:mu]
        parents = elite[rng.integers(0, mu, lam)]
        sig = sig[parents] * np.exp(tau * rng.standard_normal(lam))
        sig = np.clip(sig, upper * 1e-6, upper)
        pos = np.clip(pos[parents] + sig * rng.standard_normal(lam), 0.0, upper)

    # local stage: two-point Nelder-Mead from the best point seen so far
    best_score, best_d = min(memo.values())
    span = max(upper / 100.0, 1e-3 * upper)
    lo = best_d
    hi = lo + span if lo + span <= upper else lo - span
    f_lo, f_hi = ev(lo), ev(hi)
    for _ in range(cfg.local_max_iter):
        if f_hi < f_lo:
            lo, hi, f_lo, f_hi = hi, lo, f_hi, f_lo
        if abs(f_hi - f_lo) < cfg.local_tol or abs(hi - lo) < 1e-12:
            break
        xr = 2.0 * lo - hi
        fr = ev(xr)
        if fr < f_lo:
            xe = 3.0 * lo - 2.0 * hi
            fe = ev(xe)
            hi, f_hi = (xe, fe) if fe < fr else (xr, fr)
        else:
            xc = 0.5 * (lo + hi)
            fc = ev(xc)
            if fc < f_hi:
                hi, f_hi = xc, fc
            else:
                hi = 0.5 * (lo + hi)
                f_hi = ev(hi)

    score, d = min(memo.values())
    return BandwidthResult(bandwidth=d, score=score, n_evaluations=len(memo))


def bic_objective(
    raw_density: GriddedDensity,
    data,
    penalty: float,
    n_e: float | None = None,
):
    """Objective closure d -> penalized score of the smoothed density.

    The raw density is smoothed at each candidate bandwidth and scored; the
    penalty weight stays fixed across candidates.
    """

    def objective(d: float) -> float:
        smoothed = nw_smooth(raw_density, d)
        return smoothing_bic(smoothed, data, penalty, n_e=n_e).bic_s

    return objective


def profile_bandwidths(raw_density: GriddedDensity, data, penalty: float, bandwidths):
    """Score a fixed set of bandwidths; returns a list of FitReport."""
    out = []
    for d in bandwidths:
        smoothed = nw_smooth(raw_density, float(d))
        out.append(smoothing_bic(smoothed, data, penalty))
    return out


__all__ = [
    "OptimizerConfig",
    "BandwidthResult",
    "optimize_bandwidth",
    "bic_objective",
    "profile_bandwidths",
    "interval_log_likelihood",
]
