"""Adaptive thresholding via peaks-over-threshold with a GPD tail fit.

The batch variant is used: the tail is fitted once over the full score
series (or a separate calibration series), then the risk-q threshold

    delta = t0 + (sigma/gamma) * ((q*n/N_t)^(-gamma) - 1)      (gamma != 0)
    delta = t0 - sigma * ln(q*n/N_t)                            (gamma  = 0)

is applied to the scores. ``t0`` is the empirical init-level quantile,
``N_t`` the number of exceedances over ``t0``, ``n`` the calibration
sample size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import TooFewPeaks

DEFAULT_RISK = 1e-3
DEFAULT_INIT_LEVEL = 0.98
MIN_PEAKS = 8
_GAMMA_ZERO_TOL = 1e-6
_ROOT_TOL = 1e-10
_ROOT_MAXITER = 200


@dataclass(frozen=True)
class GpdFit:
    """Generalized Pareto fit of the exceedances over t0."""

    shape: float            # gamma
    scale: float            # sigma > 0
    peak_count: int
    initial_threshold: float
    log_likelihood: float = float("nan")


@dataclass(frozen=True)
class ThresholdDecision:
    delta: float
    risk: float
    method: str = "spot"
    init_level: float = DEFAULT_INIT_LEVEL
    fit: GpdFit | None = None
    sample_size: int = 0

    def report(self) -> dict:
        return {
            "delta": self.delta,
            "q": self.risk,
            "init_level": self.init_level,
            "gamma": self.fit.shape if self.fit else None,
            "sigma": self.fit.scale if self.fit else None,
            "n": self.sample_size,
            "peak_count": self.fit.peak_count if self.fit else 0,
        }


def gpd_log_likelihood(peaks: np.ndarray, gamma: float, sigma: float) -> float:
    """GPD log-likelihood of positive exceedances."""
    n = peaks.size
    if sigma <= 0:
        return -np.inf
    if abs(gamma) < 1e-15:
        return -n * math.log(sigma) - peaks.sum() / sigma
    z = 1.0 + gamma * peaks / sigma
    if np.any(z <= 0):
        return -np.inf
    return -n * math.log(sigma) - (1.0 + 1.0 / gamma) * np.log(z).sum()


def _grimshaw_h(x: float, peaks: np.ndarray) -> float:
    z = 1.0 + x * peaks
    u = np.mean(1.0 / z)
    v = np.mean(np.log(z))
    return u * (1.0 + v) - 1.0


def _params_from_root(x: float, peaks: np.ndarray) -> tuple[float, float]:
    gamma = float(np.mean(np.log1p(x * peaks)))
    return gamma, gamma / x


def fit_gpd(peaks) -> GpdFit:
    """Maximum-likelihood GPD fit via Grimshaw's one-dimensional reduction.

    Roots of the reduced equation are bracketed on grids below and above
    zero (the likelihood can be multimodal); the candidate maximizing the
    log-likelihood wins. When no valid root beats it, the exponential
    fit (gamma = 0, sigma = mean of peaks) is returned.
    """
    peaks = np.asarray(peaks, dtype=np.float64)
    if peaks.size < MIN_PEAKS:
        raise TooFewPeaks(f"{peaks.size} peaks; need at least {MIN_PEAKS}")
    if np.any(peaks <= 0):
        raise ValueError("peaks must be positive exceedances")

    y_max = peaks.max()
    y_min = peaks.min()
    y_mean = peaks.mean()

    # exponential baseline (GPD limit gamma -> 0)
    best_gamma, best_sigma = 0.0, float(y_mean)
    best_ll = gpd_log_likelihood(peaks, best_gamma, best_sigma)

    eps = 1e-8 / y_max
    lo_bound = -1.0 / y_max + eps
    hi_bound = 2.0 * (y_mean - y_min) / (y_min * y_min) + eps

    # x = 0 is a trivial root of the reduced equation (the exponential
    # baseline already covers it); roots this close to zero are dropped.
    zero_tol = 1e-7 / y_mean

    grids = []
    if lo_bound < -eps:
        grids.append(np.linspace(lo_bound, -eps, 60))
    if hi_bound > eps:
        # the upper bound can be many orders of magnitude above the root,
        # so the positive side is bracketed on a log-spaced grid
        grids.append(np.geomspace(eps, hi_bound, 120))

    candidates = []
    for grid in grids:
        h = np.array([_grimshaw_h(x, peaks) for x in grid])
        for i in range(grid.size - 1):
            if np.isfinite(h[i]) and np.isfinite(h[i + 1]) and h[i] * h[i + 1] < 0:
                try:
                    root = brentq(_grimshaw_h, grid[i], grid[i + 1],
                                  args=(peaks,), xtol=_ROOT_TOL,
                                  maxiter=_ROOT_MAXITER)
                except (ValueError, RuntimeError):
                    continue
                if abs(root) > zero_tol:
                    candidates.append(root)

    for x in candidates:
        gamma, sigma = _params_from_root(x, peaks)
        if sigma <= 0:
            continue
        ll = gpd_log_likelihood(peaks, gamma, sigma)
        if ll > best_ll:
            best_gamma, best_sigma, best_ll = gamma, sigma, ll

    return GpdFit(shape=float(best_gamma), scale=float(best_sigma),
                  peak_count=int(peaks.size), initial_threshold=float("nan"),
                  log_likelihood=float(best_ll))


def spot_threshold(scores, q: float = DEFAULT_RISK,
                   init_level: float = DEFAULT_INIT_LEVEL,
                   calibration=None) -> ThresholdDecision:
    """Derive the SPOT threshold for a score series.

    ``calibration`` supplies a separate score series to fit on (validation
    split); by default the fit is done on ``scores`` itself. If no score
    exceeds t0 the decision degrades to delta = t0. The threshold is
    clamped into [t0, max score + sigma].
    """
    scores = np.asarray(getattr(scores, "scores", scores), dtype=np.float64)
    cal = scores if calibration is None else np.asarray(
        getattr(calibration, "scores", calibration), dtype=np.float64)
    if cal.size == 0 or scores.size == 0:
        raise ValueError("scores must be nonempty")
    if not 0.0 < q < 1.0:
        raise ValueError("q must be in (0, 1)")
    if not 0.0 < init_level < 1.0:
        raise ValueError("init_level must be in (0, 1)")

    t0 = float(np.quantile(cal, init_level))
    peaks = cal[cal > t0] - t0
    n = cal.size
    if peaks.size == 0:
        return ThresholdDecision(delta=t0, risk=q, init_level=init_level,
                                 fit=None, sample_size=n)
    fit = fit_gpd(peaks) if peaks.size >= MIN_PEAKS else GpdFit(
        shape=0.0, scale=float(peaks.mean()), peak_count=int(peaks.size),
        initial_threshold=t0)
    fit = GpdFit(shape=fit.shape, scale=fit.scale, peak_count=fit.peak_count,
                 initial_threshold=t0, log_likelihood=fit.log_likelihood)

    ratio = q * n / fit.peak_count
    if abs(fit.shape) > _GAMMA_ZERO_TOL:
        delta = t0 + (fit.scale / fit.shape) * (ratio ** (-fit.shape) - 1.0)
    else:
        delta = t0 - fit.scale * math.log(ratio)
    delta = min(delta, float(cal.max()) + fit.scale)
    delta = max(delta, t0)
    return ThresholdDecision(delta=float(delta), risk=q, init_level=init_level,
                             fit=fit, sample_size=n)


def apply_threshold(scores, decision: ThresholdDecision) -> np.ndarray:
    """Binary predictions: 1 iff score strictly exceeds delta."""
    values = np.asarray(getattr(scores, "scores", scores), dtype=np.float64)
    return (values > decision.delta).astype(np.int8)
