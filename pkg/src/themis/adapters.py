"""Anomaly score adapters over a similarity matrix.

Four adapters map an m x m similarity matrix to one raw score per row:

- ``spectral``: 1 minus the normalized row norm of the top-k eigenvector
  embedding; rows misaligned with the dominant subspace score high.
- ``lof``: local outlier factor on the distance matrix max(S) - S.
- ``mean``: 1 minus the mean off-diagonal similarity.
- ``trimmed_topk``: 1 minus the mean of the top-k off-diagonal
  similarities after symmetric fraction-alpha trimming.

Rows flagged as zero-norm carry no directional information; every adapter
excludes them and assigns them a raw score of 0. Raw scores are min-max
normalized (per batch by default) and mapped back to timesteps by
:func:`assemble_series_scores`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset_io import WindowPlan
from .errors import (
    EigensolveFailure,
    PartitionMismatch,
    TooFewPoints,
    TrimExhaustsData,
)
from .similarity import BatchPartition, SimilarityMatrix

NORMALIZE_EPS = 1e-9
DEGENERATE_NORM_EPS = 1e-12

ADAPTER_NAMES = ("spectral", "lof", "mean", "trimmed_topk")


@dataclass(frozen=True)
class SpectralParams:
    """Number of top eigenvectors retained for the spectral embedding."""

    k: int = 15


@dataclass(frozen=True)
class LofParams:
    neighbors: int = 10


@dataclass(frozen=True)
class TrimmedParams:
    """Fraction trimmed from both ends, and top-k count (None = ceil(0.1 n))."""

    trim_fraction: float = 0.05
    top_k: int | None = None


@dataclass(frozen=True)
class ScoreSeries:
    """Per-timestep scores, length T, pads dropped."""

    scores: np.ndarray
    adapter: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "scores",
                           np.asarray(self.scores, dtype=np.float64))

    def __len__(self) -> int:
        return self.scores.size


def _active_submatrix(S: SimilarityMatrix) -> tuple[np.ndarray, np.ndarray]:
    active = ~S.zero_rows
    sub = np.asarray(S.entries, dtype=np.float64)[np.ix_(active, active)]
    return sub, active


def _scatter(values: np.ndarray, active: np.ndarray) -> np.ndarray:
    out = np.zeros(active.size, dtype=np.float64)
    out[active] = values
    return out


def spectral_residual_score(S: SimilarityMatrix,
                            params: SpectralParams = SpectralParams()) -> np.ndarray:
    """Spectral residual scores: s_t = 1 - ||e_t|| / max_j ||e_j||.

    ``e_t`` is row t of the eigenvalue-weighted embedding built from the
    k largest-eigenvalue eigenpairs of the full symmetric
    eigendecomposition (float64): column i of the embedding is the
    eigenvector scaled by its eigenvalue (negative eigenvalues clamp to
    0). Rows aligned with the dominant eigenvectors get large norms and
    low scores; weighting by eigenvalue keeps a decoupled outlier row
    from ranking as well-embedded just because it owns a minor
    eigenvector. If every row norm is below 1e-12 all scores are 0.
    """
    sub, active = _active_submatrix(S)
    m = sub.shape[0]
    if m == 0:
        return np.zeros(S.m)
    k = min(params.k, m)
    if k < 1:
        raise ValueError("k must be >= 1")
    try:
        lam, Q = np.linalg.eigh(sub)
    except np.linalg.LinAlgError as exc:
        raise EigensolveFailure(str(exc)) from exc
    E = Q[:, m - k:] * np.clip(lam[m - k:], 0.0, None)
    norms = np.linalg.norm(E, axis=1)
    mx = norms.max()
    if mx < DEGENERATE_NORM_EPS:
        scores = np.zeros(m)
    else:
        scores = 1.0 - norms / mx
    return _scatter(scores, active)


def _knn_order(D: np.ndarray, k: int) -> np.ndarray:
    """First k neighbors per row under (distance, index) ordering, self excluded."""
    D = D.copy()
    np.fill_diagonal(D, np.inf)
    order = np.argsort(D, axis=1, kind="stable")
    return order[:, :k]


def lof_score(S: SimilarityMatrix,
              params: LofParams = LofParams()) -> np.ndarray:
    """Raw local outlier factors on distances D_ij = max(S) - S_ij.

    Neighbor ties at the k-dist boundary are broken by lower index (only
    the first k by index are included, never all ties). Rows at zero
    reachability (duplicates) get infinite density; a point whose own and
    neighbor densities are all infinite scores 1.
    """
    sub, active = _active_submatrix(S)
    m = sub.shape[0]
    k = params.neighbors
    if k < 1:
        raise ValueError("neighbors must be >= 1")
    if m < k + 1:
        raise TooFewPoints(f"{m} active points; need at least {k + 1}")
    D = np.max(sub) - sub
    np.fill_diagonal(D, 0.0)
    nbrs = _knn_order(D, k)
    rows = np.arange(m)[:, None]
    kdist = D[rows, nbrs][:, -1]
    reach = np.maximum(D[rows, nbrs], kdist[nbrs])  # reach dist to each neighbor
    mean_reach = reach.mean(axis=1)
    with np.errstate(divide="ignore"):
        lrd = np.where(mean_reach > 0.0, 1.0 / mean_reach, np.inf)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratios = lrd[nbrs] / lrd[:, None]
    ratios = np.where(np.isnan(ratios), 1.0, ratios)  # inf/inf: same density
    scores = ratios.mean(axis=1)
    return _scatter(scores, active)


def _row_mean_offdiag(sub: np.ndarray) -> np.ndarray:
    m = sub.shape[0]
    return (sub.sum(axis=1) - np.diag(sub)) / (m - 1)


def mean_similarity_score(S: SimilarityMatrix) -> np.ndarray:
    """s_t = 1 - mean of off-diagonal similarities of row t."""
    sub, active = _active_submatrix(S)
    if sub.shape[0] < 2:
        raise TooFewPoints("mean adapter needs at least 2 active points")
    return _scatter(1.0 - _row_mean_offdiag(sub), active)


def trimmed_topk_score(S: SimilarityMatrix,
                       params: TrimmedParams = TrimmedParams()) -> np.ndarray:
    """Trimmed top-k similarity mean scores.

    Per row: sort the n = m-1 off-diagonal similarities ascending, drop
    floor(alpha*n) from each end, then average the top_k largest remaining
    values t_t; the score is 1 - t_t. With alpha = 0 and top_k = n this is
    exactly the mean adapter.
    """
    sub, active = _active_submatrix(S)
    m = sub.shape[0]
    if m < 2:
        raise TooFewPoints("trimmed adapter needs at least 2 active points")
    alpha = params.trim_fraction
    if not 0.0 <= alpha < 0.5:
        raise ValueError("trim_fraction must be in [0, 0.5)")
    n = m - 1
    cut = math.floor(alpha * n)
    top_k = params.top_k if params.top_k is not None else math.ceil(0.1 * n)
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    if n - 2 * cut < top_k:
        raise TrimExhaustsData(
            f"trimming {cut} from each end of {n} leaves fewer than {top_k} values")
    if cut == 0 and top_k == n:
        return _scatter(1.0 - _row_mean_offdiag(sub), active)

    offdiag = sub[~np.eye(m, dtype=bool)].reshape(m, n)
    ordered = np.sort(offdiag, axis=1)
    kept = ordered[:, cut: n - cut]
    t = kept[:, -top_k:].mean(axis=1)
    return _scatter(1.0 - t, active)


def normalize_scores(raw: np.ndarray) -> np.ndarray:
    """Min-max normalize: (s - min) / (max - min + 1e-9); outputs in [0, 1)."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.size == 0:
        raise ValueError("cannot normalize an empty score array")
    lo = raw.min()
    hi = raw.max()
    return (raw - lo) / (hi - lo + NORMALIZE_EPS)


def score_batch(S: SimilarityMatrix, adapter: str, params=None) -> np.ndarray:
    """Dispatch one batch matrix to the named adapter, returning raw scores."""
    if adapter == "spectral":
        return spectral_residual_score(S, params or SpectralParams())
    if adapter == "lof":
        return lof_score(S, params or LofParams())
    if adapter == "mean":
        return mean_similarity_score(S)
    if adapter == "trimmed_topk":
        return trimmed_topk_score(S, params or TrimmedParams())
    raise ValueError(f"unknown adapter {adapter!r}")


def assemble_series_scores(batch_scores, partition: BatchPartition,
                           plan: WindowPlan, adapter: str = "",
                           params: dict | None = None) -> ScoreSeries:
    """Map per-batch row scores back to a length-T score series.

    Pad-position scores are dropped. With overlapping windows
    (stride < L) a timestep covered by several rows receives the
    arithmetic mean of its scores.
    """
    if len(batch_scores) != partition.num_batches:
        raise PartitionMismatch(
            f"{len(batch_scores)} score blocks for {partition.num_batches} batches")
    T = plan.num_timesteps
    row_ts = plan.row_timesteps()
    sums = np.zeros(T, dtype=np.float64)
    counts = np.zeros(T, dtype=np.int64)
    for i, scores in enumerate(batch_scores):
        scores = np.asarray(scores, dtype=np.float64)
        sl = partition.row_slice(i)
        ts = row_ts[sl]
        if scores.size != ts.size:
            raise PartitionMismatch(
                f"batch {i}: {scores.size} scores for {ts.size} rows")
        valid = ts < T
        np.add.at(sums, ts[valid], scores[valid])
        np.add.at(counts, ts[valid], 1)
    if np.any(counts == 0):
        raise PartitionMismatch("some timesteps received no score")
    return ScoreSeries(scores=sums / counts, adapter=adapter,
                       params=dict(params or {}))
