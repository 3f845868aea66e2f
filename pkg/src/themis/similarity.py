"""Batch partitioning and the windowed absolute similarity matrix.

Each batch of B consecutive windows contributes one m x m matrix
(m <= B*L) of absolute cosine similarities between its embedding rows.
One batch is materialized at a time; dot products and norms are
accumulated in float64. On-disk dumps use the float32 THEM format.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset_io import WindowPlan
from .errors import DegenerateBatch

ZERO_NORM_EPS = 1e-12


@dataclass(frozen=True)
class BatchPartition:
    """Non-overlapping, consecutive window ranges covering all windows."""

    batch_size: int
    window_ranges: tuple  # ((start_window, end_window), ...) half-open
    window_length: int

    @property
    def num_batches(self) -> int:
        return len(self.window_ranges)

    def row_slice(self, batch_index: int) -> slice:
        """Embedding-row slice for one batch."""
        w0, w1 = self.window_ranges[batch_index]
        L = self.window_length
        return slice(w0 * L, w1 * L)


def partition_batches(plan: WindowPlan, B: int) -> BatchPartition:
    """Split the plan's windows into ceil(num_windows / B) batches.

    The final batch may hold fewer than B windows.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    n = plan.num_windows
    ranges = tuple((w0, min(w0 + B, n)) for w0 in range(0, n, B))
    return BatchPartition(batch_size=int(B), window_ranges=ranges,
                          window_length=plan.window_length)


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric matrix of absolute cosine similarities for one batch.

    ``zero_rows`` flags embedding rows with L2 norm below 1e-12; their
    off-diagonal similarity is defined as 0 (no directional information)
    and adapters exclude them from scoring.
    """

    entries: np.ndarray          # (m, m) float64, values in [0, 1]
    batch_index: int = 0
    row_timesteps: np.ndarray | None = None  # original timestep per row
    pad_rows: np.ndarray | None = None       # bool, True for padded rows
    zero_rows: np.ndarray = field(default=None)

    def __post_init__(self):
        entries = np.asarray(self.entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("entries must be square")
        object.__setattr__(self, "entries", entries)
        if self.zero_rows is None:
            object.__setattr__(self, "zero_rows",
                               np.zeros(entries.shape[0], dtype=bool))

    @property
    def m(self) -> int:
        return self.entries.shape[0]


def build_wasm(batch_embeddings: np.ndarray, batch_index: int = 0,
               row_timesteps: np.ndarray | None = None,
               pad_rows: np.ndarray | None = None) -> SimilarityMatrix:
    """Absolute cosine similarity matrix for one batch of embeddings.

    ``S[i, j] = |<z_i, z_j>| / (||z_i|| * ||z_j||)`` computed in float64,
    clamped to [0, 1], exactly symmetric (upper triangle mirrored), with a
    unit diagonal. Zero-norm rows get off-diagonal 0 and are flagged.
    """
    Z = np.asarray(batch_embeddings, dtype=np.float64)
    if Z.ndim != 2:
        raise ValueError("batch embeddings must be a (m, d) matrix")
    m = Z.shape[0]
    if m < 2:
        raise DegenerateBatch(f"batch has {m} rows; need at least 2")

    norms = np.linalg.norm(Z, axis=1)
    zero = norms < ZERO_NORM_EPS
    safe = np.where(zero, 1.0, norms)
    N = Z / safe[:, None]
    G = N @ N.T
    # mirror the upper triangle so S is exactly symmetric regardless of
    # BLAS rounding
    upper = np.triu(G, 1)
    S = upper + upper.T
    np.abs(S, out=S)
    np.clip(S, 0.0, 1.0, out=S)
    S[zero, :] = 0.0
    S[:, zero] = 0.0
    np.fill_diagonal(S, 1.0)
    return SimilarityMatrix(entries=S,
                            batch_index=batch_index,
                            row_timesteps=row_timesteps,
                            pad_rows=pad_rows,
                            zero_rows=zero)
