"""Scikit-learn style detector wrapping the full pipeline.

The detector treats a univariate series as one sample sequence: X is a
1-d array or a (T, 1) column. ``fit`` computes anomaly scores for the
series and calibrates the SPOT threshold on them; ``predict`` scores a
series and applies the fitted threshold. Unlike sklearn's outlier
convention, ``score_samples`` returns anomaly scores in [0, 1] where
higher means more anomalous, and ``predict`` returns 0/1 labels.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .dataset_io import TimeSeries
from .pipeline import PipelineConfig, compute_scores
from .thresholding import apply_threshold, spot_threshold


def _as_series(X) -> TimeSeries:
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ValueError("X must be a 1-d series or a (T, 1) column")
    return TimeSeries(values=arr)


class ThemisDetector(BaseEstimator):
    """Embedding self-similarity anomaly detector with SPOT thresholding.

    Parameters mirror the CLI flags; see :class:`themis.pipeline.PipelineConfig`.
    """

    def __init__(self, adapter="spectral", k=15, knn=10, alpha=0.05,
                 top_k=None, window=512, stride=None, batch_windows=16,
                 normalize_scope="batch", context=32, embed_dim=64,
                 spot_q=1e-3, spot_init=0.98, seed=0):
        self.adapter = adapter
        self.k = k
        self.knn = knn
        self.alpha = alpha
        self.top_k = top_k
        self.window = window
        self.stride = stride
        self.batch_windows = batch_windows
        self.normalize_scope = normalize_scope
        self.context = context
        self.embed_dim = embed_dim
        self.spot_q = spot_q
        self.spot_init = spot_init
        self.seed = seed

    def _config(self) -> PipelineConfig:
        return PipelineConfig(
            adapter=self.adapter, k=self.k, knn=self.knn, alpha=self.alpha,
            top_k=self.top_k, window=self.window, stride=self.stride,
            batch_windows=self.batch_windows,
            normalize_scope=self.normalize_scope, context=self.context,
            embed_dim=self.embed_dim, seed=self.seed)

    def fit(self, X, y=None):
        """Score the series and calibrate the SPOT threshold on it."""
        series = _as_series(X)
        result = compute_scores(series, self._config())
        self.scores_ = result.scores
        self.decision_ = spot_threshold(result.scores, q=self.spot_q,
                                        init_level=self.spot_init)
        self.threshold_ = self.decision_.delta
        self.labels_ = apply_threshold(result.scores, self.decision_)
        return self

    def score_samples(self, X) -> np.ndarray:
        """Anomaly scores in [0, 1]; higher means more anomalous."""
        return compute_scores(_as_series(X), self._config()).scores

    def predict(self, X) -> np.ndarray:
        """0/1 anomaly labels using the fitted threshold."""
        if not hasattr(self, "decision_"):
            raise RuntimeError("call fit before predict")
        return apply_threshold(self.score_samples(X), self.decision_)

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).labels_
