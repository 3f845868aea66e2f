"""Model-agnostic time series anomaly detection.

Pipeline: series loading -> windowing -> embeddings (external file or the
built-in reference embedder) -> per-batch absolute cosine similarity
matrices -> scoring adapters -> min-max normalization -> SPOT adaptive
thresholding -> affiliation-based evaluation.
"""

__version__ = "0.1.0"

from .adapters import (
    LofParams,
    ScoreSeries,
    SpectralParams,
    TrimmedParams,
    assemble_series_scores,
    lof_score,
    mean_similarity_score,
    normalize_scores,
    spectral_residual_score,
    trimmed_topk_score,
)
from .dataset_io import (
    LabelSeries,
    TimeSeries,
    WindowPlan,
    load_labels,
    load_series,
    plan_windows,
)
from .embedding_store import (
    EmbeddingSequence,
    read_embeddings,
    reference_embed,
    write_embeddings,
)
from .estimator import ThemisDetector
from .evaluation import (
    AffiliationReport,
    EventList,
    affiliation_metrics,
    summarize,
    to_events,
)
from .pipeline import PipelineConfig, compute_scores
from .similarity import BatchPartition, SimilarityMatrix, build_wasm, partition_batches
from .thresholding import (
    GpdFit,
    ThresholdDecision,
    apply_threshold,
    fit_gpd,
    spot_threshold,
)

__all__ = [
    "AffiliationReport", "BatchPartition", "EmbeddingSequence", "EventList",
    "GpdFit", "LabelSeries", "LofParams", "PipelineConfig", "ScoreSeries",
    "SimilarityMatrix", "SpectralParams", "ThemisDetector",
    "ThresholdDecision", "TimeSeries", "TrimmedParams", "WindowPlan",
    "affiliation_metrics", "apply_threshold", "assemble_series_scores",
    "build_wasm", "compute_scores", "fit_gpd", "load_labels", "load_series",
    "lof_score", "mean_similarity_score", "normalize_scores",
    "partition_batches", "plan_windows", "read_embeddings",
    "reference_embed", "spectral_residual_score", "spot_threshold",
    "summarize", "to_events", "trimmed_topk_score", "write_embeddings",
]
