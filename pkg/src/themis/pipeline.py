"""End-to-end score computation shared by the CLI and the estimator."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import adapters as ad
from .dataset_io import PAD_REPEAT_LAST, TimeSeries, WindowPlan, plan_windows
from .embedding_store import EmbeddingSequence, reference_embed
from .similarity import BatchPartition, SimilarityMatrix, build_wasm, partition_batches

NORMALIZE_BATCH = "batch"
NORMALIZE_GLOBAL = "global"


@dataclass(frozen=True)
class PipelineConfig:
    adapter: str = "spectral"
    k: int = 15
    knn: int = 10
    alpha: float = 0.05
    top_k: int | None = None
    window: int = 512
    stride: int | None = None
    batch_windows: int = 16
    normalize_scope: str = NORMALIZE_BATCH
    context: int = 32          # reference embedder context length
    embed_dim: int = 64        # reference embedder output dimension
    seed: int = 0

    def adapter_params(self):
        if self.adapter == "spectral":
            return ad.SpectralParams(k=self.k)
        if self.adapter == "lof":
            return ad.LofParams(neighbors=self.knn)
        if self.adapter == "trimmed_topk":
            return ad.TrimmedParams(trim_fraction=self.alpha, top_k=self.top_k)
        if self.adapter == "mean":
            return None
        raise ValueError(f"unknown adapter {self.adapter!r}")

    def params_dict(self) -> dict:
        p = self.adapter_params()
        return {} if p is None else {k: v for k, v in vars(p).items()}


def batch_matrices(embeddings: EmbeddingSequence, plan: WindowPlan,
                   partition: BatchPartition):
    """Yield one SimilarityMatrix per batch, built lazily."""
    row_ts = plan.row_timesteps()
    T = plan.num_timesteps
    for i in range(partition.num_batches):
        sl = partition.row_slice(i)
        ts = row_ts[sl]
        yield build_wasm(embeddings.vectors[sl], batch_index=i,
                         row_timesteps=ts, pad_rows=ts >= T)


def compute_scores(series: TimeSeries, config: PipelineConfig,
                   embeddings: EmbeddingSequence | None = None) -> ad.ScoreSeries:
    """Run windowing, similarity, adapter scoring, normalization, assembly.

    When ``embeddings`` is None the deterministic reference embedder is
    used. Normalization scope "batch" normalizes per similarity matrix
    before assembly; "global" normalizes the assembled raw series once.
    """
    if config.normalize_scope not in (NORMALIZE_BATCH, NORMALIZE_GLOBAL):
        raise ValueError(f"unknown normalize_scope {config.normalize_scope!r}")
    plan = plan_windows(len(series), config.window, config.stride,
                        PAD_REPEAT_LAST)
    if embeddings is None:
        embeddings = reference_embed(series, plan, w=config.context,
                                     d=config.embed_dim, seed=config.seed)
    if embeddings.n != plan.total_rows:
        raise ValueError(
            f"embedding rows ({embeddings.n}) do not match the window plan "
            f"({plan.total_rows} = {plan.num_windows} windows x {plan.window_length})")
    partition = partition_batches(plan, config.batch_windows)
    params = config.adapter_params()
    per_batch = []
    for S in batch_matrices(embeddings, plan, partition):
        raw = ad.score_batch(S, config.adapter, params)
        if config.normalize_scope == NORMALIZE_BATCH:
            raw = ad.normalize_scores(raw)
        per_batch.append(raw)
    result = ad.assemble_series_scores(per_batch, partition, plan,
                                       adapter=config.adapter,
                                       params=config.params_dict())
    if config.normalize_scope == NORMALIZE_GLOBAL:
        result = ad.ScoreSeries(scores=ad.normalize_scores(result.scores),
                                adapter=result.adapter, params=result.params)
    return result
