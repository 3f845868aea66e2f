"""Mean-scale uniform-bin value tokenization.

Each window is scaled by the mean absolute value of its finite entries
(falling back to 1.0 for all-zero windows), clipped to [-CLIP, CLIP],
and quantized into uniform bins. Token ids 0 and 1 are reserved for the
pad and end-of-sequence special tokens; value tokens start at 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PAD_TOKEN = 0
EOS_TOKEN = 1
N_SPECIAL_TOKENS = 2
DEFAULT_VOCAB_SIZE = 4096
CLIP = 15.0


@dataclass(frozen=True)
class TokenizerConfig:
    vocab_size: int = DEFAULT_VOCAB_SIZE
    clip: float = CLIP

    @property
    def n_bins(self) -> int:
        return self.vocab_size - N_SPECIAL_TOKENS


def mean_scale(values: np.ndarray) -> float:
    """Scale factor: mean |x| of the window, 1.0 when that is zero."""
    scale = float(np.mean(np.abs(values)))
    return scale if scale > 0.0 else 1.0


def tokenize_window(values: np.ndarray,
                    config: TokenizerConfig = TokenizerConfig()) -> np.ndarray:
    """Map one window of raw values to value-token ids (no EOS appended)."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("window must be a non-empty 1-d array")
    if not np.all(np.isfinite(values)):
        raise ValueError("window contains non-finite values")
    scaled = np.clip(values / mean_scale(values), -config.clip, config.clip)
    edges = np.linspace(-config.clip, config.clip, config.n_bins + 1)
    bins = np.clip(np.digitize(scaled, edges[1:-1]), 0, config.n_bins - 1)
    return bins.astype(np.int64) + N_SPECIAL_TOKENS
