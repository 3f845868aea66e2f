"""Frozen encoder embedding extraction.

Each tumbling window (stride = L, tail padded by repeating the last
value) is value-tokenized, passed through the frozen encoder in
inference mode with an appended end-of-sequence token, and the final
encoder hidden states of the L value-token positions are written
row-major to a THEM file. The EOS position is dropped so token
positions map 1:1 to timesteps; a JSON manifest sidecar documents the
mapping, pad rows, and library versions.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import DeviceUnavailable, InputError, ModelLoadFailure, SeriesTooShort
from .them_format import write_them
from .tokenizer import EOS_TOKEN, TokenizerConfig, tokenize_window

DEFAULT_MODEL = "amazon/chronos-t5-base"
DEFAULT_WINDOW = 512
EXTRACTION_POINT = "encoder-final-hidden-state"


@dataclass(frozen=True)
class ExtractorConfig:
    model: str = DEFAULT_MODEL
    window: int = DEFAULT_WINDOW
    device: str = "cpu"
    channel: int = 0
    batch_size: int = 8

    def __post_init__(self):
        if self.window < 1:
            raise InputError("window must be >= 1")
        if self.channel < 0:
            raise InputError("channel must be >= 0")


def load_series(path, channel: int = 0) -> np.ndarray:
    """Load one channel of a header-first CSV as float64 values."""
    if not os.path.isfile(path):
        raise InputError(f"series file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise InputError(f"{path}: empty file")
    header, data = rows[0], rows[1:]
    if channel >= len(header):
        raise InputError(f"{path}: channel {channel} out of range "
                         f"for {len(header)} columns")
    if not data:
        raise SeriesTooShort(f"{path}: no data rows")
    values = np.empty(len(data), dtype=np.float64)
    for i, row in enumerate(data):
        try:
            values[i] = float(row[channel])
        except (ValueError, IndexError):
            raise InputError(f"{path}: bad value in data row {i}") from None
    if not np.all(np.isfinite(values)):
        raise InputError(f"{path}: non-finite values in channel {channel}")
    return values


def plan_windows(T: int, L: int) -> tuple[int, int]:
    """Tumbling-window plan: (number of windows, pad count)."""
    if T < 1:
        raise SeriesTooShort("series must have at least one point")
    num = math.ceil(T / L)
    return num, num * L - T


def _load_model(config: ExtractorConfig):
    import torch
    from transformers import T5EncoderModel

    try:
        torch.device(config.device)
        if config.device.startswith("cuda") and not torch.cuda.is_available():
            raise DeviceUnavailable("cuda requested but not available")
    except (RuntimeError, ValueError) as exc:
        raise DeviceUnavailable(str(exc)) from exc
    try:
        model = T5EncoderModel.from_pretrained(config.model)
    except Exception as exc:
        raise ModelLoadFailure(f"cannot load {config.model!r}: {exc}") from exc
    model.to(config.device)
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)
    return model


def extract(series_path, out_path,
            config: ExtractorConfig = ExtractorConfig(),
            model=None) -> dict:
    """Extract embeddings for a series into a THEM file plus manifest.

    ``model`` may supply a preloaded encoder (used by tests); otherwise
    the configured checkpoint is loaded. Returns the manifest dict.
    """
    import torch
    import transformers

    values = load_series(series_path, config.channel)
    T = values.size
    L = config.window
    num_windows, pad_count = plan_windows(T, L)
    padded = np.concatenate([values, np.full(pad_count, values[-1])])

    if model is None:
        model = _load_model(config)
    model.eval()
    d = int(model.config.d_model)
    tok_config = TokenizerConfig(vocab_size=int(model.config.vocab_size))

    tokens = np.stack([
        np.append(tokenize_window(padded[i * L:(i + 1) * L], tok_config),
                  EOS_TOKEN)
        for i in range(num_windows)
    ])
    vectors = np.empty((num_windows * L, d), dtype=np.float32)
    with torch.no_grad():
        for start in range(0, num_windows, config.batch_size):
            batch = torch.as_tensor(tokens[start:start + config.batch_size],
                                    device=config.device)
            hidden = model(input_ids=batch,
                           attention_mask=torch.ones_like(batch)
                           ).last_hidden_state
            # drop the trailing EOS position: 1:1 token-to-timestep mapping
            block = hidden[:, :L, :].to("cpu", torch.float32).numpy()
            vectors[start * L:start * L + block.shape[0] * L] = \
                block.reshape(-1, d)

    source_tag = (f"{config.model}|{EXTRACTION_POINT}|eos-dropped"
                  f"|torch={torch.__version__}"
                  f"|transformers={transformers.__version__}")
    write_them(vectors, source_tag, out_path)

    manifest = {
        "model": config.model,
        "extraction_point": EXTRACTION_POINT,
        "token_mapping": "one value token per timestep; trailing EOS "
                         "hidden state dropped",
        "tokenizer": {
            "scale": "mean absolute value per window (1.0 fallback)",
            "clip": tok_config.clip,
            "n_bins": tok_config.n_bins,
            "special_tokens": {"pad": 0, "eos": 1},
        },
        "series": {"path": os.fspath(series_path), "channel": config.channel,
                   "length": T},
        "window": {"length": L, "stride": L, "count": num_windows,
                   "pad_policy": "repeat-last",
                   "pad_rows": pad_count,
                   "pad_row_start": num_windows * L - pad_count},
        "output": {"n": num_windows * L, "d": d, "dtype": "float32"},
        "versions": {"torch": torch.__version__,
                     "transformers": transformers.__version__},
    }
    sidecar = os.fspath(out_path) + ".manifest.json"
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
