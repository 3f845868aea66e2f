"""Binary embedding interchange format ("THEM") and a reference embedder.

File layout, little-endian throughout:

====== ======= ==========================================
offset size    field
====== ======= ==========================================
0      4       magic, ASCII ``THEM``
4      4       version (u32), currently 1
8      8       n, number of rows (u64)
16     4       d, embedding dimension (u32)
20     1       dtype code (u8), 1 = float32 IEEE-754 LE
21     3       reserved, zero
24     n*d*4   payload, row-major float32
...    4+len   source tag: u32 byte length + UTF-8 bytes
====== ======= ==========================================

Payloads are stored as float32; all downstream accumulation happens in
float64. The layout must never change shape within version 1: it is the
interchange contract between this package and external embedding
extractors.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .dataset_io import TimeSeries, WindowPlan
from .errors import (
    BadMagic,
    DimensionOverflow,
    MissingFile,
    TruncatedPayload,
    UnsupportedDtype,
    UnsupportedVersion,
)

MAGIC = b"THEM"
VERSION = 1
DTYPE_FLOAT32 = 1
_HEADER = struct.Struct("<4sIQIB3s")
HEADER_SIZE = _HEADER.size  # 24

_MAX_PAYLOAD = 2**63 - 1


@dataclass(frozen=True)
class EmbeddingSequence:
    """One d-dimensional vector per embedding row (windows x L rows)."""

    vectors: np.ndarray  # (n, d) float32
    source_tag: str = ""

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.float32)
        if vectors.ndim != 2 or vectors.shape[0] < 1 or vectors.shape[1] < 1:
            raise ValueError("vectors must be a non-empty (n, d) matrix")
        if not np.all(np.isfinite(vectors)):
            raise ValueError("embedding vectors must be finite")
        object.__setattr__(self, "vectors", vectors)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def write_embeddings(seq: EmbeddingSequence, path) -> None:
    """Write ``seq`` in the THEM format described in the module docstring."""
    n, d = seq.vectors.shape
    if n * d * 4 > _MAX_PAYLOAD:
        raise DimensionOverflow(f"payload of {n}x{d} floats exceeds addressable size")
    tag = seq.source_tag.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, d, DTYPE_FLOAT32, b"\x00\x00\x00"))
        fh.write(np.ascontiguousarray(seq.vectors, dtype="<f4").tobytes())
        fh.write(struct.pack("<I", len(tag)))
        fh.write(tag)


def read_embeddings(path) -> EmbeddingSequence:
    """Exact inverse of :func:`write_embeddings`."""
    if not os.path.isfile(path):
        raise MissingFile(str(path))
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < HEADER_SIZE:
        raise TruncatedPayload(f"{path}: shorter than the 24-byte header")
    magic, version, n, d, dtype_code, _ = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise BadMagic(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise UnsupportedVersion(f"{path}: version {version}")
    if dtype_code != DTYPE_FLOAT32:
        raise UnsupportedDtype(f"{path}: dtype code {dtype_code}")
    payload_bytes = n * d * 4
    if len(raw) < HEADER_SIZE + payload_bytes:
        raise TruncatedPayload(
            f"{path}: header claims {n}x{d} rows but payload is short")
    vectors = np.frombuffer(
        raw, dtype="<f4", count=n * d, offset=HEADER_SIZE).reshape(n, d)
    tag = ""
    trailer_at = HEADER_SIZE + payload_bytes
    if len(raw) >= trailer_at + 4:
        (tag_len,) = struct.unpack_from("<I", raw, trailer_at)
        tag_bytes = raw[trailer_at + 4: trailer_at + 4 + tag_len]
        if len(tag_bytes) < tag_len:
            raise TruncatedPayload(f"{path}: source tag truncated")
        tag = tag_bytes.decode("utf-8")
    return EmbeddingSequence(vectors=vectors.copy(), source_tag=tag)


def reference_embed(series: TimeSeries, plan: WindowPlan, w: int = 32,
                    d: int = 64, seed: int = 0) -> EmbeddingSequence:
    """Deterministic random-projection embedder (encoder stand-in).

    For each embedding row (timestep, pads included) the local context
    ``(x[t-w+1], ..., x[t])`` is taken (repeating the first observation at
    the series head and the last at the padded tail), z-normalized per
    context with a std floor of 1e-8, then projected to ``d`` dimensions
    by a fixed ``w x d`` matrix with N(0, 1/w) entries.

    The projection matrix is drawn from numpy's Philox counter-based
    generator keyed with ``seed`` (``np.random.Generator(np.random.Philox
    (key=seed))``), so output is bit-reproducible across platforms. Within
    one context, scale and shift of the raw series cancel, so
    ``embed(a*x + b) == embed(x)`` for a > 0 whenever no context std falls
    below the floor; constant contexts map to the zero vector.
    """
    if w < 1 or d < 1:
        raise ValueError("w and d must be >= 1")
    x = series.values
    T = x.size
    row_ts = plan.row_timesteps()
    clamped = np.minimum(row_ts, T - 1)
    ext = np.concatenate([np.full(w - 1, x[0]), x])
    contexts = np.lib.stride_tricks.sliding_window_view(ext, w)[clamped]
    contexts = contexts.astype(np.float64)

    centered = contexts - contexts.mean(axis=1, keepdims=True)
    std = contexts.std(axis=1, keepdims=True)
    normed = centered / np.maximum(std, 1e-8)

    rng = np.random.Generator(np.random.Philox(key=seed))
    projection = rng.normal(0.0, 1.0 / np.sqrt(w), size=(w, d))
    vectors = (normed @ projection).astype(np.float32)
    tag = f"reference-rp:w={w},d={d},seed={seed},prng=philox"
    return EmbeddingSequence(vectors=vectors, source_tag=tag)
