"""Writer for the THEM embedding interchange format (version 1).

Layout: 24-byte little-endian header (magic "THEM", u32 version, u64 row
count n, u32 dimension d, u8 dtype code 1 = float32, 3 reserved zero
bytes), row-major float32 payload, then a u32-length-prefixed UTF-8
source tag. Writes are atomic: a temp file in the target directory is
renamed into place.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

MAGIC = b"THEM"
VERSION = 1
DTYPE_F32 = 1
HEADER = struct.Struct("<4sIQIB3s")


def write_them(vectors: np.ndarray, source_tag: str, path) -> None:
    """Atomically write an (n, d) float32 matrix as a THEM file."""
    vectors = np.ascontiguousarray(vectors, dtype=np.float32)
    if vectors.ndim != 2 or vectors.shape[0] < 1 or vectors.shape[1] < 1:
        raise ValueError("vectors must be a non-empty (n, d) matrix")
    n, d = vectors.shape
    tag = source_tag.encode("utf-8")
    path = os.fspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".",
                               suffix=".them.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(HEADER.pack(MAGIC, VERSION, n, d, DTYPE_F32, b"\0\0\0"))
            fh.write(vectors.tobytes(order="C"))
            fh.write(struct.pack("<I", len(tag)))
            fh.write(tag)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
