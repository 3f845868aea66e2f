"""Loading of univariate series / binary labels and window planning.

On-disk formats:

- series CSV: UTF-8, header row, comma separated, decimal floats; ``channel``
  selects a column for multivariate files.
- NAB CSV: ``timestamp,value`` columns; the timestamp is ignored.
- label CSV: single column of 0/1 integers, optional ``label`` header.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadHeader,
    ChannelOutOfRange,
    MissingFile,
    NonBinaryLabel,
    NonFiniteValue,
)

PAD_REPEAT_LAST = "pad_repeat_last"
TRUNCATE = "truncate"


@dataclass(frozen=True)
class TimeSeries:
    """Univariate observations x_1..x_T, all finite."""

    values: np.ndarray
    name: str = "series"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size < 1:
            raise ValueError("TimeSeries requires a 1-d array with T >= 1")
        if not np.all(np.isfinite(values)):
            row = int(np.flatnonzero(~np.isfinite(values))[0])
            raise NonFiniteValue(row)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class LabelSeries:
    """Binary per-timestep labels, same length as the paired series."""

    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or labels.size < 1:
            raise ValueError("LabelSeries requires a 1-d array")
        bad = ~np.isin(labels, (0, 1))
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise NonBinaryLabel(row, labels[row])
        object.__setattr__(self, "labels", labels.astype(np.int8))

    def __len__(self) -> int:
        return self.labels.size


@dataclass(frozen=True)
class WindowPlan:
    """Fixed-length windows over [0, T).

    With the default stride = L the windows tile the series and the final
    window is conceptually padded by repeating the last observation; padded
    positions are recorded so downstream scores for them are discarded.
    """

    window_length: int
    stride: int
    num_timesteps: int
    window_starts: np.ndarray
    tail_policy: str = PAD_REPEAT_LAST

    @property
    def num_windows(self) -> int:
        return self.window_starts.size

    @property
    def total_rows(self) -> int:
        """Embedding rows produced by this plan (windows x L)."""
        return self.num_windows * self.window_length

    def row_timesteps(self) -> np.ndarray:
        """Timestep index of each embedding row, in row order (pads >= T)."""
        offsets = np.arange(self.window_length)
        return (self.window_starts[:, None] + offsets[None, :]).ravel()

    def pad_count(self) -> int:
        return int(np.sum(self.row_timesteps() >= self.num_timesteps))


def plan_windows(T: int, L: int, stride: int | None = None,
                 tail_policy: str = PAD_REPEAT_LAST) -> WindowPlan:
    """Plan window start indices covering [0, T).

    Pure and deterministic. ``stride`` defaults to L (tumbling windows) so
    each timestep is owned by exactly one window.
    """
    if T < 1 or L < 1:
        raise ValueError("T and L must be >= 1")
    stride = L if stride is None else int(stride)
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if tail_policy not in (PAD_REPEAT_LAST, TRUNCATE):
        raise ValueError(f"unknown tail_policy {tail_policy!r}")
    starts = np.arange(0, T, stride, dtype=np.int64)
    return WindowPlan(window_length=int(L), stride=stride, num_timesteps=int(T),
                      window_starts=starts, tail_policy=tail_policy)


def _read_rows(path) -> list[list[str]]:
    if not os.path.isfile(path):
        raise MissingFile(str(path))
    with open(path, newline="", encoding="utf-8") as fh:
        return [row for row in csv.reader(fh) if row]


def _looks_numeric(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_series(path, channel: int = 0, format: str = "csv") -> TimeSeries:
    """Load one channel of a CSV (or NAB timestamp,value CSV) as a TimeSeries.

    Non-finite cells raise :class:`NonFiniteValue` with the offending data
    row index; they are never silently imputed.
    """
    rows = _read_rows(path)
    if not rows:
        raise BadHeader(f"{path}: empty file")
    header = rows[0]
    if format == "nab_csv":
        lowered = [c.strip().lower() for c in header]
        if "value" not in lowered:
            raise BadHeader(f"{path}: NAB file needs a 'value' column")
        col = lowered.index("value")
        data = rows[1:]
    elif format == "csv":
        if all(_looks_numeric(c) for c in header):
            raise BadHeader(f"{path}: first row looks numeric; a header row is required")
        if channel < 0 or channel >= len(header):
            raise ChannelOutOfRange(
                f"{path}: channel {channel} out of range for {len(header)} columns")
        col = channel
        data = rows[1:]
    else:
        raise ValueError(f"unknown format {format!r}")

    values = np.empty(len(data), dtype=np.float64)
    for i, row in enumerate(data):
        if col >= len(row):
            raise ChannelOutOfRange(f"{path}: row {i} has only {len(row)} columns")
        cell = row[col].strip()
        try:
            v = float(cell)
        except ValueError:
            raise NonFiniteValue(i, cell) from None
        if not math.isfinite(v):
            raise NonFiniteValue(i, cell)
        values[i] = v
    if values.size == 0:
        raise BadHeader(f"{path}: no data rows")
    name = os.path.splitext(os.path.basename(str(path)))[0]
    return TimeSeries(values=values, name=name)


def load_labels(path) -> LabelSeries:
    """Load a single-column 0/1 file (optional 'label' header)."""
    rows = _read_rows(path)
    if not rows:
        raise MissingFile(f"{path}: empty label file")
    data = rows
    if rows and not _looks_numeric(rows[0][0]):
        data = rows[1:]
    labels = np.empty(len(data), dtype=np.int64)
    for i, row in enumerate(data):
        cell = row[0].strip()
        try:
            v = float(cell)
        except ValueError:
            raise NonBinaryLabel(i, cell) from None
        if v not in (0.0, 1.0):
            raise NonBinaryLabel(i, cell)
        labels[i] = int(v)
    return LabelSeries(labels=labels)


def save_series(series: TimeSeries, path) -> None:
    """Write a TimeSeries to CSV; reloading yields bitwise-equal values."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value"])
        for v in series.values:
            writer.writerow([repr(float(v))])


def save_labels(labels: LabelSeries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label"])
        for v in labels.labels:
            writer.writerow([int(v)])
