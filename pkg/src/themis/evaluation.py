"""Affiliation-based precision/recall/F1 between event lists.

Events are half-open integer intervals [start, end) treated as real
intervals of the same endpoints. The timeline [0, T) is partitioned into
one zone per ground-truth event, with boundaries at midpoints between
consecutive truth events (the series ends close the outer zones).

Within a zone holding truth event J and predicted set I (predictions
clipped to the zone):

- individual precision of a predicted point x is the probability that a
  uniformly random point X in the zone lies at least as far from J:
  P(dist(X, J) >= dist(x, J)); zone precision averages this over I.
- individual recall of a truth point y is the probability that a
  uniformly random point X in the zone lies at least as far from y as the
  prediction does: P(|y - X| >= dist(y, I)); zone recall averages this
  over J (0 when the zone holds no prediction).

Both averages are exact integrals of piecewise-linear functions,
evaluated in closed form with the midpoint rule per linear piece.
Precision averages over zones containing at least one predicted point;
recall averages over all zones. F1 is the harmonic mean.

Point-adjustment evaluation is deliberately not implemented; a plain
point-wise F1 exists for diagnostics only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset_io import LabelSeries
from .errors import EmptySeries, EmptyTruth


@dataclass(frozen=True)
class EventList:
    """Sorted, disjoint, non-empty half-open intervals over timesteps."""

    events: tuple

    def __post_init__(self):
        events = tuple((int(s), int(e)) for s, e in self.events)
        prev_end = None
        for s, e in events:
            if e <= s:
                raise ValueError(f"empty or inverted event [{s}, {e})")
            if prev_end is not None and s < prev_end:
                raise ValueError("events must be sorted and disjoint")
            prev_end = e
        object.__setattr__(self, "events", events)

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)


@dataclass(frozen=True)
class AffiliationReport:
    precision: float
    recall: float
    f1: float
    per_zone: tuple = ()

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "per_zone": [
                {"zone": [z0, z1], "precision": p, "recall": r}
                for (z0, z1), p, r in self.per_zone
            ],
        }


def to_events(labels) -> EventList:
    """Maximal runs of ones as half-open intervals."""
    arr = np.asarray(getattr(labels, "labels", labels)).astype(np.int8)
    if arr.size == 0:
        return EventList(events=())
    padded = np.concatenate([[0], arr, [0]])
    diff = np.diff(padded)
    starts = np.flatnonzero(diff == 1)
    ends = np.flatnonzero(diff == -1)
    return EventList(events=tuple(zip(starts.tolist(), ends.tolist())))


def summarize(labels) -> float:
    """Anomaly ratio: fraction of anomalous timesteps."""
    arr = np.asarray(getattr(labels, "labels", labels), dtype=np.float64)
    if arr.size == 0:
        raise EmptySeries("labels are empty")
    return float(arr.mean())


# --- zone geometry --------------------------------------------------------

def _zones(truth: EventList, T: int) -> list[tuple[float, float]]:
    bounds = [0.0]
    events = list(truth)
    for (a0, b0), (a1, _) in zip(events, events[1:]):
        bounds.append((b0 + a1) / 2.0)
    bounds.append(float(T))
    return [(bounds[i], bounds[i + 1]) for i in range(len(events))]


def _clip_intervals(intervals, lo: float, hi: float) -> list[tuple[float, float]]:
    out = []
    for s, e in intervals:
        s2, e2 = max(float(s), lo), min(float(e), hi)
        if e2 > s2:
            out.append((s2, e2))
    return out


def _interval_dist(x: float, a: float, b: float) -> float:
    return max(a - x, 0.0, x - b)


def _piecewise_integral(fn, breakpoints, u: float, v: float) -> float:
    """Integral of a function linear between breakpoints over [u, v]."""
    pts = sorted({u, v, *(p for p in breakpoints if u < p < v)})
    total = 0.0
    for lo, hi in zip(pts, pts[1:]):
        total += (hi - lo) * fn((lo + hi) / 2.0)
    return total


def _zone_precision(pred_parts, truth_event, zone) -> float:
    a, b = float(truth_event[0]), float(truth_event[1])
    z0, z1 = zone
    length = z1 - z0

    def survival(d: float) -> float:
        # P(dist(X, [a, b]) >= d) for X ~ U(zone); d = 0 has full mass
        if d <= 0.0:
            return 1.0
        return (max(z1 - (b + d), 0.0) + max((a - d) - z0, 0.0)) / length

    def g(x: float) -> float:
        return survival(_interval_dist(x, a, b))

    # kinks of g(x): event edges plus where either survival term vanishes
    breaks = (z0, z1, a, b, a + b - z0, a + b - z1)
    total_len = sum(e - s for s, e in pred_parts)
    integral = sum(_piecewise_integral(g, breaks, s, e) for s, e in pred_parts)
    return integral / total_len


def _dist_to_union(y: float, parts) -> float:
    return min(_interval_dist(y, s, e) for s, e in parts)


def _zone_recall(pred_parts, truth_event, zone) -> float:
    a, b = float(truth_event[0]), float(truth_event[1])
    z0, z1 = zone
    length = z1 - z0
    if not pred_parts:
        return 0.0

    def g(y: float) -> float:
        d = _dist_to_union(y, pred_parts)
        if d <= 0.0:
            return 1.0
        return (max(z1 - (y + d), 0.0) + max((y - d) - z0, 0.0)) / length

    # kinks of dist-to-prediction: interval edges and Voronoi midpoints
    breaks = set()
    for s, e in pred_parts:
        breaks.update((s, e))
    flat = sorted(pred_parts)
    for (_, e0), (s1, _) in zip(flat, flat[1:]):
        breaks.add((e0 + s1) / 2.0)
    # kinks where a survival term hits zero: solve on each linear piece of d
    base = sorted({a, b, *(p for p in breaks if a < p < b)})
    extra = set()
    for lo, hi in zip(base, base[1:]):
        mid = (lo + hi) / 2.0
        d_mid = _dist_to_union(mid, pred_parts)
        # slope of d on this piece (piecewise linear, slope in {-1, 0, 1})
        d_lo = _dist_to_union(lo, pred_parts)
        d_hi = _dist_to_union(hi, pred_parts)
        slope = (d_hi - d_lo) / (hi - lo)
        c = d_mid - slope * mid
        # z1 - y - (c + slope*y) = 0  and  y - (c + slope*y) - z0 = 0
        if abs(1.0 + slope) > 1e-12:
            extra.add((z1 - c) / (1.0 + slope))
        if abs(1.0 - slope) > 1e-12:
            extra.add((c + z0) / (1.0 - slope))
    breaks.update(extra)
    integral = _piecewise_integral(g, breaks, a, b)
    return integral / (b - a)


def affiliation_metrics(pred: EventList, truth: EventList, T: int,
                        with_zones: bool = True) -> AffiliationReport:
    """Affiliation precision/recall/F1 of predicted vs truth events."""
    if T < 1:
        raise EmptySeries("T must be >= 1")
    if len(truth) == 0:
        raise EmptyTruth("no ground-truth events; recall undefined")
    zones = _zones(truth, T)
    zone_stats = []
    precisions = []
    recalls = []
    for event, zone in zip(truth, zones):
        parts = _clip_intervals(pred, zone[0], zone[1])
        zp = _zone_precision(parts, event, zone) if parts else None
        zr = _zone_recall(parts, event, zone)
        if zp is not None:
            precisions.append(zp)
        recalls.append(zr)
        zone_stats.append((zone, zp, zr))
    precision = float(np.mean(precisions)) if precisions else 0.0
    recall = float(np.mean(recalls))
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return AffiliationReport(precision=precision, recall=recall, f1=float(f1),
                             per_zone=tuple(zone_stats) if with_zones else ())


def pointwise_f1(pred_labels, truth_labels) -> dict:
    """Plain point-wise P/R/F1, for diagnostics only (never the headline)."""
    p = np.asarray(getattr(pred_labels, "labels", pred_labels)).astype(bool)
    t = np.asarray(getattr(truth_labels, "labels", truth_labels)).astype(bool)
    tp = float(np.sum(p & t))
    precision = tp / p.sum() if p.sum() else 0.0
    recall = tp / t.sum() if t.sum() else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"precision": precision, "recall": recall, "f1": f1}
