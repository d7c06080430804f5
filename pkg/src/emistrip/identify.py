"""Recover the dropped rows from a clean/attacked raw pair.

The per-row mean absolute difference is bright where the cumulative row
shift is odd (cross-channel comparison) and dark where it is even, so its
bright runs are the colour strips. Their boundaries are the attacked-image
strip positions, which map back to original rows.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .cfa import DimensionError, RawImage
from .drops import (
    DropSet,
    DropSetError,
    dropped_rows_from_positions,
    source_rows,
    validate_drop_set,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RowDifferenceProfile:
    values: np.ndarray
    max_value: int

    def __len__(self) -> int:
        return len(self.values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row_index", "value"])
        for i, v in enumerate(self.values):
            w.writerow([i, f"{v:.9f}"])
        return buf.getvalue()


@dataclass(frozen=True)
class ThresholdPolicy:
    """``midpoint``: halfway between min and max of the smoothed profile.
    ``two-means``: midpoint of the two 1-D k-means cluster centres.
    Profiles whose smoothed maximum stays at or below ``noise_floor``
    (fraction of dynamic range) yield no edges."""

    kind: Literal["midpoint", "two-means"] = "midpoint"
    noise_floor: float = 0.02
    smooth: bool = True
    # between-cluster share of variance under which the split is reported as weak
    min_separation: float = 0.5


@dataclass(frozen=True)
class EdgeDetection:
    positions: tuple[int, ...]
    threshold: float | None = None
    runs: tuple[tuple[int, int], ...] = ()
    low_confidence: bool = False
    # the last strip reaches the padding: both "odd m, strip to bottom" and
    # "even m, strip cut by padding" explain the profile
    tail_ambiguous: bool = False
    warnings: tuple[str, ...] = field(default=())

    def __iter__(self):
        return iter(self.positions)

    def __len__(self) -> int:
        return len(self.positions)


def _check_pair(clean: RawImage, attacked: RawImage) -> None:
    if clean.data.shape != attacked.data.shape:
        raise DimensionError(
            f"image sizes differ: {clean.width}x{clean.height} vs "
            f"{attacked.width}x{attacked.height}"
        )
    if clean.pattern != attacked.pattern:
        raise DimensionError(
            f"CFA patterns differ: {clean.pattern.value} vs {attacked.pattern.value}"
        )
    if clean.max_value != attacked.max_value:
        raise DimensionError(
            f"max_value differs: {clean.max_value} vs {attacked.max_value}"
        )


def row_difference_profile(clean: RawImage, attacked: RawImage) -> RowDifferenceProfile:
    _check_pair(clean, attacked)
    diff = np.abs(clean.data.astype(np.int64) - attacked.data.astype(np.int64))
    values = diff.mean(axis=1) / clean.max_value
    return RowDifferenceProfile(values, clean.max_value)


def smooth_profile(values: np.ndarray) -> np.ndarray:
    """Centred 3-row moving average, ends replicated."""
    if len(values) < 3:
        return values.astype(float)
    p = np.pad(values.astype(float), 1, mode="edge")
    return (p[:-2] + p[1:-1] + p[2:]) / 3.0


def _two_means(values: np.ndarray) -> tuple[float, float]:
    lo, hi = float(values.min()), float(values.max())
    for _ in range(100):
        mid = (lo + hi) / 2
        low, high = values[values <= mid], values[values > mid]
        if not len(low) or not len(high):
            break
        new = float(low.mean()), float(high.mean())
        if new == (lo, hi):
            break
        lo, hi = new
    return lo, hi


def _separation(values: np.ndarray, threshold: float) -> float:
    total = values.var()
    if total == 0:
        return 0.0
    low, high = values[values <= threshold], values[values > threshold]
    if not len(low) or not len(high):
        return 0.0
    w = len(high) / len(values)
    return float(w * (1 - w) * (high.mean() - low.mean()) ** 2 / total)


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    padded = np.concatenate(([False], mask, [False]))
    d = np.diff(padded.astype(np.int8))
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1) - 1
    return list(zip(starts.tolist(), ends.tolist()))


def _explain(runs: list[tuple[int, int]], height: int, m: int) -> list[int] | None:
    """Strip positions if ``m`` drops (and m padded rows) account for the runs."""
    pad_start = height - m
    q = m // 2
    if m % 2 == 0:
        if len(runs) < q:
            return None
        strips = list(runs[:q])
        if any(s < pad_start for s, _ in runs[q:]):
            return None
        if strips:
            s, e = strips[-1]
            if e >= pad_start:
                if s >= pad_start - 1:
                    return None
                strips[-1] = (s, pad_start - 1)
            if any(e >= pad_start for _, e in strips[:-1]):
                return None
        return [p for pair in strips for p in pair]
    if len(runs) < q + 1:
        return None
    strips, (ts, te) = list(runs[:q]), runs[q]
    if ts >= pad_start or te < pad_start - 1:
        return None
    if any(s < pad_start for s, _ in runs[q + 1:]):
        return None
    return [p for pair in strips for p in pair] + [ts]


def detect_strip_edges(
    profile: RowDifferenceProfile, policy: ThresholdPolicy = ThresholdPolicy()
) -> EdgeDetection:
    values = np.asarray(profile.values, dtype=float)
    height = len(values)
    if height == 0:
        return EdgeDetection(())
    smoothed = smooth_profile(values) if policy.smooth else values
    if smoothed.max() <= policy.noise_floor:
        return EdgeDetection(())
    if policy.kind == "midpoint":
        threshold = (float(smoothed.min()) + float(smoothed.max())) / 2
    elif policy.kind == "two-means":
        lo, hi = _two_means(smoothed)
        threshold = (lo + hi) / 2
    else:
        raise ValueError(f"unknown threshold policy {policy.kind!r}")
    threshold = max(threshold, policy.noise_floor)

    # edges come from the raw profile; a run must also survive smoothing,
    # which drops isolated single-row spikes
    runs = [(s, e) for s, e in _runs(values > threshold)
            if smoothed[s:e + 1].max() > threshold]
    warnings: list[str] = []
    sep = _separation(smoothed, threshold)
    low = sep < policy.min_separation
    if low:
        warnings.append(f"LowConfidence: weak bimodality (separation {sep:.3f})")

    explained = None
    for m in range(0, 2 * len(runs) + 2):
        pos = _explain(runs, height, m)
        if pos is None:
            continue
        try:
            dropped_rows_from_positions(pos, height)
        except DropSetError:
            continue
        explained = (m, pos)
        break
    if explained is None:
        warnings.append("LowConfidence: runs are not consistent with any drop count")
        pos = [p for pair in runs for p in pair]
        return EdgeDetection(tuple(pos), threshold, tuple(runs), True, False, tuple(warnings))

    m, pos = explained
    ambiguous = m % 2 == 1 and _explain(runs, height, m + 1) is not None
    return EdgeDetection(tuple(pos), threshold, tuple(runs), low, ambiguous, tuple(warnings))


def _resolve_tail(
    edges: EdgeDetection, clean: RawImage, attacked: RawImage
) -> list[int]:
    """Pick between the odd-m and cut-strip readings of a strip touching the padding.

    Under odd m the row just above the padding shows clean's last row; under
    even m that row already belongs to the padding.
    """
    pos = list(edges.positions)
    height = clean.height
    m = len(pos)
    row = height - m - 1
    err = np.abs(attacked.data[row].astype(np.int64)
                 - clean.data[height - 1].astype(np.int64)).mean() / clean.max_value
    if err < (edges.threshold or 0.0):
        return pos
    alt = _explain(list(edges.runs), height, m + 1)
    return alt if alt is not None else pos


def shift_residual(clean: RawImage, attacked: RawImage, drops: DropSet) -> np.ndarray:
    """Per-row mismatch between ``attacked`` and ``clean`` under drop set ``drops``.

    Covers the rows above the padding only; each is compared with the clean
    row it should show.
    """
    src = source_rows(drops)
    n = clean.height - drops.m
    diff = np.abs(attacked.data[:n].astype(np.int64) - clean.data[src].astype(np.int64))
    return diff.mean(axis=1) / clean.max_value


def _shift_costs(clean: RawImage, attacked: RawImage, max_shift: int) -> np.ndarray:
    height = clean.height
    a = attacked.data.astype(np.int32)
    c = clean.data.astype(np.int32)
    costs = np.full((height, max_shift + 1), np.inf)
    for k in range(max_shift + 1):
        costs[:height - k, k] = np.abs(a[:height - k] - c[k:]).mean(axis=1) / clean.max_value
    return costs


def align_drop_set(
    clean: RawImage, attacked: RawImage, max_drops: int | None = None, tolerance: float = 0.02
) -> DropSet:
    """Decode the cumulative row shift by dynamic programming.

    Attacked row ``y`` shows clean row ``y + k(y)`` where ``k`` starts at 0
    or 1 and grows by at most one per row. For every drop count ``m`` the
    cheapest such path over the ``H - m`` unpadded rows is found; the
    smallest ``m`` whose cost is within ``tolerance`` of the best wins.
    """
    _check_pair(clean, attacked)
    height = clean.height
    kmax = min(height // 2, 128 if max_drops is None else max_drops)
    costs = _shift_costs(clean, attacked, kmax)
    best = np.full((height, kmax + 1), np.inf)
    step = np.zeros((height, kmax + 1), bool)
    best[0, :2] = costs[0, :2]
    step[0, 1] = True
    for y in range(1, height):
        stay = best[y - 1]
        move = np.concatenate(([np.inf], best[y - 1, :-1]))
        # ties keep the shift, pushing drops as late as possible
        take = move < stay
        step[y] = take
        best[y] = costs[y] + np.where(take, move, stay)

    totals = []
    for m in range(kmax + 1):
        last = height - m - 1
        if last < 0:
            break
        opts = [(best[last, m], m, False)]
        if m >= 1:
            opts.append((best[last, m - 1], m - 1, True))
        totals.append(min(opts, key=lambda t: t[0]) + (m,))
    floor = min(t[0] for t in totals)
    total, k_end, bottom_drop, m = next(t for t in totals if t[0] <= floor + tolerance)

    last = height - m - 1
    k = k_end
    rows = []
    for y in range(last, -1, -1):
        if step[y, k]:
            rows.append(y + k - 1)
            k -= 1
    rows.reverse()
    if bottom_drop:
        rows.append(height - 1)
    return validate_drop_set(rows, height, allow_collapsed=True)


def identify_dropped_rows(
    clean: RawImage,
    attacked: RawImage,
    policy: ThresholdPolicy = ThresholdPolicy(),
    refine: bool = True,
) -> DropSet:
    """Recover the drop set from the difference profile's strip edges.

    With ``refine`` the candidate is re-simulated; if any unpadded row then
    disagrees by more than the policy noise floor, the shift-alignment
    decoder answers instead.
    """
    profile = row_difference_profile(clean, attacked)
    edges = detect_strip_edges(profile, policy)
    pos = list(edges.positions)
    if edges.tail_ambiguous:
        pos = _resolve_tail(edges, clean, attacked)
    try:
        found = dropped_rows_from_positions(pos, clean.height)
    except DropSetError:
        if not refine:
            raise
        found = None
    if not refine:
        return found
    if found is not None:
        resid = shift_residual(clean, attacked, found)
        if not len(resid) or resid.max() <= policy.noise_floor:
            return found
    log.debug("edge candidate %s rejected; aligning row shifts", pos)
    return align_drop_set(clean, attacked, tolerance=policy.noise_floor)
