"""Drop-set arithmetic: validity, strip positions and their inverse, strip layout,
and seeded random drop-set generation.

Row indices are 0-based. A drop at original row ``x_i`` shifts every later
row up by one; rows whose cumulative shift is odd see the CFA phase flipped
and form a colour strip in the reconstruction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class DropSetError(ValueError):
    """Base class for invalid drop sets. ``index`` names the offending row."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class NotAscending(DropSetError):
    pass


class AdjacentRows(DropSetError):
    pass


class OutOfRange(DropSetError):
    pass


class DegenerateStrip(DropSetError):
    pass


class Infeasible(DropSetError):
    pass


@dataclass(frozen=True)
class DropSet:
    indices: tuple[int, ...]
    image_height: int

    @property
    def m(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __len__(self) -> int:
        return len(self.indices)

    def to_text(self) -> str:
        return ",".join(str(x) for x in self.indices)


@dataclass(frozen=True)
class StripLayout:
    """Strip intervals (inclusive rows) in attacked-image coordinates."""

    strips: tuple[tuple[int, int], ...]
    image_height: int

    @property
    def n(self) -> int:
        return len(self.strips)

    def rows(self) -> np.ndarray:
        mask = np.zeros(self.image_height, bool)
        for start, end in self.strips:
            mask[start:end + 1] = True
        return mask

    def to_records(self) -> list[dict[str, int]]:
        return [{"start": s, "end": e, "height": e - s + 1} for s, e in self.strips]


def _raw_positions(indices: Sequence[int]) -> list[int]:
    # offset 2*ceil(i/2) is (i + 1) with the low bit cleared
    return [x - ((i + 1) & ~1) for i, x in enumerate(indices)]


def validate_drop_set(
    indices: Iterable[int], image_height: int, allow_collapsed: bool = False
) -> DropSet:
    """Check the drop-set invariants and build a ``DropSet``.

    Two drops bounding a strip that are exactly 2 rows apart map to the same
    strip position, which the strip model cannot pair; they raise
    ``DegenerateStrip`` unless ``allow_collapsed`` is set (row deletion alone
    is well defined for them).
    """
    idx = [int(x) for x in indices]
    if image_height < 1:
        raise OutOfRange(f"image height must be positive, got {image_height}")
    if not idx:
        return DropSet((), image_height)
    if idx[0] < 0:
        raise OutOfRange(f"dropped row {idx[0]} outside [0, {image_height - 1}]", idx[0])
    for i, (prev, x) in enumerate(zip(idx, idx[1:]), 1):
        gap = x - prev
        if gap > 2 or (gap == 2 and (allow_collapsed or not i & 1)):
            continue
        if gap <= 0:
            raise NotAscending(f"dropped row {x} does not follow {prev} in ascending order", x)
        if gap == 1:
            raise AdjacentRows(f"dropped rows {prev} and {x} are adjacent", x)
        # gap 2 closing a strip: both drops map to the same strip position
        raise DegenerateStrip(
            f"drops {prev} and {x} collapse onto strip row {x - ((i + 1) & ~1)}", x)
    if idx[-1] >= image_height:
        raise OutOfRange(f"dropped row {idx[-1]} outside [0, {image_height - 1}]", idx[-1])
    return DropSet(tuple(idx), image_height)


def parse_drop_text(text: str, image_height: int, allow_collapsed: bool = False) -> DropSet:
    """Parse ``"10,20,30"``. Blank input is the empty drop set."""
    text = text.strip()
    if not text:
        return validate_drop_set([], image_height)
    try:
        values = [int(tok) for tok in text.split(",")]
    except ValueError:
        raise DropSetError(f"malformed drop list {text!r}") from None
    return validate_drop_set(values, image_height, allow_collapsed)


def strip_positions(drops: DropSet) -> list[int]:
    """Attacked-image rows where strips start (even i) and end (odd i)."""
    return _raw_positions(drops.indices)


def dropped_rows_from_positions(positions: Sequence[int], image_height: int) -> DropSet:
    rows = []
    prev = None
    for i, p in enumerate(positions):
        p = int(p)
        if prev is not None and p <= prev:
            raise NotAscending(f"strip position {p} does not follow {prev}", p)
        prev = p
        rows.append(p + ((i + 1) & ~1))
    return validate_drop_set(rows, image_height)


def strips_from_positions(positions: Sequence[int], image_height: int) -> StripLayout:
    pos = list(positions)
    strips = [(pos[i], pos[i + 1]) for i in range(0, len(pos) - 1, 2)]
    if len(pos) % 2:
        # an unpaired final drop leaves the phase flipped down to the bottom
        strips.append((pos[-1], image_height - 1))
    return StripLayout(tuple(strips), image_height)


def strip_layout(drops: DropSet) -> StripLayout:
    return strips_from_positions(strip_positions(drops), drops.image_height)


def strip_count(m: int) -> int:
    if m < 0:
        raise ValueError("drop count must be non-negative")
    return math.ceil(m / 2)


def source_rows(drops: DropSet) -> np.ndarray:
    """For each attacked row above the padding, the original row it shows."""
    return np.delete(np.arange(drops.image_height), list(drops.indices))


def sample_drop_set(
    n_strips: int,
    image_height: int,
    seed: int | np.random.Generator | None = None,
    min_gap: int = 2,
) -> DropSet:
    """Draw ``2 * n_strips`` drops uniformly among all valid sets.

    Consecutive drops are at least ``max(2, min_gap)`` rows apart; the two
    drops bounding a strip are at least 3 apart so no strip collapses.
    Sampling is exact (gap compression), so there is no retry loop.
    """
    if n_strips < 0:
        raise ValueError("n_strips must be non-negative")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    m = 2 * n_strips
    if m == 0:
        return DropSet((), image_height)
    base = max(2, min_gap)
    gaps = [max(3, base) if j % 2 == 0 else base for j in range(m - 1)]
    slack_rows = image_height - sum(g - 1 for g in gaps)
    if slack_rows < m:
        need = sum(gaps) + 1
        raise Infeasible(
            f"{n_strips} strips need at least {need} rows with min_gap={base}, "
            f"image has {image_height}"
        )
    picks = np.sort(rng.choice(slack_rows, size=m, replace=False))
    offsets = np.concatenate(([0], np.cumsum([g - 1 for g in gaps])))
    return validate_drop_set((picks + offsets).tolist(), image_height)
