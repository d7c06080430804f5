"""Row-drop attack simulation on raw mosaics."""
from __future__ import annotations

import enum

import numpy as np

from .cfa import CfaPattern, DimensionError, RawImage, RgbImage, demosaic, mosaic
from .drops import DropSet, validate_drop_set


class Padding(enum.Enum):
    """How the ``m`` rows missing at the bottom are refilled."""

    WRAP_TOP = "wrap-top"          # first m rows of the same frame
    NEXT_FRAME = "next-frame"      # first m rows of a companion frame
    REPLICATE_LAST = "replicate-last"
    ZERO = "zero"

    @classmethod
    def parse(cls, value: "str | Padding") -> "Padding":
        if isinstance(value, Padding):
            return value
        key = value.strip().lower().replace("_", "-")
        aliases = {"wraptop": "wrap-top", "nextframe": "next-frame",
                   "replicatelast": "replicate-last"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValueError(
                f"unknown padding {value!r}; expected one of "
                + ", ".join(p.value for p in cls)
            ) from None


def _as_drop_set(drops, height: int) -> DropSet:
    if isinstance(drops, DropSet):
        if drops.image_height != height:
            raise DimensionError(
                f"drop set built for height {drops.image_height}, image has {height}"
            )
        return drops
    # Algorithm 1 only needs ascending, non-adjacent, in-range rows
    return validate_drop_set(drops, height, allow_collapsed=True)


def apply_attack(
    raw: RawImage,
    drops: DropSet | list[int],
    pad: Padding | str = Padding.WRAP_TOP,
    next_frame: RawImage | None = None,
) -> RawImage:
    """Remove the dropped rows and refill the bottom so the height is unchanged."""
    pad = Padding.parse(pad)
    drops = _as_drop_set(drops, raw.height)
    m = drops.m
    if pad is Padding.NEXT_FRAME:
        if next_frame is None:
            raise ValueError("next-frame padding needs a companion frame")
        if (next_frame.data.shape != raw.data.shape or next_frame.pattern != raw.pattern
                or next_frame.max_value != raw.max_value):
            raise DimensionError("companion frame differs in size, pattern or max_value")

    kept = raw.data
    # bottom-up so earlier indices stay valid while rows are removed
    for x in sorted(drops.indices, reverse=True):
        kept = np.concatenate((kept[:x], kept[x + 1:]), axis=0)

    if pad is Padding.WRAP_TOP:
        fill = raw.data[:m]
    elif pad is Padding.NEXT_FRAME:
        fill = next_frame.data[:m]
    elif pad is Padding.REPLICATE_LAST:
        fill = np.repeat(kept[-1:], m, axis=0)
    else:
        fill = np.zeros((m, raw.width), raw.data.dtype)

    meta = dict(raw.meta)
    meta["drops"] = drops.to_text()
    meta["padding"] = pad.value
    return RawImage(np.concatenate((kept, fill), axis=0), raw.pattern, raw.max_value, meta)


def simulate_attacked_rgb(
    rgb: RgbImage,
    pattern: CfaPattern | str,
    drops: DropSet | list[int],
    pad: Padding | str = Padding.WRAP_TOP,
    next_frame: RgbImage | None = None,
) -> RgbImage:
    """Mosaic, attack, and reconstruct an RGB frame."""
    raw = mosaic(rgb, pattern)
    companion = mosaic(next_frame, pattern) if next_frame is not None else None
    return demosaic(apply_attack(raw, drops, pad, companion))
