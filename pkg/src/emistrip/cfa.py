"""Bayer colour filter arrays, raw/RGB rasters, mosaicing and bilinear demosaicing.

All rows and columns are 0-based. Raw rasters hold one sample per pixel; the
channel a pixel carries is fixed by the 2x2 CFA tile and the pixel's
``(row % 2, col % 2)`` phase.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

R, G, B = "R", "G", "B"
_CHANNEL_INDEX = {R: 0, G: 1, B: 2}


class DimensionError(ValueError):
    """Raster dimensions cannot hold whole CFA tiles or do not match."""


class CfaPattern(enum.Enum):
    """2x2 Bayer tile, named by reading the tile row-major."""

    GRBG = "GRBG"
    RGGB = "RGGB"
    BGGR = "BGGR"
    GBRG = "GBRG"

    @property
    def tile(self) -> tuple[tuple[str, str], tuple[str, str]]:
        s = self.value
        return (s[0], s[1]), (s[2], s[3])

    @classmethod
    def parse(cls, name: str | "CfaPattern") -> "CfaPattern":
        if isinstance(name, CfaPattern):
            return name
        try:
            return cls(name.strip().upper())
        except ValueError:
            raise ValueError(
                f"unknown CFA pattern {name!r}; expected one of "
                + ", ".join(p.value for p in cls)
            ) from None

    def channel_masks(self, height: int, width: int) -> dict[str, np.ndarray]:
        """Boolean site masks per channel for a ``height x width`` raster."""
        rows = np.arange(height)[:, None] % 2
        cols = np.arange(width)[None, :] % 2
        masks = {R: np.zeros((height, width), bool),
                 G: np.zeros((height, width), bool),
                 B: np.zeros((height, width), bool)}
        for tr in (0, 1):
            for tc in (0, 1):
                masks[self.tile[tr][tc]] |= (rows == tr) & (cols == tc)
        return masks


DEFAULT_PATTERN = CfaPattern.GRBG


def channel_at(pattern: CfaPattern, row: int, col: int) -> str:
    if row < 0 or col < 0:
        raise ValueError(f"negative pixel index ({row}, {col})")
    return pattern.tile[row % 2][col % 2]


def _dtype_for(max_value: int) -> np.dtype:
    return np.dtype(np.uint8) if max_value <= 255 else np.dtype(np.uint16)


def _check_max_value(max_value: int) -> None:
    if not 1 <= max_value <= 65535:
        raise ValueError(f"max_value must be in [1, 65535], got {max_value}")


@dataclass(frozen=True, eq=False)
class RawImage:
    """Single-channel Bayer mosaic.

    ``meta`` holds free-form ``key=value`` strings carried through netpbm
    comments (drop set, padding, seed).
    """

    data: np.ndarray
    pattern: CfaPattern = DEFAULT_PATTERN
    max_value: int = 255
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        _check_max_value(self.max_value)
        data = np.asarray(self.data)
        if data.ndim != 2:
            raise DimensionError(f"raw image must be 2-D, got shape {data.shape}")
        h, w = data.shape
        if h < 2 or w < 2 or h % 2 or w % 2:
            raise DimensionError(
                f"raw image dimensions must be even and >= 2, got width={w} height={h}"
            )
        if data.size and (data.min() < 0 or data.max() > self.max_value):
            raise ValueError(f"raw samples outside [0, {self.max_value}]")
        data = data.astype(_dtype_for(self.max_value), copy=True)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "pattern", CfaPattern.parse(self.pattern))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def replace(self, **changes) -> "RawImage":
        kw = dict(data=self.data, pattern=self.pattern, max_value=self.max_value,
                  meta=dict(self.meta))
        kw.update(changes)
        return RawImage(**kw)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RawImage):
            return NotImplemented
        return (self.pattern == other.pattern and self.max_value == other.max_value
                and np.array_equal(self.data, other.data))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class RgbImage:
    """Three-channel raster, ``data`` shaped ``(height, width, 3)``."""

    data: np.ndarray
    max_value: int = 255

    def __post_init__(self) -> None:
        _check_max_value(self.max_value)
        data = np.asarray(self.data)
        if data.ndim != 3 or data.shape[2] != 3:
            raise DimensionError(f"RGB image must be (H, W, 3), got shape {data.shape}")
        if data.size and (data.min() < 0 or data.max() > self.max_value):
            raise ValueError(f"RGB samples outside [0, {self.max_value}]")
        data = data.astype(_dtype_for(self.max_value), copy=True)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RgbImage):
            return NotImplemented
        return self.max_value == other.max_value and np.array_equal(self.data, other.data)

    __hash__ = None


def mosaic(rgb: RgbImage, pattern: CfaPattern | str = DEFAULT_PATTERN) -> RawImage:
    """Sample the channel each CFA site would see."""
    pattern = CfaPattern.parse(pattern)
    h, w = rgb.height, rgb.width
    if h < 2 or w < 2 or h % 2 or w % 2:
        raise DimensionError(
            f"cannot mosaic an image with odd or tiny dimensions (width={w}, height={h})"
        )
    out = np.empty((h, w), dtype=rgb.data.dtype)
    for tr in (0, 1):
        for tc in (0, 1):
            k = _CHANNEL_INDEX[pattern.tile[tr][tc]]
            out[tr::2, tc::2] = rgb.data[tr::2, tc::2, k]
    return RawImage(out, pattern, rgb.max_value)


def demosaic(raw: RawImage) -> RgbImage:
    """Bilinear demosaic with integer, round-half-away-from-zero averages.

    Native samples pass through untouched. Borders mirror about the edge
    pixel, which keeps the CFA phase of the virtual neighbours intact.
    """
    x = raw.data.astype(np.int64)
    h, w = x.shape
    p = np.pad(x, 1, mode="reflect")
    up, down = p[:-2, 1:-1], p[2:, 1:-1]
    left, right = p[1:-1, :-2], p[1:-1, 2:]
    # all sums are non-negative, so (s + n//2) // n rounds half away from zero
    horiz = (left + right + 1) // 2
    vert = (up + down + 1) // 2
    cross = (up + down + left + right + 2) // 4
    diag = (p[:-2, :-2] + p[:-2, 2:] + p[2:, :-2] + p[2:, 2:] + 2) // 4

    out = np.empty((h, w, 3), dtype=np.int64)
    tile = raw.pattern.tile
    for tr in (0, 1):
        for tc in (0, 1):
            sl = (slice(tr, None, 2), slice(tc, None, 2))
            native = tile[tr][tc]
            if native == G:
                # green sites: the row-mate colour is left/right, the other up/down
                row_mate = tile[tr][1 - tc]
                other = R if row_mate == B else B
                planes = {G: x[sl], row_mate: horiz[sl], other: vert[sl]}
            else:
                other = B if native == R else R
                planes = {native: x[sl], G: cross[sl], other: diag[sl]}
            for ch, plane in planes.items():
                out[sl + (_CHANNEL_INDEX[ch],)] = plane
    return RgbImage(out, raw.max_value)
