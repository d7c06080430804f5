"""Windowed SSIM with a uniform square window."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..cfa import DimensionError, RawImage, RgbImage


@dataclass(frozen=True)
class SsimParams:
    window: int = 8
    k1: float = 0.01
    k2: float = 0.03
    # dynamic range; None takes it from the images
    L: float | None = None

    def __post_init__(self) -> None:
        if self.window < 2:
            raise ValueError(f"SSIM window must be >= 2, got {self.window}")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1 and k2 must be positive")
        if self.L is not None and self.L <= 0:
            raise ValueError("dynamic range L must be positive")

    def constants(self, L: float) -> tuple[float, float]:
        return (self.k1 * L) ** 2, (self.k2 * L) ** 2


def _unwrap(img) -> tuple[np.ndarray, float | None]:
    if isinstance(img, (RawImage, RgbImage)):
        return img.data, float(img.max_value)
    arr = np.asarray(img)
    if arr.dtype == np.uint8:
        return arr, 255.0
    if arr.dtype == np.uint16:
        return arr, 65535.0
    return arr, None


def _window_sums(a: np.ndarray, w: int) -> np.ndarray:
    """Sum over every fully-inside ``w x w`` window (summed-area table)."""
    s = np.zeros((a.shape[0] + 1, a.shape[1] + 1), dtype=a.dtype)
    np.cumsum(np.cumsum(a, axis=0), axis=1, out=s[1:, 1:])
    return s[w:, w:] - s[:-w, w:] - s[w:, :-w] + s[:-w, :-w]


def _ssim_plane(x: np.ndarray, y: np.ndarray, w: int, c1: float, c2: float) -> float:
    if np.issubdtype(x.dtype, np.integer) and np.issubdtype(y.dtype, np.integer):
        # exact integer moments; int64 is ample for 16-bit samples
        x = x.astype(np.int64)
        y = y.astype(np.int64)
    else:
        x = x.astype(np.float64)
        y = y.astype(np.float64)
    n = w * w
    sx, sy = _window_sums(x, w), _window_sums(y, w)
    sxx, syy, sxy = _window_sums(x * x, w), _window_sums(y * y, w), _window_sums(x * y, w)
    sx, sy = sx.astype(np.float64), sy.astype(np.float64)
    mx, my = sx / n, sy / n
    # unbiased (n - 1) moments; products kept commutative so ssim(x, y) == ssim(y, x)
    vx = (sxx - sx * sx / n) / (n - 1)
    vy = (syy - sy * sy / n) / (n - 1)
    cxy = (sxy - sx * sy / n) / (n - 1)
    num = (2 * mx * my + c1) * (2 * cxy + c2)
    den = (mx * mx + my * my + c1) * (vx + vy + c2)
    return float(np.mean(num / den))


def ssim(x, y, params: SsimParams | None = None) -> float:
    """Mean SSIM over all stride-1 window positions; RGB averages its channels."""
    params = params or SsimParams()
    a, la = _unwrap(x)
    b, lb = _unwrap(y)
    if a.shape != b.shape:
        raise DimensionError(f"SSIM inputs differ in shape: {a.shape} vs {b.shape}")
    if a.ndim not in (2, 3):
        raise DimensionError(f"SSIM expects 2-D or (H, W, C) images, got shape {a.shape}")
    h, w = a.shape[:2]
    if params.window > min(h, w):
        raise DimensionError(f"SSIM window {params.window} exceeds image size {w}x{h}")
    L = params.L if params.L is not None else (la or lb or 1.0)
    c1, c2 = params.constants(L)
    if a.ndim == 2:
        return _ssim_plane(a, b, params.window, c1, c2)
    scores = [_ssim_plane(a[..., k], b[..., k], params.window, c1, c2)
              for k in range(a.shape[2])]
    return float(np.mean(scores))
