"""Binary PGM (P5) / PPM (P6) reading and writing.

Raw mosaics travel as P5 with the CFA pattern and attack metadata in comment
lines ``# emistrip:key=value``; reconstructed images travel as P6. Samples
wider than 8 bits are big-endian, as netpbm requires.
"""
from __future__ import annotations

import os
import re
from pathlib import Path

import numpy as np

from .cfa import DEFAULT_PATTERN, CfaPattern, RawImage, RgbImage

COMMENT_PREFIX = "emistrip:"
_META_RE = re.compile(r"^#\s*emistrip:([A-Za-z0-9_.-]+)=(.*)$")


class NetpbmError(ValueError):
    pass


def _parse_header(buf: bytes) -> tuple[str, int, int, int, dict[str, str], int]:
    """Return (magic, width, height, maxval, meta, data_offset)."""
    pos = 0
    tokens: list[bytes] = []
    meta: dict[str, str] = {}
    n = len(buf)
    while len(tokens) < 4:
        if pos >= n:
            raise NetpbmError("truncated netpbm header")
        ch = buf[pos:pos + 1]
        if ch == b"#":
            end = buf.find(b"\n", pos)
            if end < 0:
                raise NetpbmError("unterminated comment in header")
            line = buf[pos:end].rstrip(b"\r").decode("utf-8", "replace")
            m = _META_RE.match(line)
            if m:
                meta[m.group(1)] = m.group(2).strip()
            pos = end + 1
        elif ch.isspace():
            pos += 1
        else:
            start = pos
            while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
                pos += 1
            tokens.append(buf[start:pos])
    # exactly one whitespace byte separates maxval from the raster
    if pos >= n or not buf[pos:pos + 1].isspace():
        raise NetpbmError("missing whitespace after maxval")
    pos += 1
    magic = tokens[0].decode("ascii", "replace")
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError:
        raise NetpbmError(f"non-numeric header field in {tokens[1:4]!r}") from None
    if width <= 0 or height <= 0:
        raise NetpbmError(f"bad dimensions {width}x{height}")
    if not 0 < maxval < 65536:
        raise NetpbmError(f"maxval {maxval} out of range")
    return magic, width, height, maxval, meta, pos


def _decode(buf: bytes, offset: int, count: int, maxval: int) -> np.ndarray:
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
    need = count * dtype.itemsize
    if len(buf) - offset < need:
        raise NetpbmError(f"raster truncated: need {need} bytes, have {len(buf) - offset}")
    arr = np.frombuffer(buf, dtype=dtype, count=count, offset=offset)
    if arr.size and arr.max() > maxval:
        raise NetpbmError("sample exceeds maxval")
    return arr.astype(np.uint16 if maxval > 255 else np.uint8)


def read_netpbm(path: str | os.PathLike) -> RawImage | RgbImage:
    buf = Path(path).read_bytes()
    magic, w, h, maxval, meta, off = _parse_header(buf)
    if magic == "P5":
        arr = _decode(buf, off, w * h, maxval).reshape(h, w)
        pattern = CfaPattern.parse(meta.pop("pattern", DEFAULT_PATTERN.value))
        return RawImage(arr, pattern, maxval, meta)
    if magic == "P6":
        arr = _decode(buf, off, w * h * 3, maxval).reshape(h, w, 3)
        return RgbImage(arr, maxval)
    raise NetpbmError(f"unsupported netpbm magic {magic!r} (only P5/P6)")


def read_pgm(path: str | os.PathLike) -> RawImage:
    img = read_netpbm(path)
    if not isinstance(img, RawImage):
        raise NetpbmError(f"{path}: expected a P5 raw image, found P6")
    return img


def read_ppm(path: str | os.PathLike) -> RgbImage:
    img = read_netpbm(path)
    if not isinstance(img, RgbImage):
        raise NetpbmError(f"{path}: expected a P6 RGB image, found P5")
    return img


def _encode(data: np.ndarray, maxval: int) -> bytes:
    if maxval > 255:
        return data.astype(">u2").tobytes()
    return data.astype(np.uint8).tobytes()


def encode_pgm(raw: RawImage) -> bytes:
    lines = ["P5", f"# {COMMENT_PREFIX}pattern={raw.pattern.value}"]
    for key in sorted(raw.meta):
        value = str(raw.meta[key])
        if "\n" in value:
            raise NetpbmError(f"metadata value for {key!r} contains a newline")
        lines.append(f"# {COMMENT_PREFIX}{key}={value}")
    lines += [f"{raw.width} {raw.height}", str(raw.max_value)]
    return ("\n".join(lines) + "\n").encode("ascii") + _encode(raw.data, raw.max_value)


def encode_ppm(rgb: RgbImage) -> bytes:
    header = f"P6\n{rgb.width} {rgb.height}\n{rgb.max_value}\n".encode("ascii")
    return header + _encode(rgb.data, rgb.max_value)


def write_pgm(path: str | os.PathLike, raw: RawImage) -> None:
    Path(path).write_bytes(encode_pgm(raw))


def write_ppm(path: str | os.PathLike, rgb: RgbImage) -> None:
    Path(path).write_bytes(encode_ppm(rgb))


def read_png(path: str | os.PathLike) -> RgbImage:
    """Load a PNG as RGB. Needs Pillow (``pip install artifact[png]``)."""
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover - depends on environment
        raise NetpbmError("PNG input requires Pillow; install the 'png' extra") from exc
    with Image.open(path) as im:
        if im.mode in ("I;16", "I;16B", "I"):
            raise NetpbmError(f"{path}: 16-bit PNG not supported, convert to PPM")
        arr = np.asarray(im.convert("RGB"))
    return RgbImage(arr, 255)


def read_image(path: str | os.PathLike) -> RawImage | RgbImage:
    """Dispatch on extension: ``.png`` via Pillow, anything else as netpbm."""
    if str(path).lower().endswith(".png"):
        return read_png(path)
    return read_netpbm(path)
