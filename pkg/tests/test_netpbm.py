from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from emistrip.cfa import CfaPattern, RawImage, RgbImage
from emistrip.netpbm import (
    NetpbmError, encode_pgm, encode_ppm, read_image, read_netpbm, read_pgm, read_ppm,
    write_pgm, write_ppm,
)

GOLDEN16 = Path(__file__).parent / "data" / "golden16.pgm"
GOLDEN16_SAMPLES = [[0x0001, 0x1234, 0xFFFF, 0x8000], [0x0000, 0x0100, 0xABCD, 0x0002]]


def test_golden_16bit_read():
    raw = read_pgm(GOLDEN16)
    assert raw.max_value == 65535
    assert raw.pattern is CfaPattern.RGGB
    assert raw.data.tolist() == GOLDEN16_SAMPLES


def test_golden_16bit_write_is_byte_exact():
    raw = RawImage(np.array(GOLDEN16_SAMPLES, np.uint16), "RGGB", 65535)
    assert encode_pgm(raw) == GOLDEN16.read_bytes()


def test_8bit_header_layout():
    raw = RawImage(np.array([[1, 2], [3, 4]], np.uint8), "GRBG", 255, {"drops": "1"})
    assert encode_pgm(raw) == (b"P5\n# emistrip:pattern=GRBG\n# emistrip:drops=1\n"
                               b"2 2\n255\n\x01\x02\x03\x04")


def test_meta_roundtrip(tmp_path):
    raw = RawImage(np.zeros((2, 4), np.uint8), "BGGR", 255, {"drops": "0", "padding": "zero"})
    write_pgm(tmp_path / "a.pgm", raw)
    back = read_pgm(tmp_path / "a.pgm")
    assert back == raw
    assert back.meta == {"drops": "0", "padding": "zero"}


def test_foreign_comments_and_whitespace(tmp_path):
    p = tmp_path / "ws.pgm"
    p.write_bytes(b"P5 # made elsewhere\n  2\t2 # dims\n255\n\x00\x01\x02\x03")
    raw = read_netpbm(p)
    assert raw.data.tolist() == [[0, 1], [2, 3]]
    assert raw.pattern is CfaPattern.GRBG


@settings(max_examples=30, deadline=None)
@given(st.tuples(st.integers(1, 4), st.integers(1, 4)).flatmap(
    lambda hw: arrays(np.uint16, (2 * hw[0], 2 * hw[1], 3), elements=st.integers(0, 65535))))
def test_ppm_roundtrip_16bit(data):
    import tempfile
    rgb = RgbImage(data, 65535)
    with tempfile.TemporaryDirectory() as d:
        write_ppm(Path(d) / "x.ppm", rgb)
        assert read_ppm(Path(d) / "x.ppm") == rgb


@pytest.mark.parametrize("buf,msg", [
    (b"P5\n2 2\n255\n\x00", "truncated"),
    (b"P5\n2 2\n", "truncated netpbm header|missing whitespace"),
    (b"P3\n2 2\n255\n0000", "unsupported"),
    (b"P5\n2 x\n255\n\x00\x00\x00\x00", "non-numeric"),
    (b"P5\n2 2\n70000\n", "maxval"),
    (b"P5\n2 2\n15\n\x00\x00\x00\x10", "exceeds maxval"),
])
def test_malformed(tmp_path, buf, msg):
    p = tmp_path / "bad.pgm"
    p.write_bytes(buf)
    with pytest.raises(NetpbmError, match=msg):
        read_netpbm(p)


def test_kind_mismatch(tmp_path):
    write_ppm(tmp_path / "c.ppm", RgbImage(np.zeros((2, 2, 3), np.uint8)))
    with pytest.raises(NetpbmError, match="P5"):
        read_pgm(tmp_path / "c.ppm")
    write_pgm(tmp_path / "r.pgm", RawImage(np.zeros((2, 2), np.uint8)))
    with pytest.raises(NetpbmError, match="P6"):
        read_ppm(tmp_path / "r.pgm")


def test_ppm_header():
    rgb = RgbImage(np.zeros((2, 2, 3), np.uint8))
    assert encode_ppm(rgb).startswith(b"P6\n2 2\n255\n")


def test_png_dispatch(tmp_path):
    Image = pytest.importorskip("PIL.Image")
    arr = np.arange(2 * 4 * 3, dtype=np.uint8).reshape(2, 4, 3)
    Image.fromarray(arr).save(tmp_path / "x.png")
    img = read_image(tmp_path / "x.png")
    assert isinstance(img, RgbImage)
    assert np.array_equal(img.data, arr)
