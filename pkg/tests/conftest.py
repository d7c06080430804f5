from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from emistrip.cfa import RawImage, RgbImage, mosaic
from emistrip.netpbm import read_image

DATA = Path(__file__).parent / "data"

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: list[str] = []
NATURAL = DATA / "natural"

# distinct channel values so a CFA phase flip is always visible
CHANNELS = (200, 50, 120)


def flat_rgb(height: int, width: int, values=CHANNELS, max_value: int = 255) -> RgbImage:
    data = np.empty((height, width, 3), dtype=np.uint8 if max_value <= 255 else np.uint16)
    data[...] = values
    return RgbImage(data, max_value)


def flat_raw(height: int, width: int = 16, pattern="GRBG") -> RawImage:
    return mosaic(flat_rgb(height, width), pattern)


def index_raw(height: int, width: int = 4) -> RawImage:
    """Row r holds the value r everywhere; easy to trace row movement."""
    data = np.repeat(np.arange(height, dtype=np.uint16)[:, None], width, axis=1)
    return RawImage(data, "GRBG", max_value=max(255, height))


def natural_images() -> list[tuple[str, RgbImage]]:
    return [(p.stem, read_image(p)) for p in sorted(NATURAL.glob("*.png"))]


@pytest.fixture(scope="session")
def natural():
    imgs = natural_images()
    if not imgs:
        pytest.skip("natural corpus missing")
    return imgs


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def brute_attack_rows(rows: list, drops, pad_rows: list) -> list:
    """Reference Algorithm 1 on a list of rows: keep rows not dropped, then pad."""
    dropped = set(drops)
    return [r for i, r in enumerate(rows) if i not in dropped] + list(pad_rows)


def odd_shift_rows(drops, height: int) -> list[int]:
    """Attacked rows (above the padding) whose content moved up an odd number of rows."""
    kept = [i for i in range(height) if i not in set(drops)]
    return [y for y, src in enumerate(kept) if (src - y) % 2 == 1]


def all_valid_drop_sets(height: int, max_m: int):
    """Every drop set accepted by the validator, by brute-force enumeration."""
    from itertools import combinations

    from emistrip.drops import DropSetError, validate_drop_set

    for m in range(max_m + 1):
        for combo in combinations(range(height), m):
            if any(b - a < 2 for a, b in zip(combo, combo[1:])):
                continue
            try:
                yield validate_drop_set(combo, height)
            except DropSetError:
                continue


def exhaustive_ap(ranked_dets, truths, iou_threshold):
    """Best all-point AP over every one-to-one matching of one image and class.

    ``ranked_dets`` are in score order. Used as an oracle for the greedy matcher.
    """
    from itertools import permutations

    from emistrip.metrics.detection import ap_from_curve, curve_from_hits, iou

    n_det, n_gt = len(ranked_dets), len(truths)
    eligible = [[iou(d, t) >= iou_threshold for t in truths] for d in ranked_dets]
    best = 0.0
    # assign each detection a truth index or None, truths used at most once
    slots = list(range(n_gt)) + [None] * n_det
    seen = set()
    for perm in permutations(slots, n_det):
        if perm in seen:
            continue
        seen.add(perm)
        if any(j is not None and not eligible[i][j] for i, j in enumerate(perm)):
            continue
        hits = [j is not None for j in perm]
        best = max(best, ap_from_curve(curve_from_hits(hits, n_gt)))
    return best


def has_contention(ranked_dets, truths, iou_threshold) -> bool:
    """True when some truth box is eligible for two or more detections."""
    from emistrip.metrics.detection import iou

    return any(sum(iou(d, t) >= iou_threshold for d in ranked_dets) >= 2 for t in truths)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
