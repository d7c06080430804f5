import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emistrip.drops import (
    AdjacentRows, DegenerateStrip, DropSet, DropSetError, Infeasible, NotAscending, OutOfRange,
    dropped_rows_from_positions, parse_drop_text, sample_drop_set, source_rows, strip_count,
    strip_layout, strip_positions, strips_from_positions, validate_drop_set,
)

from conftest import all_valid_drop_sets, odd_shift_rows


def test_validate_ok():
    d = validate_drop_set([10, 20], 100)
    assert d.indices == (10, 20) and d.m == 2 and d.image_height == 100


@pytest.mark.parametrize("idx,exc,bad", [
    ([10, 11], AdjacentRows, 11),
    ([10, 200], OutOfRange, 200),
    ([-1], OutOfRange, -1),
    ([20, 10], NotAscending, 10),
    ([10, 10], NotAscending, 10),
    ([0, 2], DegenerateStrip, 2),
    ([10, 20, 30, 32], DegenerateStrip, 32),
])
def test_validate_errors_name_index(idx, exc, bad):
    with pytest.raises(exc) as info:
        validate_drop_set(idx, 100)
    assert info.value.index == bad
    assert str(bad) in str(info.value)


def test_gap_two_only_collapses_inside_a_strip():
    with pytest.raises(DegenerateStrip):
        validate_drop_set([10, 12, 20, 30], 100)
    # 14 -> 16 lies between two strips, so positions still ascend
    d = validate_drop_set([10, 14, 16, 30], 100)
    assert strip_positions(d) == [10, 12, 14, 26]


def test_collapsed_pair_can_be_allowed():
    d = validate_drop_set([1, 3], 6, allow_collapsed=True)
    assert d.indices == (1, 3)
    with pytest.raises(AdjacentRows):
        validate_drop_set([1, 2], 6, allow_collapsed=True)


@pytest.mark.parametrize("text,expected", [("", ()), ("  ", ()), ("10,20", (10, 20)),
                                           (" 3 , 9 ", (3, 9))])
def test_parse_text(text, expected):
    assert parse_drop_text(text, 100).indices == expected


def test_parse_text_errors():
    with pytest.raises(DropSetError, match="malformed"):
        parse_drop_text("10;20", 100)
    with pytest.raises(AdjacentRows):
        parse_drop_text("4,5", 100)
    assert DropSet((10, 20, 30), 100).to_text() == "10,20,30"


@pytest.mark.parametrize("drops,positions", [
    ([10], [10]),
    ([10, 20, 30, 40], [10, 18, 28, 36]),
    ([5, 11, 15], [5, 9, 13]),
    ([], []),
])
def test_strip_positions_examples(drops, positions):
    d = validate_drop_set(drops, 100)
    assert strip_positions(d) == positions
    assert dropped_rows_from_positions(positions, 100) == d


def test_positions_must_ascend():
    with pytest.raises(NotAscending):
        dropped_rows_from_positions([10, 10], 100)


@pytest.mark.parametrize("positions,height,strips", [
    ([10, 18, 28, 36], 100, ((10, 18), (28, 36))),
    ([50], 100, ((50, 99),)),
    ([], 100, ()),
])
def test_strips_from_positions(positions, height, strips):
    layout = strips_from_positions(positions, height)
    assert layout.strips == strips
    assert layout.n == strip_count(len(positions))


def test_layout_records():
    layout = strip_layout(validate_drop_set([10, 20, 30, 40], 100))
    assert layout.to_records() == [{"start": 10, "end": 18, "height": 9},
                                   {"start": 28, "end": 36, "height": 9}]
    json.dumps(layout.to_records())
    rows = layout.rows()
    assert rows.sum() == 18 and rows[10] and rows[18] and not rows[19]


@pytest.mark.parametrize("m,n", [(0, 0), (1, 1), (2, 1), (3, 2), (29, 15), (30, 15)])
def test_strip_count(m, n):
    assert strip_count(m) == n


def test_strip_count_negative():
    with pytest.raises(ValueError):
        strip_count(-1)


def test_layout_matches_odd_shift_rows_exhaustive():
    # H = 16 keeps the enumeration small; covers every m <= 4
    for d in all_valid_drop_sets(16, 4):
        layout = strip_layout(d)
        rows = np.nonzero(layout.rows())[0].tolist()
        visible = [r for r in rows if r < d.image_height - d.m]
        assert visible == odd_shift_rows(d.indices, d.image_height), d.indices


def test_layout_invariants_exhaustive():
    for d in all_valid_drop_sets(20, 5):
        layout = strip_layout(d)
        assert layout.n == strip_count(d.m)
        flat = [v for s in layout.strips for v in s]
        assert flat == sorted(flat)
        assert all(e >= s for s, e in layout.strips)
        assert all(b[0] > a[1] for a, b in zip(layout.strips, layout.strips[1:]))
        if layout.strips:
            assert layout.strips[-1][1] <= d.image_height - 1


def test_source_rows():
    d = validate_drop_set([1, 4], 6)
    assert source_rows(d).tolist() == [0, 2, 3, 5]
    d = validate_drop_set([1, 3], 6, allow_collapsed=True)
    assert source_rows(d).tolist() == [0, 2, 4, 5]


class TestSampler:
    def test_deterministic(self):
        assert sample_drop_set(5, 200, 42) == sample_drop_set(5, 200, 42)
        assert sample_drop_set(5, 200, 42) != sample_drop_set(5, 200, 43)

    def test_zero_strips(self):
        assert sample_drop_set(0, 50, 1).indices == ()

    def test_tiny_image(self):
        # of the 2-subsets {[0,2],[0,3],[1,3]} only [0,3] keeps the strip from collapsing
        feasible = {(0, 2), (0, 3), (1, 3)}
        for seed in range(20):
            got = sample_drop_set(1, 4, seed).indices
            assert got in feasible and got == (0, 3)

    def test_infeasible(self):
        with pytest.raises(Infeasible):
            sample_drop_set(20, 50, 0, min_gap=2)

    def test_negative(self):
        with pytest.raises(ValueError):
            sample_drop_set(-1, 50, 0)

    def test_uniform_over_valid_sets(self):
        # the sampler should hit every valid even-m set with equal probability
        height = 9
        valid = [d.indices for d in all_valid_drop_sets(height, 2) if d.m == 2]
        rng = np.random.default_rng(7)
        counts = {v: 0 for v in valid}
        trials = 200 * len(valid)
        for _ in range(trials):
            counts[sample_drop_set(1, height, rng).indices] += 1
        expected = trials / len(valid)
        chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
        # generous bound: chi-square with len(valid) - 1 dof
        assert chi2 < 3 * len(valid)

    @settings(max_examples=80, deadline=None)
    @given(st.integers(1, 12), st.integers(0, 2**32 - 1), st.integers(2, 6))
    def test_properties(self, n, seed, min_gap):
        height = 480
        d = sample_drop_set(n, height, seed, min_gap)
        assert d.m == 2 * n
        assert strip_layout(d).n == n
        assert all(b - a >= min_gap for a, b in zip(d.indices, d.indices[1:]))
        assert validate_drop_set(d.indices, height) == d


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 64).flatmap(lambda h: st.tuples(
    st.just(h), st.lists(st.integers(0, h - 1), unique=True, max_size=8).map(sorted))))
def test_bijection_on_whatever_validates(case):
    height, idx = case
    try:
        d = validate_drop_set(idx, height)
    except DropSetError:
        return
    assert dropped_rows_from_positions(strip_positions(d), height) == d
