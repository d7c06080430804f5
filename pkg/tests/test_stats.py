import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emistrip.metrics import TooFewSamples, ZeroVariance, welch_t_test
from emistrip.metrics.stats import betainc, t_two_sided_p

special = pytest.importorskip("scipy.special")
scipy_stats = pytest.importorskip("scipy.stats")


def test_equal_samples():
    r = welch_t_test([1, 2, 3], [1, 2, 3])
    assert r.t_statistic == 0 and r.p_value == 1.0
    assert not r.significant()


def test_worked_example():
    r = welch_t_test([1, 2, 3, 4], [2, 3, 4, 5])
    # means differ by 1, each variance 5/3 over 4 samples
    assert r.t_statistic == pytest.approx(-1 / math.sqrt(5 / 6), abs=1e-15)
    assert r.degrees_of_freedom == pytest.approx(6.0, abs=1e-12)


def test_errors():
    with pytest.raises(ZeroVariance):
        welch_t_test([0, 0], [0, 0])
    with pytest.raises(TooFewSamples):
        welch_t_test([1], [1, 2])


def test_one_constant_sample_is_fine():
    r = welch_t_test([1, 1, 1], [1, 2, 3])
    assert r.degrees_of_freedom == pytest.approx(2.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 50), st.floats(0.05, 50), st.floats(0, 1))
def test_betainc_against_scipy(a, b, x):
    assert betainc(a, b, x) == pytest.approx(float(special.betainc(a, b, x)), rel=1e-9, abs=1e-12)


def test_betainc_domain():
    with pytest.raises(ValueError):
        betainc(0, 1, 0.5)
    with pytest.raises(ValueError):
        betainc(1, 1, 1.5)
    assert betainc(2, 3, 0) == 0 and betainc(2, 3, 1) == 1


@pytest.mark.filterwarnings("ignore:Precision loss:RuntimeWarning")
@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=2, max_size=20),
       st.lists(st.floats(-100, 100), min_size=2, max_size=20))
def test_against_scipy_welch(a, b):
    if np.var(a) == 0 and np.var(b) == 0:
        return
    # skip numerically degenerate cases where the spread is at rounding level
    if max(np.std(a), np.std(b)) < 1e-6:
        return
    r = welch_t_test(a, b)
    ref = scipy_stats.ttest_ind(a, b, equal_var=False)
    assert r.t_statistic == pytest.approx(ref.statistic, rel=1e-9, abs=1e-9)
    assert r.p_value == pytest.approx(ref.pvalue, rel=1e-8, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=2, max_size=8),
       st.lists(st.floats(-10, 10), min_size=2, max_size=8))
def test_swap_symmetry(a, b):
    if max(np.std(a), np.std(b)) < 1e-6:
        return
    r, s = welch_t_test(a, b), welch_t_test(b, a)
    assert r.t_statistic == -s.t_statistic
    assert r.p_value == s.p_value
    assert 0 <= r.p_value <= 1


@pytest.mark.parametrize("t,df", [(0.5, 3), (2.0, 10), (-4.0, 2.5), (10.0, 30), (1e-3, 1)])
def test_p_against_t_distribution(t, df):
    assert t_two_sided_p(t, df) == pytest.approx(2 * scipy_stats.t.sf(abs(t), df), rel=1e-10)
