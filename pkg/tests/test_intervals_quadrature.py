import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from canonsys.errors import QuadratureFailure
from canonsys.intervals import Interval, IntervalSet
from canonsys.quadrature import integrate


def test_merge_overlapping_and_touching():
    s = IntervalSet.from_pairs([(0, 1), (0.5, 2), (2, 3), (5, 6)])
    assert [(i.lo, i.hi) for i in s] == [(0, 3), (5, 6)]
    assert s.measure == pytest.approx(4.0)


def test_empty_set_has_zero_measure():
    assert IntervalSet().measure == 0.0
    assert len(IntervalSet()) == 0


def test_clip_and_contains():
    s = IntervalSet.from_pairs([(0, 1), (2, 4)])
    c = s.clip(0.5, 3.0)
    assert c.measure == pytest.approx(1.5)
    assert s.contains(3.0) and not s.contains(1.5)


def test_unbounded_interval():
    iv = Interval(1.0, math.inf)
    assert not iv.bounded and math.isinf(iv.length)


pairs = st.lists(
    st.tuples(st.floats(0, 100), st.floats(0, 10)).map(lambda p: (p[0], p[0] + p[1])),
    max_size=8,
)


@given(pairs, pairs)
def test_inclusion_exclusion(a, b):
    A, B = IntervalSet.from_pairs(a), IntervalSet.from_pairs(b)
    lhs = A.union(B).measure + A.intersect(B).measure
    assert lhs == pytest.approx(A.measure + B.measure, abs=1e-9)


@given(pairs)
def test_measure_bounded_by_sum_of_lengths(a):
    assert IntervalSet.from_pairs(a).measure <= math.fsum(h - l for l, h in a) + 1e-9


def test_quadrature_polynomial_exact():
    assert integrate(lambda x: x**3, 0.0, 2.0) == pytest.approx(4.0, abs=1e-12)


def test_quadrature_integrable_endpoint_singularity():
    # int_0^1 x^{-1/2} = 2
    val = integrate(lambda x: x**-0.5, 0.0, 1.0, tol=1e-8)
    assert val == pytest.approx(2.0, abs=1e-8)


def test_quadrature_reports_depth_exhaustion():
    # x^{-1/2} to 1e-9 needs cells below 2^-60 at the origin
    with pytest.raises(QuadratureFailure):
        integrate(lambda x: x**-0.5, 0.0, 1.0, tol=1e-9)


def test_quadrature_log_squared():
    val = integrate(lambda x: np.log(x) ** 2, 0.0, 1.0, tol=1e-11)
    assert val == pytest.approx(2.0, abs=1e-9)


def test_quadrature_vector_integrand_with_breakpoint():
    f = lambda x: np.stack([np.where(x < 1, 1.0, 3.0), x])
    val = integrate(f, 0.0, 2.0, breakpoints=[1.0])
    assert np.allclose(val, [4.0, 2.0], atol=1e-12)
