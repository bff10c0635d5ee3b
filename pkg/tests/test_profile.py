from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polyrec.construct import make_set
from polyrec.core import DenseSet, GridSet, Polynomial
from polyrec.errors import ContractViolation
from polyrec.profile import (
    gap_stats,
    is_optimal,
    khintchine_experiment,
    optimal_returns,
    profile_direct,
    profile_fft,
    profile_grid,
)


def test_interval_profile_squares():
    A = DenseSet.full(100)
    prof = profile_direct(A, Polynomial((0, 1)), 3)
    assert list(prof.counts) == [100, 99, 96, 91]
    assert profile_fft(A, Polynomial((0, 1)), 3) == prof


@given(
    st.integers(1, 300).flatmap(lambda N: st.tuples(st.just(N), st.sets(st.integers(1, N)))),
    st.lists(st.integers(-3, 3), min_size=1, max_size=3).filter(lambda c: c[-1] != 0),
    st.integers(0, 20),
)
def test_fft_profile_equals_direct(data, coeffs, L):
    N, members = data
    A = DenseSet.from_members(N, members)
    P = Polynomial(tuple(coeffs))
    assert profile_fft(A, P, L) == profile_direct(A, P, L)


def test_grid_profile_counts():
    B = GridSet.full(2, 5)
    prof = profile_grid(B, 2)
    # γ(1) = (1,1) leaves a 4x4 overlap, γ(2) = (2,4) a 3x1 overlap
    assert list(prof.counts) == [25, 16, 3]


def test_is_optimal_is_strict():
    # count/U = 1/4 = (1/2)^2 - 0 is not > (1/2)^2 - 0, but ε > 0 is required anyway
    assert not is_optimal(25, 50, 100, Fraction(0))
    assert is_optimal(25, 50, 100, Fraction(1, 100))
    assert not is_optimal(15, 50, 100, Fraction(1, 10))  # 0.15 vs 0.15 exactly


def test_full_set_all_returns():
    A = DenseSet.full(50)
    R = optimal_returns(profile_direct(A, Polynomial((1,)), 3), Fraction(1, 10))
    assert R.times == (0, 1, 2, 3)


def test_returns_reject_bad_epsilon():
    prof = profile_direct(DenseSet.full(5), Polynomial((1,)), 1)
    for eps in (0, Fraction(3, 2)):
        with pytest.raises(ContractViolation):
            optimal_returns(prof, eps)


@given(st.sets(st.integers(0, 30)), st.integers(0, 30))
def test_gap_stats_properties(times, L):
    from polyrec.profile import ReturnTimeSet

    times = tuple(sorted(t for t in times if t <= L))
    stats = gap_stats(ReturnTimeSet(Fraction(1, 10), times, L))
    assert stats.count == len(times)
    assert stats.density == Fraction(len(times), L + 1)
    assert 0 <= stats.max_gap <= L + 1
    if not times:
        assert stats.max_gap == L + 1


def test_experiment_is_reproducible():
    a = khintchine_experiment("random:1/2", 400, Polynomial((0, 1)), Fraction(1, 20), 3, 7)
    b = khintchine_experiment("random:1/2", 400, Polynomial((0, 1)), Fraction(1, 20), 3, 7)
    assert a.to_dict() == b.to_dict()
    assert a.range_end == 20 and len(a.rows) == 3


def test_structured_progression_returns():
    # A = 5Z ∩ [1, 1000]: n with 5 | n^2 keep all of A, the others lose everything
    A = make_set("ap:5+0", 1000, 0)
    R = optimal_returns(profile_fft(A, Polynomial((0, 1)), 25), Fraction(1, 100))
    assert R.times == (0, 5, 10, 15, 20, 25)
