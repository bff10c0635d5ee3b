import dataclasses
import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polyrec.core import DenseSet, GridSet, Polynomial
from polyrec.errors import ContractViolation, NotFound, SpecParseError
from polyrec.construct import (
    counterexample_build,
    counterexample_verify,
    fiber_counts,
    gen_random_set,
    gen_structured_set,
    lift_bookkeeping,
    lift_finite,
    lift_mapping_holds,
    make_set,
    verify_lift_inclusion,
)

SQUARE = Polynomial((0, 1))


def brute_minimal_a(P, L):
    """Oracle: smallest a with P strictly increasing on [aL, 10^4] and 2P(aL) >= P((a+1)L)."""
    for a in itertools.count(1):
        n0 = a * L
        if all(P(n + 1) > P(n) for n in range(n0, 10**4)) and P(n0) >= 1 and 2 * P(n0) >= P(n0 + L):
            return a


def test_counterexample_examples():
    d = counterexample_build(SQUARE, 2)
    assert (d.a, d.M, d.period, d.block) == (3, 36, 108, (37, 72))
    d = counterexample_build(Polynomial((1,)), 1)
    assert (d.a, d.M, d.period, d.block) == (1, 1, 3, (2, 2))
    with pytest.raises(ContractViolation):
        counterexample_build(Polynomial((0, -1)), 2)


@pytest.mark.parametrize("coeffs", [(0, 1), (0, 0, 1), (1, 1), (-5, 1), (3, -2, 1)])
@pytest.mark.parametrize("L", [1, 2, 5])
def test_counterexample_minimal_a(coeffs, L):
    P = Polynomial(coeffs)
    assert counterexample_build(P, L).a == brute_minimal_a(P, L)


def test_counterexample_verify_and_perturbation():
    d = counterexample_build(SQUARE, 2)
    assert counterexample_verify(d, SQUARE, 2, 3)
    assert not counterexample_verify(dataclasses.replace(d, block=(36, 72)), SQUARE, 2, 3)
    assert counterexample_verify(d, SQUARE, 0, 3)


@pytest.mark.parametrize("coeffs", [(0, 1), (0, 0, 1), (1, 1)])
def test_counterexample_density_one_third(coeffs):
    d = counterexample_build(Polynomial(coeffs), 3)
    A = d.materialize(d.period * 4)
    assert A.density == Fraction(1, 3)


def brute_fibers(P, n_prime):
    out = {}
    for b in itertools.product(range(-n_prime, n_prime + 1), repeat=P.degree):
        v = sum(c * x for c, x in zip(P.coeffs, b))
        out[v] = out.get(v, 0) + 1
    return out


@pytest.mark.parametrize("coeffs", [(1,), (2,), (0, 1), (1, -2), (0, 3)])
def test_fiber_counts(coeffs):
    P = Polynomial(coeffs)
    counts, lo = fiber_counts(P, 4)
    got = {lo + i: int(c) for i, c in enumerate(counts) if c}
    assert got == brute_fibers(P, 4)


def test_lift_interval_example():
    A = DenseSet.from_members(20, range(2, 21, 2))
    P = Polynomial((2,))
    lift = lift_finite(A, P, Fraction(1, 10), 5, tile_side=10)
    assert lift.j == 0 and lift.modulus == 2
    assert list(lift.B.members().ravel()) == list(range(1, 11))
    assert verify_lift_inclusion(A, P, Fraction(1, 10), 5, lift)
    assert lift_mapping_holds(A, P, lift)


def test_lift_square_product_density():
    A = gen_random_set(30, Fraction(1, 2), 1)
    q_size, b_size = lift_bookkeeping(A, SQUARE, 0, 60)
    assert Fraction(b_size, q_size) == A.density


def test_lift_requires_nonempty():
    with pytest.raises(ContractViolation):
        lift_finite(DenseSet.empty(10), SQUARE, Fraction(1, 10), 3)


def test_corrupted_lift_detected():
    A = DenseSet.from_members(40, range(2, 41, 2))
    P = Polynomial((1,))
    lift = lift_finite(A, P, Fraction(1, 10), 2, tile_side=4)
    bad = dataclasses.replace(lift, B=GridSet.full(1, 40))
    assert not verify_lift_inclusion(A, P, Fraction(1, 10), 2, bad)
    assert verify_lift_inclusion(A, P, Fraction(1, 10), 0, bad)


def test_lift_not_found_reported():
    # with N′ = 1 no tile of side 2 fits inside Q
    A = DenseSet.from_members(8, [1, 3, 5, 7, 8])
    with pytest.raises(NotFound):
        lift_finite(A, Polynomial((1,)), Fraction(1, 100), 3, tile_side=2, n_prime=1)


def test_generators():
    assert gen_random_set(20, 0, 1).cardinality == 0
    assert gen_random_set(20, 1, 1) == DenseSet.full(20)
    assert list(gen_structured_set(20, "ap:5+2").members()) == [2, 7, 12, 17]
    assert list(gen_structured_set(10, "interval:3-5").members()) == [3, 4, 5]
    u = gen_structured_set(12, "union(ap:6+0,union(interval:1-2,ap:12+7))")
    assert list(u.members()) == [1, 2, 6, 7, 12]
    assert make_set("random:1/3", 50, 9) == gen_random_set(50, Fraction(1, 3), 9)


@pytest.mark.parametrize("spec", ["ap:5", "interval:3", "union(ap:2+0)", "ap:0+1", "foo", "ap:2+0x"])
def test_bad_specs(spec):
    with pytest.raises(SpecParseError):
        gen_structured_set(10, spec)


@given(st.integers(1, 500), st.fractions(0, 1), st.integers(0, 2**32))
def test_random_set_reproducible(N, delta, seed):
    assert gen_random_set(N, delta, seed) == gen_random_set(N, delta, seed)
