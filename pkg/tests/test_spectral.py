import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polyrec.arcs import ArcSystem
from polyrec.core import GridSet, curve_point, grid_shift_intersect_count
from polyrec.errors import ContractViolation
from polyrec.spectral import (
    Box,
    BoxRegion,
    autocorrelation,
    average_count_identity,
    box_region_mass,
    major_box_region,
    omega_region,
    plancherel_check,
    riemann_mass,
)
from polyrec.weyl import t_lambda


def random_grid(k, M, density, seed):
    rng = np.random.default_rng(seed)
    return GridSet(rng.random((M,) * k) < density)


def brute_power(B, alpha):
    """|Σ_b e^{-2πi b·α}|² by direct summation."""
    pts = B.members()
    return abs(np.exp(-2j * np.pi * pts @ np.asarray(alpha, dtype=float)).sum()) ** 2


@given(st.integers(1, 2), st.integers(1, 6), st.integers(0, 10**6))
def test_autocorrelation_dense_and_sparse_agree(k, M, seed):
    B = random_grid(k, M, 0.5, seed)
    dense = autocorrelation(B)
    sparse = autocorrelation(B, dense_limit=0)
    for d in itertools.product(range(-M + 1, M), repeat=k):
        assert dense[d] == sparse[d] == grid_shift_intersect_count(B, d)


def test_identity_example():
    # [1,10] in one dimension with λ=0, μ=2: (9 + 8)/2
    res = average_count_identity(GridSet.full(1, 10), 0, 2)
    assert res.direct == Fraction(17, 2)
    assert abs(res.quadrature - 8.5) < 1e-9


def test_identity_rejects_coarse_grid():
    with pytest.raises(ContractViolation):
        average_count_identity(GridSet.full(2, 4), 1, 2, grid=(8, 8))


def test_plancherel_exact():
    B = random_grid(2, 9, 0.4, 1)
    chk = plancherel_check(B)
    assert chk.relative_error < 1e-12


def test_full_torus_mass_is_cardinality():
    B = random_grid(2, 7, 0.5, 4)
    assert box_region_mass(B, BoxRegion.full_torus(2)) == pytest.approx(B.cardinality, rel=1e-12)


def test_box_mass_against_fine_quadrature():
    # oracle: tensor Gauss-Legendre on the box, integrand by direct summation
    B = random_grid(2, 5, 0.5, 2)
    box = Box((Fraction(1, 10), Fraction(7, 8)), (Fraction(1, 20), Fraction(1, 9)))
    region = BoxRegion(2, (box,))
    x, w = np.polynomial.legendre.leggauss(60)
    total = 0.0
    for (xi, wi), (yj, wj) in itertools.product(zip(x, w), zip(x, w)):
        a = (0.1 + 0.05 * xi, 7 / 8 + yj / 9)
        total += wi * wj * brute_power(B, a)
    total *= 0.05 * (1 / 9)
    assert box_region_mass(B, region) == pytest.approx(total, rel=1e-10)


def test_box_straddling_zero():
    B = random_grid(1, 8, 0.5, 5)
    straddle = BoxRegion(1, (Box((Fraction(0),), (Fraction(1, 10),)),))
    split = BoxRegion(
        1,
        (
            Box((Fraction(1, 20),), (Fraction(1, 20),)),
            Box((Fraction(19, 20),), (Fraction(1, 20),)),
        ),
    )
    assert box_region_mass(B, straddle) == pytest.approx(box_region_mass(B, split), rel=1e-12)


def test_pulled_back_mass_against_riemann():
    B = random_grid(2, 10, 0.5, 8)
    region = BoxRegion(2, (Box((Fraction(1, 3), Fraction(1, 4)), (Fraction(1, 8), Fraction(1, 8))),),
                       t_lambda(2, 2))
    exact = box_region_mass(B, region)
    approx = riemann_mass(B, region, Fraction(1, 1024))
    assert approx == pytest.approx(exact, rel=0.02)


def test_omega_mass_is_outer_minus_inner():
    B = random_grid(1, 16, 0.5, 3)
    sys = ArcSystem.build(Fraction(1, 2), 1, 8, 8)
    outer = box_region_mass(B, major_box_region(sys.q, sys.outer.L, 1))
    inner = box_region_mass(B, major_box_region(sys.q, sys.inner.L, 1))
    assert box_region_mass(B, omega_region(sys)) == pytest.approx(outer - inner, rel=1e-12)


def test_overlapping_boxes_rejected():
    b = Box((Fraction(0),), (Fraction(1, 4),))
    with pytest.raises(ContractViolation):
        BoxRegion(1, (b, Box((Fraction(1, 8),), (Fraction(1, 4),))))


def test_riemann_resolution_guard():
    B = random_grid(1, 8, 0.5, 0)
    region = BoxRegion(1, (Box((Fraction(0),), (Fraction(1, 100),)),))
    with pytest.raises(ContractViolation):
        riemann_mass(B, region, Fraction(1, 100))
