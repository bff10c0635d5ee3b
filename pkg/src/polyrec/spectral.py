"""Fourier bookkeeping for grid sets: autocorrelations, exact quadrature, box-region masses.

Conventions: 1̂_B(α) = Σ_m 1_B(m) e^{-2πi m·α}, so
|1̂_B(α)|² = Σ_d r_B(d) e^{-2πi d·α} with r_B(d) = |B ∩ (B + d)|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.fft

from .arcs import ArcSystem, BoxFamily
from .core import GridSet, curve_point, grid_shift_intersect_count
from .errors import ContractViolation, PrecisionError, ResourceLimit
from .weyl import TLambda, t_lambda

DENSE_TABLE_LIMIT = 2**24
PAIR_BUDGET = 2**24
QUADRATURE_BUDGET = 2**24
MASS_WORK_BUDGET = 5 * 10**7
ROUNDING_TOLERANCE = 0.25


@dataclass(frozen=True, eq=False)
class Autocorrelation:
    """r_B(d) for d ∈ [-(M-1), M-1]^k.

    Stored as a dense array offset by M-1 when it fits, else as a dict of
    the nonzero entries.
    """

    cardinality: int
    side: int
    k: int
    table: np.ndarray | None = None
    sparse: dict | None = None

    def __getitem__(self, d: Sequence[int]) -> int:
        d = tuple(int(x) for x in d)
        if any(abs(x) >= self.side for x in d):
            return 0
        if self.table is not None:
            return int(self.table[tuple(x + self.side - 1 for x in d)])
        return self.sparse.get(d, 0)

    def nonzero(self) -> tuple[np.ndarray, np.ndarray]:
        """(offsets, values) of the nonzero entries, offsets lexicographically sorted."""
        if self.table is not None:
            idx = np.argwhere(self.table)
            return idx - (self.side - 1), self.table[tuple(idx.T)].astype(np.int64)
        keys = sorted(self.sparse)
        return (
            np.array(keys, dtype=np.int64).reshape(-1, self.k),
            np.array([self.sparse[d] for d in keys], dtype=np.int64),
        )

    def total(self) -> int:
        return int(self.nonzero()[1].sum())


def autocorrelation(
    B: GridSet, workers: int | None = None, dense_limit: int = DENSE_TABLE_LIMIT
) -> Autocorrelation:
    """Full difference table of B by FFT (dense) or by pair enumeration (sparse)."""
    M, k = B.side, B.dimension
    if (2 * M - 1) ** k > dense_limit:
        n = B.cardinality
        if n * n > PAIR_BUDGET:
            raise ResourceLimit(
                f"difference table of a {M}^{k} grid with {n} members exceeds the budget"
            )
        pts = B.members()
        diffs = (pts[:, None, :] - pts[None, :, :]).reshape(-1, k)
        uniq, counts = np.unique(diffs, axis=0, return_counts=True)
        return Autocorrelation(
            n, M, k, sparse={tuple(int(x) for x in u): int(c) for u, c in zip(uniq, counts)}
        )
    size = [scipy.fft.next_fast_len(2 * M - 1, real=True)] * k
    x = B.occupancy.astype(np.float64)
    spec = scipy.fft.rfftn(x, s=size, workers=workers)
    raw = scipy.fft.irfftn(spec * np.conj(spec), s=size, workers=workers)
    idx = np.arange(-(M - 1), M) % size[0]
    raw = raw[np.ix_(*([idx] * k))]
    rounded = np.rint(raw)
    residue = float(np.max(np.abs(raw - rounded)))
    if residue >= ROUNDING_TOLERANCE:
        raise PrecisionError(f"autocorrelation residue {residue:.3g} is not near an integer")
    return Autocorrelation(B.cardinality, M, k, table=rounded.astype(np.int64))


def fourier_sq_grid(B: GridSet, grid: Sequence[int]) -> np.ndarray:
    """|1̂_B(t/G)|² at every grid point t (each G_j >= M)."""
    if any(g < B.side for g in grid):
        raise ContractViolation(f"grid {tuple(grid)} is smaller than the set side {B.side}")
    F = scipy.fft.fftn(B.occupancy.astype(np.float64), s=list(grid))
    return F.real**2 + F.imag**2


def _check_grid_size(grid: Sequence[int]) -> None:
    if math.prod(grid) > QUADRATURE_BUDGET:
        raise ResourceLimit(f"quadrature grid {tuple(grid)} exceeds {QUADRATURE_BUDGET} points")


@dataclass(frozen=True)
class CountIdentity:
    direct: Fraction
    quadrature: float
    imaginary: float
    grid: tuple[int, ...]

    @property
    def relative_error(self) -> float:
        scale = max(abs(float(self.direct)), 1.0)
        return abs(self.quadrature - float(self.direct)) / scale

    def to_dict(self) -> dict:
        return {
            "direct": str(self.direct),
            "direct_float": float(self.direct),
            "quadrature": self.quadrature,
            "imaginary": self.imaginary,
            "grid": list(self.grid),
            "relative_error": self.relative_error,
        }


def nyquist_grid(M: int, k: int, top: int) -> tuple[int, ...]:
    """Smallest admissible grid: G_j = 2(M - 1 + top^j) + 1."""
    return tuple(2 * (M - 1 + top**j) + 1 for j in range(1, k + 1))


def average_count_identity(
    B: GridSet, lam: int, mu: int, grid: Sequence[int] | None = None
) -> CountIdentity:
    """(1/μ) Σ_{n=λ+1}^{λ+μ} |B ∩ (B + γ(n))| two ways.

    ``direct`` counts shifted intersections exactly. ``quadrature`` averages
    |1̂_B(α)|² S_{λ,μ}(α) over a uniform grid; the integrand is a
    trigonometric polynomial whose frequencies all stay below the grid's
    Nyquist bound, so the average equals the integral.
    """
    if mu < 1 or lam < 0:
        raise ContractViolation(f"need λ >= 0 and μ >= 1, got λ={lam}, μ={mu}")
    M, k = B.side, B.dimension
    floor = nyquist_grid(M, k, lam + mu)
    grid = floor if grid is None else tuple(int(g) for g in grid)
    if len(grid) != k or any(g < f for g, f in zip(grid, floor)):
        raise ContractViolation(f"grid {grid} is below the Nyquist bound {floor}")
    _check_grid_size(grid)

    total = sum(grid_shift_intersect_count(B, curve_point(k, n)) for n in range(lam + 1, lam + mu + 1))
    direct = Fraction(total, mu)

    power = fourier_sq_grid(B, grid)
    S = np.zeros(grid, dtype=np.complex128)
    for n in range(lam + 1, lam + mu + 1):
        term = np.ones((), dtype=np.complex128)
        for j, (g, gn) in enumerate(zip(grid, curve_point(k, n))):
            # exact phase numerator (n^j t) mod G_j
            phase = (np.arange(g, dtype=np.int64) * (gn % g)) % g / g
            shape = [1] * k
            shape[j] = g
            term = term * np.exp(2j * np.pi * phase).reshape(shape)
        S += term
    S /= mu
    avg = np.mean(power * S)
    return CountIdentity(direct, float(avg.real), float(avg.imag), grid)


@dataclass(frozen=True)
class PlancherelCheck:
    lhs: float
    rhs: int

    @property
    def relative_error(self) -> float:
        return abs(self.lhs - self.rhs) / max(self.rhs, 1)


def plancherel_check(B: GridSet, grid: Sequence[int] | None = None) -> PlancherelCheck:
    """Grid average of |1̂_B|² against |B|; exact once every G_j >= 2M - 1."""
    M, k = B.side, B.dimension
    grid = (2 * M - 1,) * k if grid is None else tuple(grid)
    if any(g < 2 * M - 1 for g in grid):
        raise ContractViolation(f"grid {grid} is below the Nyquist bound {2 * M - 1}")
    _check_grid_size(grid)
    return PlancherelCheck(float(np.mean(fourier_sq_grid(B, grid))), B.cardinality)


# -- box regions ---------------------------------------------------------------------


@dataclass(frozen=True)
class Box:
    center: tuple[Fraction, ...]
    half_widths: tuple[Fraction, ...]
    sign: int = 1


def _circle_gap(a: Fraction, b: Fraction) -> Fraction:
    d = (a - b) % 1
    return min(d, 1 - d)


def _boxes_overlap(a: Box, b: Box) -> bool:
    return all(
        _circle_gap(ca, cb) < wa + wb
        for ca, cb, wa, wb in zip(a.center, b.center, a.half_widths, b.half_widths)
    )


@dataclass(frozen=True)
class BoxRegion:
    """A signed union of axis-aligned boxes on T^k, optionally pulled back through T_λ.

    The region's indicator is Σ sign·1_box; with a pull-back the region is
    {α : T_λ α ∈ union}. Boxes of the same sign must be pairwise disjoint
    (up to boundaries). A box may straddle 0: every integrand used here is
    1-periodic, so it is integrated as an interval of the real line.
    """

    k: int
    boxes: tuple[Box, ...]
    pullback: TLambda | None = None
    assume_disjoint: bool = field(default=False, compare=False)

    def __post_init__(self):
        half = Fraction(1, 2)
        for b in self.boxes:
            if len(b.center) != self.k or len(b.half_widths) != self.k:
                raise ContractViolation("box dimension does not match the region")
            if any(not 0 <= w <= half for w in b.half_widths):
                raise ContractViolation("box half-widths must lie in [0, 1/2]")
            if b.sign not in (1, -1):
                raise ContractViolation("box signs must be +1 or -1")
        if self.pullback is not None and self.pullback.k != self.k:
            raise ContractViolation("pull-back matrix dimension does not match the region")
        if not self.assume_disjoint:
            for sign in (1, -1):
                group = [b for b in self.boxes if b.sign == sign]
                for i, a in enumerate(group):
                    for b in group[i + 1 :]:
                        if _boxes_overlap(a, b):
                            raise ContractViolation(f"boxes {a} and {b} overlap")

    @classmethod
    def full_torus(cls, k: int) -> "BoxRegion":
        half = Fraction(1, 2)
        return cls(k, (Box((half,) * k, (half,) * k),))

    @property
    def min_half_width(self) -> Fraction:
        return min(w for b in self.boxes for w in b.half_widths)


def _axis_intervals(spacing: int, width: Fraction) -> list[tuple[Fraction, Fraction]]:
    """Merged 1-D union of [a/spacing - width, a/spacing + width] over all a."""
    if 2 * width * spacing >= 1:
        return [(Fraction(1, 2), Fraction(1, 2))]
    return [(Fraction(a, spacing), width) for a in range(spacing)]


def family_boxes(fam: BoxFamily, sign: int = 1) -> list[Box]:
    """Disjoint boxes whose union is M_{q,L} (axes whose boxes touch merge into the circle)."""
    per_axis = [_axis_intervals(fam.q**j, fam.half_width(j)) for j in range(1, fam.k + 1)]
    count = math.prod(len(a) for a in per_axis)
    if count > MASS_WORK_BUDGET:
        raise ResourceLimit(f"box family with {count} boxes exceeds the budget")
    boxes = [[]]
    for axis in per_axis:
        boxes = [prefix + [iv] for prefix in boxes for iv in axis]
    return [Box(tuple(c for c, _ in b), tuple(w for _, w in b), sign) for b in boxes]


def major_box_region(q: int, L, k: int, pullback: TLambda | None = None) -> BoxRegion:
    return BoxRegion(k, tuple(family_boxes(BoxFamily(q, L, k))), pullback, assume_disjoint=True)


def omega_region(sys: ArcSystem, pulled_back: bool = False) -> BoxRegion:
    """Ω_{η,λ,μ} as outer boxes (+1) and inner boxes (-1); optionally T_λ^{-1}Ω."""
    sys.check_nondegenerate()
    boxes = family_boxes(sys.outer, 1) + family_boxes(sys.inner, -1)
    T = t_lambda(sys.k, sys.lam) if pulled_back else None
    return BoxRegion(sys.k, tuple(boxes), T, assume_disjoint=True)


def _mod1(f: np.ndarray, x: Fraction) -> np.ndarray:
    """(f·x) mod 1 for an integer array f, reduced exactly."""
    num, den = x.numerator, x.denominator
    fmax = int(np.max(np.abs(f))) if f.size else 0
    if f.dtype != object and fmax * (abs(num) + den) < 2**62:
        return ((f * num) % den) / den
    return np.array([(int(v) * num % den) / den for v in f], dtype=np.float64)


def _box_factor(f: np.ndarray, c: Fraction, w: Fraction) -> np.ndarray:
    """∫_{c-w}^{c+w} e^{-2πi f x} dx for each integer frequency f."""
    out = np.empty(f.shape, dtype=np.complex128)
    zero = f == 0
    out[zero] = float(2 * w)
    nz = ~zero
    fz = f[nz]
    sin_part = np.sin(2 * np.pi * _mod1(fz, w))
    phase = np.exp(-2j * np.pi * _mod1(fz, c))
    out[nz] = phase * sin_part / (np.pi * fz.astype(np.float64))
    return out


def _pulled_frequencies(offsets: np.ndarray, T: TLambda) -> list[np.ndarray]:
    """Columns of T^{-T} d for every offset row d, exact."""
    inv = T.inverse()
    k = T.k
    big = max(abs(v) for row in inv for v in row) * (int(np.max(np.abs(offsets))) + 1) * k
    if big < 2**62:
        tinv_t = np.array(inv, dtype=np.int64).T
        freqs = offsets @ tinv_t.T
        return [freqs[:, i] for i in range(k)]
    cols = []
    for i in range(k):
        cols.append(
            np.array(
                [sum(inv[j][i] * int(d[j]) for j in range(k)) for d in offsets], dtype=object
            )
        )
    return cols


def box_region_mass(B: GridSet, region: BoxRegion, ac: Autocorrelation | None = None) -> float:
    """∫_region |1̂_B(α)|² dα = Σ_d r_B(d) ∫_region e^{-2πi d·α} dα, box by box in closed form."""
    if region.k != B.dimension:
        raise ContractViolation("region and set dimensions differ")
    ac = ac or autocorrelation(B)
    offsets, values = ac.nonzero()
    if len(values) * max(len(region.boxes), 1) > MASS_WORK_BUDGET:
        raise ResourceLimit("difference table times box count exceeds the work budget")
    if not region.boxes or not len(values):
        return 0.0
    if region.pullback is None:
        freqs = [offsets[:, j] for j in range(region.k)]
    else:
        freqs = _pulled_frequencies(offsets, region.pullback)
    weights = values.astype(np.float64)
    cache: dict = {}
    total = 0.0
    for box in region.boxes:
        prod = np.ones(len(values), dtype=np.complex128)
        for j, (c, w) in enumerate(zip(box.center, box.half_widths)):
            key = (j, c, w)
            if key not in cache:
                cache[key] = _box_factor(freqs[j], c, w)
            prod = prod * cache[key]
        total += box.sign * float(np.sum(weights * prod).real)
    return total


def riemann_mass(B: GridSet, region: BoxRegion, resolution) -> float:
    """Midpoint Riemann sum of |1̂_B|² against the region indicator.

    ``resolution`` is the grid spacing; it must be at most one eighth of
    the smallest box half-width.
    """
    if region.k != B.dimension:
        raise ContractViolation("region and set dimensions differ")
    if not region.boxes:
        return 0.0
    h = Fraction(resolution)
    if h <= 0 or h > region.min_half_width / 8:
        raise ContractViolation(
            f"resolution {h} is coarser than 1/8 of the smallest half-width {region.min_half_width}"
        )
    k = region.k
    G = max(math.ceil(1 / h), B.side)
    grid = (G,) * k
    _check_grid_size(grid)
    # midpoints (t + 1/2)/G; modulate so the FFT samples there
    x = B.occupancy.astype(np.complex128)
    for j in range(k):
        shape = [1] * k
        shape[j] = B.side
        x = x * np.exp(-1j * np.pi * np.arange(B.side) / G).reshape(shape)
    F = scipy.fft.fftn(x, s=list(grid))
    power = F.real**2 + F.imag**2

    t2 = 2 * np.arange(G, dtype=np.int64) + 1  # midpoint numerators over 2G
    if region.pullback is None:
        coords = [(t2 / (2 * G)).reshape([G if a == j else 1 for a in range(k)]) for j in range(k)]
    else:
        T = region.pullback.entries
        mesh = np.meshgrid(*([t2] * k), indexing="ij")
        coords = []
        for i in range(k):
            acc = np.zeros(grid, dtype=np.int64)
            for j in range(k):
                acc = (acc + (T[i][j] % (2 * G)) * mesh[j]) % (2 * G)
            coords.append(acc / (2 * G))
    indicator = np.zeros(grid)
    for box in region.boxes:
        inside = np.ones((1,) * k, dtype=bool)
        for j, (c, w) in enumerate(zip(box.center, box.half_widths)):
            d = np.abs(coords[j] - float(c)) % 1.0
            inside = inside & (np.minimum(d, 1.0 - d) <= float(w))
        indicator = indicator + box.sign * inside
    return float(np.sum(power * indicator) / G**k)
