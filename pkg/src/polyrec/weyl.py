"""Normalized Weyl sums along the moment curve and the shear T_λ.

Torus points are exact rationals. Phases α·γ(n) are reduced mod 1 in
integer arithmetic over a common denominator, so the only rounding happens
when the reduced phase is handed to the exponential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .core import as_fraction
from .errors import ContractViolation, NotFound


@dataclass(frozen=True)
class TorusPoint:
    """A point of T^k, each coordinate an exact rational in [0, 1)."""

    coords: tuple[Fraction, ...]

    def __post_init__(self):
        coords = tuple(as_fraction(c) % 1 for c in self.coords)
        if not coords:
            raise ContractViolation("a torus point needs at least one coordinate")
        object.__setattr__(self, "coords", coords)

    @classmethod
    def parse(cls, text: str) -> "TorusPoint":
        """Parse comma-separated fractions such as ``1/2,3/4``."""
        return cls(tuple(as_fraction(t) for t in text.split(",")))

    @classmethod
    def zero(cls, k: int) -> "TorusPoint":
        return cls((Fraction(0),) * k)

    @property
    def k(self) -> int:
        return len(self.coords)

    def float_view(self) -> tuple[float, ...]:
        return tuple(float(c) for c in self.coords)

    def __getitem__(self, j: int) -> Fraction:
        return self.coords[j]

    def __str__(self) -> str:
        return ",".join(str(c) for c in self.coords)


def dilate(q: int, alpha: TorusPoint) -> TorusPoint:
    """q∘α = (q α_1, q^2 α_2, ..., q^k α_k)."""
    return TorusPoint(tuple(c * q**j for j, c in enumerate(alpha.coords, start=1)))


def _curve_phases(alpha: TorusPoint, ns: Iterable[int]) -> np.ndarray:
    """α·γ(n) mod 1 for each n, reduced exactly before conversion to float."""
    D = math.lcm(*(c.denominator for c in alpha.coords))
    nums = [c.numerator * (D // c.denominator) for c in alpha.coords]
    out = []
    for n in ns:
        # Horner: sum_j a_j n^j = n (a_1 + n (a_2 + ...)), reduced mod D at every step
        acc = 0
        for a in reversed(nums):
            acc = ((acc + a) * n) % D
        out.append(acc / D)
    return np.array(out, dtype=np.float64)


def _exp_sum(phases: np.ndarray) -> complex:
    # np.sum over a contiguous array reduces pairwise in a fixed order
    return complex(np.sum(np.exp(2j * np.pi * phases)))


def _check_mu(mu: int) -> None:
    if mu < 1:
        raise ContractViolation(f"window length must be >= 1, got {mu}")


def weyl_S(mu: int, alpha: TorusPoint) -> complex:
    """S_μ(α) = (1/μ) Σ_{n=1}^{μ} e(α·γ(n))."""
    _check_mu(mu)
    return _exp_sum(_curve_phases(alpha, range(1, mu + 1))) / mu


def weyl_S_window(lam: int, mu: int, alpha: TorusPoint) -> complex:
    """S_{λ,μ}(α) = (1/μ) Σ_{n=λ+1}^{λ+μ} e(α·γ(n))."""
    _check_mu(mu)
    if lam < 0:
        raise ContractViolation(f"window offset must be >= 0, got {lam}")
    return _exp_sum(_curve_phases(alpha, range(lam + 1, lam + mu + 1))) / mu


def weyl_S_div(lam: int, mu: int, q: int, alpha: TorusPoint) -> complex:
    """S_{λ,μ,q}(α) = (q/μ) Σ e(α·γ(n)) over multiples n of q in (λ, λ+μ]."""
    _check_mu(mu)
    if q < 1:
        raise ContractViolation(f"q must be >= 1, got {q}")
    ns = range((lam // q + 1) * q, lam + mu + 1, q)
    if len(ns) == 0:
        return 0j
    return _exp_sum(_curve_phases(alpha, ns)) * q / mu


@dataclass(frozen=True)
class TLambda:
    """(T_λ)_{ij} = C(j, i) λ^{j-i} for j >= i, else 0 (1-based indices).

    Entries are Python integers, so huge λ stays exact.
    """

    k: int
    lam: int
    entries: tuple[tuple[int, ...], ...]

    def apply(self, alpha: TorusPoint) -> TorusPoint:
        return apply_t_lambda(self, alpha)

    def inverse(self) -> tuple[tuple[int, ...], ...]:
        """Exact integer inverse, by back substitution on the unit upper triangle."""
        k = self.k
        inv = [[0] * k for _ in range(k)]
        for col in range(k):
            for row in range(k - 1, -1, -1):
                target = 1 if row == col else 0
                s = sum(self.entries[row][c] * inv[c][col] for c in range(row + 1, k))
                inv[row][col] = target - s
        return tuple(tuple(r) for r in inv)

    def transpose_inverse_apply(self, d: Sequence[int]) -> tuple[int, ...]:
        """T^{-T} d, the frequency seen by a region pulled back through T."""
        inv = self.inverse()
        return tuple(sum(inv[j][i] * int(d[j]) for j in range(self.k)) for i in range(self.k))

    def determinant(self) -> int:
        return math.prod(self.entries[i][i] for i in range(self.k))


def t_lambda(k: int, lam: int) -> TLambda:
    if k < 1:
        raise ContractViolation(f"dimension must be >= 1, got {k}")
    lam = int(lam)
    rows = []
    for i in range(1, k + 1):
        rows.append(
            tuple(math.comb(j, i) * lam ** (j - i) if j >= i else 0 for j in range(1, k + 1))
        )
    return TLambda(k, lam, tuple(rows))


def apply_t_lambda(T: TLambda, alpha: TorusPoint) -> TorusPoint:
    if alpha.k != T.k:
        raise ContractViolation(f"point has dimension {alpha.k}, matrix has {T.k}")
    a = alpha.coords
    return TorusPoint(
        tuple(sum((T.entries[i][j] * a[j] for j in range(i, T.k)), Fraction(0)) for i in range(T.k))
    )


def curve_phase(alpha: TorusPoint, n: int) -> Fraction:
    """α·γ(n) reduced mod 1, exactly."""
    return sum((c * n**j for j, c in enumerate(alpha.coords, start=1)), Fraction(0)) % 1


def expi(x: Fraction) -> complex:
    """e^{2πix} with x reduced mod 1 before the float conversion."""
    r = float(as_fraction(x) % 1)
    return complex(math.cos(2 * math.pi * r), math.sin(2 * math.pi * r))


@dataclass(frozen=True)
class RelationResiduals:
    max_r1: float
    max_r2: float
    max_r3: float

    def to_dict(self) -> dict:
        return {"max_r1": self.max_r1, "max_r2": self.max_r2, "max_r3": self.max_r3}


def _raw_sum(length: int, alpha: TorusPoint) -> complex:
    """length * S_length(α), with the empty sum for length 0."""
    if length == 0:
        return 0j
    return _exp_sum(_curve_phases(alpha, range(1, length + 1)))


def relation_residuals(
    lam: int, mu: int, q: int, sample_points: Sequence[TorusPoint]
) -> RelationResiduals:
    """Largest discrepancy over the samples between both sides of three exact identities.

    r1: S_{λ,μ} = ((λ+μ)/μ) S_{λ+μ} - (λ/μ) S_λ
    r2: S_{λ,μ}(α) = e(α·γ(λ)) S_μ(T_λ α)
    r3: S_{λ,μ,q}(α) = S_{λ/q,μ/q}(q∘α), which needs q | λ and q | μ
    """
    _check_mu(mu)
    if q < 1 or lam % q or mu % q:
        raise ContractViolation(f"q={q} must divide both λ={lam} and μ={mu}")
    r1 = r2 = r3 = 0.0
    for alpha in sample_points:
        T = t_lambda(alpha.k, lam)
        window = weyl_S_window(lam, mu, alpha)
        rhs1 = (_raw_sum(lam + mu, alpha) - _raw_sum(lam, alpha)) / mu
        rhs2 = expi(curve_phase(alpha, lam)) * weyl_S(mu, apply_t_lambda(T, alpha))
        lhs3 = weyl_S_div(lam, mu, q, alpha)
        rhs3 = weyl_S_window(lam // q, mu // q, dilate(q, alpha))
        r1 = max(r1, abs(window - rhs1))
        r2 = max(r2, abs(window - rhs2))
        r3 = max(r3, abs(lhs3 - rhs3))
    return RelationResiduals(r1, r2, r3)


def random_torus_points(
    k: int, count: int, seed: int, denominator_bits: int = 40
) -> list[TorusPoint]:
    """Reproducible rationals a / 2^bits with a uniform in [0, 2^bits)."""
    rng = np.random.default_rng(seed)
    den = 1 << denominator_bits
    raw = rng.integers(0, den, size=(count, k), dtype=np.uint64)
    return [TorusPoint(tuple(Fraction(int(a), den) for a in row)) for row in raw]


# -- minor-arc scan ---------------------------------------------------------------

_SCAN_BITS = 32
_SCAN_MASK = np.uint64((1 << _SCAN_BITS) - 1)


def _batch_abs_weyl(nums: np.ndarray, mu: int, chunk: int = 256) -> np.ndarray:
    """|S_μ(a / 2^32)| for rows a of ``nums`` (uint64, shape (s, k)).

    Powers n^j and the products a_j n^j wrap mod 2^64; since 2^32 divides 2^64
    the phase numerator mod 2^32 is still exact.
    """
    k = nums.shape[1]
    n = np.arange(1, mu + 1, dtype=np.uint64)
    powers = []
    p = np.ones(mu, dtype=np.uint64)
    for _ in range(k):
        p = (p * n) & _SCAN_MASK
        powers.append(p)
    out = np.empty(nums.shape[0])
    for start in range(0, nums.shape[0], chunk):
        block = nums[start : start + chunk]
        acc = np.zeros((block.shape[0], mu), dtype=np.uint64)
        for j in range(k):
            acc += block[:, j : j + 1] * powers[j][None, :]
        phase = (acc & _SCAN_MASK).astype(np.float64) / float(1 << _SCAN_BITS)
        out[start : start + chunk] = np.abs(np.exp(2j * np.pi * phase).sum(axis=1)) / mu
    return out


@dataclass(frozen=True)
class ScanResult:
    max_abs: float
    argmax_alpha: TorusPoint
    kept: int
    discarded: int

    def to_dict(self) -> dict:
        return {
            "max_abs": self.max_abs,
            "argmax_alpha": str(self.argmax_alpha),
            "kept": self.kept,
            "discarded": self.discarded,
        }


def minor_arc_scan(eta, mu: int, k: int, samples: int, seed: int) -> ScanResult:
    """Largest |S_μ(α)| over random α outside the major arcs 𝔐_{η,μ}.

    Samples are a / 2^32 with a uniform; those inside 𝔐_{η,μ} are dropped.
    Ties for the maximum resolve to the earliest sample, so the result is
    a pure function of the arguments.
    """
    from .arcs import in_frak_M

    if mu < 2:
        raise ContractViolation("the scan needs μ >= 2 (|S_1| = 1 identically)")
    eta = as_fraction(eta)
    rng = np.random.default_rng(seed)
    nums = rng.integers(0, 1 << _SCAN_BITS, size=(samples, k), dtype=np.uint64)
    den = 1 << _SCAN_BITS
    points = [TorusPoint(tuple(Fraction(int(a), den) for a in row)) for row in nums]
    keep = np.array([not in_frak_M(p, eta, mu, k) for p in points], dtype=bool)
    if not keep.any():
        raise NotFound(
            f"all {samples} samples fell inside the major arcs; increase the sample count"
        )
    kept_idx = np.flatnonzero(keep)
    values = _batch_abs_weyl(nums[kept_idx], mu)
    best = int(np.argmax(values))
    return ScanResult(
        max_abs=float(values[best]),
        argmax_alpha=points[kept_idx[best]],
        kept=int(keep.sum()),
        discarded=int((~keep).sum()),
    )
