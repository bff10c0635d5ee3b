"""Rational arc geometry on T^k: q_η, the major boxes M_{q,L}, 𝔐_{η,μ}, and annuli Ω.

Every membership test is an exact rational comparison. Boxes are closed,
so Ω = outer ∖ inner excludes the boundary of the inner family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import as_fraction
from .errors import ContractViolation, ResourceLimit
from .weyl import TorusPoint, apply_t_lambda, t_lambda

MAX_LCM_RANGE = 10_000

# rational enclosure of e, used to certify q_η <= exp(2R) without floats
_E_LOWER = Fraction(2718281828, 10**9)
_E_UPPER = Fraction(2718281829, 10**9)


def _eta(eta) -> Fraction:
    eta = as_fraction(eta)
    if not 0 < eta < 1:
        raise ContractViolation(f"η must lie in (0, 1), got {eta}")
    return eta


def major_range(eta, k: int) -> int:
    """R = ⌊η^{-k}⌋."""
    return math.floor(_eta(eta) ** -k)


def q_eta(eta, k: int) -> int:
    """lcm{1, ..., ⌊η^{-k}⌋}."""
    R = major_range(eta, k)
    if R > MAX_LCM_RANGE:
        raise ResourceLimit(f"lcm over [1, {R}] exceeds the limit {MAX_LCM_RANGE}")
    return math.lcm(*range(1, R + 1))


def q_eta_within_bound(eta, k: int) -> bool:
    """Certify q_η <= exp(2⌊η^{-k}⌋) in exact arithmetic.

    Uses e > 2.718281828; raises if the comparison falls inside the
    enclosure of e (it never has for R <= 300).
    """
    R = major_range(eta, k)
    q = q_eta(eta, k)
    if q <= _E_LOWER ** (2 * R):
        return True
    if q > _E_UPPER ** (2 * R):
        return False
    raise ArithmeticError(f"cannot decide q_η <= exp(2R) at R={R} with this enclosure of e")


def lattice_distance(x: Fraction, denom: int) -> Fraction:
    """Distance on the circle from x to the nearest point of (1/denom)Z.

    Only ⌊x·denom⌋ and its successor are candidates.
    """
    scaled = x * denom
    frac = scaled - math.floor(scaled)
    return min(frac, 1 - frac) / denom


def box_distance(alpha: TorusPoint, q: int, j: int) -> Fraction:
    """min over a_j of |α_j - a_j/q^j| on the circle (j is 1-based)."""
    if not 1 <= j <= alpha.k:
        raise ContractViolation(f"axis {j} outside 1..{alpha.k}")
    return lattice_distance(alpha.coords[j - 1], q**j)


@dataclass(frozen=True)
class BoxFamily:
    """M_{q,L}: α with |α_j - a_j/q^j| <= 1/L^j on every axis, for some a."""

    q: int
    L: Fraction
    k: int

    def __post_init__(self):
        object.__setattr__(self, "L", as_fraction(self.L))
        if self.q < 1 or self.L <= 0 or self.k < 1:
            raise ContractViolation(f"invalid box family q={self.q}, L={self.L}, k={self.k}")

    def half_width(self, j: int) -> Fraction:
        return 1 / self.L**j

    @property
    def degenerate(self) -> bool:
        """Some half-width exceeds 1/2, so the family is all of T^k."""
        return any(self.half_width(j) > Fraction(1, 2) for j in range(1, self.k + 1))


def in_major_box(alpha: TorusPoint, fam: BoxFamily) -> bool:
    if alpha.k != fam.k:
        raise ContractViolation(f"point has dimension {alpha.k}, family has {fam.k}")
    return all(box_distance(alpha, fam.q, j) <= fam.half_width(j) for j in range(1, fam.k + 1))


def in_frak_M(alpha: TorusPoint, eta, mu: int, k: int) -> bool:
    """𝔐_{η,μ}: some q <= η^{-k} has |α_j - a_j/q| <= 1/(η^k μ^j) on all axes.

    The denominator is q on every axis, not q^j.
    """
    eta = _eta(eta)
    if alpha.k != k:
        raise ContractViolation(f"point has dimension {alpha.k}, expected {k}")
    R = major_range(eta, k)
    radii = [1 / (eta**k * Fraction(mu) ** j) for j in range(1, k + 1)]
    for q in range(1, R + 1):
        if all(lattice_distance(c, q) <= r for c, r in zip(alpha.coords, radii)):
            return True
    return False


@dataclass(frozen=True)
class ArcSystem:
    """(η, k, q_η, λ, μ) together with the outer and inner box families of Ω."""

    eta: Fraction
    k: int
    lam: int
    mu: int
    q: int
    R: int

    @classmethod
    def build(cls, eta, k: int, lam: int, mu: int) -> "ArcSystem":
        eta = _eta(eta)
        if not 1 <= mu <= lam:
            raise ContractViolation(f"need 1 <= μ <= λ, got μ={mu}, λ={lam}")
        return cls(eta, k, int(lam), int(mu), q_eta(eta, k), major_range(eta, k))

    @property
    def outer(self) -> BoxFamily:
        return BoxFamily(self.q, self.eta**self.k * self.mu, self.k)

    @property
    def inner(self) -> BoxFamily:
        return BoxFamily(self.q, self.lam / self.eta**self.k, self.k)

    def check_nondegenerate(self) -> None:
        if self.outer.degenerate:
            raise ContractViolation(
                f"outer family M_(q, {self.outer.L}) is degenerate (half-width above 1/2)"
            )


def in_omega(alpha: TorusPoint, sys: ArcSystem) -> bool:
    """α ∈ M_{q_η, η^k μ} ∖ M_{q_η, η^{-k} λ}."""
    sys.check_nondegenerate()
    return in_major_box(alpha, sys.outer) and not in_major_box(alpha, sys.inner)


def in_pulled_back_omega(alpha: TorusPoint, sys: ArcSystem) -> bool:
    """α ∈ T_λ^{-1} Ω, i.e. T_λ α ∈ Ω."""
    return in_omega(apply_t_lambda(t_lambda(sys.k, sys.lam), alpha), sys)


def check_lacunary(eta, k: int, windows: Sequence[tuple[int, int]]) -> None:
    """Raise unless μ_1 >= η^{-k} q_η and μ_j <= λ_j <= η^{2k} μ_{j+1} / 3."""
    eta = _eta(eta)
    if not windows:
        raise ContractViolation("need at least one window")
    q = q_eta(eta, k)
    lam1, mu1 = windows[0]
    if mu1 < q / eta**k:
        raise ContractViolation(f"window 0: μ_1={mu1} is below η^(-k) q_η = {q / eta**k}")
    for i, (lam, mu) in enumerate(windows):
        if not mu <= lam:
            raise ContractViolation(f"window {i}: μ={mu} exceeds λ={lam}")
        if i + 1 < len(windows) and not lam <= eta ** (2 * k) * windows[i + 1][1] / 3:
            raise ContractViolation(
                f"window {i}: λ={lam} exceeds η^(2k) μ_next / 3 = "
                f"{eta ** (2 * k) * windows[i + 1][1] / 3}"
            )


def overlap_count(alpha: TorusPoint, eta, windows: Sequence[tuple[int, int]]) -> int:
    """Number of windows (λ_j, μ_j) with α ∈ T_{λ_j}^{-1} Ω_{η,λ_j,μ_j}."""
    return overlap_counts([alpha], eta, windows)[0]


def overlap_counts(
    alphas: Sequence[TorusPoint], eta, windows: Sequence[tuple[int, int]]
) -> list[int]:
    """``overlap_count`` for many points, building each window's system once."""
    if not alphas:
        return []
    k = alphas[0].k
    check_lacunary(eta, k, windows)
    systems = []
    for lam, mu in windows:
        sys = ArcSystem.build(eta, k, lam, mu)
        sys.check_nondegenerate()
        systems.append((t_lambda(k, lam), sys.outer, sys.inner))
    counts = []
    for alpha in alphas:
        total = 0
        for T, outer, inner in systems:
            beta = apply_t_lambda(T, alpha)
            total += in_major_box(beta, outer) and not in_major_box(beta, inner)
        counts.append(total)
    return counts


@dataclass(frozen=True)
class TrappedAxis:
    i: int
    distance: Fraction
    lower: Fraction
    upper: Fraction


def trapped_bounds(sys: ArcSystem, i: int) -> tuple[Fraction, Fraction]:
    """((1/2)(η^k/λ)^i, (3/2)(1/(η^k μ))^i)."""
    ek = sys.eta**sys.k
    return Fraction(1, 2) * (ek / sys.lam) ** i, Fraction(3, 2) * (1 / (ek * sys.mu)) ** i


def trapped_index(alpha: TorusPoint, sys: ArcSystem) -> TrappedAxis | None:
    """For α ∈ T_λ^{-1}Ω, the lowest axis i whose distance to (1/q^i)Z lies in the trapped band.

    Returns None when α is not in the pulled-back annulus. A member with no
    trapped axis would also yield None, which callers can detect by testing
    membership separately.
    """
    if not sys.eta < Fraction(1, 4 * sys.k**2):
        raise ContractViolation(f"need η < 1/(4k^2), got η={sys.eta} with k={sys.k}")
    if not in_pulled_back_omega(alpha, sys):
        return None
    for i in range(1, sys.k + 1):
        lo, hi = trapped_bounds(sys, i)
        dist = box_distance(alpha, sys.q, i)
        if lo <= dist <= hi:
            return TrappedAxis(i, dist, lo, hi)
    return None
