"""Lifting a 1-D set to the moment curve, the periodic counterexample, and set generators."""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import (
    DenseSet,
    GridSet,
    Polynomial,
    as_fraction,
    curve_point,
    eval_poly,
    grid_shift_intersect_count,
    residue_split,
    shift_intersect_count,
)
from .errors import ContractViolation, NotFound, ResourceLimit, SpecParseError
from .profile import is_optimal

LIFT_BUDGET = 2**24
COUNTEREXAMPLE_SEARCH_BOUND = 10**5


# -- lifting ---------------------------------------------------------------------


def linear_form(P: Polynomial, b) -> int:
    """𝒫(b) = c_1 b_1 + ... + c_k b_k, so that 𝒫(γ(n)) = P(n)."""
    return sum(c * int(x) for c, x in zip(P.coeffs, b))


@dataclass(frozen=True, eq=False)
class LiftResult:
    """A verified lift of A ⊆ [1, N] to a set B ⊆ [1, M]^k.

    B = {u ∈ [1, M]^k : 𝒫(x + u) + j ∈ A_j}. The counts record the pipeline
    B′ ⊆ Q (all of [-N′, N′]^k), B″ ⊆ Q′ (the union of admissible tiles).
    """

    j: int
    modulus: int
    origin: tuple[int, ...]
    B: GridSet
    tile_side: int
    n_prime: int
    q_size: int
    b_prime_size: int
    tiles: int
    q_prime_size: int
    b_double_prime_size: int
    candidates_tried: int

    def to_dict(self) -> dict:
        return {
            "j": self.j,
            "modulus": self.modulus,
            "origin": list(self.origin),
            "tile_side": self.tile_side,
            "n_prime": self.n_prime,
            "lifted_cardinality": self.B.cardinality,
            "q_size": self.q_size,
            "b_prime_size": self.b_prime_size,
            "tiles": self.tiles,
            "q_prime_size": self.q_prime_size,
            "b_double_prime_size": self.b_double_prime_size,
            "candidates_tried": self.candidates_tried,
        }


def fiber_counts(P: Polynomial, n_prime: int) -> tuple[np.ndarray, int]:
    """counts[v - lo] = #{b ∈ [-N′, N′]^k : 𝒫(b) = v}, returned with lo."""
    counts = np.ones(1, dtype=np.int64)
    lo = 0
    if (2 * n_prime + 1) ** P.degree >= 2**62:
        raise ResourceLimit("fiber counts overflow 64-bit integers")
    for c in P.coeffs:
        axis = np.zeros(2 * abs(c) * n_prime + 1, dtype=np.int64)
        # c = 0 sends the whole axis to one value
        np.add.at(axis, abs(c) * (np.arange(-n_prime, n_prime + 1) + n_prime), 1)
        counts = np.convolve(counts, axis)
        lo -= abs(c) * n_prime
    return counts, lo


def lift_bookkeeping(A: DenseSet, P: Polynomial, j: int, n_prime: int) -> tuple[int, int]:
    """(|Q|, |B′|) with Q = {b ∈ [-N′,N′]^k : 𝒫(b) + j ∈ [1, N]} and B′ = {b ∈ Q : 𝒫(b) + j ∈ A_j}."""
    counts, lo = fiber_counts(P, n_prime)
    N = A.universe_size
    m = P.content

    def count_at(v: int) -> int:
        i = v - lo
        return int(counts[i]) if 0 <= i < len(counts) else 0

    q_size = sum(count_at(v - j) for v in range(1, N + 1))
    b_size = sum(count_at(int(a) - j) for a in A.members() if int(a) % m == j)
    return q_size, b_size


def _lifted_returns(B: GridSet, eps: Fraction, L: int) -> list[int]:
    k = B.dimension
    return [
        n
        for n in range(L + 1)
        if is_optimal(grid_shift_intersect_count(B, curve_point(k, n)), B.cardinality, B.volume, eps)
    ]


def _base_returns(A: DenseSet, P: Polynomial, eps: Fraction, L: int) -> set[int]:
    N = A.universe_size
    return {
        n
        for n in range(L + 1)
        if is_optimal(shift_intersect_count(A, eval_poly(P, n)), A.cardinality, N, eps)
    }


def _inclusion_holds(B: GridSet, base: set[int], eps: Fraction, L: int) -> bool:
    return all(n in base for n in _lifted_returns(B, eps / 2, L))


def lift_finite(
    A: DenseSet,
    P: Polynomial,
    eps,
    L: int,
    n_prime: int | None = None,
    tile_side: int | None = None,
    tile_eta=None,
) -> LiftResult:
    """Search residues j and tiles x for a lift whose return times embed in those of A.

    The tile side defaults to max(1, ⌊η N / m⌋) with η = ε/(20k), and N′ to
    (1 + Σ|c_i|) N. Candidates are tried by increasing j and then by tile
    origin in lexicographic order; the first one that passes the inclusion
    check for every n ∈ [0, L] is returned.
    """
    eps = as_fraction(eps)
    if A.cardinality == 0:
        raise ContractViolation("A must be nonempty")
    if not 0 < eps <= 1 or L < 0:
        raise ContractViolation(f"need 0 < ε <= 1 and L >= 0, got ε={eps}, L={L}")
    k, m, N = P.degree, P.content, A.universe_size
    if n_prime is None:
        n_prime = (1 + sum(abs(c) for c in P.coeffs)) * N
    if tile_side is None:
        eta = as_fraction(tile_eta) if tile_eta is not None else eps / (20 * k)
        tile_side = max(1, math.floor(eta * N / m))
    if tile_side < 1 or n_prime < 1:
        raise ContractViolation("tile side and N′ must be positive")
    span = 2 * n_prime + 1
    if span**k > LIFT_BUDGET:
        raise ResourceLimit(f"lift box of {span}^{k} cells exceeds the budget")

    coords = np.arange(-n_prime, n_prime + 1, dtype=np.int64)
    values = np.zeros((span,) * k, dtype=np.int64)
    for axis, c in enumerate(P.coeffs):
        shape = [1] * k
        shape[axis] = span
        values = values + c * coords.reshape(shape)

    base = _base_returns(A, P, eps, L)
    split = residue_split(A, P)
    # tile origins x ∈ (tile_side Z)^k with x + [1, tile_side]^k ⊆ [-N′, N′]^k
    starts = [x for x in range(-n_prime - 1, n_prime - tile_side + 1) if x % tile_side == 0]
    tried = 0
    for j in range(m):
        Aj = split.classes[j].indicator()
        in_range = (values + j >= 1) & (values + j <= N)
        member = np.zeros(values.shape, dtype=bool)
        member[in_range] = Aj[values[in_range] + j - 1]
        q_size = int(in_range.sum())
        b_prime = int(member.sum())
        admissible = []
        for x in itertools.product(starts, repeat=k):
            idx = tuple(slice(xi + 1 + n_prime, xi + 1 + n_prime + tile_side) for xi in x)
            if in_range[idx].all():
                admissible.append((x, idx))
        b_second = sum(int(member[idx].sum()) for _, idx in admissible)
        for x, idx in admissible:
            B = GridSet(member[idx].copy())
            if B.cardinality == 0:
                continue
            tried += 1
            if _inclusion_holds(B, base, eps, L):
                return LiftResult(
                    j=j,
                    modulus=m,
                    origin=tuple(int(v) for v in x),
                    B=B,
                    tile_side=tile_side,
                    n_prime=n_prime,
                    q_size=q_size,
                    b_prime_size=b_prime,
                    tiles=len(admissible),
                    q_prime_size=len(admissible) * tile_side**k,
                    b_double_prime_size=b_second,
                    candidates_tried=tried,
                )
    raise NotFound(f"no residue and tile gave a valid lift ({tried} nonempty candidates tried)")


def verify_lift_inclusion(A: DenseSet, P: Polynomial, eps, L: int, lift: LiftResult) -> bool:
    """Every n ∈ [0, L] that is ε/2-optimal for the lifted set is ε-optimal for A."""
    eps = as_fraction(eps)
    return _inclusion_holds(lift.B, _base_returns(A, P, eps, L), eps, L)


def lift_mapping_holds(A: DenseSet, P: Polynomial, lift: LiftResult) -> bool:
    """Every u in the lifted set has 𝒫(x + u) + j in A_j."""
    m = lift.modulus
    for u in lift.B.members():
        v = linear_form(P, [x + int(c) for x, c in zip(lift.origin, u)]) + lift.j
        if v % m != lift.j % m or v not in A:
            return False
    return True


# -- periodic counterexample -------------------------------------------------------


@dataclass(frozen=True)
class PeriodicSetDescriptor:
    """A = A + 3M with A ∩ [1, 3M] = [M+1, 2M]; returns fail on [λ_j, λ_j + L], λ_j = 3Mj + aL."""

    a: int
    M: int
    L: int
    period: int
    block: tuple[int, int]

    def lam(self, j: int) -> int:
        return self.period * j + self.a * self.L

    @property
    def lambda_formula(self) -> str:
        return f"{self.period}*j+{self.a * self.L}"

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "M": self.M,
            "L": self.L,
            "period": self.period,
            "block": list(self.block),
            "lambda_formula": self.lambda_formula,
        }

    def contains(self, n) -> np.ndarray:
        r = np.mod(np.asarray(n, dtype=np.int64) - 1, self.period) + 1
        return (r >= self.block[0]) & (r <= self.block[1])

    def materialize(self, length: int) -> DenseSet:
        return DenseSet.from_indicator(self.contains(np.arange(1, length + 1)))


def _increasing_from(P: Polynomial) -> int:
    """Smallest n0 >= 0 with P(n+1) > P(n) for every integer n >= n0."""
    # D(n) = P(n+1) - P(n) as coefficients d_0..d_{k-1} of n^0..n^{k-1}
    k = P.degree
    full = [0, *P.coeffs]
    d = [0] * k
    for i, c in enumerate(full):
        for t in range(i):
            d[t] += c * math.comb(i, t)
    lead = d[-1]
    if lead <= 0:
        raise ContractViolation("P must have a positive leading coefficient")
    # every real root of D lies below the Cauchy bound
    bound = 1 + math.ceil(max((Fraction(abs(x), lead) for x in d[:-1]), default=Fraction(0)))
    n0 = bound
    while n0 > 0 and sum(c * (n0 - 1) ** t for t, c in enumerate(d)) > 0:
        n0 -= 1
    return n0


def counterexample_build(
    P: Polynomial, L: int, search_bound: int = COUNTEREXAMPLE_SEARCH_BOUND
) -> PeriodicSetDescriptor:
    """Least a >= 1 with P increasing on [aL, ∞) and 2P(aL) >= P((a+1)L)."""
    if P.leading <= 0:
        raise ContractViolation("P must have a positive leading coefficient")
    if L < 1:
        raise ContractViolation(f"L must be >= 1, got {L}")
    n0 = _increasing_from(P)
    for a in range(max(1, -(-n0 // L)), search_bound + 1):
        M = P(a * L)
        if M >= 1 and 2 * M >= P((a + 1) * L):
            return PeriodicSetDescriptor(a, M, L, 3 * M, (M + 1, 2 * M))
    raise NotFound(f"no valid multiplier a <= {search_bound}")


def counterexample_verify(desc: PeriodicSetDescriptor, P: Polynomial, L: int, j_max: int) -> bool:
    """A ∩ (A + P(n)) = ∅ for every n ∈ [λ_j, λ_j + L], j = 0..j_max.

    Membership of a - P(n) is read from the periodic set, so the check on
    the window [1, 3M(j_max + 2)] sees no artificial boundary.
    """
    if j_max < 0 or L < 0:
        raise ContractViolation("need j_max >= 0 and L >= 0")
    window = np.arange(1, desc.period * (j_max + 2) + 1, dtype=np.int64)
    members = window[desc.contains(window)]
    for j in range(j_max + 1):
        for n in range(desc.lam(j), desc.lam(j) + L + 1):
            shift = P(n) % desc.period
            if desc.contains(members - shift).any():
                return False
    return True


# -- set generators ----------------------------------------------------------------


def gen_random_set(N: int, delta, seed: int) -> DenseSet:
    """Each of 1..N is included independently with probability δ."""
    delta = as_fraction(delta)
    if not 0 <= delta <= 1:
        raise ContractViolation(f"δ must lie in [0, 1], got {delta}")
    rng = np.random.default_rng(seed)
    return DenseSet.from_indicator(rng.random(N) < float(delta))


_TOKEN = re.compile(r"(ap):(-?\d+)\+(-?\d+)|(interval):(-?\d+)-(-?\d+)")


@dataclass(frozen=True)
class _Parser:
    text: str
    pos: list = field(default_factory=lambda: [0])

    def parse(self, N: int) -> np.ndarray:
        mask = self._spec(N)
        if self.pos[0] != len(self.text):
            raise SpecParseError(f"unexpected trailing input at {self.pos[0]}: {self.text!r}")
        return mask

    def _spec(self, N: int) -> np.ndarray:
        t, i = self.text, self.pos[0]
        if t.startswith("union(", i):
            self.pos[0] = i + len("union(")
            left = self._spec(N)
            self._expect(",")
            right = self._spec(N)
            self._expect(")")
            return left | right
        match = _TOKEN.match(t, i)
        if not match:
            raise SpecParseError(f"cannot parse set spec at {i}: {t!r}")
        self.pos[0] = match.end()
        n = np.arange(1, N + 1)
        if match.group(1):
            q, r = int(match.group(2)), int(match.group(3))
            if q < 1:
                raise SpecParseError(f"progression modulus must be >= 1, got {q}")
            return n % q == r % q
        a, b = int(match.group(5)), int(match.group(6))
        return (n >= a) & (n <= b)

    def _expect(self, ch: str) -> None:
        if not self.text.startswith(ch, self.pos[0]):
            raise SpecParseError(f"expected {ch!r} at {self.pos[0]}: {self.text!r}")
        self.pos[0] += 1


def gen_structured_set(N: int, spec: str) -> DenseSet:
    """Sets from ``ap:<q>+<j>``, ``interval:<a>-<b>`` and ``union(<spec>,<spec>)``."""
    return DenseSet.from_indicator(_Parser(spec.replace(" ", "")).parse(N))


def make_set(generator: str, N: int, seed: int) -> DenseSet:
    """``random:<δ>`` draws from the seed; anything else is a structured spec."""
    if generator.startswith("random:"):
        return gen_random_set(N, as_fraction(generator[len("random:") :]), seed)
    return gen_structured_set(N, generator)
