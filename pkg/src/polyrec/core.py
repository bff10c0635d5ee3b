"""Value types: integer polynomials, the moment curve, finite integer sets.

A ``DenseSet`` packs its occupancy of ``[1, N]`` into a Python integer
(bit ``i`` <-> element ``i + 1``), so a shifted intersection count is a
single big-integer shift, AND and popcount. ``GridSet`` holds a dense
boolean array over ``[1, M]^k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractViolation, ResourceLimit, SpecParseError

INT64_MAX = 2**63 - 1
DEFAULT_GRID_BUDGET = 2**27
MAX_GRID_DIMENSION = 4


def _checked(value: int) -> int:
    if not -INT64_MAX <= value <= INT64_MAX:
        raise OverflowError(f"value {value} exceeds the signed 64-bit range")
    return value


def as_fraction(value, max_denominator: int = 10**12) -> Fraction:
    """Coerce ``value`` to an exact rational.

    Strings such as ``"3/7"`` or ``"0.25"`` and ints are converted exactly.
    Floats are snapped to the nearest fraction with denominator at most
    ``max_denominator`` (continued-fraction convergents), so ``0.3`` becomes
    ``3/10`` rather than its binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise SpecParseError(f"not a rational number: {value!r}") from exc
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ContractViolation(f"non-finite value {value}")
        return Fraction(float(value)).limit_denominator(max_denominator)
    raise TypeError(f"cannot interpret {type(value).__name__} as a rational")


@dataclass(frozen=True)
class Polynomial:
    """P(n) = c_1 n + ... + c_k n^k; ``coeffs[i]`` multiplies n^(i+1).

    There is no constant slot, so P(0) = 0 holds by construction.
    """

    coeffs: tuple[int, ...]

    def __post_init__(self):
        coeffs = tuple(int(c) for c in self.coeffs)
        if not coeffs:
            raise ContractViolation("a polynomial needs at least one coefficient")
        if coeffs[-1] == 0:
            raise ContractViolation("leading coefficient must be nonzero")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def parse(cls, text: str) -> "Polynomial":
        """Parse comma-separated coefficients ``c1,c2,...,ck``."""
        try:
            return cls(tuple(int(t) for t in text.split(",")))
        except ValueError as exc:
            raise SpecParseError(f"bad polynomial coefficients {text!r}") from exc

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    @property
    def leading(self) -> int:
        return self.coeffs[-1]

    @property
    def content(self) -> int:
        """gcd of the coefficients; zero coefficients are ignored."""
        return math.gcd(*self.coeffs)

    def __call__(self, n: int) -> int:
        return eval_poly(self, n)

    def __str__(self) -> str:
        terms = []
        for power, c in enumerate(self.coeffs, start=1):
            if c:
                mono = "n" if power == 1 else f"n^{power}"
                terms.append(mono if c == 1 else f"{c}{mono}")
        return " + ".join(terms)


def eval_poly(P: Polynomial, n: int) -> int:
    """Evaluate P(n) exactly; raise OverflowError outside the int64 range."""
    n = int(n)
    total = 0
    # Horner from the top coefficient; the trailing "* n" supplies the missing constant slot.
    for c in reversed(P.coeffs):
        total = total * n + c
    return _checked(total * n)


def iroot(N: int, k: int) -> int:
    """⌊N^(1/k)⌋ for N >= 0, exactly."""
    if N < 0 or k < 1:
        raise ContractViolation("iroot needs N >= 0 and k >= 1")
    r = int(round(N ** (1.0 / k)))
    while r > 0 and r**k > N:
        r -= 1
    while (r + 1) ** k <= N:
        r += 1
    return r


def curve_point(k: int, n: int) -> tuple[int, ...]:
    """The moment curve (n, n^2, ..., n^k)."""
    if k < 1:
        raise ContractViolation(f"curve dimension must be >= 1, got {k}")
    n = int(n)
    out = []
    power = 1
    for _ in range(k):
        power = _checked(power * n)
        out.append(power)
    return tuple(out)


def _bits_from_indicator(indicator: np.ndarray) -> int:
    packed = np.packbits(np.asarray(indicator, dtype=bool), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def _indicator_from_bits(bits: int, size: int) -> np.ndarray:
    nbytes = (size + 7) // 8
    raw = np.frombuffer(bits.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:size].astype(bool)


@dataclass(frozen=True)
class DenseSet:
    """A subset of [1, N] stored as a bit-packed integer."""

    universe_size: int
    bits: int = 0
    cardinality: int = field(init=False)

    def __post_init__(self):
        if self.universe_size < 1:
            raise ContractViolation("universe size must be positive")
        if self.bits < 0 or self.bits.bit_length() > self.universe_size:
            raise ContractViolation("occupancy bits fall outside [1, N]")
        object.__setattr__(self, "cardinality", self.bits.bit_count())

    @classmethod
    def from_members(cls, N: int, members: Iterable[int]) -> "DenseSet":
        indicator = np.zeros(N, dtype=bool)
        arr = np.fromiter((int(a) for a in members), dtype=np.int64)
        if arr.size and (arr.min() < 1 or arr.max() > N):
            raise ContractViolation(f"members must lie in [1, {N}]")
        indicator[arr - 1] = True
        return cls(N, _bits_from_indicator(indicator))

    @classmethod
    def from_indicator(cls, indicator) -> "DenseSet":
        indicator = np.asarray(indicator, dtype=bool)
        return cls(int(indicator.size), _bits_from_indicator(indicator))

    @classmethod
    def full(cls, N: int) -> "DenseSet":
        return cls(N, (1 << N) - 1)

    @classmethod
    def empty(cls, N: int) -> "DenseSet":
        return cls(N, 0)

    def indicator(self) -> np.ndarray:
        """Boolean array; entry ``i`` says whether ``i + 1`` is a member."""
        return _indicator_from_bits(self.bits, self.universe_size)

    def members(self) -> np.ndarray:
        return np.flatnonzero(self.indicator()) + 1

    @property
    def density(self) -> Fraction:
        return Fraction(self.cardinality, self.universe_size)

    def __len__(self) -> int:
        return self.cardinality

    def __contains__(self, a) -> bool:
        a = int(a)
        return 1 <= a <= self.universe_size and (self.bits >> (a - 1)) & 1 == 1

    def __iter__(self):
        return iter(int(a) for a in self.members())


def shift_intersect_count(A: DenseSet, d: int) -> int:
    """|{a in A : a - d in A}| = |A ∩ (A + d)|; zero once |d| >= N."""
    d = int(d)
    if d >= A.universe_size or d <= -A.universe_size:
        return 0
    if d >= 0:
        return (A.bits & (A.bits << d)).bit_count()
    return (A.bits & (A.bits >> -d)).bit_count()


@dataclass(frozen=True, eq=False)
class GridSet:
    """A subset of [1, M]^k held as a dense boolean array (index = point - 1)."""

    occupancy: np.ndarray
    cardinality: int = field(init=False)

    def __post_init__(self):
        occ = np.array(self.occupancy, dtype=bool)
        if occ.ndim < 1 or occ.ndim > MAX_GRID_DIMENSION:
            raise ContractViolation(
                f"grid dimension must be in [1, {MAX_GRID_DIMENSION}], got {occ.ndim}"
            )
        if len(set(occ.shape)) != 1 or occ.shape[0] < 1:
            raise ContractViolation(f"grid must be a cube, got shape {occ.shape}")
        occ.setflags(write=False)
        object.__setattr__(self, "occupancy", occ)
        object.__setattr__(self, "cardinality", int(occ.sum()))

    @classmethod
    def from_members(
        cls, k: int, M: int, members: Iterable[Sequence[int]], budget: int = DEFAULT_GRID_BUDGET
    ) -> "GridSet":
        occ = np.zeros(_grid_shape(k, M, budget), dtype=bool)
        pts = np.array([tuple(int(c) for c in b) for b in members], dtype=np.int64)
        if pts.size:
            if pts.ndim != 2 or pts.shape[1] != k:
                raise ContractViolation(f"members must be {k}-tuples")
            if pts.min() < 1 or pts.max() > M:
                raise ContractViolation(f"members must lie in [1, {M}]^{k}")
            occ[tuple((pts - 1).T)] = True
        return cls(occ)

    @classmethod
    def full(cls, k: int, M: int, budget: int = DEFAULT_GRID_BUDGET) -> "GridSet":
        return cls(np.ones(_grid_shape(k, M, budget), dtype=bool))

    @classmethod
    def empty(cls, k: int, M: int, budget: int = DEFAULT_GRID_BUDGET) -> "GridSet":
        return cls(np.zeros(_grid_shape(k, M, budget), dtype=bool))

    @property
    def dimension(self) -> int:
        return self.occupancy.ndim

    @property
    def side(self) -> int:
        return self.occupancy.shape[0]

    @property
    def volume(self) -> int:
        return self.side**self.dimension

    def members(self) -> np.ndarray:
        """(|B|, k) array of member coordinates, 1-based."""
        return np.argwhere(self.occupancy) + 1

    def __len__(self) -> int:
        return self.cardinality

    def __eq__(self, other) -> bool:
        return isinstance(other, GridSet) and np.array_equal(self.occupancy, other.occupancy)

    def __hash__(self) -> int:
        return hash((self.occupancy.shape, self.occupancy.tobytes()))


def _grid_shape(k: int, M: int, budget: int) -> tuple[int, ...]:
    if not 1 <= k <= MAX_GRID_DIMENSION:
        raise ContractViolation(f"grid dimension must be in [1, {MAX_GRID_DIMENSION}], got {k}")
    if M < 1:
        raise ContractViolation("grid side must be positive")
    if M**k > budget:
        raise ResourceLimit(f"grid of {M}^{k} cells exceeds the budget of {budget}")
    return (M,) * k


def overlap_slices(side: int, v: Sequence[int]):
    """Index slices (of b, of b - v) for the overlap of [1,M]^k with itself shifted by v.

    Returns None when some |v_j| >= M and the overlap is empty.
    """
    left, right = [], []
    for vj in v:
        vj = int(vj)
        if abs(vj) >= side:
            return None
        if vj >= 0:
            left.append(slice(vj, side))
            right.append(slice(0, side - vj))
        else:
            left.append(slice(0, side + vj))
            right.append(slice(-vj, side))
    return tuple(left), tuple(right)


def grid_shift_intersect_count(B: GridSet, v: Sequence[int]) -> int:
    """|{b in B : b - v in B}|."""
    if len(v) != B.dimension:
        raise ContractViolation(
            f"shift has length {len(v)} but the grid has dimension {B.dimension}"
        )
    slices = overlap_slices(B.side, v)
    if slices is None:
        return 0
    left, right = slices
    return int(np.count_nonzero(B.occupancy[left] & B.occupancy[right]))


@dataclass(frozen=True)
class ResidueSplit:
    modulus: int
    classes: tuple[DenseSet, ...]


def residue_split(A: DenseSet, P: Polynomial) -> ResidueSplit:
    """Split A into the classes A_j = A ∩ (mZ + j), m the content of P."""
    m = P.content
    ind = A.indicator()
    residues = np.arange(1, A.universe_size + 1) % m
    classes = tuple(DenseSet.from_indicator(ind & (residues == j)) for j in range(m))
    return ResidueSplit(m, classes)


# -- text file formats -------------------------------------------------------


def parse_set_text(text: str) -> DenseSet:
    """Parse the ``#N=<int>`` header plus one integer per line."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#N="):
        raise SpecParseError("set file must start with a '#N=<int>' header")
    try:
        N = int(lines[0][3:])
        members = [int(ln) for ln in lines[1:]]
    except ValueError as exc:
        raise SpecParseError(f"malformed set file: {exc}") from exc
    if N < 1 or any(not 1 <= a <= N for a in members):
        raise SpecParseError(f"set members must lie in [1, {N}]")
    return DenseSet.from_members(N, members)


def format_set_text(A: DenseSet) -> str:
    body = "".join(f"{a}\n" for a in A.members())
    return f"#N={A.universe_size}\n{body}"


def parse_grid_text(text: str, budget: int = DEFAULT_GRID_BUDGET) -> GridSet:
    """Parse the ``#k=<int> #M=<int>`` header plus one comma-separated tuple per line."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    header = lines[0].split() if lines else []
    try:
        fields_ = dict(tok.lstrip("#").split("=", 1) for tok in header)
        k, M = int(fields_["k"]), int(fields_["M"])
        members = [tuple(int(t) for t in ln.split(",")) for ln in lines[1:]]
    except (KeyError, ValueError) as exc:
        raise SpecParseError(f"malformed grid file: {exc}") from exc
    if any(len(b) != k or not all(1 <= c <= M for c in b) for b in members):
        raise SpecParseError(f"grid members must be {k}-tuples in [1, {M}]")
    return GridSet.from_members(k, M, members, budget=budget)


def format_grid_text(B: GridSet) -> str:
    body = "".join(",".join(str(int(c)) for c in b) + "\n" for b in B.members())
    return f"#k={B.dimension} #M={B.side}\n{body}"


def read_set(path) -> DenseSet:
    return parse_set_text(Path(path).read_text(encoding="utf-8"))


def write_set(A: DenseSet, path) -> None:
    Path(path).write_text(format_set_text(A), encoding="utf-8")


def read_grid(path, budget: int = DEFAULT_GRID_BUDGET) -> GridSet:
    return parse_grid_text(Path(path).read_text(encoding="utf-8"), budget=budget)


def write_grid(B: GridSet, path) -> None:
    Path(path).write_text(format_grid_text(B), encoding="utf-8")
