"""Recurrence profiles n -> |A ∩ (A + P(n))| and ε-optimal return times."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
import scipy.fft

from .core import (
    DenseSet,
    GridSet,
    Polynomial,
    as_fraction,
    curve_point,
    eval_poly,
    grid_shift_intersect_count,
    iroot,
    shift_intersect_count,
)
from .errors import ContractViolation, PrecisionError, ResourceLimit

FFT_BUDGET = 2**26
ROUNDING_TOLERANCE = 0.25


@dataclass(frozen=True, eq=False)
class RecurrenceProfile:
    """counts[n] = |A ∩ (A + P(n))| for n = 0..L.

    ``universe_size`` is N for a 1-D set and M^k for a grid set; ``shifts``
    records P(n) (or the first coordinate of γ(n) for grids).
    """

    counts: np.ndarray
    shifts: tuple[int, ...]
    universe_size: int
    set_cardinality: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def range_end(self) -> int:
        return len(self.counts) - 1

    def ratios(self) -> np.ndarray:
        return self.counts / self.universe_size

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RecurrenceProfile)
            and np.array_equal(self.counts, other.counts)
            and self.shifts == other.shifts
            and self.universe_size == other.universe_size
            and self.set_cardinality == other.set_cardinality
        )

    def to_dict(self) -> dict:
        return {
            "counts": [int(c) for c in self.counts],
            "shifts": list(self.shifts),
            "universe_size": self.universe_size,
            "set_cardinality": self.set_cardinality,
        }


def _check_range(L: int) -> None:
    if L < 0:
        raise ContractViolation(f"range end L must be >= 0, got {L}")


def profile_direct(A: DenseSet, P: Polynomial, L: int) -> RecurrenceProfile:
    _check_range(L)
    shifts = tuple(eval_poly(P, n) for n in range(L + 1))
    counts = [shift_intersect_count(A, d) for d in shifts]
    return RecurrenceProfile(np.array(counts), shifts, A.universe_size, A.cardinality)


def autocorrelation_1d(A: DenseSet, workers: int | None = None) -> np.ndarray:
    """r[d] = |A ∩ (A + d)| for d = 0..N-1, via a zero-padded real FFT.

    Raises PrecisionError if any reconstructed value is 0.25 or more away
    from an integer.
    """
    N = A.universe_size
    size = scipy.fft.next_fast_len(2 * N, real=True)
    if size > FFT_BUDGET:
        raise ResourceLimit(f"FFT length {size} exceeds the budget of {FFT_BUDGET}")
    x = A.indicator().astype(np.float64)
    spectrum = scipy.fft.rfft(x, n=size, workers=workers)
    raw = scipy.fft.irfft(spectrum * np.conj(spectrum), n=size, workers=workers)[:N]
    rounded = np.rint(raw)
    residue = float(np.max(np.abs(raw - rounded))) if N else 0.0
    if residue >= ROUNDING_TOLERANCE:
        raise PrecisionError(f"autocorrelation residue {residue:.3g} is not near an integer")
    return rounded.astype(np.int64)


def profile_fft(
    A: DenseSet, P: Polynomial, L: int, workers: int | None = None
) -> RecurrenceProfile:
    """Same output as ``profile_direct``, read off the full autocorrelation."""
    _check_range(L)
    r = autocorrelation_1d(A, workers=workers)
    N = A.universe_size
    shifts = tuple(eval_poly(P, n) for n in range(L + 1))
    counts = [int(r[abs(d)]) if abs(d) < N else 0 for d in shifts]
    return RecurrenceProfile(np.array(counts), shifts, N, A.cardinality)


def profile_grid(B: GridSet, L: int) -> RecurrenceProfile:
    """counts[n] = |B ∩ (B + γ(n))| with γ(n) = (n, n^2, ..., n^k)."""
    _check_range(L)
    k = B.dimension
    counts = [grid_shift_intersect_count(B, curve_point(k, n)) for n in range(L + 1)]
    return RecurrenceProfile(np.array(counts), tuple(range(L + 1)), B.volume, B.cardinality)


@dataclass(frozen=True)
class ReturnTimeSet:
    epsilon: Fraction
    times: tuple[int, ...]
    range_end: int


def is_optimal(count: int, cardinality: int, universe: int, eps: Fraction) -> bool:
    """count/U > (|A|/U)^2 - eps, decided in integers."""
    # Multiply through by U^2 * eps.denominator.
    lhs = count * universe * eps.denominator
    rhs = cardinality * cardinality * eps.denominator - eps.numerator * universe * universe
    return lhs > rhs


def optimal_returns(prof: RecurrenceProfile, eps) -> ReturnTimeSet:
    eps = as_fraction(eps)
    if not 0 < eps <= 1:
        raise ContractViolation(f"epsilon must lie in (0, 1], got {eps}")
    times = tuple(
        n
        for n, c in enumerate(prof.counts)
        if is_optimal(int(c), prof.set_cardinality, prof.universe_size, eps)
    )
    return ReturnTimeSet(eps, times, prof.range_end)


def _max_gap(times: list[int], lo: int, hi: int) -> int:
    if not times:
        return hi - lo + 1
    points = [lo, *times, hi]
    return max(b - a for a, b in zip(points, points[1:]))


@dataclass(frozen=True)
class GapStats:
    count: int
    density: Fraction
    max_gap: int
    # the same statistics over [1, L], so the trivial return n = 0 cannot hide emptiness
    positive_count: int
    positive_density: Fraction | None
    positive_max_gap: int

    def to_dict(self) -> dict:
        pd = self.positive_density
        return {
            "count": self.count,
            "density": float(self.density),
            "max_gap": self.max_gap,
            "positive_count": self.positive_count,
            "positive_density": None if pd is None else float(pd),
            "positive_max_gap": self.positive_max_gap,
        }


def gap_stats(R: ReturnTimeSet) -> GapStats:
    """Count, density and largest gap of the return times over [0, L] and [1, L].

    Gaps include the stretches to the boundary points; with no returns at
    all the gap is the full length of the range.
    """
    L = R.range_end
    times = sorted(R.times)
    positive = [t for t in times if t >= 1]
    return GapStats(
        count=len(times),
        density=Fraction(len(times), L + 1),
        max_gap=_max_gap(times, 0, L),
        positive_count=len(positive),
        positive_density=Fraction(len(positive), L) if L >= 1 else None,
        positive_max_gap=_max_gap(positive, 1, L) if L >= 1 else 0,
    )


# -- experiment harness ----------------------------------------------------------


@dataclass(frozen=True)
class TrialRow:
    trial: int
    cardinality: int
    density: float
    positive_density: float
    max_gap: int

    def to_dict(self) -> dict:
        return self.__dict__.copy()


@dataclass(frozen=True)
class ExperimentSummary:
    generator: str
    N: int
    polynomial: tuple[int, ...]
    epsilon: Fraction
    range_end: int
    seed: int
    rows: tuple[TrialRow, ...]

    @property
    def min_density(self) -> float:
        return min(r.positive_density for r in self.rows)

    @property
    def mean_density(self) -> float:
        return math.fsum(r.positive_density for r in self.rows) / len(self.rows)

    def to_dict(self) -> dict:
        return {
            "generator": self.generator,
            "N": self.N,
            "polynomial": list(self.polynomial),
            "epsilon": str(self.epsilon),
            "range_end": self.range_end,
            "seed": self.seed,
            "trials": [r.to_dict() for r in self.rows],
            "min_density": self.min_density,
            "mean_density": self.mean_density,
        }


def khintchine_experiment(
    generator: str,
    N: int,
    P: Polynomial,
    eps,
    trials: int,
    seed: int,
    L: int | None = None,
    set_factory: Callable[[str, int, int], DenseSet] | None = None,
) -> ExperimentSummary:
    """Return-time densities of generated sets over [0, L], L = ⌊N^(1/k)⌋ by default.

    ``generator`` is ``random:<δ>`` or a structured-set spec. Trial ``t``
    draws its set from the seed stream spawned for index ``t`` of ``seed``,
    so the whole table is reproducible. Reported densities are over [1, L].
    """
    from .construct import make_set

    factory = set_factory or make_set
    eps = as_fraction(eps)
    if L is None:
        L = iroot(N, P.degree)
    seeds = np.random.SeedSequence(seed).spawn(trials)
    rows = []
    for t, ss in enumerate(seeds):
        A = factory(generator, N, int(ss.generate_state(1)[0]))
        R = optimal_returns(profile_fft(A, P, L), eps)
        stats = gap_stats(R)
        rows.append(
            TrialRow(
                trial=t,
                cardinality=A.cardinality,
                density=float(stats.density),
                positive_density=float(stats.positive_density or 0),
                max_gap=stats.max_gap,
            )
        )
    return ExperimentSummary(generator, N, P.coeffs, eps, L, seed, tuple(rows))
