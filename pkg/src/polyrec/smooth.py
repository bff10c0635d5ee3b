"""Smooth lattice cutoffs, the counting functional Λ, and the f = f₁ + f₂ + f₃ split.

The base cutoff is a product over axes of a one-dimensional profile. On the
frequency side each factor is w = (b⋆b)/(b⋆b)(0) with b(t) = (1 - 4t²)^p on
|t| <= 1/2, so w is supported in [-1, 1] and w(0) = 1. On the space side
each factor is b̌(x)² / ‖b‖², a square and hence nonnegative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.fft
import scipy.signal

from .arcs import ArcSystem, in_omega, q_eta
from .core import GridSet, as_fraction, curve_point
from .errors import ContractViolation, NotFound, ResourceLimit
from .profile import is_optimal
from .spectral import box_region_mass, omega_region
from .weyl import TLambda, TorusPoint, apply_t_lambda, t_lambda, weyl_S_div

TRUNCATION_LEVEL = 1e-12
KERNEL_BUDGET = 2**24
GRID_BUDGET = 2**22


# -- one-dimensional profile ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class CutoffProfile:
    """The per-axis profile pair (w on the frequency side, w̌ on the space side)."""

    exponent: int
    radius: float
    sample_step: float
    samples: np.ndarray
    _conv_nodes: np.ndarray
    _conv_weights: np.ndarray
    _space_nodes: np.ndarray
    _space_weights: np.ndarray
    _norm: float

    @classmethod
    def build(cls, exponent: int = 6, space_nodes: int = 256, sample_step: float = 0.01):
        if exponent < 1:
            raise ContractViolation(f"bump exponent must be >= 1, got {exponent}")
        # b⋆b at ξ integrates a polynomial of degree 4p, so 2p+1 nodes are exact
        cx, cw = np.polynomial.legendre.leggauss(2 * exponent + 1)
        sx, sw = np.polynomial.legendre.leggauss(space_nodes)
        sx, sw = sx / 2, sw / 2
        norm = float(np.dot(sw, _bump(sx, exponent) ** 2))
        partial = cls(exponent, math.inf, sample_step, np.empty(0), cx, cw, sx, sw, norm)
        xs = np.arange(0.0, 100.0, sample_step)
        vals = partial.space(xs)
        above = np.flatnonzero(np.abs(vals) >= TRUNCATION_LEVEL)
        radius = float(xs[above[-1]] + sample_step)
        samples = vals[xs <= radius]
        samples.setflags(write=False)
        return cls(exponent, radius, sample_step, samples, cx, cw, sx, sw, norm)

    def bump(self, t) -> np.ndarray:
        return _bump(np.asarray(t, dtype=np.float64), self.exponent)

    def freq(self, xi) -> np.ndarray:
        """w(ξ) = (b⋆b)(ξ) / (b⋆b)(0), zero for |ξ| >= 1."""
        xi = np.abs(np.asarray(xi, dtype=np.float64))
        out = np.zeros(xi.shape)
        inside = xi < 1
        a = xi[inside]
        # b(t) b(ξ - t) is nonzero for t in [ξ - 1/2, 1/2]
        lo, hi = a - 0.5, np.full(a.shape, 0.5)
        half = (hi - lo) / 2
        mid = (hi + lo) / 2
        t = mid[:, None] + half[:, None] * self._conv_nodes[None, :]
        vals = self.bump(t) * self.bump(a[:, None] - t)
        out[inside] = (vals @ self._conv_weights) * half / self._norm
        return out

    def space(self, x) -> np.ndarray:
        """w̌(x) = b̌(x)² / ‖b‖², the inverse transform of w; integrates to 1."""
        x = np.asarray(x, dtype=np.float64)
        flat = x.reshape(-1)
        bcheck = np.cos(2 * np.pi * np.outer(flat, self._space_nodes)) @ (
            self._space_weights * self.bump(self._space_nodes)
        )
        return (bcheck**2 / self._norm).reshape(x.shape)

    def space_truncated(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return np.where(np.abs(x) <= self.radius, self.space(x), 0.0)


def _bump(t: np.ndarray, p: int) -> np.ndarray:
    return np.where(np.abs(t) <= 0.5, np.clip(1 - 4 * t * t, 0, None) ** p, 0.0)


@lru_cache(maxsize=None)
def default_profile() -> CutoffProfile:
    return CutoffProfile.build()


# -- lattice cutoffs -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LatticeCutoff:
    """φ_{q,L} on the lattice {(q ℓ_1, ..., q^k ℓ_k)}, or its shear ψ_{q,L} when ``lam`` is set.

    Each axis j carries the weight (q^j/L^j) w̌(q^j ℓ_j / L^j), so the total
    mass is 1 whenever L >= q.
    """

    q: int
    L: Fraction
    k: int
    lam: int | None = None
    profile: CutoffProfile | None = None

    def __post_init__(self):
        object.__setattr__(self, "L", as_fraction(self.L))
        if self.q < 1 or self.L <= 0 or self.k < 1:
            raise ContractViolation(f"invalid cutoff q={self.q}, L={self.L}, k={self.k}")
        if self.lam is not None and self.lam < 0:
            raise ContractViolation(f"shear λ must be >= 0, got {self.lam}")
        if self.profile is None:
            object.__setattr__(self, "profile", default_profile())

    @property
    def shear(self) -> TLambda | None:
        return None if self.lam is None else t_lambda(self.k, self.lam)

    def spacing(self, j: int) -> Fraction:
        """q^j / L^j, the step of the profile argument along axis j."""
        return Fraction(self.q**j) / self.L**j

    def axis_weights(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """(ℓ, weight) along axis j, truncated where the profile drops below the threshold."""
        s = self.spacing(j)
        top = math.floor(self.profile.radius / s)
        if 2 * top + 1 > KERNEL_BUDGET:
            raise ResourceLimit(f"axis {j} of the cutoff has {2 * top + 1} lattice points")
        ell = np.arange(-top, top + 1, dtype=np.int64)
        return ell, float(s) * self.profile.space_truncated(ell * float(s))

    def phi(self, x: Sequence[int]) -> float:
        """φ_{q,L}(x), 0 off the lattice."""
        if len(x) != self.k:
            raise ContractViolation(f"point has length {len(x)}, expected {self.k}")
        value = 1.0
        for j, xj in enumerate(x, start=1):
            qj = self.q**j
            if int(xj) % qj:
                return 0.0
            s = self.spacing(j)
            value *= float(s) * float(self.profile.space_truncated(float(Fraction(int(xj)) / self.L**j)))
        return value

    def phi_hat(self, alpha: TorusPoint) -> float:
        """Σ_ℓ Π_j w(L^j(α_j - ℓ_j/q^j)); exactly 0 off M_{q,L}.

        The candidate ℓ_j are found with exact rationals, so the support
        test |α_j q^j - ℓ_j| < q^j/L^j is never rounded.
        """
        if alpha.k != self.k:
            raise ContractViolation(f"point has dimension {alpha.k}, expected {self.k}")
        value = 1.0
        for j, a in enumerate(alpha.coords, start=1):
            c = a * self.q**j
            rho = self.spacing(j)
            args = [
                (c - ell) / rho
                for ell in range(math.floor(c - rho), math.ceil(c + rho) + 1)
                if abs(c - ell) < rho
            ]
            if not args:
                return 0.0
            value *= float(np.sum(self.profile.freq(np.array([float(t) for t in args]))))
        return value

    def psi(self, x: Sequence[int]) -> float:
        """ψ_{q,L}(x) = φ_{q,L}(T_λ^{-T} x)."""
        T = self._require_shear()
        return self.phi(T.transpose_inverse_apply(x))

    def psi_hat(self, alpha: TorusPoint) -> float:
        """ψ̂_{q,L}(α) = φ̂_{q,L}(T_λ α)."""
        return self.phi_hat(apply_t_lambda(self._require_shear(), alpha))

    def _require_shear(self) -> TLambda:
        if self.lam is None:
            raise ContractViolation("this cutoff has no shear λ")
        return self.shear

    def hat_values(self, beta: np.ndarray) -> np.ndarray:
        """φ̂_{q,L} at float points β (rows of shape (n, k)), for quadrature use."""
        beta = np.atleast_2d(np.asarray(beta, dtype=np.float64))
        out = np.ones(beta.shape[0])
        for j in range(1, self.k + 1):
            rho = float(self.spacing(j))
            c = beta[:, j - 1] * self.q**j
            base = np.rint(c)
            acc = np.zeros_like(c)
            reach = math.ceil(rho) + 1
            for off in range(-reach, reach + 1):
                acc += self.profile.freq((c - (base + off)) / rho)
            out *= acc
        return out

    def hat_on_grid(self, G: int) -> np.ndarray:
        """ψ̂ (or φ̂ without shear) at α = t/G for t ∈ [0, G)^k, as a (G,)*k array."""
        if G**self.k > GRID_BUDGET:
            raise ResourceLimit(f"grid {G}^{self.k} exceeds the budget of {GRID_BUDGET}")
        t = np.indices((G,) * self.k).reshape(self.k, -1).T.astype(np.int64)
        if self.lam is not None:
            # T_λ t mod G in integers, with the entries reduced first
            Tm = np.array([[v % G for v in row] for row in self.shear.entries], dtype=np.int64)
            t = (t @ Tm.T) % G
        return self.hat_values(t / G).reshape((G,) * self.k)

    def kernel(self, reach: int) -> np.ndarray:
        """Dense array K with K[y + reach] = ψ(y) (or φ(y)) for y ∈ [-reach, reach]^k."""
        k = self.k
        axes = [self.axis_weights(j) for j in range(1, k + 1)]
        size = math.prod(len(a[0]) for a in axes)
        if size > KERNEL_BUDGET or (2 * reach + 1) ** k > KERNEL_BUDGET:
            raise ResourceLimit("cutoff kernel exceeds the budget")
        ell = np.stack(np.meshgrid(*[a[0] for a in axes], indexing="ij"), axis=-1).reshape(-1, k)
        weights = np.ones(len(ell))
        for grid_w in np.meshgrid(*[a[1] for a in axes], indexing="ij"):
            weights = weights * grid_w.reshape(-1)
        lattice = [ell[:, j] * self.q ** (j + 1) for j in range(k)]
        if self.lam is None:
            y = np.stack(lattice, axis=1)
        else:
            # y = T^T y', with T upper triangular so y_i = Σ_{j<=i} T_{ji} y'_j
            T = self.shear.entries
            y = np.zeros((len(ell), k), dtype=np.int64)
            for i in range(k):
                for j in range(i + 1):
                    if T[j][i] > 2**40:
                        raise ResourceLimit("shear entries too large for the kernel")
                    y[:, i] += T[j][i] * lattice[j]
        keep = np.all(np.abs(y) <= reach, axis=1) & (weights != 0)
        K = np.zeros((2 * reach + 1,) * k)
        K[tuple((y[keep] + reach).T)] = weights[keep]
        return K


# -- weighted functions and convolution ---------------------------------------


@dataclass(frozen=True, eq=False)
class WeightedFunction:
    """f: [1, M]^k -> [0, 1], stored densely with index i for coordinate i + 1."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim < 1 or len(set(v.shape)) != 1:
            raise ContractViolation(f"values must form a cube, got shape {v.shape}")
        if v.size and (v.min() < 0 or v.max() > 1):
            raise ContractViolation("values must lie in [0, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_grid(cls, B: GridSet) -> "WeightedFunction":
        return cls(B.occupancy.astype(np.float64))

    @property
    def k(self) -> int:
        return self.values.ndim

    @property
    def side(self) -> int:
        return self.values.shape[0]

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    def extended(self, pad: int) -> np.ndarray:
        """Zero-extension to [1 - pad, M + pad]^k."""
        return np.pad(self.values, pad)


def convolve_cutoff(values: np.ndarray, cut: LatticeCutoff) -> np.ndarray:
    """(f ⋆ ψ)(m) = Σ_y ψ(y) f(m - y) on the same index box as ``values``.

    f is zero outside the box; the sum runs over every kernel point that can
    connect two cells of the box.
    """
    S = values.shape[0]
    K = cut.kernel(S - 1)
    full = scipy.signal.fftconvolve(values, K, mode="full")
    return full[(slice(S - 1, 2 * S - 1),) * values.ndim]


@dataclass(frozen=True, eq=False)
class Decomposition:
    """f₁, f₂, f₃ on [1 - pad, M + pad]^k (index i is coordinate i + 1 - pad)."""

    f: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray
    pad: int

    def residual(self) -> float:
        return float(np.max(np.abs(self.f - (self.f1 + self.f2 + self.f3))))


def decompose(
    f: WeightedFunction, q: int, L1, L2, lam: int, pad: int = 0,
    profile: CutoffProfile | None = None,
) -> Decomposition:
    """f₁ = f⋆ψ_{q,L₁}, f₂ = f - f⋆ψ_{q,L₂}, f₃ = f⋆(ψ_{q,L₂} - ψ_{q,L₁})."""
    L1, L2 = as_fraction(L1), as_fraction(L2)
    if L1 < L2:
        raise ContractViolation(f"need L₁ >= L₂, got L₁={L1}, L₂={L2}")
    if pad < 0:
        raise ContractViolation("padding must be >= 0")
    base = f.extended(pad)
    coarse = convolve_cutoff(base, LatticeCutoff(q, L1, f.k, lam, profile))
    fine = convolve_cutoff(base, LatticeCutoff(q, L2, f.k, lam, profile))
    return Decomposition(base, coarse, base - fine, fine - coarse, pad)


# -- the counting functional -----------------------------------------------------


def _window_multiples(q: int, lam: int, mu: int) -> range:
    if q < 1 or mu < 1 or lam < 0:
        raise ContractViolation(f"need q >= 1, μ >= 1, λ >= 0; got q={q}, μ={mu}, λ={lam}")
    return range((lam // q + 1) * q, lam + mu + 1, q)


def lambda_count(g, h, q: int, lam: int, mu: int) -> float:
    """Λ(g, h) = (q/μ) Σ_{n ∈ (λ, λ+μ], q | n} Σ_m g(m) h(m - γ(n)).

    g and h are arrays on a common index box (or WeightedFunctions); shifts
    that leave the box contribute 0.
    """
    g = g.values if isinstance(g, WeightedFunction) else np.asarray(g, dtype=np.float64)
    h = h.values if isinstance(h, WeightedFunction) else np.asarray(h, dtype=np.float64)
    if g.shape != h.shape:
        raise ContractViolation(f"shapes differ: {g.shape} vs {h.shape}")
    S, k = g.shape[0], g.ndim
    terms = []
    for n in _window_multiples(q, lam, mu):
        v = curve_point(k, n)
        if any(vj >= S for vj in v):
            terms.append(0.0)
            continue
        left = tuple(slice(vj, S) for vj in v)
        right = tuple(slice(0, S - vj) for vj in v)
        terms.append(float(np.sum(g[left] * h[right])))
    return q / mu * math.fsum(terms)


@dataclass(frozen=True)
class SplittingCheck:
    total: float
    main: float
    star: float
    star_star: float

    @property
    def relative_error(self) -> float:
        # relative to the largest term, since Λ(f, f) itself can vanish
        diff = abs(self.total - (self.main + self.star + self.star_star))
        scale = max(abs(self.total), abs(self.main), abs(self.star), abs(self.star_star))
        return diff / scale if scale else 0.0


def bilinear_splitting(dec: Decomposition, q: int, lam: int, mu: int) -> SplittingCheck:
    """Λ(f,f) against Λ(f₁,f₁) + [Λ(f₂,f₁) + Λ(f,f₂)] + [Λ(f₃,f₁) + Λ(f,f₃)]."""
    lc = lambda a, b: lambda_count(a, b, q, lam, mu)  # noqa: E731
    return SplittingCheck(
        total=lc(dec.f, dec.f),
        main=lc(dec.f1, dec.f1),
        star=lc(dec.f2, dec.f1) + lc(dec.f, dec.f2),
        star_star=lc(dec.f3, dec.f1) + lc(dec.f, dec.f3),
    )


@dataclass(frozen=True)
class DominationCheck:
    lhs_31: float
    lhs_f3: float
    rhs: float
    grid: int

    def holds(self, slack: float = 0.0) -> bool:
        return max(abs(self.lhs_31), abs(self.lhs_f3)) <= self.rhs + slack


def domination_check(
    f: WeightedFunction, q: int, L1, L2, lam: int, mu: int, pad: int, grid: int | None = None
) -> DominationCheck:
    """|Λ(f₃,f₁)|, |Λ(f,f₃)| next to a grid quadrature of ∫|f̂|² |ψ̂_{q,L₂} - ψ̂_{q,L₁}|."""
    dec = decompose(f, q, L1, L2, lam, pad)
    G = grid or max(256, 8 * f.side)
    fhat_sq = np.abs(scipy.fft.fftn(f.values, s=(G,) * f.k)) ** 2
    diff = LatticeCutoff(q, L2, f.k, lam).hat_on_grid(G) - LatticeCutoff(q, L1, f.k, lam).hat_on_grid(G)
    rhs = float(np.sum(fhat_sq * np.abs(diff))) / G**f.k
    return DominationCheck(
        lhs_31=lambda_count(dec.f3, dec.f1, q, lam, mu),
        lhs_f3=lambda_count(dec.f, dec.f3, q, lam, mu),
        rhs=rhs,
        grid=G,
    )


def near_invariance(values: np.ndarray, n: int) -> float:
    """max |g(m) - g(m - γ(n))| over m with both points in the index box."""
    S, k = values.shape[0], values.ndim
    v = curve_point(k, n)
    if any(vj >= S for vj in v):
        raise ContractViolation(f"γ({n}) leaves the {S}^{k} box")
    left = tuple(slice(vj, S) for vj in v)
    right = tuple(slice(0, S - vj) for vj in v)
    return float(np.max(np.abs(values[left] - values[right])))


# -- sup diagnostics on sampled α -------------------------------------------------


def cutoff_remainder_sup(
    q: int, L2, lam: int, mu: int, k: int, alphas: Sequence[TorusPoint]
) -> float:
    """max over the samples of |(1 - ψ̂_{q,L₂}(α)) S_{λ,μ,q}(α)|."""
    cut = LatticeCutoff(q, L2, k, lam)
    return max(abs((1 - cut.psi_hat(a)) * weyl_S_div(lam, mu, q, a)) for a in alphas)


def coarse_cutoff_remainder_sup(
    eta, eta_prime, lam: int, mu: int, k: int, alphas: Sequence[TorusPoint]
) -> float:
    """|(1 - ψ̂_{q',L₂'}) S_{λ,μ,q}| sup with q = q_η, q' = q_η', L₂' = η'^k μ."""
    eta, eta_prime = as_fraction(eta), as_fraction(eta_prime)
    q = q_eta(eta, k)
    cut = LatticeCutoff(q_eta(eta_prime, k), eta_prime**k * mu, k, lam)
    return max(abs((1 - cut.psi_hat(a)) * weyl_S_div(lam, mu, q, a)) for a in alphas)


def off_omega_sup(sys: ArcSystem, eps, alphas: Sequence[TorusPoint]) -> float | None:
    """max |φ̂_{q,η^k μ}(α) - φ̂_{q,ε η^{-k} λ}(α)| over samples outside Ω (None if none are)."""
    eps = as_fraction(eps)
    ek = sys.eta**sys.k
    outer = LatticeCutoff(sys.q, ek * sys.mu, sys.k)
    inner = LatticeCutoff(sys.q, eps * sys.lam / ek, sys.k)
    vals = [abs(outer.phi_hat(a) - inner.phi_hat(a)) for a in alphas if not in_omega(a, sys)]
    return max(vals) if vals else None


def eta_epsilon(eps, C) -> Fraction:
    """exp(-C ε^{-1} log ε^{-1}) rounded down to a unit fraction 1/⌈e^{x}⌉."""
    eps, C = as_fraction(eps), as_fraction(C)
    if not 0 < eps < 1 or C <= 0:
        raise ContractViolation(f"need 0 < ε < 1 and C > 0, got ε={eps}, C={C}")
    x = float(C / eps) * math.log(1 / float(eps))
    if x > 700:
        raise ResourceLimit(f"η_ε = exp(-{x:.1f}) is below double range")
    return Fraction(1, math.ceil(math.exp(x)))


@dataclass(frozen=True)
class EtaSelection:
    index: int
    eta: Fraction
    sups: tuple[float, ...]


def select_eta(
    eps, etas: Sequence, L2, lam: int, k: int, alphas: Sequence[TorusPoint]
) -> EtaSelection:
    """First j with sup |ψ̂_{q_{j+1},L₂} - ψ̂_{q_j,L₂}| <= ε/40 on the samples, q_j = q_{η_j}."""
    eps = as_fraction(eps)
    etas = [as_fraction(e) for e in etas]
    sups = []
    for j in range(len(etas) - 1):
        a = LatticeCutoff(q_eta(etas[j], k), L2, k, lam)
        b = LatticeCutoff(q_eta(etas[j + 1], k), L2, k, lam)
        s = max(abs(b.psi_hat(x) - a.psi_hat(x)) for x in alphas)
        sups.append(s)
        if s <= eps / 40:
            return EtaSelection(j, etas[j], tuple(sups))
    raise NotFound(f"no consecutive pair in the η sequence met ε/40; sups={sups}")


# -- dichotomy -------------------------------------------------------------------


@dataclass(frozen=True)
class BranchReport:
    value: float
    threshold: float
    holds: bool

    def to_dict(self) -> dict:
        return {"value": self.value, "threshold": self.threshold, "holds": self.holds}


@dataclass(frozen=True)
class DichotomyReport:
    branch1: BranchReport
    branch2: BranchReport
    q: int
    density: float

    @property
    def either(self) -> bool:
        return self.branch1.holds or self.branch2.holds

    def to_dict(self) -> dict:
        return {
            "branch1": {
                "count": int(self.branch1.value),
                "threshold": self.branch1.threshold,
                "holds": self.branch1.holds,
            },
            "branch2": {
                "mass": self.branch2.value,
                "threshold": self.branch2.threshold,
                "holds": self.branch2.holds,
            },
            "q": self.q,
            "density": self.density,
            "either": self.either,
        }


def dichotomy_report(
    B: GridSet, eps, lam: int, mu: int, eta, threshold_fraction=Fraction(1, 10)
) -> DichotomyReport:
    """Evaluate both sides of the recurrence/structure dichotomy on one instance.

    branch1 counts n ∈ (λ, λ+μ] with |B ∩ (B+γ(n))|/M^k > δ² - ε, against
    ``threshold_fraction``·μ. branch2 is the mass of |1̂_B|² over T_λ^{-1}Ω
    against εM^k/10. Nothing is asserted; both outcomes are reported.
    """
    from .core import grid_shift_intersect_count

    eps = as_fraction(eps)
    frac = as_fraction(threshold_fraction)
    if not 0 < eps <= 1:
        raise ContractViolation(f"ε must lie in (0, 1], got {eps}")
    k, vol = B.dimension, B.volume
    sys = ArcSystem.build(eta, k, lam, mu)
    sys.check_nondegenerate()
    count = sum(
        is_optimal(grid_shift_intersect_count(B, curve_point(k, n)), B.cardinality, vol, eps)
        for n in range(lam + 1, lam + mu + 1)
    )
    t1 = frac * mu
    mass = box_region_mass(B, omega_region(sys, pulled_back=True))
    t2 = eps * vol / 10
    return DichotomyReport(
        BranchReport(float(count), float(t1), count >= t1),
        BranchReport(mass, float(t2), mass >= t2),
        sys.q,
        B.cardinality / vol,
    )
