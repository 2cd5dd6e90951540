"""
Geometric toolkit for the frequency-space decomposition of I(t,x):
bump profile, the Ω₁/Ω₂/Ω₃ region tests and cutoffs φ₁/φ₂/φ₃, the angular net {ξ_v}
with its sector partition χ_v, stationary points of the phase, and the empirical
gradient-separation check on one sector of Ω₂.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from errors import InputError, NumericalError
from sphere import circle_directions, halton_directions, regular_directions, regular_sphere_directions
from symbols import PolynomialSymbol, homogeneous_part

logger = logging.getLogger(__name__)

NET_SPACING = 0.25
ZERO_DRIFT = 1e-12


# ==================== BUMP ====================

def _transition(y: np.ndarray) -> np.ndarray:
    """exp(-1/y) for y > 0, else 0"""
    positive = y > 0
    safe = np.where(positive, y, 1.0)
    return np.where(positive, np.exp(-1.0 / safe), 0.0)


def bump(s):
    """
    C^∞ plateau profile: 1 on [-1/2, 1/2], 0 outside (-1, 1).
    Accepts scalars or arrays.
    """
    a = np.abs(np.asarray(s, dtype=float))
    rise = _transition(1.0 - a)
    fall = _transition(a - 0.5)
    value = rise / (rise + fall)
    if np.ndim(value) == 0:
        return float(value)
    return value


# ==================== REGIONS ====================

class Region(str, Enum):
    OMEGA_C = "Omega_c"
    OMEGA_1 = "Omega_1"
    OMEGA_2 = "Omega_2"
    OMEGA_3 = "Omega_3"


@dataclass(frozen=True)
class RegionContext:
    """Scales of the decomposition at a fixed (t, x)"""
    t: float
    x: Tuple[float, ...]
    L: float
    m: int

    def __post_init__(self):
        if self.t == 0 or not math.isfinite(self.t):
            raise InputError(f"t must be finite and nonzero, got {self.t}")
        if not self.L > 0:
            raise InputError(f"L must be positive, got {self.L}")
        if self.m < 2:
            raise InputError(f"symbol degree must be at least 2, got {self.m}")

    @classmethod
    def create(cls, P: PolynomialSymbol, t: float, x: Sequence[float], L: float) -> "RegionContext":
        x = tuple(float(v) for v in np.asarray(x, dtype=float).reshape(-1))
        if len(x) != P.n:
            raise InputError(f"x has length {len(x)}, symbol dimension is {P.n}")
        return cls(t=float(t), x=x, L=float(L), m=P.m)

    @property
    def drift(self) -> np.ndarray:
        """x/t"""
        return np.asarray(self.x) / self.t

    @property
    def drift_norm(self) -> float:
        return float(np.linalg.norm(self.drift))

    @property
    def r(self) -> float:
        return self.drift_norm ** (1.0 / (self.m - 1))

    @property
    def low_freq_radius(self) -> float:
        return abs(self.t) ** (-1.0 / self.m)


def _points(P: PolynomialSymbol, points) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[None, :]
    if points.shape[1] != P.n:
        raise InputError(f"points have dimension {points.shape[1]}, symbol dimension is {P.n}")
    return points


def region_masks(ctx: RegionContext, P: PolynomialSymbol, points) -> dict:
    """Boolean membership arrays per Region; Ω₂ and Ω₃ overlap on a band"""
    points = _points(P, points)
    radius = np.linalg.norm(points, axis=1)
    inside = radius >= ctx.L
    gap = np.linalg.norm(P.gradients(points) + ctx.drift, axis=1)
    drift = ctx.drift_norm
    away = radius > 0.5 * ctx.low_freq_radius
    return {
        Region.OMEGA_C: ~inside,
        Region.OMEGA_1: inside & (radius < ctx.low_freq_radius),
        Region.OMEGA_2: inside & away & (gap < drift),
        Region.OMEGA_3: inside & away & (gap > 0.5 * drift),
    }


def classify(ctx: RegionContext, P: PolynomialSymbol, xi) -> FrozenSet[Region]:
    masks = region_masks(ctx, P, xi)
    return frozenset(region for region, mask in masks.items() if mask[0])


def cutoff_values(ctx: RegionContext, P: PolynomialSymbol, points) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    φ₁ = φ(|ξ| |t|^{1/m}), φ₂ = (1 - φ₁) φ(|∇P + x/t| / |x/t|), φ₃ = 1 - φ₁ - φ₂.
    φ₂ is identically 0 when |x/t| < ZERO_DRIFT.
    """
    points = _points(P, points)
    radius = np.linalg.norm(points, axis=1)
    phi1 = bump(radius / ctx.low_freq_radius)
    drift = ctx.drift_norm
    if drift < ZERO_DRIFT:
        phi2 = np.zeros_like(phi1)
    else:
        gap = np.linalg.norm(P.gradients(points) + ctx.drift, axis=1)
        phi2 = (1.0 - phi1) * bump(gap / drift)
    phi3 = np.clip(1.0 - phi1 - phi2, 0.0, 1.0)
    return phi1, phi2, phi3


def cutoffs(ctx: RegionContext, P: PolynomialSymbol, xi) -> Tuple[float, float, float]:
    phi1, phi2, phi3 = cutoff_values(ctx, P, xi)
    return float(phi1[0]), float(phi2[0]), float(phi3[0])


def region_table(ctx: RegionContext, P: PolynomialSymbol, extent: float, size: int) -> List[tuple]:
    """Rows (ξ, region names, φ₁, φ₂, φ₃) on a tensor grid of [-extent, extent]^n"""
    axis = np.linspace(-extent, extent, size)
    mesh = np.meshgrid(*([axis] * P.n), indexing="ij")
    points = np.column_stack([g.reshape(-1) for g in mesh])
    masks = region_masks(ctx, P, points)
    phi1, phi2, phi3 = cutoff_values(ctx, P, points)
    rows = []
    for i, point in enumerate(points):
        names = ",".join(region.value for region in Region if masks[region][i]) or "-"
        rows.append((tuple(point), names, phi1[i], phi2[i], phi3[i]))
    return rows


# ==================== ANGULAR NET ====================

def _greedy_packing(candidates: np.ndarray, chosen: Optional[np.ndarray] = None) -> np.ndarray:
    net = [] if chosen is None else list(chosen)
    for candidate in candidates:
        if not net or np.min(np.linalg.norm(np.asarray(net) - candidate, axis=1)) >= NET_SPACING:
            net.append(candidate)
    return np.asarray(net)


def covering_radius(net: np.ndarray, samples: np.ndarray) -> float:
    """Largest chord from a sample direction to its nearest net point"""
    distances = np.linalg.norm(samples[:, None, :] - net[None, :, :], axis=2)
    return float(np.max(np.min(distances, axis=1)))


@lru_cache(maxsize=4)
def _cached_net(n: int) -> np.ndarray:
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        # the most equally spaced directions whose neighbours stay NET_SPACING apart
        return circle_directions(int(math.floor(math.pi / math.asin(NET_SPACING / 2.0))))

    net = _greedy_packing(regular_sphere_directions(20000))
    check = halton_directions(3, 10000, seed=0)
    nearest = np.min(np.linalg.norm(check[:, None, :] - net[None, :, :], axis=2), axis=1)
    uncovered = check[nearest >= NET_SPACING]
    if len(uncovered):
        # an uncovered direction is NET_SPACING away from every net point, so adding it keeps the packing
        net = _greedy_packing(uncovered, chosen=net)
    if covering_radius(net, check) >= NET_SPACING:
        raise NumericalError("angular net does not cover the sphere")
    return net


def angular_net(n: int) -> np.ndarray:
    """Maximal 1/4-packing {ξ_v} of the unit sphere S^{n-1}, rows are unit vectors"""
    if n not in (1, 2, 3):
        raise InputError(f"angular net needs n in (1, 2, 3), got {n}")
    return _cached_net(n).copy()


def chi_weights(net: np.ndarray, points) -> np.ndarray:
    """(N, V) array of χ_v = ζ_v / Σ ζ_l with ζ_v = φ(4 |ξ/|ξ| - ξ_v|)"""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[None, :]
    radius = np.linalg.norm(points, axis=1)
    if np.any(radius == 0):
        raise InputError("the sector partition is undefined at ξ = 0")
    directions = points / radius[:, None]
    zeta = bump(4.0 * np.linalg.norm(directions[:, None, :] - net[None, :, :], axis=2))
    total = np.sum(zeta, axis=1)
    if np.any(total <= 0):
        raise NumericalError("no sector cutoff is positive: the net does not cover this direction")
    return zeta / total[:, None]


def chi_partition(net: np.ndarray, xi) -> np.ndarray:
    return chi_weights(net, xi)[0]


def sector_cutoff_sum(net: np.ndarray, xi) -> float:
    return float(np.sum(chi_partition(net, xi)))


# ==================== STATIONARY POINTS ====================

def principal_gradient_floor(P: PolynomialSymbol) -> float:
    """min over the unit sphere of |∇P_m(ω)| (sampled)"""
    principal = homogeneous_part(P, P.m)
    directions = regular_directions(P.n, 720 if P.n == 2 else 2000)
    return float(np.min(np.linalg.norm(principal.gradients(directions), axis=1)))


def stationary_scale(P: PolynomialSymbol, drift_norm: float) -> float:
    """Radius where |∇P_m| reaches |x/t|: r / κ with κ = (min |∇P_m(ω)|)^{1/(m-1)}"""
    kappa = principal_gradient_floor(P) ** (1.0 / (P.m - 1))
    if kappa <= 0:
        raise InputError(f"{P.name}: principal gradient vanishes on the sphere")
    return drift_norm ** (1.0 / (P.m - 1)) / kappa


def stationary_points(
    P: PolynomialSymbol,
    t: float,
    x: Sequence[float],
    search_radius: Optional[float] = None,
    max_iterations: int = 80,
) -> np.ndarray:
    """
    Solutions of ∇P(ξ) = -x/t by damped Newton from a multistart grid.

    Starts whose Hessian becomes singular are dropped. Returns a (k, n) array sorted
    lexicographically, duplicates merged; k may be 0.
    """
    if t == 0:
        raise InputError("t must be nonzero")
    x = np.asarray(x, dtype=float).reshape(-1)
    if len(x) != P.n:
        raise InputError(f"x has length {len(x)}, symbol dimension is {P.n}")
    drift = x / t
    drift_norm = float(np.linalg.norm(drift))
    if search_radius is None:
        search_radius = 2.0 * max(1.0, stationary_scale(P, drift_norm))
    threshold = 1e-10 * max(1.0, drift_norm)

    axis = np.linspace(-search_radius, search_radius, 9)
    mesh = np.meshgrid(*([axis] * P.n), indexing="ij")
    starts = np.column_stack([g.reshape(-1) for g in mesh])
    current = starts[np.linalg.norm(starts, axis=1) <= search_radius * (1.0 + 1e-12)]

    residual = P.gradients(current) + drift
    norms = np.linalg.norm(residual, axis=1)
    active = np.ones(len(current), dtype=bool)
    for _ in range(max_iterations):
        active &= norms >= threshold
        if not np.any(active):
            break
        index = np.nonzero(active)[0]
        hessians = P.hessians(current[index])
        with np.errstate(divide="ignore", invalid="ignore"):
            conditioning = np.linalg.cond(hessians)
        singular = ~np.isfinite(conditioning) | (conditioning > 1e14)
        active[index[singular]] = False
        index = index[~singular]
        if index.size == 0:
            break
        steps = -np.linalg.solve(hessians[~singular], residual[index][:, :, None])[:, :, 0]
        accepted = np.zeros(index.size, dtype=bool)
        scale = 1.0
        for _ in range(30):
            trial = current[index] + scale * steps
            trial_residual = P.gradients(trial) + drift
            trial_norms = np.linalg.norm(trial_residual, axis=1)
            better = ~accepted & (trial_norms < norms[index])
            rows = index[better]
            current[rows] = trial[better]
            residual[rows] = trial_residual[better]
            norms[rows] = trial_norms[better]
            accepted |= better
            if np.all(accepted):
                break
            scale *= 0.5
        active[index[~accepted]] = False

    solutions = current[norms < threshold]
    if solutions.size == 0:
        return np.zeros((0, P.n))
    solutions = solutions[np.lexsort(solutions.T[::-1])]
    unique: List[np.ndarray] = []
    for point in solutions:
        if not any(np.linalg.norm(point - u) <= 1e-7 * max(1.0, np.linalg.norm(u)) for u in unique):
            unique.append(point)
    result = np.asarray(unique)
    return result[np.lexsort(result.T[::-1])]


# ==================== ANNULUS AND GRADIENT SEPARATION ====================

@dataclass(frozen=True)
class AnnulusConstants:
    """Ω₂ ⊂ {2 C₁ r < |ξ| < C₂ r}, measured by ray scans"""
    r: float
    inner_radius: float
    outer_radius: float
    c1: float
    c2: float
    empty: bool

    def to_document(self) -> dict:
        return {
            "r": self.r,
            "inner_radius": self.inner_radius,
            "outer_radius": self.outer_radius,
            "c1": self.c1,
            "c2": self.c2,
            "empty": self.empty,
        }


def annulus_constants(P: PolynomialSymbol, t: float, x: Sequence[float], rays: int = 256) -> AnnulusConstants:
    """Scan the Ω₂ gradient condition (with |ξ| > |t|^{-1/m}/2) along rays"""
    ctx = RegionContext.create(P, t, x, L=1.0)
    r = ctx.r
    if ctx.drift_norm < ZERO_DRIFT:
        return AnnulusConstants(r, math.nan, math.nan, math.nan, math.nan, True)
    upper = 8.0 * max(1.0, stationary_scale(P, ctx.drift_norm), ctx.low_freq_radius)
    radii = np.geomspace(0.5 * ctx.low_freq_radius, upper, 2000)
    directions = regular_directions(P.n, rays)
    points = (radii[None, :, None] * directions[:, None, :]).reshape(-1, P.n)
    gap = np.linalg.norm(P.gradients(points) + ctx.drift, axis=1).reshape(len(directions), len(radii))
    hit = gap < ctx.drift_norm
    hit[:, 0] = False
    if not np.any(hit):
        return AnnulusConstants(r, math.nan, math.nan, math.nan, math.nan, True)
    columns = np.nonzero(np.any(hit, axis=0))[0]
    inner = float(radii[max(columns[0] - 1, 0)])
    outer = float(radii[min(columns[-1] + 1, len(radii) - 1)])
    return AnnulusConstants(r, inner, outer, inner / (2.0 * r), outer / r, False)


@dataclass(frozen=True)
class GradientSeparationReport:
    c_emp: float
    passed: bool
    vacuous: bool
    reason: str
    sector_direction: Tuple[float, ...]
    sample_count: int
    pair_count: int
    r: float
    b: float
    annulus: AnnulusConstants

    def to_document(self) -> dict:
        return {
            "c_emp": self.c_emp,
            "passed": self.passed,
            "vacuous": self.vacuous,
            "reason": self.reason,
            "sector_direction": list(self.sector_direction),
            "sample_count": self.sample_count,
            "pair_count": self.pair_count,
            "r": self.r,
            "b": self.b,
            "annulus": self.annulus.to_document(),
        }


def _sector_samples(
    rng: np.random.Generator, centre: np.ndarray, inner: float, outer: float, count: int
) -> np.ndarray:
    n = len(centre)
    radii = rng.uniform(inner, outer, count)
    if n == 1:
        return (radii * centre[0])[:, None]
    if n == 2:
        base = math.atan2(centre[1], centre[0])
        half = 2.0 * math.asin(NET_SPACING / 2.0)
        angles = base + rng.uniform(-half, half, count)
        return radii[:, None] * np.column_stack([np.cos(angles), np.sin(angles)])
    spread = rng.normal(size=(count, 3)) * NET_SPACING
    directions = centre[None, :] + spread
    directions /= np.linalg.norm(directions, axis=1)[:, None]
    return radii[:, None] * directions


def check_gradient_separation(
    P: PolynomialSymbol,
    spectral,
    t: float,
    x: Sequence[float],
    pair_count: int = 10_000,
    sample_count: int = 2000,
    seed: int = 0,
) -> GradientSeparationReport:
    """
    Empirical constant of |∇P(ξ) - ∇P(ξ')| ≥ C r^{b(m-2)} |ξ - ξ'| on the sector Ω₂^v
    nearest the stationary direction. The sector is vacuous when Ω₂ is empty or lies
    inside |ξ| < L (C₁ r ≤ L).
    """
    if not spectral.same_sign:
        raise InputError("gradient separation needs a symbol whose Hessian eigenvalues share one sign")
    ctx = RegionContext.create(P, t, x, spectral.L)
    b = spectral.b_hat
    annulus = annulus_constants(P, t, x)
    net = angular_net(P.n)

    points = stationary_points(P, t, x)
    if len(points):
        heading = points[int(np.argmax(np.linalg.norm(points, axis=1)))]
    else:
        heading = -ctx.drift
    norm = float(np.linalg.norm(heading))
    heading = heading / norm if norm > 0 else net[0]
    v = int(np.argmin(np.linalg.norm(net - heading, axis=1)))
    centre = net[v]

    def vacuous(reason: str) -> GradientSeparationReport:
        logger.info(f"🔍 gradient separation vacuous: {reason}")
        return GradientSeparationReport(
            math.nan, True, True, reason, tuple(centre), 0, 0, ctx.r, b, annulus
        )

    if annulus.empty:
        return vacuous("sector empty")
    if annulus.c1 * ctx.r <= ctx.L:
        return vacuous("C1 r <= L")

    rng = np.random.default_rng(seed)
    accepted = []
    total = 0
    for _ in range(50):
        candidates = _sector_samples(rng, centre, max(annulus.inner_radius, ctx.L), annulus.outer_radius, 4 * sample_count)
        masks = region_masks(ctx, P, candidates)
        chords = np.linalg.norm(candidates / np.linalg.norm(candidates, axis=1)[:, None] - centre, axis=1)
        keep = masks[Region.OMEGA_2] & (chords < NET_SPACING)
        accepted.append(candidates[keep])
        total += int(np.sum(keep))
        if total >= sample_count:
            break
    samples = np.vstack(accepted)[:sample_count] if total else np.zeros((0, P.n))
    if len(samples) < 2:
        return vacuous("sector empty")

    first = rng.integers(0, len(samples), pair_count)
    second = rng.integers(0, len(samples) - 1, pair_count)
    second = np.where(second >= first, second + 1, second)
    a, c = samples[first], samples[second]
    separation = np.linalg.norm(a - c, axis=1)
    usable = separation > 0
    ratios = (
        np.linalg.norm(P.gradients(a[usable]) - P.gradients(c[usable]), axis=1)
        / (ctx.r ** (b * (P.m - 2)) * separation[usable])
    )
    c_emp = float(np.min(ratios))
    logger.info(f"🔍 gradient separation on sector {v}: C_emp = {c_emp:.6g} over {int(np.sum(usable))} pairs")
    return GradientSeparationReport(
        c_emp=c_emp,
        passed=c_emp > 0,
        vacuous=False,
        reason="",
        sector_direction=tuple(float(c) for c in centre),
        sample_count=len(samples),
        pair_count=int(np.sum(usable)),
        r=ctx.r,
        b=b,
        annulus=annulus,
    )
