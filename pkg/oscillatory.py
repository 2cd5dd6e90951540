"""
Evaluation of the fundamental solution

    I(t,x) = ∫ exp(i t P(ξ) + i<x,ξ>) dξ

The integral is computed in polar form, one ray integral per direction ω with the
univariate phase t Σ_k P_k(ω) ρ^k + <x,ω> ρ. Two independent evaluators are provided:

- fundamental_solution: Gaussian mollifier exp(-ε|ξ|²), Richardson extrapolation ε → 0;
- partition_guided_eval: I₂ + I₁₁ + I₁₂ + I₁₃ from the cutoffs φ₁, φ₂, φ₃, no mollifier.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from errors import InputError, NumericalError
from partition import ZERO_DRIFT, RegionContext, angular_net, bump, chi_weights, cutoff_values
from quadrature import DEFAULT_BUDGET, EvaluationBudget, RayResult, integrate_ray
from sphere import regular_directions, sphere_area
from symbols import PolynomialSymbol, is_radial, require_symbol

logger = logging.getLogger(__name__)

ANGULAR_START = 16
ANGULAR_MAX = 1 << 14
LEVEL_TOL_FRACTION = 1.0 / 20.0
PIECE_TOL_FRACTION = 1.0 / 5.0
MAX_TRUNCATION_DOUBLINGS = 12


class Method(str, Enum):
    MOLLIFIED = "mollified"
    PARTITION_GUIDED = "partition_guided"
    QUADRATURE = "quadrature"


@dataclass(frozen=True)
class MollifierSchedule:
    """
    ε levels eps0 · ratio^k (k < depth), expressed in units of s^-2 where
    s = max(|t|^{-1/m}, |x/t|^{1/(m-1)}) is the frequency scale of the phase.
    """
    eps0: float = 0.02
    ratio: float = 0.5
    depth: int = 6
    richardson_order: int = 5

    def __post_init__(self):
        if not self.eps0 > 0:
            raise InputError(f"eps0 must be positive, got {self.eps0}")
        if not 0.0 < self.ratio < 1.0:
            raise InputError(f"ratio must lie in (0, 1), got {self.ratio}")
        if self.depth < 3:
            raise InputError(f"depth must be at least 3, got {self.depth}")
        if not 0 <= self.richardson_order < self.depth:
            raise InputError(f"richardson_order must lie in [0, depth), got {self.richardson_order}")

    def levels(self, scale: float = 1.0) -> List[float]:
        return [self.eps0 * self.ratio ** k / scale ** 2 for k in range(self.depth)]


@dataclass(frozen=True)
class EvalResult:
    value: complex
    abs_error_estimate: float
    method: Method
    diagnostics: Dict[str, Any]
    converged: bool

    @property
    def magnitude(self) -> float:
        return abs(self.value)

    def to_document(self) -> dict:
        return {
            "value": {"re": self.value.real, "im": self.value.imag},
            "magnitude": self.magnitude,
            "abs_error_estimate": self.abs_error_estimate,
            "method": self.method.value,
            "converged": self.converged,
            "diagnostics": self.diagnostics,
        }


# ==================== WEIGHTS ====================

@dataclass(frozen=True)
class Weight:
    """Smooth factor w(ξ) of the integrand; support bounds |ξ| where w can be nonzero"""
    func: Optional[Callable[[np.ndarray], np.ndarray]] = None
    radial: bool = True
    support: float = math.inf

    def __call__(self, points: np.ndarray) -> np.ndarray:
        if self.func is None:
            return np.ones(len(points))
        return self.func(points)

    def times(self, other: "Weight") -> "Weight":
        return Weight(
            lambda p: self(p) * other(p),
            self.radial and other.radial,
            min(self.support, other.support),
        )


UNIT_WEIGHT = Weight()


def inner_weight(radius: float) -> Weight:
    """φ(|ξ|/radius)"""
    return Weight(lambda p: bump(np.linalg.norm(p, axis=1) / radius), True, radius)


def outer_weight(radius: float) -> Weight:
    """1 - φ(|ξ|/radius)"""
    return Weight(lambda p: 1.0 - bump(np.linalg.norm(p, axis=1) / radius), True)


# ==================== RAY SUMS ====================

@dataclass(frozen=True)
class _SumResult:
    value: complex
    error: float
    converged: bool
    rays: int


def _validate(P: PolynomialSymbol, t: float, x: Sequence[float]) -> np.ndarray:
    require_symbol(P)
    if t == 0 or not math.isfinite(t):
        raise InputError(f"t must be finite and nonzero, got {t}")
    x = np.asarray(x, dtype=float).reshape(-1)
    if len(x) != P.n:
        raise InputError(f"x has length {len(x)}, symbol dimension is {P.n}")
    return x


def truncation_radius(eps: float, tol: float, n: int) -> float:
    """Radius beyond which the Gaussian-weighted tail ∫ ρ^{n-1} exp(-ερ²) stays below tol/10"""
    area = sphere_area(n)
    radius = math.sqrt(math.log(10.0 / tol) / eps)
    for _ in range(3):
        tail = area * radius ** (n - 2) / (2.0 * eps)
        radius = math.sqrt(max(math.log(10.0 * tail / tol), math.log(10.0 / tol)) / eps)
    return radius


def frequency_scale(P: PolynomialSymbol, t: float, x: Sequence[float]) -> float:
    drift = float(np.linalg.norm(np.asarray(x, dtype=float))) / abs(t)
    return max(abs(t) ** (-1.0 / P.m), drift ** (1.0 / (P.m - 1)))


def _ray(
    P: PolynomialSymbol,
    t: float,
    x: np.ndarray,
    direction: np.ndarray,
    weight: Weight,
    eps: float,
    radius: float,
    tol: float,
    budget: EvaluationBudget,
) -> RayResult:
    coefficients = np.zeros(P.m + 1)
    for k, part in enumerate(P.homogeneous_parts):
        if not part.is_zero:
            coefficients[k] = t * float(part.values(direction[None, :])[0])
    coefficients[1] += float(direction @ x)
    n = P.n

    def amplitude(rho: np.ndarray) -> np.ndarray:
        values = rho ** (n - 1) if n > 1 else np.ones_like(rho)
        if weight.func is not None:
            values = values * weight(rho[:, None] * direction[None, :])
        if eps > 0:
            values = values * np.exp(-eps * rho * rho)
        return values

    return integrate_ray(Polynomial(coefficients), amplitude, 0.0, radius, tol, budget)


def _angular_sum(ray_at: Callable[[float, float], RayResult], tol: float, budget: EvaluationBudget) -> _SumResult:
    """Periodic trapezoid rule in the polar angle, doubling until two sums agree within tol/4"""
    ray_tol = tol / (4.0 * math.pi)
    count = ANGULAR_START
    results = [ray_at(2.0 * math.pi * j / count, ray_tol) for j in range(count)]
    total = (2.0 * math.pi / count) * complex(
        math.fsum(r.value.real for r in results), math.fsum(r.value.imag for r in results)
    )
    change = math.inf
    while True:
        if count >= ANGULAR_MAX or budget.remaining <= 0:
            break
        fresh = [ray_at(2.0 * math.pi * (2 * j + 1) / (2 * count), ray_tol) for j in range(count)]
        refined = 0.5 * total + (math.pi / count) * complex(
            math.fsum(r.value.real for r in fresh), math.fsum(r.value.imag for r in fresh)
        )
        results = [r for pair in zip(results, fresh) for r in pair]
        count *= 2
        change = abs(refined - total)
        total = refined
        if change < tol / 4.0:
            break
    ray_error = (2.0 * math.pi / count) * math.fsum(r.error for r in results)
    error = ray_error + change
    converged = all(r.converged for r in results) and error <= tol
    return _SumResult(total, error, converged, count)


def weighted_integral(
    P: PolynomialSymbol,
    t: float,
    x: Sequence[float],
    weight: Weight,
    eps: float,
    tol: float,
    budget: EvaluationBudget,
) -> _SumResult:
    """∫ exp(i t P + i<x,ξ>) w(ξ) exp(-ε|ξ|²) dξ, truncated where the mollifier tail is below tol/10"""
    x = _validate(P, t, x)
    radius = weight.support
    if eps > 0:
        radius = min(radius, truncation_radius(eps, tol, P.n))
    if not math.isfinite(radius):
        raise InputError("an unmollified integral needs a compactly supported weight")

    if weight.radial and not np.any(x) and is_radial(P):
        axis = np.eye(P.n)[0]
        area = sphere_area(P.n)
        ray = _ray(P, t, x, axis, weight, eps, radius, tol / area, budget)
        return _SumResult(area * ray.value, area * ray.error, ray.converged, 1)

    if P.n == 1:
        rays = [_ray(P, t, x, np.array([s]), weight, eps, radius, tol / 2.0, budget) for s in (1.0, -1.0)]
        value = complex(math.fsum(r.value.real for r in rays), math.fsum(r.value.imag for r in rays))
        error = math.fsum(r.error for r in rays)
        return _SumResult(value, error, all(r.converged for r in rays) and error <= tol, 2)

    if P.n == 2:
        def ray_at(angle: float, ray_tol: float) -> RayResult:
            direction = np.array([math.cos(angle), math.sin(angle)])
            return _ray(P, t, x, direction, weight, eps, radius, ray_tol, budget)

        return _angular_sum(ray_at, tol, budget)

    raise InputError("n = 3 is evaluated only for a radial symbol at x = 0 with a radial weight")


# ==================== MOLLIFIED EVALUATION ====================

def mollified_integral(
    P: PolynomialSymbol,
    t: float,
    x: Sequence[float],
    eps: float,
    tol: float,
    weight: Weight = UNIT_WEIGHT,
    budget: Optional[EvaluationBudget] = None,
) -> complex:
    """∫ exp(i t P + i<x,ξ>) exp(-ε|ξ|²) dξ to absolute tolerance tol"""
    if not eps > 0:
        raise InputError(f"eps must be positive, got {eps}")
    budget = budget or EvaluationBudget(DEFAULT_BUDGET)
    result = weighted_integral(P, t, x, weight, eps, tol, budget)
    if not result.converged:
        raise NumericalError(
            f"mollified integral did not reach tol={tol:g} (error {result.error:.3g})",
            {"error": result.error, "evaluations": budget.used, "rays": result.rays},
        )
    return result.value


def _richardson_row(previous: List[np.ndarray], k: int, depth: int, order: int, ratio: float) -> List[np.ndarray]:
    """Row k of the tableau as coefficient vectors over the level values"""
    row = [np.eye(depth)[k]]
    for j in range(1, min(k, order) + 1):
        factor = 1.0 / (ratio ** (-j) - 1.0)
        row.append(row[j - 1] + (row[j - 1] - previous[j - 1]) * factor)
    return row


def fundamental_solution(
    P: PolynomialSymbol,
    t: float,
    x: Sequence[float],
    schedule: Optional[MollifierSchedule] = None,
    tol: float = 1e-7,
    weight: Weight = UNIT_WEIGHT,
    budget: Optional[EvaluationBudget] = None,
) -> EvalResult:
    """
    Richardson extrapolation of the mollified integral over the ε schedule.

    The error estimate is the last diagonal increment plus the quadrature errors of the
    levels weighted by the magnitudes of their extrapolation coefficients. Non-monotone
    increments over three levels stop the tableau with converged=False.
    """
    x = _validate(P, t, x)
    if not tol > 0:
        raise InputError(f"tolerance must be positive, got {tol}")
    schedule = schedule or MollifierSchedule()
    budget = budget or EvaluationBudget(DEFAULT_BUDGET)
    scale = frequency_scale(P, t, x)
    levels = schedule.levels(scale)

    values: List[complex] = []
    errors: List[float] = []
    rays: List[int] = []
    estimates: List[complex] = []
    increments: List[float] = []
    totals: List[float] = []
    row: List[np.ndarray] = []
    stop_reason = "depth"
    for k, eps in enumerate(levels):
        level = weighted_integral(P, t, x, weight, eps, tol * LEVEL_TOL_FRACTION, budget)
        values.append(level.value)
        errors.append(level.error)
        rays.append(level.rays)
        row = _richardson_row(row, k, schedule.depth, schedule.richardson_order, schedule.ratio)
        coefficients = row[-1][: k + 1]
        estimates.append(complex(coefficients @ np.asarray(values)))
        if k == 0:
            continue
        increments.append(abs(estimates[-1] - estimates[-2]))
        totals.append(increments[-1] + float(np.abs(coefficients) @ np.asarray(errors)))
        logger.debug(f"level {k}: eps={eps:.4g} value={estimates[-1]:.10g} increment={increments[-1]:.3g}")
        if k >= 2 and totals[-1] <= tol:
            stop_reason = "converged"
            break
        if len(increments) >= 3 and increments[-1] >= increments[-2] >= increments[-3]:
            stop_reason = "oscillation"
            break
        if budget.remaining <= 0:
            stop_reason = "budget"
            break

    best = int(np.argmin(totals))
    value = estimates[best + 1]
    error = totals[best]
    converged = stop_reason == "converged"
    if not converged:
        logger.warning(f"⚠️ extrapolation stopped ({stop_reason}) with error estimate {error:.3g} > {tol:.3g}")
    diagnostics = {
        "eps_levels": levels[: len(values)],
        "frequency_scale": scale,
        "increments": increments,
        "level_errors": errors,
        "rays": rays,
        "stop_reason": stop_reason,
        "evaluations": budget.used,
    }
    return EvalResult(value, error, Method.MOLLIFIED, diagnostics, converged)


# ==================== SPLIT AND PARTITION-GUIDED EVALUATION ====================

def _piece_result(piece: str, result: _SumResult, tol: float, **extra) -> EvalResult:
    diagnostics = {"piece": piece, "rays": result.rays, **extra}
    return EvalResult(result.value, result.error, Method.QUADRATURE, diagnostics, result.converged and result.error <= tol)


def split_I1_I2(
    P: PolynomialSymbol,
    t: float,
    x: Sequence[float],
    L: float,
    tol: float,
    schedule: Optional[MollifierSchedule] = None,
    budget: Optional[EvaluationBudget] = None,
) -> Tuple[EvalResult, EvalResult]:
    """
    I₂ = ∫ e^{iΦ} φ(|ξ|/L) dξ by plain quadrature on |ξ| ≤ L and
    I₁ = ∫ e^{iΦ} (1 - φ(|ξ|/L)) dξ through the mollified evaluator.
    """
    if not L > 0:
        raise InputError(f"L must be positive, got {L}")
    budget = budget or EvaluationBudget(DEFAULT_BUDGET)
    inner = weighted_integral(P, t, x, inner_weight(L), 0.0, tol, budget)
    i2 = _piece_result("I2", inner, tol, support=L)
    i1 = fundamental_solution(P, t, x, schedule, tol, outer_weight(L), budget)
    i1.diagnostics["piece"] = "I1"
    return i1, i2


def _phi2_support(P: PolynomialSymbol, ctx: RegionContext, c_grad: float) -> float:
    """Radius past which φ₂ vanishes: |∇P| ≥ c_∇|ξ|^{m-1} beyond L, so |∇P| < 2|x/t| bounds |ξ|"""
    radius = 1.25 * max(ctx.L, (2.0 * ctx.drift_norm / c_grad) ** (1.0 / (P.m - 1)))
    directions = regular_directions(P.n, 256)
    for _ in range(10):
        _, phi2, _ = cutoff_values(ctx, P, radius * directions)
        if not np.any(phi2 > 0):
            break
        radius *= 2.0
    return radius


PIECES = ("I2", "I11", "I12", "I13")


def _as_dict(result: _SumResult) -> dict:
    return {"re": result.value.real, "im": result.value.imag, "error": result.error, "converged": result.converged}


class _PartitionPieces:
    """The four pieces of I at one (t, x), each weighted by one cutoff times 1 - φ(|ξ|/L) (I₂ by φ(|ξ|/L))"""

    def __init__(self, P: PolynomialSymbol, t: float, x: np.ndarray, spectral, budget: EvaluationBudget):
        self.P = P
        self.t = t
        self.x = x
        self.spectral = spectral
        self.budget = budget
        self.ctx = RegionContext.create(P, t, x, spectral.L)
        self.outside = outer_weight(spectral.L)
        self.stationary_radius = 0.0
        if self.ctx.drift_norm >= ZERO_DRIFT:
            self.stationary_radius = _phi2_support(P, self.ctx, spectral.c_grad)
        self.truncation_radius = 0.0
        self.truncation_changes: List[float] = []

    def _integral(self, weight: Weight, tol: float) -> _SumResult:
        return weighted_integral(self.P, self.t, self.x, weight, 0.0, tol, self.budget)

    def compute(self, name: str, tol: float) -> _SumResult:
        ctx = self.ctx
        if name == "I2":
            return self._integral(inner_weight(ctx.L), tol)
        if name == "I11":
            low = ctx.low_freq_radius
            if low <= 0.5 * ctx.L:
                return _SumResult(0j, 0.0, True, 0)
            phi1 = Weight(lambda p: bump(np.linalg.norm(p, axis=1) / low), True, low)
            return self._integral(phi1.times(self.outside), tol)
        if name == "I12":
            if ctx.drift_norm < ZERO_DRIFT:
                return _SumResult(0j, 0.0, True, 0)
            phi2 = Weight(lambda p: cutoff_values(ctx, self.P, p)[1], False, self.stationary_radius)
            return self._integral(phi2.times(self.outside), tol)
        if name == "I13":
            return self._tail(tol)
        raise InputError(f"unknown piece {name!r}; expected one of {PIECES}")

    def _tail(self, tol: float) -> _SumResult:
        """φ₃ piece truncated smoothly at R; R doubles until two successive changes are below tol/4"""
        ctx = self.ctx
        phi3 = Weight(lambda p: cutoff_values(ctx, self.P, p)[2], ctx.drift_norm < ZERO_DRIFT)
        cutoff = 2.0 * max(self.stationary_radius, ctx.low_freq_radius, ctx.L)
        tails: List[_SumResult] = []
        changes: List[float] = []
        for _ in range(MAX_TRUNCATION_DOUBLINGS):
            truncated = phi3.times(self.outside).times(inner_weight(cutoff))
            tails.append(self._integral(truncated, tol))
            if len(tails) >= 2:
                changes.append(abs(tails[-1].value - tails[-2].value))
            if len(changes) >= 2 and changes[-1] < tol / 4.0 and changes[-2] < tol / 4.0:
                break
            if self.budget.remaining <= 0:
                break
            cutoff *= 2.0
        self.truncation_radius = cutoff
        self.truncation_changes = changes
        last = tails[-1]
        error = last.error + (changes[-1] if changes else math.inf)
        return _SumResult(last.value, error, last.converged and error <= tol, last.rays)


def partition_piece(
    P: PolynomialSymbol,
    t: float,
    x: Sequence[float],
    spectral,
    piece: str,
    tol: float,
    budget: Optional[EvaluationBudget] = None,
) -> EvalResult:
    """One of I₂, I₁₁, I₁₂, I₁₃ on its own"""
    x = _validate(P, t, x)
    pieces = _PartitionPieces(P, t, x, spectral, budget or EvaluationBudget(DEFAULT_BUDGET))
    result = pieces.compute(piece, tol)
    diagnostics = {"piece": piece, "rays": result.rays, "evaluations": pieces.budget.used}
    return EvalResult(result.value, result.error, Method.PARTITION_GUIDED, diagnostics, result.converged and result.error <= tol)


def partition_guided_eval(
    P: PolynomialSymbol,
    t: float,
    x: Sequence[float],
    spectral,
    tol: float,
    budget: Optional[EvaluationBudget] = None,
) -> EvalResult:
    """
    I = I₂ + I₁₁ + I₁₂ + I₁₃ with the pieces weighted by φ(|ξ|/L), φ₁(1-φ(|ξ|/L)),
    φ₂(1-φ(|ξ|/L)) and φ₃(1-φ(|ξ|/L)). The first three have compact support; the φ₃
    piece is truncated smoothly, see _PartitionPieces._tail. Each piece gets tol/5.
    """
    x = _validate(P, t, x)
    pieces = _PartitionPieces(P, t, x, spectral, budget or EvaluationBudget(DEFAULT_BUDGET))
    results = {name: pieces.compute(name, tol * PIECE_TOL_FRACTION) for name in PIECES}

    value = sum((results[name].value for name in PIECES), 0j)
    error = math.fsum(results[name].error for name in PIECES)
    converged = all(r.converged for r in results.values()) and error <= tol
    diagnostics = {
        "pieces": {name: _as_dict(results[name]) for name in PIECES},
        "L": spectral.L,
        "low_freq_radius": pieces.ctx.low_freq_radius,
        "phi2_support": pieces.stationary_radius,
        "truncation_radius": pieces.truncation_radius,
        "truncation_changes": pieces.truncation_changes,
        "evaluations": pieces.budget.used,
    }
    if not converged:
        logger.warning(f"⚠️ partition-guided evaluation error {error:.3g} exceeds {tol:.3g}")
    return EvalResult(value, error, Method.PARTITION_GUIDED, diagnostics, converged)


def sector_pieces(
    P: PolynomialSymbol,
    t: float,
    x: Sequence[float],
    spectral,
    tol: float,
    budget: Optional[EvaluationBudget] = None,
) -> List[Tuple[Tuple[float, ...], complex, float]]:
    """
    Split I₁₂ over the angular net: I₁₂^v = ∫ e^{iΦ} φ₂ χ_v (1 - φ(|ξ|/L)) dξ.
    Returns (ξ_v, value, error) per sector; the values sum to I₁₂.
    """
    x = _validate(P, t, x)
    budget = budget or EvaluationBudget(DEFAULT_BUDGET)
    ctx = RegionContext.create(P, t, x, spectral.L)
    if ctx.drift_norm < ZERO_DRIFT:
        return []
    net = angular_net(P.n)
    support = _phi2_support(P, ctx, spectral.c_grad)
    outside = outer_weight(spectral.L)
    pieces = []
    for v, centre in enumerate(net):
        def sector(p: np.ndarray, v=v) -> np.ndarray:
            weights = np.zeros(len(p))
            nonzero = np.linalg.norm(p, axis=1) > 0
            if np.any(nonzero):
                weights[nonzero] = chi_weights(net, p[nonzero])[:, v]
            return cutoff_values(ctx, P, p)[1] * weights

        piece = weighted_integral(P, t, x, Weight(sector, False, support).times(outside), 0.0, tol / len(net), budget)
        pieces.append((tuple(float(c) for c in centre), piece.value, piece.error))
    return pieces
