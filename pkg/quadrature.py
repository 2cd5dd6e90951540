"""
Adaptive panel quadrature for one-dimensional oscillatory integrals

    ∫_{rho_lo}^{rho_hi} a(rho) exp(i phi(rho)) d rho

where phi is a real polynomial and a is smooth. Two panel kinds are used:

- windows around (near-)stationary points of phi get Gauss-Legendre panels in rho,
  sized to the local wavelength 2π/|phi'|;
- the monotone stretches in between are integrated in the phase variable u = phi(rho)
  with a Filon-Legendre rule: the smooth factor a/phi' is expanded in Legendre
  polynomials and integrated exactly against exp(iu) through spherical Bessel moments.

A single heap-driven loop bisects the worst panel until the summed error estimate
meets the tolerance or the shared evaluation budget runs out.
"""
import heapq
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Tuple

import numpy as np
from numpy.polynomial import Polynomial, legendre
from scipy.integrate import cumulative_trapezoid
from scipy.special import spherical_jn

from errors import InputError

logger = logging.getLogger(__name__)

DEFAULT_ORDER = 20
DEFAULT_BUDGET = 10_000_000
WINDOW_PERIODS = 3.0
WAVELENGTHS_PER_PANEL = 1.6
NEAR_REAL_RATIO = 0.25

Amplitude = Callable[[np.ndarray], np.ndarray]

_I_POWERS = np.array([1.0, 1.0j, -1.0, -1.0j])


class EvaluationBudget:
    """Integrand-evaluation counter shared by every ray and level of one evaluation"""

    def __init__(self, limit: int = DEFAULT_BUDGET):
        if limit <= 0:
            raise InputError(f"budget must be positive, got {limit}")
        self.limit = int(limit)
        self.used = 0

    @property
    def remaining(self) -> int:
        return self.limit - self.used

    def can_afford(self, count: int) -> bool:
        return self.used + count <= self.limit

    def charge(self, count: int):
        self.used += count


@dataclass(frozen=True)
class RayResult:
    value: complex
    error: float
    panels: int
    evaluations: int
    converged: bool


@lru_cache(maxsize=8)
def legendre_rule(order: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Gauss-Legendre nodes and weights plus the projector onto Legendre coefficients:
    a = projector @ f gives f ≈ Σ a_k P_k on [-1, 1].
    """
    nodes, weights = legendre.leggauss(order)
    vander = legendre.legvander(nodes, order - 1)
    projector = ((2.0 * np.arange(order) + 1.0) / 2.0)[:, None] * (vander * weights[:, None]).T
    for array in (nodes, weights, projector):
        array.setflags(write=False)
    return nodes, weights, projector


def filon_moments(order: int, omega: float) -> np.ndarray:
    """∫_{-1}^{1} P_k(s) exp(i omega s) ds = 2 i^k j_k(omega), k < order"""
    k = np.arange(order)
    bessel = spherical_jn(k, abs(omega))
    if omega < 0:
        bessel = bessel * np.where(k % 2 == 0, 1.0, -1.0)
    return 2.0 * _I_POWERS[k % 4] * bessel


@dataclass
class _Panel:
    lo: float
    hi: float
    kind: str
    value: complex = 0j
    error: float = 0.0
    retired: bool = False


class _RayIntegrator:

    def __init__(self, phase: Polynomial, amplitude: Amplitude, budget: EvaluationBudget, order: int):
        self.phase = phase.trim()
        self.dphase = self.phase.deriv()
        self.amplitude = amplitude
        self.budget = budget
        self.order = order
        self.nodes, self.weights, self.projector = legendre_rule(order)
        self.evaluations = 0

    # ---------- geometry ----------

    def _half_width(self, centre: float, direction: float, limit: float) -> float:
        target = 2.0 * math.pi * WINDOW_PERIODS
        deltas = limit * np.geomspace(1e-12, 1.0, 400)
        jumps = np.abs(self.phase(centre + direction * deltas) - self.phase(centre))
        hit = np.nonzero(jumps >= target)[0]
        return float(deltas[hit[0]]) if hit.size else limit

    def windows(self, lo: float, hi: float) -> List[Tuple[float, float]]:
        """Merged intervals around real and near-real roots of phi'"""
        if self.dphase.degree() < 1:
            return []
        span = hi - lo
        intervals = []
        for root in self.dphase.roots():
            centre = float(np.real(root))
            left = self._half_width(centre, -1.0, span)
            right = self._half_width(centre, 1.0, span)
            if abs(np.imag(root)) > max(NEAR_REAL_RATIO * abs(centre), min(left, right)):
                continue
            a, b = max(lo, centre - left), min(hi, centre + right)
            if b > a:
                intervals.append((a, b))
        intervals.sort()
        merged: List[Tuple[float, float]] = []
        for a, b in intervals:
            if merged and a <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], b))
            else:
                merged.append((a, b))
        return merged

    def oscillation_mesh(self, a: float, b: float) -> np.ndarray:
        """Breakpoints with at most WAVELENGTHS_PER_PANEL local wavelengths per panel"""
        grid = np.linspace(a, b, 2049)
        rate = np.abs(self.dphase(grid)) / (2.0 * math.pi * WAVELENGTHS_PER_PANEL) + 2.0 / (b - a)
        count = cumulative_trapezoid(rate, grid, initial=0.0)
        panels = max(2, int(math.ceil(count[-1])))
        edges = np.interp(np.linspace(0.0, count[-1], panels + 1), count, grid)
        edges[0], edges[-1] = a, b
        return edges

    @staticmethod
    def monotone_mesh(a: float, b: float) -> np.ndarray:
        if a > 0:
            pieces = max(1, int(math.ceil(math.log2(b / a))))
            return np.geomspace(a, b, pieces + 1)
        return np.concatenate([[a], b * np.geomspace(2.0 ** -8, 1.0, 9)])

    # ---------- panel rules ----------

    def _gauss(self, panel: _Panel):
        half = 0.5 * (panel.hi - panel.lo)
        rho = panel.lo + half * (self.nodes + 1.0)
        f = self.amplitude(rho) * np.exp(1j * self.phase(rho))
        coeffs = self.projector @ f
        panel.value = complex(2.0 * half * coeffs[0])
        panel.error = float(2.0 * half * (abs(coeffs[-1]) + abs(coeffs[-2])))

    def _invert_phase(self, u: np.ndarray, panel: _Panel, ua: float, ub: float) -> np.ndarray:
        """Safeguarded Newton-bisection for phi(rho) = u inside the panel"""
        increasing = ub > ua
        a = np.full_like(u, panel.lo)
        b = np.full_like(u, panel.hi)
        rho = panel.lo + (panel.hi - panel.lo) * (u - ua) / (ub - ua)
        accuracy = 4.0 * np.finfo(float).eps * np.maximum(np.abs(u), 1.0)
        for _ in range(100):
            f = self.phase(rho) - u
            done = np.abs(f) <= accuracy
            if np.all(done):
                break
            right = (f < 0) if increasing else (f > 0)
            a = np.where(right & ~done, rho, a)
            b = np.where(~right & ~done, rho, b)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = rho - f / self.dphase(rho)
            unsafe = ~np.isfinite(step) | (step <= a) | (step >= b)
            updated = np.where(done, rho, np.where(unsafe, 0.5 * (a + b), step))
            if np.max(np.abs(updated - rho)) <= 2.0 * np.finfo(float).eps * max(abs(panel.hi), 1.0):
                rho = updated
                break
            rho = updated
        return rho

    def _filon(self, panel: _Panel):
        ua, ub = float(self.phase(panel.lo)), float(self.phase(panel.hi))
        omega = 0.5 * (ub - ua)
        centre = 0.5 * (ua + ub)
        if abs(omega) <= 1e-9 * (1.0 + abs(centre)):
            self._gauss(panel)
            return
        u = centre + omega * self.nodes
        rho = self._invert_phase(u, panel, ua, ub)
        smooth = self.amplitude(rho) / self.dphase(rho)
        coeffs = self.projector @ smooth
        panel.value = complex(omega * np.exp(1j * centre) * (coeffs @ filon_moments(self.order, omega)))
        tail = abs(coeffs[-1]) + abs(coeffs[-2])
        panel.error = float(abs(omega) * 2.0 * tail * min(1.0, self.order / abs(omega)))

    def evaluate(self, panel: _Panel) -> _Panel:
        if panel.kind == "filon":
            self._filon(panel)
        else:
            self._gauss(panel)
        if not (math.isfinite(panel.value.real) and math.isfinite(panel.value.imag) and math.isfinite(panel.error)):
            panel.error = math.inf
        self.budget.charge(self.order)
        self.evaluations += self.order
        return panel

    def initial_panels(self, lo: float, hi: float) -> List[_Panel]:
        panels: List[_Panel] = []
        cursor = lo
        minimum = 1e-13 * max(1.0, abs(hi))
        for a, b in self.windows(lo, hi) + [(hi, hi)]:
            if a - cursor > minimum:
                edges = self.monotone_mesh(cursor, a)
                panels.extend(_Panel(p, q, "filon") for p, q in zip(edges[:-1], edges[1:]))
            if b - a > minimum:
                edges = self.oscillation_mesh(a, b)
                panels.extend(_Panel(p, q, "gauss") for p, q in zip(edges[:-1], edges[1:]))
            cursor = max(cursor, b)
        return [self.evaluate(p) for p in panels]


def integrate_ray(
    phase: Polynomial,
    amplitude: Amplitude,
    rho_lo: float,
    rho_hi: float,
    tol: float,
    budget: EvaluationBudget,
    order: int = DEFAULT_ORDER,
) -> RayResult:
    """
    ∫ amplitude(rho) exp(i phase(rho)) d rho over [rho_lo, rho_hi] to absolute tolerance tol.

    Stops early (converged=False) when the budget cannot pay for another bisection.
    Panel values are summed in rho order, so results are bit-stable for a fixed budget.
    """
    if not rho_hi > rho_lo:
        raise InputError(f"empty ray interval [{rho_lo}, {rho_hi}]")
    if not tol > 0:
        raise InputError(f"tolerance must be positive, got {tol}")

    integrator = _RayIntegrator(phase, amplitude, budget, order)
    panels = integrator.initial_panels(rho_lo, rho_hi)

    heap = [(-p.error, index) for index, p in enumerate(panels)]
    heapq.heapify(heap)
    total = math.fsum(p.error for p in panels)
    smallest = 1e-13 * max(1.0, abs(rho_hi))

    while total > tol and heap:
        if not budget.can_afford(2 * order):
            logger.debug(f"ray budget exhausted with error {total:.3g} > {tol:.3g}")
            break
        _, index = heapq.heappop(heap)
        panel = panels[index]
        if panel.hi - panel.lo <= smallest:
            continue
        middle = 0.5 * (panel.lo + panel.hi)
        children = [
            integrator.evaluate(_Panel(panel.lo, middle, panel.kind)),
            integrator.evaluate(_Panel(middle, panel.hi, panel.kind)),
        ]
        panel.retired = True
        if math.isfinite(total) and math.isfinite(panel.error):
            total += children[0].error + children[1].error - panel.error
        else:
            total = math.fsum(p.error for p in panels if not p.retired) + children[0].error + children[1].error
        for child in children:
            panels.append(child)
            heapq.heappush(heap, (-child.error, len(panels) - 1))

    alive = sorted((p for p in panels if not p.retired), key=lambda p: p.lo)
    value = complex(math.fsum(p.value.real for p in alive), math.fsum(p.value.imag for p in alive))
    error = math.fsum(p.error for p in alive)
    return RayResult(
        value=value,
        error=error,
        panels=len(alive),
        evaluations=integrator.evaluations,
        converged=error <= tol,
    )