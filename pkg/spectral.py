"""
Spectral classification of a symbol against the degeneracy condition (H_b):
Hessian eigenvalues, the empirical degeneracy order b, sign coherence of the
eigenvalues, the threshold radius L with its lower-bound constants, and the
closed-form decay exponents.
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from errors import ClassificationError, InputError, NumericalError
from sphere import halton_shell_points, regular_directions
from symbols import PolynomialSymbol, certify_elliptic, require_symbol

logger = logging.getLogger(__name__)

NUMERICAL_ZERO = 1e-9
JACOBI_TOLERANCE = 1e-13
DIRECTION_COUNTS = {1: 2, 2: 64, 3: 256}
DEFAULT_RADII = np.geomspace(1e1, 1e3, 25)
L_GRID_FACTOR = 1.2
L_GRID_START = 1.0
R_MAX = 1e3
L_RATIO_FLOOR = 1e-3


# ==================== EIGENVALUES ====================

def _jacobi_batch(matrices: np.ndarray, max_sweeps: int = 50) -> np.ndarray:
    """Cyclic Jacobi rotations applied to a stack of symmetric matrices"""
    a = np.array(matrices, dtype=float)
    count, n, _ = a.shape
    scale = np.maximum(1.0, np.linalg.norm(a, axis=(1, 2)))
    pairs = [(p, q) for p in range(n - 1) for q in range(p + 1, n)]
    for _ in range(max_sweeps):
        diagonal = np.sum(np.diagonal(a, axis1=1, axis2=2) ** 2, axis=1)
        off = np.sqrt(np.maximum(np.sum(a ** 2, axis=(1, 2)) - diagonal, 0.0))
        if np.all(off < JACOBI_TOLERANCE * scale):
            break
        for p, q in pairs:
            apq = a[:, p, q]
            rotate = apq != 0
            if not np.any(rotate):
                continue
            safe = np.where(rotate, apq, 1.0)
            tau = (a[:, q, q] - a[:, p, p]) / (2.0 * safe)
            tangent = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
            tangent = np.where(rotate, tangent, 0.0)
            cosine = 1.0 / np.sqrt(1.0 + tangent * tangent)
            sine = tangent * cosine
            rotation = np.broadcast_to(np.eye(n), (count, n, n)).copy()
            rotation[:, p, p] = cosine
            rotation[:, q, q] = cosine
            rotation[:, p, q] = sine
            rotation[:, q, p] = -sine
            a = np.einsum("kji,kjl,klm->kim", rotation, a, rotation)
    return np.sort(np.diagonal(a, axis1=1, axis2=2), axis=1)


def eigenvalues_batch(hessians: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of a stack of symmetric n×n matrices, n ≤ 3"""
    hessians = np.asarray(hessians, dtype=float)
    if not np.all(np.isfinite(hessians)):
        raise NumericalError("non-finite Hessian entries")
    n = hessians.shape[-1]
    if n == 1:
        return hessians[:, :, 0].copy()
    if n == 2:
        a, b, c = hessians[:, 0, 0], hessians[:, 0, 1], hessians[:, 1, 1]
        mean = 0.5 * (a + c)
        radius = np.hypot(0.5 * (a - c), b)
        return np.column_stack([mean - radius, mean + radius])
    if n == 3:
        return _jacobi_batch(hessians)
    raise InputError(f"eigenvalues supported for n <= 3, got n={n}")


def hessian_eigenvalues(P: PolynomialSymbol, xi) -> np.ndarray:
    point = np.asarray(xi, dtype=float).reshape(1, -1)
    if point.shape[1] != P.n:
        raise InputError(f"point has length {point.shape[1]}, symbol dimension is {P.n}")
    return eigenvalues_batch(P.hessians(point))[0]


def _numerical_zero(eigenvalues: np.ndarray) -> np.ndarray:
    scale = np.max(np.abs(eigenvalues), axis=-1, keepdims=True)
    return np.abs(eigenvalues) <= np.maximum(NUMERICAL_ZERO, 1e-12 * scale)


def _directions(n: int, directions: Optional[int]) -> np.ndarray:
    count = DIRECTION_COUNTS[n] if directions is None else directions
    return regular_directions(n, count)


# ==================== DEGENERACY ORDER ====================

@dataclass(frozen=True)
class BEstimate:
    b_hat: float
    ray_slopes: List[float]
    flag: str = ""
    witness: Optional[Dict[str, Any]] = None


def estimate_b(P: PolynomialSymbol, directions: Optional[int] = None, radii: Optional[Sequence[float]] = None) -> BEstimate:
    """
    Per-ray least-squares slope of log min_k |λ_k(Rω)| against log R over the top decade
    of radii; b_hat = min_ω slope / (m - 2), clamped to [0, 1].
    """
    require_symbol(P)
    if P.m == 2:
        return BEstimate(1.0, [], "m=2: b irrelevant")

    radii = np.asarray(DEFAULT_RADII if radii is None else radii, dtype=float)
    if radii.min() <= 0 or radii.max() / radii.min() < 100.0:
        raise InputError("radii must be positive and span at least two decades")
    top = np.sort(radii[radii >= radii.max() / 10.0])
    if len(top) < 8:
        raise InputError(f"need at least 8 radii in the top decade, got {len(top)}")

    unit = _directions(P.n, directions)
    points = (unit[:, None, :] * top[None, :, None]).reshape(-1, P.n)
    eigen = eigenvalues_batch(P.hessians(points))
    magnitude = np.where(_numerical_zero(eigen), 0.0, np.abs(eigen))
    smallest = np.min(magnitude, axis=1).reshape(len(unit), len(top))

    slopes: List[float] = []
    witness = None
    for k, row in enumerate(smallest):
        usable = row > 0
        if np.count_nonzero(usable) < 2:
            slopes.append(math.nan)
            if witness is None:
                j = int(np.argmin(row))
                witness = {
                    "direction": unit[k].tolist(),
                    "radius": float(top[j]),
                    "eigenvalues": eigen[k * len(top) + j].tolist(),
                }
            continue
        slope = np.polyfit(np.log(top[usable]), np.log(row[usable]), 1)[0]
        slopes.append(float(slope))

    if witness is not None:
        logger.warning(f"⚠️ {P.name}: zero Hessian eigenvalue along ray {witness['direction']}")
        return BEstimate(0.0, slopes, "zero eigenvalue along a ray", witness)

    b_hat = float(np.clip(min(slopes) / (P.m - 2), 0.0, 1.0))
    logger.info(f"🔍 {P.name}: b_hat = {b_hat:.4f} from {len(slopes)} rays")
    return BEstimate(b_hat, slopes)


# ==================== SIGN COHERENCE ====================

@dataclass(frozen=True)
class SameSignResult:
    same_sign: bool
    sign: int
    witness: Optional[Dict[str, Any]]
    skipped_zero: int
    samples: int


def same_sign_check(P: PolynomialSymbol, L: float, samples: int, seed: int = 0) -> SameSignResult:
    """All eigenvalues with |λ| > 1e-9 share one sign at every shell point, and across points"""
    if not L > 0:
        raise InputError(f"L must be positive, got {L}")
    points = halton_shell_points(P.n, samples, L, 10.0 * L, seed)
    eigen = eigenvalues_batch(P.hessians(points))
    nonzero = np.abs(eigen) > NUMERICAL_ZERO
    skipped = int(np.count_nonzero(~nonzero))

    sign = 0
    anchor = None
    for i in range(len(points)):
        values = eigen[i][nonzero[i]]
        if values.size == 0:
            continue
        if values.min() < 0 < values.max():
            witness = {
                "kind": "mixed_at_point",
                "point": points[i].tolist(),
                "eigenvalues": [float(values.min()), float(values.max())],
            }
            logger.warning(f"⚠️ {P.name}: mixed Hessian signs at {points[i].tolist()}")
            return SameSignResult(False, 0, witness, skipped, samples)
        local = 1 if values[0] > 0 else -1
        if sign == 0:
            sign, anchor = local, i
        elif local != sign:
            witness = {
                "kind": "inconsistent_across_points",
                "point": points[i].tolist(),
                "eigenvalues": eigen[i].tolist(),
                "reference_point": points[anchor].tolist(),
                "reference_eigenvalues": eigen[anchor].tolist(),
            }
            logger.warning(f"⚠️ {P.name}: Hessian sign changes between sample points")
            return SameSignResult(False, 0, witness, skipped, samples)
    return SameSignResult(True, sign, None, skipped, samples)


# ==================== THRESHOLD RADIUS ====================

@dataclass(frozen=True)
class LThreshold:
    L: float
    c_lambda: float
    c_grad: float


def l_grid(r_max: float = R_MAX) -> np.ndarray:
    count = int(math.floor(math.log(r_max / L_GRID_START) / math.log(L_GRID_FACTOR))) + 1
    return L_GRID_START * L_GRID_FACTOR ** np.arange(count)


def find_L(
    P: PolynomialSymbol,
    b: float,
    radii: Optional[Sequence[float]] = None,
    directions: Optional[int] = None,
) -> LThreshold:
    """
    Smallest grid radius L past which min_k |λ_k| ≥ c_λ |ξ|^{(m-2)b} and |∇P| ≥ c_∇ |ξ|^{m-1}
    with observed infima clearly positive (above L_RATIO_FLOOR times the ratios at R_max).
    """
    if not 0.0 <= b <= 1.0:
        raise InputError(f"b must lie in [0, 1], got {b}")
    radii = np.sort(np.asarray(l_grid() if radii is None else radii, dtype=float))
    unit = _directions(P.n, directions)
    points = (radii[:, None, None] * unit[None, :, :]).reshape(-1, P.n)

    eigen = eigenvalues_batch(P.hessians(points))
    smallest = np.min(np.abs(eigen), axis=1).reshape(len(radii), len(unit))
    gradient = np.linalg.norm(P.gradients(points), axis=1).reshape(len(radii), len(unit))

    lam_ratio = smallest / radii[:, None] ** ((P.m - 2) * b)
    grad_ratio = gradient / radii[:, None] ** (P.m - 1)
    lam_by_radius = lam_ratio.min(axis=1)
    grad_by_radius = grad_ratio.min(axis=1)
    # infimum over [radii[i], R_max]
    lam_tail = np.minimum.accumulate(lam_by_radius[::-1])[::-1]
    grad_tail = np.minimum.accumulate(grad_by_radius[::-1])[::-1]

    lam_floor = L_RATIO_FLOOR * lam_by_radius[-1]
    grad_floor = L_RATIO_FLOOR * grad_by_radius[-1]
    ok = (lam_tail > lam_floor) & (grad_tail > grad_floor) & (lam_tail > 0) & (grad_tail > 0)
    if not np.any(ok):
        eigen_fails = not (lam_tail[-1] > lam_floor and lam_tail[-1] > 0)
        worst = int(np.argmin(lam_ratio[-1] if eigen_fails else grad_ratio[-1]))
        witness = {
            "direction": unit[worst].tolist(),
            "radius": float(radii[-1]),
            "min_eigenvalue": float(smallest[-1, worst]),
            "gradient_norm": float(gradient[-1, worst]),
            "b": b,
        }
        raise ClassificationError(f"{P.name}: no threshold radius L up to R_max={radii[-1]:g} for b={b:g}", witness)

    i = int(np.argmax(ok))
    return LThreshold(float(radii[i]), float(lam_tail[i]), float(grad_tail[i]))


# ==================== EXPONENTS ====================

def _check_exponent_args(n: int, m: int, b: float) -> float:
    if n < 1 or m < 2:
        raise InputError(f"need n >= 1 and m >= 2, got n={n}, m={m}")
    denominator = (2.0 * b - 1.0) * (m - 2) + 2.0
    if denominator <= 0:
        raise InputError(f"exponent denominator (2b-1)(m-2)+2 = {denominator} is not positive")
    if not 0.5 <= b <= 1.0:
        logger.warning(f"⚠️ b = {b} outside [1/2, 1]; exponent computed anyway")
    return denominator


def sigma(n: int, m: int, b: float) -> float:
    """n / ((2b - 1)(m - 2) + 2)"""
    return n / _check_exponent_args(n, m, b)


def rho_b(n: int, m: int, b: float) -> float:
    return n * ((m - 3) - b * (m - 2)) / _check_exponent_args(n, m, b)


@dataclass(frozen=True)
class ExponentRecord:
    n: int
    m: int
    b: float
    sigma: float
    rho_b: float
    cui_small_t: float
    new_large_t: float
    rho_b_at_least_new: bool
    equality: bool
    b_in_range: bool

    def to_document(self) -> dict:
        return dict(self.__dict__)


def exponent_table(n: int, m: int, b: float) -> ExponentRecord:
    s = sigma(n, m, b)
    rho = rho_b(n, m, b)
    return ExponentRecord(
        n=n,
        m=m,
        b=b,
        sigma=s,
        rho_b=rho,
        cui_small_t=n / m,
        new_large_t=-n / 2.0,
        rho_b_at_least_new=rho >= -n / 2.0,
        equality=m == 2,
        b_in_range=0.5 <= b <= 1.0,
    )


# ==================== REPORT ====================

@dataclass(frozen=True)
class SpectralReport:
    b_hat: float
    b_flag: str
    ray_slopes: List[float]
    b_witness: Optional[Dict[str, Any]]
    same_sign: bool
    sign: int
    sign_witness: Optional[Dict[str, Any]]
    zero_eigenvalues_skipped: int
    L: float
    c_lambda: float
    c_grad: float

    def to_document(self) -> dict:
        return {
            "b_hat": self.b_hat,
            "b_flag": self.b_flag,
            "ray_slopes": list(self.ray_slopes),
            "b_witness": self.b_witness,
            "same_sign": self.same_sign,
            "sign": self.sign,
            "sign_witness": self.sign_witness,
            "zero_eigenvalues_skipped": self.zero_eigenvalues_skipped,
            "L": self.L,
            "c_lambda": self.c_lambda,
            "c_grad": self.c_grad,
        }

    @classmethod
    def from_document(cls, document: dict) -> "SpectralReport":
        return cls(
            b_hat=float(document["b_hat"]),
            b_flag=document.get("b_flag", ""),
            ray_slopes=[float(v) for v in document.get("ray_slopes", [])],
            b_witness=document.get("b_witness"),
            same_sign=bool(document["same_sign"]),
            sign=int(document.get("sign", 0)),
            sign_witness=document.get("sign_witness"),
            zero_eigenvalues_skipped=int(document.get("zero_eigenvalues_skipped", 0)),
            L=float(document["L"]),
            c_lambda=float(document["c_lambda"]),
            c_grad=float(document["c_grad"]),
        )


def classify_symbol(
    P: PolynomialSymbol,
    sphere_samples: int = 2000,
    ellipticity_tol: float = 1e-8,
    same_sign_samples: int = 4000,
    seed: int = 0,
):
    """
    Full classification: ellipticity certificate, b, L with constants, sign coherence.

    Returns (certificate, report). Raises InputError for a non-elliptic symbol and
    ClassificationError when no L exists or the Hessian signs are mixed; the error
    details carry everything computed up to the failure.
    """
    require_symbol(P)
    certificate = certify_elliptic(P, sphere_samples, ellipticity_tol)
    if not certificate.is_elliptic:
        raise InputError(
            f"{P.name}: principal part is not elliptic (min |P_m| = {certificate.min_principal_on_sphere:.3g})",
            {"certificate": certificate.to_document()},
        )

    estimate = estimate_b(P)
    try:
        threshold = find_L(P, estimate.b_hat)
    except ClassificationError as e:
        e.details["certificate"] = certificate.to_document()
        e.details["b_hat"] = estimate.b_hat
        e.details["b_witness"] = estimate.witness
        raise

    signs = same_sign_check(P, threshold.L, same_sign_samples, seed)
    report = SpectralReport(
        b_hat=estimate.b_hat,
        b_flag=estimate.flag,
        ray_slopes=estimate.ray_slopes,
        b_witness=estimate.witness,
        same_sign=signs.same_sign,
        sign=signs.sign,
        sign_witness=signs.witness,
        zero_eigenvalues_skipped=signs.skipped_zero,
        L=threshold.L,
        c_lambda=threshold.c_lambda,
        c_grad=threshold.c_grad,
    )
    if not signs.same_sign:
        error = ClassificationError(f"{P.name}: Hessian eigenvalues change sign for |ξ| >= L", signs.witness)
        error.details.update(certificate=certificate.to_document(), report=report.to_document())
        raise error
    logger.info(f"✅ {P.name}: b_hat={report.b_hat:.4f}, L={report.L:.4g}, c_λ={report.c_lambda:.4g}, c_∇={report.c_grad:.4g}")
    return certificate, report
