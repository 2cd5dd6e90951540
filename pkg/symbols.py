"""
Polynomial symbols P(xi) of higher-order Schrödinger equations.

Sparse representation: a map from multi-indices to real coefficients.
Derivatives are taken at coefficient level, never by finite differences.
"""
import json
import logging
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from errors import InputError, ParseError
from sphere import circle_directions, regular_sphere_directions

logger = logging.getLogger(__name__)

Exponent = Tuple[int, ...]

MAX_DIMENSION = 3


@dataclass(frozen=True)
class PolynomialSymbol:
    """
    Real polynomial in n variables.

    terms is a tuple of (exponent, coefficient) pairs sorted by exponent, with no
    zero coefficients. The zero polynomial has no terms and degree 0.
    """
    n: int
    terms: Tuple[Tuple[Exponent, float], ...]
    name: str = "P"
    _exps: np.ndarray = field(init=False, repr=False, compare=False)
    _coefs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise InputError(f"dimension must be a positive integer, got {self.n!r}")
        for exponent, coef in self.terms:
            if len(exponent) != self.n or any(e < 0 for e in exponent):
                raise InputError(f"bad exponent {exponent} for n={self.n}")
            if not math.isfinite(coef) or coef == 0.0:
                raise InputError(f"coefficient of {exponent} must be finite and nonzero")
        exps = np.array([e for e, _ in self.terms], dtype=float).reshape(len(self.terms), self.n)
        coefs = np.array([c for _, c in self.terms], dtype=float)
        object.__setattr__(self, "_exps", exps)
        object.__setattr__(self, "_coefs", coefs)

    @classmethod
    def from_terms(cls, n: int, terms: Mapping[Sequence[int], float], name: str = "P") -> "PolynomialSymbol":
        """Normalize a term map: tuple exponents, drop zero coefficients, sort"""
        cleaned: Dict[Exponent, float] = {}
        for exponent, coef in terms.items():
            key = tuple(int(e) for e in exponent)
            value = float(coef)
            if value != 0.0:
                cleaned[key] = cleaned.get(key, 0.0) + value
        ordered = tuple(sorted((k, v) for k, v in cleaned.items() if v != 0.0))
        return cls(n=n, terms=ordered, name=name)

    @cached_property
    def m(self) -> int:
        return max((sum(e) for e, _ in self.terms), default=0)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def scaled(self, factor: float) -> "PolynomialSymbol":
        return PolynomialSymbol.from_terms(self.n, {e: factor * c for e, c in self.terms}, self.name)

    def derivative(self, j: int) -> "PolynomialSymbol":
        return self._first_derivatives[j]

    @cached_property
    def _first_derivatives(self) -> List["PolynomialSymbol"]:
        result = []
        for j in range(self.n):
            terms: Dict[Exponent, float] = {}
            for exponent, coef in self.terms:
                if exponent[j] == 0:
                    continue
                lowered = list(exponent)
                lowered[j] -= 1
                terms[tuple(lowered)] = coef * exponent[j]
            result.append(PolynomialSymbol.from_terms(self.n, terms, f"d{j}{self.name}"))
        return result

    @cached_property
    def _second_derivatives(self) -> Dict[Tuple[int, int], "PolynomialSymbol"]:
        return {
            (j, k): self.derivative(j).derivative(k)
            for j in range(self.n)
            for k in range(j, self.n)
        }

    @cached_property
    def homogeneous_parts(self) -> List["PolynomialSymbol"]:
        """P_0, ..., P_m"""
        return [homogeneous_part(self, k) for k in range(self.m + 1)]

    def values(self, points: np.ndarray) -> np.ndarray:
        """Vectorized evaluation on an (N, n) array"""
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.n:
            raise InputError(f"expected points of shape (N, {self.n}), got {points.shape}")
        if self.is_zero:
            return np.zeros(points.shape[0])
        monomials = np.prod(points[:, None, :] ** self._exps[None, :, :], axis=2)
        return monomials @ self._coefs

    def gradients(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.column_stack([d.values(points) for d in self._first_derivatives])

    def hessians(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        out = np.empty((points.shape[0], self.n, self.n))
        for (j, k), second in self._second_derivatives.items():
            column = second.values(points)
            out[:, j, k] = column
            out[:, k, j] = column
        return out

    def to_document(self) -> dict:
        return {
            "n": self.n,
            "name": self.name,
            "m": self.m,
            "terms": [{"exp": list(e), "coef": c} for e, c in self.terms],
        }

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        pieces = []
        for exponent, coef in self.terms:
            monomial = "*".join(
                f"x{j + 1}" + (f"^{e}" if e > 1 else "") for j, e in enumerate(exponent) if e > 0
            )
            pieces.append(f"{coef:g}" + (f"*{monomial}" if monomial else ""))
        return " + ".join(pieces)


def _as_point(P: PolynomialSymbol, xi) -> np.ndarray:
    point = np.asarray(xi, dtype=float).reshape(-1)
    if point.shape[0] != P.n:
        raise InputError(f"point has length {point.shape[0]}, symbol dimension is {P.n}")
    return point


def evaluate(P: PolynomialSymbol, xi) -> float:
    """P(xi) as the finite sum of its monomials"""
    return float(P.values(_as_point(P, xi)[None, :])[0])


def gradient(P: PolynomialSymbol, xi) -> np.ndarray:
    return P.gradients(_as_point(P, xi)[None, :])[0]


def hessian(P: PolynomialSymbol, xi) -> np.ndarray:
    """Exact second partials; upper triangle built, then mirrored"""
    return P.hessians(_as_point(P, xi)[None, :])[0]


def homogeneous_part(P: PolynomialSymbol, k: int) -> PolynomialSymbol:
    """The degree-k terms of P (possibly the zero polynomial)"""
    if k < 0:
        raise InputError(f"degree must be non-negative, got {k}")
    terms = {e: c for e, c in P.terms if sum(e) == k}
    return PolynomialSymbol.from_terms(P.n, terms, f"{P.name}_{k}")


def is_even(P: PolynomialSymbol) -> bool:
    """P(-xi) = P(xi)"""
    return all(sum(e) % 2 == 0 for e, _ in P.terms)


def is_radial(P: PolynomialSymbol, rtol: float = 1e-12) -> bool:
    """True when every homogeneous part is constant on the unit sphere"""
    if P.n == 1:
        return is_even(P)
    directions = circle_directions(64, offset=0.37) if P.n == 2 else regular_sphere_directions(200)
    for part in P.homogeneous_parts:
        if part.is_zero:
            continue
        values = part.values(directions)
        spread = float(np.max(values) - np.min(values))
        if spread > rtol * (1.0 + float(np.max(np.abs(values)))):
            return False
    return True


def require_symbol(P: PolynomialSymbol):
    """Reject what no analysis pipeline accepts: zero, constant or linear symbols"""
    if P.is_zero:
        raise InputError("the zero polynomial is not a symbol")
    if P.n > MAX_DIMENSION:
        raise InputError(f"dimension n={P.n} not supported (n <= {MAX_DIMENSION})")
    if P.m < 2:
        raise InputError(f"symbol degree m={P.m} < 2: the kernel is not an oscillatory integral")


@dataclass(frozen=True)
class EllipticityCertificate:
    is_elliptic: bool
    min_principal_on_sphere: float
    sample_count: int
    witness_direction: Tuple[float, ...]
    declared_tolerance: float
    lipschitz_margin: float
    max_principal_on_sphere: float

    def to_document(self) -> dict:
        return {
            "is_elliptic": self.is_elliptic,
            "min_principal_on_sphere": self.min_principal_on_sphere,
            "max_principal_on_sphere": self.max_principal_on_sphere,
            "sample_count": self.sample_count,
            "witness_direction": list(self.witness_direction),
            "declared_tolerance": self.declared_tolerance,
            "lipschitz_margin": self.lipschitz_margin,
        }


def certify_elliptic(P: PolynomialSymbol, sphere_samples: int, tol: float) -> EllipticityCertificate:
    """
    Sample |P_m| over a quasi-uniform net of the unit sphere.

    The declared tolerance is tol plus a Lipschitz margin (net spacing times the
    largest sampled |grad P_m|), so a positive verdict also covers the gaps
    between samples.
    """
    if sphere_samples < 100 * P.n:
        raise InputError(f"sphere_samples must be at least {100 * P.n}, got {sphere_samples}")
    if not tol > 0:
        raise InputError(f"tolerance must be positive, got {tol}")

    if P.n == 1:
        directions = np.array([[1.0], [-1.0]])
        spacing = 0.0
    elif P.n == 2:
        directions = circle_directions(sphere_samples)
        spacing = 2.0 * math.pi / sphere_samples
    elif P.n == 3:
        directions = regular_sphere_directions(sphere_samples)
        spacing = math.sqrt(4.0 * math.pi / len(directions))
    else:
        raise InputError(f"dimension n={P.n} not supported (n <= {MAX_DIMENSION})")

    principal = homogeneous_part(P, P.m) if not P.is_zero else P
    if principal.is_zero or P.m == 0:
        return EllipticityCertificate(False, 0.0, len(directions), tuple(directions[0]), tol, 0.0, 0.0)

    values = np.abs(principal.values(directions))
    index = int(np.argmin(values))
    lipschitz = float(np.max(np.linalg.norm(principal.gradients(directions), axis=1)))
    margin = 0.5 * spacing * lipschitz
    declared = tol + margin
    minimum = float(values[index])
    certificate = EllipticityCertificate(
        is_elliptic=minimum > declared,
        min_principal_on_sphere=minimum,
        sample_count=len(directions),
        witness_direction=tuple(float(v) for v in directions[index]),
        declared_tolerance=declared,
        lipschitz_margin=margin,
        max_principal_on_sphere=float(np.max(values)),
    )
    if certificate.is_elliptic:
        logger.info(f"✅ {P.name}: principal part elliptic, min |P_m| on sphere = {minimum:.6g}")
    else:
        logger.warning(f"⚠️ {P.name}: principal part vanishes near {certificate.witness_direction}")
    return certificate


# ==================== SYMBOL FILES ====================

def _term_line(text: str, index: int) -> Optional[int]:
    matches = list(re.finditer(r'"exp"\s*:', text))
    if index < len(matches):
        return text.count("\n", 0, matches[index].start()) + 1
    return None


def parse_symbol_text(text: str, path: Optional[str] = None, default_name: str = "P") -> PolynomialSymbol:
    """
    Parse one symbol document: {"n": 1, "name": "quartic", "terms": [{"exp": [4], "coef": 1.0}]}
    Duplicate exponent tuples are rejected.
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, line=e.lineno, path=path) from e

    if not isinstance(document, dict):
        raise ParseError("symbol document must be an object", line=1, path=path)
    n = document.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ParseError(f"field 'n' must be a positive integer, got {n!r}", line=1, path=path)
    name = document.get("name", default_name)
    if not isinstance(name, str) or not name:
        raise ParseError("field 'name' must be a non-empty string", line=1, path=path)
    terms = document.get("terms")
    if not isinstance(terms, list) or not terms:
        raise ParseError("field 'terms' must be a non-empty list", line=1, path=path)

    seen: Dict[Exponent, int] = {}
    collected: Dict[Exponent, float] = {}
    for index, term in enumerate(terms):
        line = _term_line(text, index)
        if not isinstance(term, dict) or "exp" not in term or "coef" not in term:
            raise ParseError(f"term {index} needs 'exp' and 'coef'", line=line, path=path)
        exponent = term["exp"]
        if (not isinstance(exponent, list) or len(exponent) != n
                or not all(isinstance(e, int) and not isinstance(e, bool) and e >= 0 for e in exponent)):
            raise ParseError(f"term {index}: 'exp' must list {n} non-negative integers", line=line, path=path)
        coef = term["coef"]
        if isinstance(coef, bool) or not isinstance(coef, (int, float)) or not math.isfinite(coef):
            raise ParseError(f"term {index}: 'coef' must be a finite real", line=line, path=path)
        key = tuple(exponent)
        if key in seen:
            raise ParseError(f"duplicate exponent {list(key)} (first at term {seen[key]})", line=line, path=path)
        seen[key] = index
        collected[key] = float(coef)

    return PolynomialSymbol.from_terms(n, collected, name)


def load_symbol(path: str) -> PolynomialSymbol:
    file_path = Path(path)
    try:
        text = file_path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read symbol file: {e}", path=str(path)) from e
    symbol = parse_symbol_text(text, path=str(path), default_name=file_path.stem)
    logger.info(f"📝 Loaded symbol {symbol.name} (n={symbol.n}, m={symbol.m}): {symbol}")
    return symbol
