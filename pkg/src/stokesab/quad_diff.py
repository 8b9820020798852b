"""Meromorphic quadratic differentials on the marked Riemann sphere.

A differential is stored as ``phi = N(z) / prod_{p finite} (z - p)^2 dz^2``
with ``N`` a polynomial.  When infinity is a puncture the numerator has
degree ``2k - 2`` (``k`` finite punctures), which makes infinity a double
pole; otherwise the degree is ``2k - 4`` and infinity is a regular,
non-vanishing point.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import (
    BranchAmbiguity,
    NonGenericDifferential,
    NonGenericResidue,
    OnHypersurface,
    SchemaViolation,
)

INF = "inf"

Puncture = Union[complex, str]


def is_inf(p) -> bool:
    return isinstance(p, str) and p == INF


def levelt_exponent(a: complex, tol: float = 1e-12) -> complex:
    """Square root of ``a`` with positive real part.

    Raises NonGenericResidue when ``a`` lies on the closed negative real
    axis (the root would be imaginary) or in the lattice (1/4)Z.
    """
    a = complex(a)
    scale = max(1.0, abs(a))
    on_real_axis = abs(a.imag) <= tol * scale
    if on_real_axis and a.real <= tol * scale:
        raise NonGenericResidue(f"residue {a} lies on the non-positive real axis")
    if on_real_axis and abs(4 * a.real - round(4 * a.real)) <= 4 * tol * scale:
        raise NonGenericResidue(f"residue {a} lies in (1/4)Z")
    lam = cmath.sqrt(a)
    if lam.real < 0:
        lam = -lam
    return lam


def _principal_root(a: complex) -> complex:
    lam = cmath.sqrt(a)
    return -lam if lam.real < 0 else lam


def hypersurface_value(alpha: complex, beta: complex, gamma: complex) -> complex:
    """The quadratic form whose zero set is the locus of (0,3) differentials with a double zero."""
    return (alpha * alpha + beta * beta + gamma * gamma
            - 2 * alpha * beta - 2 * alpha * gamma - 2 * beta * gamma)


@dataclass(frozen=True)
class MarkedSphere:
    punctures: tuple
    residues: tuple
    levelt: tuple

    @classmethod
    def from_residues(cls, punctures: Sequence[Puncture], residues: Sequence[complex],
                      generic: bool = True) -> "MarkedSphere":
        punctures = tuple(INF if is_inf(p) else complex(p) for p in punctures)
        residues = tuple(complex(a) for a in residues)
        if len(punctures) < 3:
            raise ValueError("need at least three punctures")
        if len(punctures) != len(residues):
            raise ValueError("one residue per puncture")
        if sum(is_inf(p) for p in punctures) > 1:
            raise ValueError("infinity listed twice")
        finite = [p for p in punctures if not is_inf(p)]
        for i, p in enumerate(finite):
            for q in finite[i + 1:]:
                if abs(p - q) < 1e-12:
                    raise ValueError(f"repeated puncture {p}")
        for a in residues:
            if a == 0:
                raise NonGenericResidue("vanishing residue: pole of order below two")
        if generic:
            levelt = tuple(levelt_exponent(a) for a in residues)
        else:
            levelt = tuple(_principal_root(a) for a in residues)
        return cls(punctures, residues, levelt)

    def __len__(self):
        return len(self.punctures)

    def index(self, p: Puncture) -> int:
        for i, q in enumerate(self.punctures):
            if is_inf(p) and is_inf(q):
                return i
            if not is_inf(p) and not is_inf(q) and abs(complex(p) - q) < 1e-12:
                return i
        raise KeyError(p)


@dataclass(frozen=True)
class BranchState:
    z: complex
    value: complex


@dataclass(frozen=True)
class QuadraticDifferential:
    marked: MarkedSphere
    numerator: tuple  # descending powers
    _finite: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        finite = np.array([p for p in self.marked.punctures if not is_inf(p)], dtype=complex)
        object.__setattr__(self, "_finite", finite)

    # construction

    @classmethod
    def from_numerator(cls, punctures: Sequence[Puncture], numerator: Sequence[complex],
                       generic: bool = True) -> "QuadraticDifferential":
        punctures = [INF if is_inf(p) else complex(p) for p in punctures]
        coeffs = [complex(c) for c in numerator]
        while len(coeffs) > 1 and coeffs[0] == 0:
            coeffs.pop(0)
        k = sum(not is_inf(p) for p in punctures)
        has_inf = k < len(punctures)
        expected = 2 * k - 2 if has_inf else 2 * k - 4
        if len(coeffs) - 1 != expected:
            if has_inf or len(coeffs) - 1 > expected:
                raise NonGenericDifferential(
                    f"numerator degree {len(coeffs) - 1} incompatible with a double pole "
                    f"at every puncture (expected {expected})")
            raise NonGenericDifferential("zero at infinity; move the punctures so infinity is not a zero")
        residues = [_residue(punctures, coeffs, p) for p in punctures]
        marked = MarkedSphere.from_residues(punctures, residues, generic=generic)
        return cls(marked, tuple(coeffs))

    # evaluation

    @property
    def finite_punctures(self) -> np.ndarray:
        return self._finite

    @property
    def has_infinity(self) -> bool:
        return any(is_inf(p) for p in self.marked.punctures)

    def numerator_at(self, z: complex) -> complex:
        acc = 0j
        for c in self.numerator:
            acc = acc * z + c
        return acc

    def __call__(self, z: complex) -> complex:
        den = 1 + 0j
        for p in self._finite:
            den *= (z - p) * (z - p)
        return self.numerator_at(z) / den

    def log_derivative(self, z: complex) -> complex:
        """phi'(z) / phi(z)."""
        n = 0j
        dn = 0j
        for c in self.numerator:
            dn = dn * z + n
            n = n * z + c
        out = dn / n
        for p in self._finite:
            out -= 2 / (z - p)
        return out

    def scaled(self, c: complex, generic: bool = True) -> "QuadraticDifferential":
        return QuadraticDifferential.from_numerator(
            self.marked.punctures, [c * a for a in self.numerator], generic=generic)

    # serialization

    def to_json(self) -> dict:
        return {
            "punctures": [INF if is_inf(p) else [p.real, p.imag] for p in self.marked.punctures],
            "residues": [[a.real, a.imag] for a in self.marked.residues],
            "numerator": [[c.real, c.imag] for c in self.numerator],
        }

    @classmethod
    def from_json(cls, data: dict) -> "QuadraticDifferential":
        try:
            punctures = [INF if is_inf(p) else complex(p[0], p[1]) for p in data["punctures"]]
            numerator = [complex(c[0], c[1]) for c in data["numerator"]]
            residues = [complex(c[0], c[1]) for c in data.get("residues", [])]
        except (KeyError, TypeError, IndexError) as exc:
            raise SchemaViolation(f"malformed quadratic differential: {exc!r}") from exc
        if residues and len(residues) != len(punctures):
            raise SchemaViolation("one residue per puncture expected", "$.residues")
        phi = cls.from_numerator(punctures, numerator)
        for i, (given, got) in enumerate(zip(residues, phi.marked.residues)):
            if abs(given - got) > 1e-9 * max(1.0, abs(got)):
                raise SchemaViolation(f"residue {given} disagrees with numerator ({got})", f"$.residues[{i}]")
        return phi

    @classmethod
    def load(cls, path) -> "QuadraticDifferential":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def _residue(punctures, coeffs, p) -> complex:
    finite = [q for q in punctures if not is_inf(q)]
    if is_inf(p):
        # w = 1/z turns N(z) dz^2 / prod (z-q)^2 into
        # w^(2k - n - 4) * Ntilde(w) / prod (1 - q w)^2 dw^2, n = 2k - 2
        return coeffs[0]
    num = 0j
    for c in coeffs:
        num = num * p + c
    other = 1 + 0j
    for q in finite:
        if q != p:
            other *= (p - q) * (p - q)
    return num / other


def three_point_differential(alpha: complex, beta: complex, gamma: complex,
                             tol: float = 1e-12, generic: bool = True) -> QuadraticDifferential:
    """The differential on (0, 1, inf) with residues alpha, beta, gamma.

    ``generic=False`` skips the Levelt exponent checks, which is handy for
    integer residues in small worked examples; the discriminant check
    always applies.
    """
    h = hypersurface_value(alpha, beta, gamma)
    scale = max(1.0, abs(alpha), abs(beta), abs(gamma)) ** 2
    if abs(h) <= tol * scale:
        raise OnHypersurface(f"residues {alpha}, {beta}, {gamma} lie on the discriminant hypersurface")
    if generic:
        for a in (alpha, beta, gamma):
            levelt_exponent(a)
    return QuadraticDifferential.from_numerator(
        (0, 1, INF), (gamma, -(alpha - beta + gamma), alpha), generic=generic)


def residue_at(phi: QuadraticDifferential, p: Puncture) -> complex:
    return phi.marked.residues[phi.marked.index(p)]


def _companion_roots(coeffs: Sequence[complex]) -> np.ndarray:
    c = np.asarray(coeffs, dtype=complex)
    n = len(c) - 1
    if n < 1:
        return np.zeros(0, dtype=complex)
    comp = np.zeros((n, n), dtype=complex)
    comp[0, :] = -c[1:] / c[0]
    comp[1:, :-1] = np.eye(n - 1)
    return np.linalg.eigvals(comp)


def _newton_polish(coeffs, z: complex, iters: int = 8) -> complex:
    for _ in range(iters):
        f = 0j
        df = 0j
        for c in coeffs:
            df = df * z + f
            f = f * z + c
        if df == 0:
            break
        step = f / df
        z -= step
        if abs(step) <= 1e-16 * max(1.0, abs(z)):
            break
    return z


def zeros(phi: QuadraticDifferential, tol: float = 1e-8) -> list:
    roots = [_newton_polish(phi.numerator, complex(r)) for r in _companion_roots(phi.numerator)]
    for i, r in enumerate(roots):
        for s in roots[i + 1:]:
            if abs(r - s) < tol:
                raise NonGenericDifferential(f"zeros {r} and {s} are not separated (multiple zero)")
        for p in phi.finite_punctures:
            if abs(r - p) < tol:
                raise NonGenericDifferential(f"zero {r} coincides with puncture {p}")
    roots.sort(key=lambda z: (round(z.real, 9), round(z.imag, 9)))
    return roots


def singular_points(phi: QuadraticDifferential) -> list:
    """Finite punctures followed by zeros."""
    return [complex(p) for p in phi.finite_punctures] + zeros(phi)


def sqrt_state(phi: QuadraticDifferential, z: complex, near: complex | None = None) -> BranchState:
    r = cmath.sqrt(phi(z))
    if near is not None and abs(r - near) > abs(r + near):
        r = -r
    return BranchState(z, r)


def continue_sqrt(phi: QuadraticDifferential, state: BranchState, z_next: complex,
                  ambiguity_tol: float = 1e-2) -> BranchState:
    """Continue the branch of sqrt(phi) carried by ``state`` to ``z_next``.

    The new sign is the one closer to a first-order prediction from the
    old point.  Both candidates being (nearly) equally close means the
    step was too long for the sign to be decided.
    """
    v = state.value
    dz = z_next - state.z
    predicted = v * (1 + 0.5 * phi.log_derivative(state.z) * dz)
    r = cmath.sqrt(phi(z_next))
    d_plus = abs(r - predicted)
    d_minus = abs(r + predicted)
    if abs(d_plus - d_minus) <= ambiguity_tol * (d_plus + d_minus):
        raise BranchAmbiguity(f"cannot resolve sqrt branch stepping {state.z} -> {z_next}")
    return BranchState(z_next, r if d_plus < d_minus else -r)


def clearance(phi: QuadraticDifferential, z: complex, points: Sequence[complex] | None = None) -> float:
    if points is None:
        points = singular_points(phi)
    d = min((abs(z - p) for p in points), default=math.inf)
    if phi.has_infinity:
        # keep steps proportionate far out towards infinity
        d = min(d, max(1.0, abs(z)))
    return d


def continue_along(phi: QuadraticDifferential, state: BranchState, path: Sequence[complex],
                   fraction: float = 0.2, points: Sequence[complex] | None = None) -> BranchState:
    """Continue sqrt(phi) along a polyline, subdividing each leg.

    Sub-steps are kept below ``fraction`` times the distance to the
    nearest zero or puncture, which keeps every sign decision clear.
    """
    if points is None:
        points = singular_points(phi)
    budget = 200_000
    for target in path:
        target = complex(target)
        while state.z != target:
            gap = target - state.z
            h = fraction * clearance(phi, state.z, points)
            budget -= 1
            if h <= 1e-13 or budget < 0:
                raise BranchAmbiguity(f"path runs into a singular point near {state.z}")
            z_next = target if abs(gap) <= h else state.z + gap * (h / abs(gap))
            state = continue_sqrt(phi, state, z_next)
    return state
