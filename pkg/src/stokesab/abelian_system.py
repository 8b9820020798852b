"""Odd abelian local systems on the punctured spectral curve.

A system is stored as edge weights on the spectral graph: ``t[e]`` is the
transport across spectral ray ``e`` in its positive direction, ``m[i]`` the
odd structure constant of spectral region ``i``.  The odd structure asks
for ``m[sigma i] = -m[i]`` and ``m[j] = m[i] t(e) t(sigma e)`` across every
crossing ``e: i -> j``.  Going anticlockwise once around the sink lift of
puncture ``p`` multiplies by ``exp(+2 pi i lambda_p)`` and around the
source lift by ``exp(-2 pi i lambda_p)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InconsistentConstraints, InvalidPath, ValidationFailure
from .stokes import (
    CombinatorialPath,
    SpectralGraph,
    loop_basis,
    reduce,
    spanning_tree,
)

TWO_PI_I = 2j * math.pi


@dataclass(frozen=True)
class OddAbelianSystem:
    sg: SpectralGraph
    t: np.ndarray  # one complex weight per spectral ray, positive direction
    m: np.ndarray  # one complex constant per spectral region
    levelt: tuple

    def __post_init__(self):
        t = np.asarray(self.t, dtype=complex)
        m = np.asarray(self.m, dtype=complex)
        if t.shape != (self.sg.n_rays,) or m.shape != (self.sg.n_regions,):
            raise ValidationFailure(f"expected {self.sg.n_rays} ray weights and {self.sg.n_regions} region constants")
        if len(self.levelt) != self.sg.stokes.n_poles:
            raise ValidationFailure("one Levelt exponent per puncture expected")
        for name, arr in (("t", t), ("m", m)):
            bad = np.flatnonzero(~np.isfinite(arr) | (arr == 0))
            if bad.size:
                raise ValidationFailure(f"{name}[{bad[0]}] must be finite and nonzero")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "levelt", tuple(complex(x) for x in self.levelt))

    def crossing(self, ray: int, direction: int) -> complex:
        return self.t[ray] if direction == 1 else 1 / self.t[ray]

    def to_json(self, graph_ref: str | None = None) -> dict:
        from .graph_io import spectral_to_json

        return {
            "schema": "stokesab.abelian-system/1",
            "graph_ref": graph_ref,
            "graph": spectral_to_json(self.sg),
            "lambda": [[x.real, x.imag] for x in self.levelt],
            "t": [{"ray": e, "direction": 1, "re": z.real, "im": z.imag} for e, z in enumerate(self.t)],
            "m": [{"region": i, "re": z.real, "im": z.imag} for i, z in enumerate(self.m)],
        }

    @classmethod
    def from_json(cls, data: dict, sg: SpectralGraph | None = None) -> "OddAbelianSystem":
        from .graph_io import require, spectral_from_json

        require(data, "schema", str, "$")
        if data["schema"] != "stokesab.abelian-system/1":
            from .errors import SchemaViolation

            raise SchemaViolation(f"unknown schema {data['schema']!r}", "$.schema")
        if sg is None:
            sg = spectral_from_json(require(data, "graph", dict, "$"), "$.graph")
        lam = [_pair(x, f"$.lambda[{k}]") for k, x in enumerate(require(data, "lambda", list, "$"))]
        t = np.ones(sg.n_rays, dtype=complex)
        seen = set()
        for k, entry in enumerate(require(data, "t", list, "$")):
            loc = f"$.t[{k}]"
            e = require(entry, "ray", int, loc)
            d = require(entry, "direction", int, loc)
            z = complex(require(entry, "re", (int, float), loc), require(entry, "im", (int, float), loc))
            if not 0 <= e < sg.n_rays or d not in (1, -1) or e in seen:
                from .errors import SchemaViolation

                raise SchemaViolation("bad or repeated ray entry", loc)
            seen.add(e)
            t[e] = z if d == 1 else (1 / z if z != 0 else 0)
        m = np.ones(sg.n_regions, dtype=complex)
        seen_m = set()
        for k, entry in enumerate(require(data, "m", list, "$")):
            loc = f"$.m[{k}]"
            i = require(entry, "region", int, loc)
            if not 0 <= i < sg.n_regions or i in seen_m:
                from .errors import SchemaViolation

                raise SchemaViolation("bad or repeated region entry", loc)
            seen_m.add(i)
            m[i] = complex(require(entry, "re", (int, float), loc), require(entry, "im", (int, float), loc))
        if len(seen) != sg.n_rays or len(seen_m) != sg.n_regions:
            from .errors import SchemaViolation

            raise SchemaViolation("every spectral ray and region needs a value", "$")
        return cls(sg, t, m, tuple(lam))


def _pair(x, loc):
    from .errors import SchemaViolation

    if not (isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x)):
        raise SchemaViolation("expected [re, im]", loc)
    return complex(x[0], x[1])


def transport(sys: OddAbelianSystem, path: CombinatorialPath) -> complex:
    """Product of crossing weights along a cover path (after reduction)."""
    if path.carrier != "cover":
        raise InvalidPath("abelian transport needs a cover path")
    path.end(sys.sg)  # validates incidences
    out = 1 + 0j
    for e, d in reduce(path).steps:
        out *= sys.crossing(e, d)
    return out


# validation ----------------------------------------------------------------

@dataclass
class ValidationReport:
    worst: dict = field(default_factory=dict)  # family -> (residual, location)

    def record(self, family: str, residual: float, location):
        cur = self.worst.get(family)
        if cur is None or residual > cur[0]:
            self.worst[family] = (float(residual), location)

    def max_residual(self) -> float:
        return max((v[0] for v in self.worst.values()), default=0.0)

    def ok(self, tol: float) -> bool:
        return self.max_residual() < tol

    def violations(self, tol: float) -> dict:
        return {k: v for k, v in self.worst.items() if v[0] >= tol}

    def to_json(self) -> dict:
        return {k: {"residual": v[0], "location": v[1]} for k, v in self.worst.items()}


def puncture_target(levelt: complex, sign: str) -> complex:
    return cmath.exp(TWO_PI_I * levelt) if sign == "-" else cmath.exp(-TWO_PI_I * levelt)


def validate(sys: OddAbelianSystem, tol: float = 1e-10) -> ValidationReport:
    """Worst residual of each family of odd-structure constraints.

    Residuals are relative to the size of the compared quantities.  The
    ``tol`` argument is only used by the caller via ``report.ok(tol)``.
    """
    sg = sys.sg
    rep = ValidationReport()
    for i in range(sg.n_regions):
        j = sg.sigma(i)
        rep.record("odd-skew", abs(sys.m[j] + sys.m[i]) / max(abs(sys.m[i]), abs(sys.m[j])), i)
    for e, (i, j) in enumerate(sg.ray_ends):
        rhs = sys.m[i] * sys.t[e] * sys.t[sg.sigma(e)]
        rep.record("odd-flatness", abs(sys.m[j] - rhs) / max(abs(sys.m[j]), abs(rhs)), e)
    for p in range(sg.stokes.n_poles):
        for sign in "-+":
            val = transport(sys, sg.puncture_loop(p, sign))
            target = puncture_target(sys.levelt[p], sign)
            rep.record("puncture", abs(val - target) / abs(target), f"{p}{sign}")
    for b in range(sg.stokes.n_branch):
        rep.record("ramification", abs(transport(sys, sg.ramification_loop(b)) + 1), b)
    return rep


# sampling ------------------------------------------------------------------

def _constraint_rows(sg: SpectralGraph, levelt: Sequence[complex], root: int = 0):
    """Linear constraints on (log t, log m) that every odd system satisfies."""
    nx, nm = sg.n_rays, sg.n_regions
    rows, rhs, kinds = [], [], []

    def row():
        return np.zeros(nx + nm, dtype=complex)

    for e, (i, j) in enumerate(sg.ray_ends):
        r = row()
        r[nx + j] += 1
        r[nx + i] -= 1
        r[e] -= 1
        r[sg.sigma(e)] -= 1
        rows.append(r), rhs.append(0), kinds.append(("odd-flatness", e))
    for i in range(0, nm, 2):
        r = row()
        r[nx + i + 1] = 1
        r[nx + i] = -1
        rows.append(r), rhs.append(1j * math.pi), kinds.append(("odd-skew", i))
    for p in range(sg.stokes.n_poles):
        loop = sg.puncture_loop(p, "-")
        r = row()
        for e, d in loop.steps:
            r[e] += d
        rows.append(r), rhs.append(TWO_PI_I * levelt[p]), kinds.append(("puncture", p))
    parent, tree = spanning_tree(nm, sg.adjacency(), root)
    for e in sorted(tree):
        r = row()
        r[e] = 1
        rows.append(r), rhs.append(0), kinds.append(("gauge", e))
    r = row()
    r[nx + root] = 1
    rows.append(r), rhs.append(0), kinds.append(("gauge", f"m{root}"))
    return np.array(rows), np.array(rhs, dtype=complex), kinds, tree


def free_parameter_count(sg: SpectralGraph, levelt: Sequence[complex] | None = None) -> int:
    """Dimension of the space of odd systems with fixed exponents, modulo gauge.

    Computed as the nullity of the linearised (log-space) constraint system
    with the tree gauge imposed.
    """
    levelt = levelt if levelt is not None else (0.5,) * sg.stokes.n_poles
    A, _, _, _ = _constraint_rows(sg, levelt)
    return A.shape[1] - int(np.linalg.matrix_rank(A))


def random_system(sg: SpectralGraph, levelt: Sequence[complex], seed: int,
                  residual_tol: float = 1e-10) -> OddAbelianSystem:
    """Seeded odd abelian system in tree gauge.

    Negative-lift weights are drawn log-uniformly from ``1/2 <= |t| <= 2``
    with uniform phase; at each puncture the last ray in its rotation is
    then solved for so that the sink-lift monodromy is ``exp(2 pi i lambda)``.
    With ``m = +1, -1`` on the two lifts of each region the positive-lift
    weights follow from odd flatness, and a final gauge transformation makes
    the crossings of a spanning tree of the cover trivial.
    """
    sys = sample_system(sg, levelt, seed)
    report = validate(sys)
    if not report.ok(residual_tol):
        raise InconsistentConstraints(f"sampled system violates {report.violations(residual_tol)}")
    return sys


def sample_system(sg: SpectralGraph, levelt: Sequence[complex], seed: int, skew: int = -1) -> OddAbelianSystem:
    """The sampler behind ``random_system``, without the final check.

    ``skew=+1`` gives the two lifts of each region equal constants instead
    of opposite ones.  The result is flat but not odd: its ramification
    monodromy is +1.  It exists as a negative control.
    """
    levelt = tuple(complex(x) for x in levelt)
    g = sg.stokes
    rng = np.random.default_rng(seed)
    n = len(g.rays)
    y = rng.uniform(-math.log(2), math.log(2), n) + 1j * rng.uniform(-math.pi, math.pi, n)
    for p, rot in enumerate(g.pole_rot):
        last = rot[-1]
        y[last] = -TWO_PI_I * levelt[p] - sum(y[a] for a in rot[:-1])
    m = np.array([1, skew] * len(g.regions), dtype=complex)
    t = np.empty(sg.n_rays, dtype=complex)
    for a in range(n):
        i, j = sg.ray_ends[2 * a]
        t[2 * a] = cmath.exp(y[a])
        t[2 * a + 1] = m[j] / (m[i] * t[2 * a])
    sys = OddAbelianSystem(sg, t, m, levelt)
    return gauge_transform(sys, tree_gauge(sys))


def tree_gauge(sys: OddAbelianSystem, root: int = 0) -> np.ndarray:
    """Gauge that trivialises the crossings of the breadth-first spanning tree of the cover."""
    sg = sys.sg
    parent, _ = spanning_tree(sg.n_regions, sg.adjacency(), root)
    c = np.zeros(sg.n_regions, dtype=complex)
    c[root] = 1
    order = sorted(parent, key=lambda v: _depth(parent, v))
    for v in order:
        if v == root:
            continue
        u, e, d = parent[v]
        c[v] = c[u] / sys.crossing(e, d)
    return c


def _depth(parent, v):
    k = 0
    while parent[v] is not None:
        v = parent[v][0]
        k += 1
    return k


def gauge_transform(sys: OddAbelianSystem, c: Sequence[complex]) -> OddAbelianSystem:
    c = np.asarray(c, dtype=complex)
    sg = sys.sg
    ends = np.array(sg.ray_ends)
    t = c[ends[:, 1]] * sys.t / c[ends[:, 0]]
    sig = np.arange(sg.n_regions) ^ 1
    m = sys.m * c * c[sig]
    return OddAbelianSystem(sg, t, m, sys.levelt)


def random_gauge(sg: SpectralGraph, rng: np.random.Generator) -> np.ndarray:
    mod = np.exp(rng.uniform(-1, 1, sg.n_regions))
    return mod * np.exp(1j * rng.uniform(-math.pi, math.pi, sg.n_regions))


# holonomy ------------------------------------------------------------------

@dataclass(frozen=True)
class HolonomyVector:
    entries: tuple  # (loop name, complex value)

    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.entries], dtype=complex)

    def names(self) -> list:
        return [n for n, _ in self.entries]

    def max_relative_deviation(self, other: "HolonomyVector") -> float:
        if self.names() != other.names():
            raise ValueError("holonomy vectors over different loop bases")
        a, b = self.values(), other.values()
        return float(np.max(np.abs(a - b) / np.maximum(np.abs(a), np.abs(b))))

    def to_json(self) -> list:
        return [{"loop": n, "re": v.real, "im": v.imag} for n, v in self.entries]


def holonomy_vector(sys: OddAbelianSystem, loops: list | None = None) -> HolonomyVector:
    loops = loop_basis(sys.sg) if loops is None else loops
    return HolonomyVector(tuple((lp.name, transport(sys, lp.path)) for lp in loops))
