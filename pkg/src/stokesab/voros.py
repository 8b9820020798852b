"""Voros factors and nonabelianisation of odd abelian systems.

Across a ray ``a`` from ``I = I(a)`` to ``J = J(a)`` the rank-two transport,
written in the crossing frames (sink lift at the pole of ``a`` first, then
the other lift) on both sides, is::

    [[t(a-), t(a-) * D],      =  diag(t(a-), t(a+)) @ [[1, D],
     [0,     t(a+)     ]]                              [0, 1]]

where ``D`` is the abelian transport along the detour of ``a``.  Each region
carries a global frame: its two lifts sorted by sink puncture index, with
permutation matrices converting between the two.  Matrices act on column
vectors and compose right to left, so a path ``p`` followed by ``q`` has
matrix ``M(q) @ M(p)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .abelian_system import OddAbelianSystem, gauge_transform, transport
from .errors import BranchMonodromyNontrivial, FrameMismatch, InvalidPath, SchemaViolation
from .stokes import BRANCH, CombinatorialPath, SpectralGraph, detour_path, generators

SL2_SCHEMA = "stokesab.sl2-representation/1"


@dataclass(frozen=True)
class Sl2Transport:
    matrix: np.ndarray
    source_frame: tuple
    target_frame: tuple


def region_frame(sg: SpectralGraph, region: int) -> tuple:
    """The two lifts of a base region ordered by sink puncture index."""
    return tuple(sorted((2 * region, 2 * region + 1), key=lambda i: (sg.sink(i), i)))


def crossing_frame(sg: SpectralGraph, ray: int, side: str) -> tuple:
    """(sink lift at the pole of ``ray``, other lift) over ``I(ray)`` or ``J(ray)``."""
    s = sg.stokes.ray_sides[ray]
    region, slot = (s.left, s.slot_left) if side == "I" else (s.right, s.slot_right)
    return (2 * region + slot, 2 * region + 1 - slot)


def _perm(target: tuple, source: tuple) -> np.ndarray:
    """Matrix taking coordinates in frame ``source`` to frame ``target``."""
    if sorted(target) != sorted(source):
        raise FrameMismatch(f"frames {target} and {source} lie over different regions")
    P = np.zeros((2, 2), dtype=complex)
    for col, lift in enumerate(source):
        P[target.index(lift), col] = 1
    return P


def _inv2(M: np.ndarray) -> np.ndarray:
    a, b, c, d = M[0, 0], M[0, 1], M[1, 0], M[1, 1]
    det = a * d - b * c
    return np.array([[d, -b], [-c, a]], dtype=complex) / det


def detour_transport(sys: OddAbelianSystem, ray: int) -> complex:
    return transport(sys, detour_path(sys.sg, ray))


def delta_table(sys: OddAbelianSystem) -> np.ndarray:
    """Detour transport of every base ray; the only input to the Voros factors."""
    return np.array([detour_transport(sys, a) for a in range(len(sys.sg.stokes.rays))], dtype=complex)


def unipotent(delta: complex) -> np.ndarray:
    return np.array([[1, delta], [0, 1]], dtype=complex)


def voros_matrix(sys: OddAbelianSystem, ray: int) -> Sl2Transport:
    return Sl2Transport(unipotent(detour_transport(sys, ray)),
                        crossing_frame(sys.sg, ray, "I"), crossing_frame(sys.sg, ray, "J"))


class _Crossings:
    """Cached global-frame matrices for positive crossings of every base ray."""

    def __init__(self, sys: OddAbelianSystem):
        self.sys = sys
        sg = sys.sg
        deltas = delta_table(sys)
        self.deltas = deltas
        self.forward = []
        self.backward = []
        for a in range(len(sg.stokes.rays)):
            s = sg.stokes.ray_sides[a]
            tm, tp = sys.t[2 * a], sys.t[2 * a + 1]
            C = np.diag([tm, tp]) @ unipotent(deltas[a])
            src = crossing_frame(sg, a, "I")
            dst = crossing_frame(sg, a, "J")
            if sg.ray_ends[2 * a] != (src[0], dst[0]) or sg.ray_ends[2 * a + 1] != (src[1], dst[1]):
                raise FrameMismatch(f"crossing frames of ray {a} disagree with the cover")
            G = _perm(region_frame(sg, s.right), dst) @ C @ _perm(src, region_frame(sg, s.left))
            self.forward.append(G)
            self.backward.append(_inv2(G))

    def matrix(self, path: CombinatorialPath) -> np.ndarray:
        if path.carrier != "base":
            raise InvalidPath("rank-two transport runs along base paths")
        path.end(self.sys.sg.stokes)
        M = np.eye(2, dtype=complex)
        for a, d in path.steps:
            M = (self.forward[a] if d == 1 else self.backward[a]) @ M
        return M


def transport_sl2(sys: OddAbelianSystem, path: CombinatorialPath, _cache: _Crossings | None = None) -> Sl2Transport:
    cache = _cache or _Crossings(sys)
    g = sys.sg.stokes
    M = cache.matrix(path)
    return Sl2Transport(M, region_frame(sys.sg, path.start), region_frame(sys.sg, path.end(g)))


def branch_monodromy(sys: OddAbelianSystem, b: int, _cache: _Crossings | None = None) -> Sl2Transport:
    loop = sys.sg.stokes.corner_loop(BRANCH, b, 0, clockwise=False)
    return transport_sl2(sys, loop, _cache)


def branch_defects(sys: OddAbelianSystem, relative: bool = False,
                   _cache: _Crossings | None = None) -> np.ndarray:
    """Sup-norm distance from the identity of the monodromy around each branch vertex.

    With ``relative`` the distance is divided by the product of the norms of
    the three crossing matrices, the scale of the rounding error in the loop
    product.
    """
    cache = _cache or _Crossings(sys)
    g = sys.sg.stokes
    eye = np.eye(2)
    out = []
    for b in range(g.n_branch):
        d = float(np.max(np.abs(branch_monodromy(sys, b, cache).matrix - eye)))
        if relative:
            scale = 1.0
            for a in g.branch_rot[b]:
                scale *= float(np.linalg.norm(cache.forward[a], 2))
            d /= max(1.0, scale)
        out.append(d)
    return np.array(out)


# representations -----------------------------------------------------------

@dataclass(frozen=True)
class Sl2Representation:
    """Monodromy of the punctured sphere on standard anticlockwise generators.

    ``punctures`` is the generator order: the matrices multiply to the
    identity as ``matrices[0] @ matrices[1] @ ...``.  ``levelt`` is indexed
    by puncture, not by generator position.
    """

    basepoint: int
    punctures: tuple
    matrices: tuple
    levelt: tuple
    labels: tuple = ()

    def matrix(self, p: int) -> np.ndarray:
        return self.matrices[self.punctures.index(p)]

    def product(self) -> np.ndarray:
        M = np.eye(2, dtype=complex)
        for A in self.matrices:
            M = M @ A
        return M

    def conjugate(self, X: np.ndarray) -> "Sl2Representation":
        Xi = _inv2(X)
        return Sl2Representation(self.basepoint, self.punctures,
                                 tuple(X @ A @ Xi for A in self.matrices), self.levelt, self.labels)

    def checks(self) -> dict:
        det = max(abs(np.linalg.det(A) - 1) for A in self.matrices)
        tr = max(abs(np.trace(A) - 2 * cmath.cos(2 * math.pi * self.levelt[p]))
                 for p, A in zip(self.punctures, self.matrices))
        prod = float(np.max(np.abs(self.product() - np.eye(2))))
        return {"det": float(det), "trace": float(tr), "product": prod}

    def word(self, letters) -> np.ndarray:
        """Evaluate a word given as (generator position, +1 or -1) pairs, left to right."""
        M = np.eye(2, dtype=complex)
        for k, e in letters:
            A = self.matrices[k]
            M = M @ (A if e == 1 else _inv2(A))
        return M

    def to_json(self) -> dict:
        gens = []
        for p, A in zip(self.punctures, self.matrices):
            gens.append({
                "puncture": p,
                "label": self.labels[p] if self.labels else str(p),
                "matrix": [[z.real, z.imag] for z in A.reshape(-1)],
            })
        return {"schema": SL2_SCHEMA, "basepoint": self.basepoint,
                "lambda": [[x.real, x.imag] for x in self.levelt], "generators": gens}

    @classmethod
    def from_json(cls, data) -> "Sl2Representation":
        from .graph_io import require

        schema = require(data, "schema", str, "$")
        if schema != SL2_SCHEMA:
            raise SchemaViolation(f"unknown schema {schema!r}", "$.schema")
        base = require(data, "basepoint", int, "$")
        lam = []
        for k, x in enumerate(require(data, "lambda", list, "$")):
            if not (isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x)):
                raise SchemaViolation("expected [re, im]", f"$.lambda[{k}]")
            lam.append(complex(*x))
        punctures, mats, labels = [], [], [str(i) for i in range(len(lam))]
        for k, gen in enumerate(require(data, "generators", list, "$")):
            loc = f"$.generators[{k}]"
            p = require(gen, "puncture", int, loc)
            if not 0 <= p < len(lam) or p in punctures:
                raise SchemaViolation("bad or repeated puncture index", f"{loc}.puncture")
            entries = require(gen, "matrix", list, loc)
            if len(entries) != 4 or not all(isinstance(x, list) and len(x) == 2
                                            and all(isinstance(v, (int, float)) for v in x) for x in entries):
                raise SchemaViolation("matrix must be four [re, im] pairs", f"{loc}.matrix")
            punctures.append(p)
            mats.append(np.array([complex(*x) for x in entries]).reshape(2, 2))
            if "label" in gen:
                labels[p] = str(gen["label"])
        if len(punctures) != len(lam):
            raise SchemaViolation("one generator per puncture expected", "$.generators")
        return cls(base, tuple(punctures), tuple(mats), tuple(lam), tuple(labels))


def nonabelianise(sys: OddAbelianSystem, tol: float = 1e-9, root: int = 0) -> Sl2Representation:
    """Rank-two monodromy of the glued system on standard puncture loops based at ``root``."""
    cache = _Crossings(sys)
    defects = branch_defects(sys, relative=True, _cache=cache)
    if defects.size and defects.max() >= tol:
        b = int(defects.argmax())
        raise BranchMonodromyNontrivial(
            f"monodromy around branch vertex {b} differs from the identity by {defects[b]:.3e}")
    gens = generators(sys.sg.stokes, root)
    punctures, mats = [], []
    for (kind, v), loop in zip(gens.faces, gens.anticlockwise):
        if kind == BRANCH:
            continue
        punctures.append(v)
        mats.append(cache.matrix(loop))
    return Sl2Representation(root, tuple(punctures), tuple(mats), sys.levelt, sys.sg.stokes.pole_labels)


def random_words(n_gens: int, count: int, length: int, rng: np.random.Generator) -> list:
    return [[(int(rng.integers(n_gens)), int(rng.choice((-1, 1)))) for _ in range(length)]
            for _ in range(count)]


def _norm_scale(rep: Sl2Representation, word) -> float:
    out = 1.0
    for k, _ in word:
        out *= float(np.linalg.norm(rep.matrices[k], 2))
    return out


def trace_deviation(a: Sl2Representation, b: Sl2Representation, words) -> float:
    """Largest trace mismatch over the generators and the given words.

    Each mismatch is divided by ``max(1, prod ||M_k||)`` over the letters of
    the word, taking the smaller of the two representations' products; this
    is the scale of the rounding error in any evaluation of the trace.
    """
    if a.punctures != b.punctures:
        raise ValueError("representations use different generator orders")
    worst = 0.0
    all_words = [[(k, 1)] for k in range(len(a.punctures))] + list(words)
    for w in all_words:
        ta, tb = np.trace(a.word(w)), np.trace(b.word(w))
        scale = max(1.0, min(_norm_scale(a, w), _norm_scale(b, w)))
        worst = max(worst, abs(ta - tb) / scale)
    return worst


@dataclass
class NaturalityReport:
    trace_deviation: float
    conjugation_deviation: float

    def ok(self, tol: float = 1e-8) -> bool:
        return self.trace_deviation < tol and self.conjugation_deviation < tol


def naturality_check(sys: OddAbelianSystem, c, n_words: int = 20, length: int = 6,
                     seed: int = 0) -> NaturalityReport:
    """Compare nonabelianisation before and after a gauge transformation ``c``."""
    c = np.asarray(c, dtype=complex)
    rep = nonabelianise(sys)
    rep_c = nonabelianise(gauge_transform(sys, c))
    frame = region_frame(sys.sg, rep.basepoint)
    D = np.diag([c[frame[0]], c[frame[1]]])
    conj = rep.conjugate(D)
    conj_dev = max(float(np.max(np.abs(A - B)) / max(1.0, float(np.max(np.abs(A)))))
                   for A, B in zip(conj.matrices, rep_c.matrices))
    words = random_words(len(rep.punctures), n_words, length, np.random.default_rng(seed))
    return NaturalityReport(trace_deviation(rep, rep_c, words), conj_dev)
