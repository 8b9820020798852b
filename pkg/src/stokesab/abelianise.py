"""Abelianisation: from rank-two monodromy back to an odd abelian system.

Every region of the Stokes graph gets two lines in the basepoint fibre,
one per lift: the sink eigenline of the pole at that lift's sink,
continued into the region through the sector the region occupies at that
pole.  Writing the transport across each ray in the line bases of the two
adjacent regions gives an upper-triangular matrix whose diagonal is the
pair of abelian weights and whose corner entry is the Voros correction.

All transport here is in *tree gauge*: crossings of the spanning tree used
for the standard generators are the identity, and the crossing matrix of
each remaining ray is rebuilt from the puncture matrices.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .abelian_system import (
    OddAbelianSystem,
    holonomy_vector,
    transport,
    validate,
)
from .errors import (
    DegenerateMonodromy,
    NormalizationFailure,
    TransversalityFailure,
    ValidationFailure,
)
from .stokes import BRANCH, POLE, SpectralGraph, detour_path, generators
from .voros import Sl2Representation, _inv2, nonabelianise, random_words, trace_deviation

TWO_PI_I = 2j * math.pi


def normalise(v: np.ndarray) -> np.ndarray:
    """Scale a nonzero 2-vector so that its largest-modulus entry is 1."""
    k = int(np.argmax(np.abs(v)))
    if v[k] == 0:
        raise DegenerateMonodromy("zero vector cannot span a line")
    return v / v[k]


def line_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Sine of the angle between two lines in C^2."""
    return abs(u[0] * v[1] - u[1] * v[0]) / (np.linalg.norm(u) * np.linalg.norm(v))


def eigenline(A: np.ndarray, target: complex, tol: float = 1e-9) -> tuple:
    """Eigenline of a 2x2 matrix for the eigenvalue closest to ``target``.

    Returns ``(vector, eigenvalue, residual)``.  Raises DegenerateMonodromy
    if the two eigenvalues coincide.
    """
    tr = A[0, 0] + A[1, 1]
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    disc = cmath.sqrt(tr * tr - 4 * det)
    mus = ((tr + disc) / 2, (tr - disc) / 2)
    scale = max(1.0, float(np.max(np.abs(A))))
    if abs(mus[0] - mus[1]) <= tol * scale:
        raise DegenerateMonodromy(f"eigenvalues {mus[0]:.6g} and {mus[1]:.6g} coincide")
    mu = min(mus, key=lambda x: abs(x - target))
    # two candidate null vectors of A - mu; keep the better conditioned one
    c1 = np.array([A[0, 1], mu - A[0, 0]])
    c2 = np.array([mu - A[1, 1], A[1, 0]])
    v = c1 if np.linalg.norm(c1) >= np.linalg.norm(c2) else c2
    v = normalise(v)
    res = float(np.linalg.norm(A @ v - mu * v) / (scale * np.linalg.norm(v)))
    return v, mu, res


@dataclass(frozen=True)
class FramedRep:
    rep: Sl2Representation
    sink: dict  # puncture -> eigenline for exp(+2 pi i lambda)
    source: dict  # puncture -> eigenline for exp(-2 pi i lambda)
    residuals: dict


def frame(rep: Sl2Representation, tol: float = 1e-9, eig_tol: float = 1e-6) -> FramedRep:
    """Eigenlines of every generator, with the sink line at eigenvalue ``exp(+2 pi i lambda)``."""
    sink, source, res = {}, {}, {}
    for p, A in zip(rep.punctures, rep.matrices):
        q = cmath.exp(TWO_PI_I * rep.levelt[p])
        if abs(q - 1 / q) <= tol * max(1.0, abs(q), abs(1 / q)):
            raise DegenerateMonodromy(f"puncture {p}: exp(+-2 pi i lambda) coincide for lambda = {rep.levelt[p]}")
        scale = max(1.0, float(np.linalg.norm(A, 2)))
        if abs(np.trace(A) - (q + 1 / q)) > eig_tol * scale:
            raise ValidationFailure(f"puncture {p}: trace {np.trace(A):.6g} does not match exp(+-2 pi i lambda)")
        vs, _, rs = eigenline(A, q, tol)
        vu, _, ru = eigenline(A, 1 / q, tol)
        sink[p], source[p], res[p] = vs, vu, max(rs, ru)
    return FramedRep(rep, sink, source, res)


class TreeGauge:
    """Crossing matrices of the base graph in the gauge trivial on the generator tree."""

    def __init__(self, rep: Sl2Representation, g):
        self.g = g
        gens = generators(g, rep.basepoint)
        self.gens = gens
        puncture_order = tuple(v for kind, v in gens.faces if kind == POLE)
        if tuple(rep.punctures) != puncture_order:
            raise ValidationFailure(
                f"generator order {tuple(rep.punctures)} does not match the graph's standard order {puncture_order}")
        face_inv = []
        for kind, v in gens.faces:
            face_inv.append(np.eye(2, dtype=complex) if kind == BRANCH else _inv2(rep.matrix(v)))
        chord_by_ray = {c[0]: c for c in gens.chords}
        loop_mat = {}

        def chord_matrix(ray):
            if ray in loop_mat:
                return loop_mat[ray]
            _, _, fi, children = chord_by_ray[ray]
            M = face_inv[fi]
            for child in children:
                M = chord_matrix(child) @ M
            loop_mat[ray] = M
            return M

        self.forward = []
        for a in range(len(g.rays)):
            if a in gens.tree_rays:
                self.forward.append(np.eye(2, dtype=complex))
                continue
            _, d, _, _ = chord_by_ray[a]
            M = chord_matrix(a)
            self.forward.append(M if d == 1 else _inv2(M))
        self.backward = [_inv2(M) for M in self.forward]

    def matrix(self, path) -> np.ndarray:
        path.end(self.g)
        M = np.eye(2, dtype=complex)
        for a, d in path.steps:
            M = (self.forward[a] if d == 1 else self.backward[a]) @ M
        return M


@dataclass(frozen=True)
class RegionLines:
    lines: dict  # spectral region -> normalised vector in the basepoint fibre
    gauge: TreeGauge


def continue_lines(fr: FramedRep, sg: SpectralGraph, gauge: TreeGauge | None = None) -> RegionLines:
    """Sink line of each lift, continued into its region through the region's own sector."""
    g = sg.stokes
    gauge = gauge or TreeGauge(fr.rep, g)
    lines = {}
    for I, reg in enumerate(g.regions):
        for slot, pos in ((0, 1), (1, 3)):
            _, p, j = reg.corners[pos]
            loop = g.corner_loop(POLE, p, j, clockwise=False)
            H = gauge.matrix(loop)  # based at I, expressed in the tree-gauge fibre
            q = cmath.exp(TWO_PI_I * fr.rep.levelt[p])
            v, _, _ = eigenline(H, q)
            lines[2 * I + slot] = v
    return RegionLines(lines, gauge)


@dataclass
class TransversalityReport:
    distances: dict  # base region -> sine of angle between its two lines
    tol: float

    @property
    def failures(self) -> list:
        return [I for I, d in self.distances.items() if not d > self.tol]

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {"tol": self.tol, "min_distance": min(self.distances.values()), "failures": self.failures}


def check_transverse(rl: RegionLines, tol: float = 1e-7) -> TransversalityReport:
    n = len(rl.lines) // 2
    return TransversalityReport({I: line_distance(rl.lines[2 * I], rl.lines[2 * I + 1]) for I in range(n)}, tol)


@dataclass(frozen=True)
class Extraction:
    system: OddAbelianSystem
    deltas: np.ndarray  # corner entry over the sink weight, per base ray
    lower_residual: float  # largest relative lower-left entry (zero when sink lines match)


def extract(fr: FramedRep, rl: RegionLines, sg: SpectralGraph, tol: float = 1e-7) -> Extraction:
    report = check_transverse(rl, tol)
    if not report.ok:
        raise TransversalityFailure(f"lines coincide in regions {report.failures}")
    g = sg.stokes
    L = rl.lines
    t = np.empty(sg.n_rays, dtype=complex)
    deltas = np.empty(len(g.rays), dtype=complex)
    lower = 0.0
    for a, s in enumerate(g.ray_sides):
        BI = np.column_stack([L[2 * s.left + s.slot_left], L[2 * s.left + 1 - s.slot_left]])
        BJ = np.column_stack([L[2 * s.right + s.slot_right], L[2 * s.right + 1 - s.slot_right]])
        C = _inv2(BJ) @ rl.gauge.forward[a] @ BI
        lower = max(lower, abs(C[1, 0]) / float(np.max(np.abs(C))))
        t[2 * a], t[2 * a + 1] = C[0, 0], C[1, 1]
        deltas[a] = C[0, 1] / C[0, 0]
    m = np.empty(sg.n_regions, dtype=complex)
    for i in range(sg.n_regions):
        u, v = L[i], L[i ^ 1]
        m[i] = 1 / (u[0] * v[1] - u[1] * v[0])
    levelt = tuple(fr.rep.levelt)
    try:
        sys = OddAbelianSystem(sg, t, m, levelt)
    except ValidationFailure as exc:
        raise NormalizationFailure(str(exc)) from exc
    rep = validate(sys)
    if not rep.ok(1e-6):
        raise NormalizationFailure(f"extracted system violates {rep.violations(1e-6)}")
    return Extraction(sys, deltas, lower)


def abelianise(rep: Sl2Representation, sg: SpectralGraph, tol: float = 1e-7) -> Extraction:
    fr = frame(rep)
    return extract(fr, continue_lines(fr, sg), sg, tol)


# round trips ---------------------------------------------------------------

@dataclass
class RoundTripReport:
    values: dict

    def ok(self, tol: float = 1e-8) -> bool:
        return all(v <= tol for k, v in self.values.items() if k in ("holonomy", "delta", "trace"))

    def to_json(self) -> dict:
        return dict(self.values)


def delta_consistency(ex: Extraction) -> float:
    """Relative mismatch between extracted corner entries and detour transports of the extracted system."""
    worst = 0.0
    for a, d in enumerate(ex.deltas):
        direct = transport(ex.system, detour_path(ex.system.sg, a))
        worst = max(worst, abs(d - direct) / max(abs(d), abs(direct), 1e-300))
    return worst


def roundtrip_ab(sys: OddAbelianSystem, tol: float = 1e-7) -> RoundTripReport:
    rep = nonabelianise(sys)
    ex = abelianise(rep, sys.sg, tol)
    hv, hv2 = holonomy_vector(sys), holonomy_vector(ex.system)
    return RoundTripReport({
        "holonomy": hv.max_relative_deviation(hv2),
        "delta": delta_consistency(ex),
        "validate": validate(ex.system).max_residual(),
        "lower": ex.lower_residual,
    })


def roundtrip_nonab(rep: Sl2Representation, sg: SpectralGraph, n_words: int = 20, length: int = 6,
                    seed: int = 0, tol: float = 1e-7) -> RoundTripReport:
    ex = abelianise(rep, sg, tol)
    rep2 = nonabelianise(ex.system, root=rep.basepoint)
    words = random_words(len(rep.punctures), n_words, length, np.random.default_rng(seed))
    return RoundTripReport({"trace": trace_deviation(rep, rep2, words), "delta": delta_consistency(ex)})
