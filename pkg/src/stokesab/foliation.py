"""Critical leaves of the horizontal foliation of a quadratic differential.

A horizontal leaf is a curve along which ``sqrt(phi) dz`` is real.  We
parametrise it by ``w = int sqrt(phi) dz`` (real, increasing) and solve
``dz/dw = 1/sqrt(phi(z))`` with an embedded Dormand-Prince 5(4) pair,
tracking the branch of the square root by continuity.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import BranchAmbiguity, NonGenericDifferential, PathThroughSingularity, StepUnderflow
from .quad_diff import (
    BranchState,
    QuadraticDifferential,
    continue_along,
    continue_sqrt,
    is_inf,
    zeros,
)

# Dormand-Prince 5(4) tableau
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_E = tuple(b5 - b4 for b5, b4 in zip(_B5, _B4))


def dopri_step(f, z: complex, h: float):
    """One Dormand-Prince step of the autonomous ODE z' = f(z); returns (z_new, error estimate)."""
    k = []
    for i in range(7):
        zi = z
        for a, kj in zip(_A[i], k):
            zi += h * a * kj
        k.append(f(zi))
    z5 = z + h * sum(b * kj for b, kj in zip(_B5, k))
    err = h * sum(e * kj for e, kj in zip(_E, k))
    return z5, err


@dataclass(frozen=True)
class Endpoint:
    kind: str  # "pole" | "saddle" | "unresolved"
    index: int | None = None

    def __str__(self):
        return self.kind if self.index is None else f"{self.kind}({self.index})"


@dataclass(frozen=True)
class TraceConfig:
    """Tracing controls.  Lengths are relative to ``sep``, the smallest
    distance between two finite singular points (zeros or punctures)."""

    initial_offset: float = 1e-3  # times the distance from the zero to its nearest neighbour
    max_arclength_w: float = 1e3  # times max(1, max |singular point|)
    pole_radius: float = 1e-3  # times sep; at infinity the radius is taken in w = 1/z
    zero_radius: float = 1e-4  # times sep
    initial_step: float = 1e-3
    max_step: float = 1.0
    min_step: float = 1e-14
    rtol: float = 1e-11
    atol: float = 1e-15
    horizontal_tol: float = 1e-6
    max_steps: int = 100_000

    def __post_init__(self):
        for name in ("initial_offset", "pole_radius", "zero_radius", "initial_step",
                     "max_step", "min_step", "rtol", "horizontal_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"TraceConfig.{name} must be positive")
        if self.max_arclength_w < 0:
            raise ValueError("TraceConfig.max_arclength_w must be non-negative")
        if self.zero_radius >= 1:
            raise ValueError("zero_radius must be smaller than the separation of singular points")

    def halved(self) -> "TraceConfig":
        return replace(self, rtol=self.rtol / 2, atol=self.atol / 2)


@dataclass
class Trajectory:
    source_zero: int
    ray_index: int
    points: np.ndarray
    w_values: np.ndarray
    endpoint: Endpoint
    angle: float  # launch direction at the zero
    approach_angle: float | None = None  # argument of the last point seen from its pole (chart 1/z at infinity)
    closest_zero: float = math.inf  # closest approach to another zero, in units of sep
    branch_values: np.ndarray = field(default=None, repr=False)

    @property
    def terminal(self) -> complex:
        return complex(self.points[-1])

    def to_json(self) -> dict:
        return {
            "source_zero": self.source_zero,
            "ray_index": self.ray_index,
            "endpoint": {"kind": self.endpoint.kind, "index": self.endpoint.index},
            "points": [[z.real, z.imag] for z in self.points],
            "w": [float(w) for w in self.w_values],
        }


@dataclass(frozen=True)
class Classification:
    status: str  # "saddle-free" | "has-saddle" | "inconclusive"
    trajectories: tuple
    saddle_pair: tuple | None = None

    @property
    def saddle_free(self) -> bool:
        return self.status == "saddle-free"


class _Geometry:
    """Singular points and length scales of a differential, computed once."""

    def __init__(self, phi: QuadraticDifferential):
        self.phi = phi
        self.zeros = zeros(phi)
        self.poles = [(i, complex(p)) for i, p in enumerate(phi.marked.punctures) if not is_inf(p)]
        self.inf_index = next((i for i, p in enumerate(phi.marked.punctures) if is_inf(p)), None)
        pts = [p for _, p in self.poles] + list(self.zeros)
        self.points = pts
        self.sep = min(abs(a - b) for i, a in enumerate(pts) for b in pts[i + 1:])
        self.scale = max(1.0, max(abs(p) for p in pts))

    def nearest(self, z: complex) -> float:
        return min(abs(z - p) for p in self.points)


def critical_directions(phi: QuadraticDifferential, b: complex, tol: float = 1e-12) -> tuple:
    """Angles of the three horizontal directions at a simple zero ``b``."""
    # phi = c (z - b) + O((z - b)^2) with c = N'(b) / prod (b - p)^2
    dn = 0j
    n = 0j
    for coeff in phi.numerator:
        dn = dn * b + n
        n = n * b + coeff
    den = 1 + 0j
    for p in phi.finite_punctures:
        den *= (b - p) * (b - p)
    c = dn / den
    if abs(c) <= tol * max(1.0, abs(n)):
        raise NonGenericDifferential(f"{b} is not a simple zero")
    arg_c = cmath.phase(c)
    return tuple(((2 * math.pi * k - arg_c) / 3) % (2 * math.pi) for k in range(3))


def trace_leaf(phi: QuadraticDifferential, b: int | complex, k: int,
               cfg: TraceConfig | None = None, _geom: _Geometry | None = None) -> Trajectory:
    """Trace the ``k``-th critical leaf leaving the zero ``b`` (an index into ``zeros(phi)``)."""
    cfg = cfg or TraceConfig()
    geom = _geom or _Geometry(phi)
    if isinstance(b, (int, np.integer)):
        bi = int(b)
    else:
        bi = min(range(len(geom.zeros)), key=lambda i: abs(geom.zeros[i] - b))
    bz = geom.zeros[bi]
    theta = critical_directions(phi, bz)[k]
    direction = cmath.exp(1j * theta)
    neighbour = min(abs(bz - p) for p in geom.points if p != bz)
    z = bz + cfg.initial_offset * neighbour * direction
    s0 = cmath.sqrt(phi(z))
    # dz/dw = 1/sqrt(phi) must point along the launch direction
    if (direction.conjugate() / s0).real < 0:
        s0 = -s0

    pole_r = cfg.pole_radius * geom.sep
    zero_r = cfg.zero_radius * geom.sep
    inf_r = geom.scale / cfg.pole_radius
    w_max = cfg.max_arclength_w * geom.scale

    points = [z]
    ws = [0.0]
    branch = [s0]
    state = BranchState(z, s0)
    w = 0.0
    h = cfg.initial_step * geom.scale
    closest = math.inf

    def velocity_from(ref: BranchState):
        ld = phi.log_derivative(ref.z)

        def f(x):
            r = cmath.sqrt(phi(x))
            pred = ref.value * (1 + 0.5 * ld * (x - ref.z))
            if abs(r - pred) > abs(r + pred):
                r = -r
            return 1 / r
        return f

    def hit(zz):
        for idx, p in geom.poles:
            if abs(zz - p) <= pole_r:
                return ("pole", idx, p, pole_r)
        if geom.inf_index is not None and abs(zz) >= inf_r:
            return ("pole", geom.inf_index, None, inf_r)
        for j, q in enumerate(geom.zeros):
            if abs(zz - q) <= zero_r:
                return ("saddle", j, q, zero_r)
        return None

    endpoint = Endpoint("unresolved")
    approach = None
    steps = 0
    while w < w_max:
        steps += 1
        if steps > cfg.max_steps:
            break
        d = geom.nearest(z)
        # the chord of one step may not jump further than a quarter of the clearance
        h = min(h, cfg.max_step * geom.scale, 0.25 * d * abs(state.value), w_max - w)
        f = velocity_from(state)
        z_new, err = dopri_step(f, z, h)
        tol = cfg.atol * geom.scale + cfg.rtol * d
        ratio = abs(err) / tol
        if ratio > 1.0:
            h *= max(0.2, 0.9 * ratio ** -0.2)
            if h < cfg.min_step:
                raise StepUnderflow(f"step size collapsed near {z}")
            continue
        event = hit(z_new)
        if event is not None:
            kind, idx, centre, radius = event
            z_new, h = _locate_event(f, z, h, centre, radius)
        try:
            state = continue_sqrt(phi, state, z_new)
        except BranchAmbiguity:
            h *= 0.5
            if h < cfg.min_step:
                raise
            continue
        z = z_new
        w += h
        points.append(z)
        ws.append(w)
        branch.append(state.value)
        for j, q in enumerate(geom.zeros):
            if j != bi:
                closest = min(closest, abs(z - q) / geom.sep)
        if event is not None:
            kind, idx, centre, radius = event
            endpoint = Endpoint(kind, idx)
            if kind == "pole":
                approach = cmath.phase(1 / z) if centre is None else cmath.phase(z - centre)
            break
        h *= min(5.0, 0.9 * max(ratio, 1e-10) ** -0.2)

    return Trajectory(
        source_zero=bi, ray_index=k, points=np.array(points), w_values=np.array(ws),
        endpoint=endpoint, angle=theta, approach_angle=approach, closest_zero=closest,
        branch_values=np.array(branch),
    )


def _locate_event(f, z0: complex, h: float, centre, radius: float):
    """Shorten the last step so that it ends on the event circle.

    ``centre is None`` encodes the circle |z| = radius around infinity.
    """
    def g(step):
        zz, _ = dopri_step(f, z0, step)
        if centre is None:
            return radius - abs(zz), zz
        return abs(zz - centre) - radius, zz

    lo, hi = 0.0, h
    g_hi, z_hi = g(hi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        g_mid, z_mid = g(mid)
        if g_mid <= 0:
            hi, z_hi = mid, z_mid
        else:
            lo = mid
        if hi - lo <= 1e-15 * h:
            break
    return z_hi, hi


def trace_all(phi: QuadraticDifferential, cfg: TraceConfig | None = None) -> list:
    cfg = cfg or TraceConfig()
    geom = _Geometry(phi)
    return [trace_leaf(phi, i, k, cfg, geom) for i in range(len(geom.zeros)) for k in range(3)]


def is_saddle_free(phi: QuadraticDifferential, cfg: TraceConfig | None = None) -> Classification:
    cfg = cfg or TraceConfig()
    if cfg.max_arclength_w == 0:
        return Classification("inconclusive", ())
    trajs = tuple(trace_all(phi, cfg))
    for t in trajs:
        if t.endpoint.kind == "saddle":
            return Classification("has-saddle", trajs, (t.source_zero, t.endpoint.index))
    if all(t.endpoint.kind == "pole" for t in trajs):
        return Classification("saddle-free", trajs)
    return Classification("inconclusive", trajs)


def is_totally_generic(phi: QuadraticDifferential, cfg: TraceConfig | None = None,
                       margin: float = 1e-2) -> bool:
    """Saddle-free with every critical leaf keeping ``margin * sep`` away from the other zeros.

    The margin is a robustness proxy: an exact saddle connection in some
    homotopy class shows up as a leaf brushing past another zero.
    """
    result = is_saddle_free(phi, cfg)
    if not result.saddle_free:
        return False
    return all(t.closest_zero > margin for t in result.trajectories)


def horizontal_drift(phi: QuadraticDifferential, traj: Trajectory, nodes: int = 8) -> np.ndarray:
    """Running ``Im int sqrt(phi) dz`` along the polyline of ``traj``.

    Integrates over each chord with Gauss-Legendre quadrature; by Cauchy's
    theorem the chord integral equals the integral along the true arc, so
    the result measures the integrator's departure from the leaf.  The
    branch is continued independently of the one used while tracing.
    """
    x, wts = np.polynomial.legendre.leggauss(nodes)
    pts = traj.points
    state = BranchState(complex(pts[0]), complex(traj.branch_values[0]))
    out = np.zeros(len(pts))
    acc = 0j
    for n in range(1, len(pts)):
        a, b = complex(pts[n - 1]), complex(pts[n])
        mid, half = (a + b) / 2, (b - a) / 2
        seg = 0j
        for xi, wi in zip(x, wts):
            zz = mid + half * xi
            state = _continue_fine(phi, state, zz)
            seg += wi * state.value
        state = _continue_fine(phi, state, b)
        acc += seg * half
        out[n] = acc.imag
    return out


def _continue_fine(phi, state, z):
    try:
        return continue_sqrt(phi, state, z)
    except BranchAmbiguity:
        return continue_along(phi, state, [z])


# saddle integral ---------------------------------------------------------

def saddle_integral(phi: QuadraticDifferential, via: Sequence[complex] = (),
                    clearance: float = 1e-2, pieces: int = 24, nodes: int = 12) -> complex:
    """Integral of a continuously tracked branch of sqrt(phi) from zero 0 to zero 1.

    The path is the polyline ``zeros[0] -> *via -> zeros[1]``.  Only
    ``|Im|`` is meaningful since the overall sign depends on the branch
    picked at the start.
    """
    zs = zeros(phi)
    if len(zs) != 2:
        raise ValueError("saddle_integral needs exactly two zeros")
    geom = _Geometry(phi)
    path = [zs[0]] + [complex(v) for v in via] + [zs[1]]
    if len(path) == 2:
        path = [path[0], (path[0] + path[1]) / 2, path[1]]
    limit = clearance * geom.sep
    for a, b in zip(path, path[1:]):
        for _, p in geom.poles:
            if _segment_distance(p, a, b) < limit:
                raise PathThroughSingularity(f"segment {a} -> {b} passes within {limit:g} of puncture {p}")
    x, wts = np.polynomial.legendre.leggauss(nodes)
    x = (x + 1) / 2
    wts = wts / 2
    total = 0j
    state = None
    last = len(path) - 2
    for n, (a, b) in enumerate(zip(path, path[1:])):
        sing_start = n == 0
        sing_end = n == last
        for piece in range(pieces):
            u0, u1 = piece / pieces, (piece + 1) / pieces
            for xi, wi in zip(x, wts):
                u = u0 + (u1 - u0) * xi
                if sing_start:
                    s, ds = u * u, 2 * u
                elif sing_end:
                    s, ds = 1 - (1 - u) ** 2, 2 * (1 - u)
                else:
                    s, ds = u, 1.0
                zz = a + (b - a) * s
                if state is None:
                    state = BranchState(zz, cmath.sqrt(phi(zz)))
                else:
                    state = continue_along(phi, state, [zz], points=geom.points)
                total += wi * (u1 - u0) * ds * (b - a) * state.value
    return total


def _segment_distance(p: complex, a: complex, b: complex) -> float:
    d = b - a
    if d == 0:
        return abs(p - a)
    t = ((p - a) * d.conjugate()).real / abs(d) ** 2
    t = min(1.0, max(0.0, t))
    return abs(p - (a + t * d))
