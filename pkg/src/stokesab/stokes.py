"""Stokes graphs, their spectral double covers, and combinatorial paths.

Conventions used throughout the package:

* Rotation lists are anticlockwise.  A *corner* ``(v, i)`` is the sector at
  vertex ``v`` between ``rot[v][i]`` and ``rot[v][i + 1]``.
* Regions are read off by walking corners: from ``(v, i)`` follow the ray
  ``rot[v][i + 1]`` to its far end ``w`` and continue at the corner of ``w``
  that starts with that ray.  Each region lists its four corners in walk
  order starting at a branch corner; its pole corners are *slots* 0 and 1.
* Each ray ``a`` separates ``I(a)`` (the region just clockwise of ``a`` at
  its branch vertex) from ``J(a)``.  Crossing ``I -> J`` is direction +1,
  which is anticlockwise around the branch vertex and clockwise around the
  pole.
* Spectral region ``2*I + s`` is the lift of ``I`` whose sink sits at pole
  slot ``s``; spectral ray ``2*a`` is the negative lift (through the sink
  of the pole of ``a``) and ``2*a + 1`` the positive one.  The involution
  swaps the last bit in both cases.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import (
    CountMismatch,
    DisconnectedCover,
    InconsistentCover,
    InvalidPath,
    NonQuadrilateralFace,
)

BRANCH = "b"
POLE = "p"


@dataclass(frozen=True)
class Region:
    corners: tuple  # four (kind, vertex, position) triples in walk order
    rays: tuple  # boundary ray leaving each corner
    sides: tuple  # "I" or "J": which side of that ray the region sits on

    @property
    def poles(self) -> tuple:
        return (self.corners[1][1], self.corners[3][1])

    @property
    def branches(self) -> tuple:
        return (self.corners[0][1], self.corners[2][1])


@dataclass(frozen=True)
class RaySides:
    left: int  # I(a)
    right: int  # J(a)
    slot_left: int  # slot of the pole of a in I(a)
    slot_right: int  # slot of the pole of a in J(a)


class StokesGraph:
    """Bipartite ribbon graph with branch vertices of degree three and quadrilateral faces."""

    def __init__(self, branch_rot: Sequence[Sequence[int]], pole_rot: Sequence[Sequence[int]],
                 rays: Sequence[tuple], pole_labels: Sequence[str] | None = None,
                 genus: int = 0, branch_positions=None, pole_positions=None, leaves=None,
                 check_counts: bool = True):
        self.branch_rot = tuple(tuple(int(r) for r in rot) for rot in branch_rot)
        self.pole_rot = tuple(tuple(int(r) for r in rot) for rot in pole_rot)
        self.rays = tuple((int(b), int(p)) for b, p in rays)
        self.genus = int(genus)
        self.pole_labels = tuple(pole_labels) if pole_labels is not None else tuple(
            str(i) for i in range(len(self.pole_rot)))
        self.branch_positions = branch_positions
        self.pole_positions = pole_positions
        self.leaves = leaves  # optional polylines, one per ray
        self._check_incidence()
        self._ray_pos = {}
        for kind, rots in ((BRANCH, self.branch_rot), (POLE, self.pole_rot)):
            for v, rot in enumerate(rots):
                for i, r in enumerate(rot):
                    self._ray_pos[(kind, r)] = i
        self._build_regions()
        if check_counts:
            self.check_counts()

    # construction helpers

    def _check_incidence(self):
        nb, np_ = len(self.branch_rot), len(self.pole_rot)
        for i, rot in enumerate(self.branch_rot):
            if len(rot) != 3:
                raise NonQuadrilateralFace(f"branch vertex {i} has degree {len(rot)}, expected 3")
        seen_b, seen_p = {}, {}
        for v, rot in enumerate(self.branch_rot):
            for r in rot:
                if r in seen_b:
                    raise NonQuadrilateralFace(f"ray {r} listed twice around branch vertices")
                seen_b[r] = v
        for v, rot in enumerate(self.pole_rot):
            for r in rot:
                if r in seen_p:
                    raise NonQuadrilateralFace(f"ray {r} listed twice around poles")
                seen_p[r] = v
        for r, (b, p) in enumerate(self.rays):
            if not (0 <= b < nb and 0 <= p < np_):
                raise NonQuadrilateralFace(f"ray {r} has endpoints out of range")
            if seen_b.get(r) != b or seen_p.get(r) != p:
                raise NonQuadrilateralFace(f"ray {r} rotation data disagrees with its endpoints")
        if len(seen_b) != len(self.rays) or len(seen_p) != len(self.rays):
            raise NonQuadrilateralFace("rotation lists do not cover every ray exactly once")

    def _rot(self, kind):
        return self.branch_rot if kind == BRANCH else self.pole_rot

    def _next_corner(self, corner):
        kind, v, i = corner
        rot = self._rot(kind)[v]
        ray = rot[(i + 1) % len(rot)]
        b, p = self.rays[ray]
        if kind == BRANCH:
            wk, w = POLE, p
        else:
            wk, w = BRANCH, b
        return (wk, w, self._ray_pos[(wk, ray)]), ray

    def _build_regions(self):
        unvisited = set()
        for kind in (BRANCH, POLE):
            for v, rot in enumerate(self._rot(kind)):
                for i in range(len(rot)):
                    unvisited.add((kind, v, i))
        faces = []
        for start in sorted(c for c in unvisited if c[0] == BRANCH):
            if start not in unvisited:
                continue
            walk, rays_, c = [], [], start
            while True:
                walk.append(c)
                unvisited.discard(c)
                c, ray = self._next_corner(c)
                rays_.append(ray)
                if c == start:
                    break
                if len(walk) > 4:
                    raise NonQuadrilateralFace(f"face through corner {start} is not a quadrilateral")
            if len(walk) != 4 or [k for k, _, _ in walk] != [BRANCH, POLE, BRANCH, POLE]:
                raise NonQuadrilateralFace(f"face through corner {start} has {len(walk)} corners")
            # start at the smaller of the two branch corners
            if walk[2] < walk[0]:
                walk = walk[2:] + walk[:2]
                rays_ = rays_[2:] + rays_[:2]
            faces.append((tuple(walk), tuple(rays_)))
        if unvisited:
            raise NonQuadrilateralFace(f"corners {sorted(unvisited)[:3]} lie on faces without branch corners")
        faces.sort()
        self.regions = tuple(Region(w, r, ("I", "J", "I", "J")) for w, r in faces)
        self.corner_region = {}
        for idx, reg in enumerate(self.regions):
            for pos, c in enumerate(reg.corners):
                self.corner_region[c] = (idx, pos)
        sides = []
        for a, (b, p) in enumerate(self.rays):
            i = self._ray_pos[(BRANCH, a)]
            j = self._ray_pos[(POLE, a)]
            dp = len(self.pole_rot[p])
            left, _ = self.corner_region[(BRANCH, b, (i - 1) % 3)]
            right, _ = self.corner_region[(BRANCH, b, i)]
            left2, pos_l = self.corner_region[(POLE, p, j)]
            right2, pos_r = self.corner_region[(POLE, p, (j - 1) % dp)]
            if left2 != left or right2 != right:
                raise NonQuadrilateralFace(f"ray {a} borders inconsistent regions")
            sides.append(RaySides(left, right, (pos_l - 1) // 2, (pos_r - 1) // 2))
        self.ray_sides = tuple(sides)

    # counts

    @property
    def n_poles(self) -> int:
        return len(self.pole_rot)

    @property
    def n_branch(self) -> int:
        return len(self.branch_rot)

    def expected_counts(self) -> dict:
        d, g = self.n_poles, self.genus
        return {
            "branch": 2 * d + 4 * (g - 1),
            "rays": 6 * d + 12 * (g - 1),
            "regions": 3 * d + 6 * (g - 1),
        }

    def counts(self) -> dict:
        return {"branch": self.n_branch, "rays": len(self.rays), "regions": len(self.regions)}

    def check_counts(self):
        got, want = self.counts(), self.expected_counts()
        if got != want:
            raise CountMismatch(f"graph has {got}, expected {want} for |D|={self.n_poles}, genus {self.genus}")
        euler = self.n_poles + self.n_branch - len(self.rays) + len(self.regions)
        if euler != 2 - 2 * self.genus:
            raise CountMismatch(f"Euler characteristic {euler} does not match genus {self.genus}")

    # base paths

    def step(self, region: int, ray: int, direction: int) -> int:
        s = self.ray_sides[ray]
        if direction == 1 and region == s.left:
            return s.right
        if direction == -1 and region == s.right:
            return s.left
        raise InvalidPath(f"region {region} cannot cross ray {ray} in direction {direction}")

    def corner_loop(self, kind: str, v: int, i: int, clockwise: bool) -> "CombinatorialPath":
        """Loop around vertex ``v`` that starts and ends in the region of corner ``(v, i)``."""
        rot = self._rot(kind)[v]
        n = len(rot)
        start = self.corner_region[(kind, v, i)][0]
        if clockwise:
            rays_ = [rot[(i - t) % n] for t in range(n)]
            d = -1 if kind == BRANCH else 1
        else:
            rays_ = [rot[(i + 1 + t) % n] for t in range(n)]
            d = 1 if kind == BRANCH else -1
        return CombinatorialPath("base", start, tuple((r, d) for r in rays_))

    def adjacency(self):
        """(neighbour region, ray, direction) triples per region, in a fixed order."""
        adj = [[] for _ in self.regions]
        for a, s in enumerate(self.ray_sides):
            adj[s.left].append((s.right, a, 1))
            adj[s.right].append((s.left, a, -1))
        return adj


@dataclass(frozen=True)
class CombinatorialPath:
    carrier: str  # "base" or "cover"
    start: int
    steps: tuple = ()  # (ray, direction) pairs

    def __len__(self):
        return len(self.steps)

    def inverse(self, graph) -> "CombinatorialPath":
        end = self.end(graph)
        return CombinatorialPath(self.carrier, end, tuple((r, -d) for r, d in reversed(self.steps)))

    def then(self, other: "CombinatorialPath", graph=None) -> "CombinatorialPath":
        if other.carrier != self.carrier:
            raise InvalidPath("cannot concatenate base and cover paths")
        if graph is not None and self.end(graph) != other.start:
            raise InvalidPath(f"path ends at {self.end(graph)} but next starts at {other.start}")
        return CombinatorialPath(self.carrier, self.start, self.steps + other.steps)

    def regions(self, graph) -> list:
        out = [self.start]
        r = self.start
        for ray, d in self.steps:
            r = graph.step(r, ray, d)
            out.append(r)
        return out

    def end(self, graph) -> int:
        return self.regions(graph)[-1]

    def is_closed(self, graph) -> bool:
        return self.end(graph) == self.start


def reduce(path: CombinatorialPath) -> CombinatorialPath:
    """Cancel adjacent crossings of the same ray in opposite directions."""
    stack = []
    for ray, d in path.steps:
        if stack and stack[-1] == (ray, -d):
            stack.pop()
        else:
            stack.append((ray, d))
    return CombinatorialPath(path.carrier, path.start, tuple(stack))


def concat(paths: Iterable[CombinatorialPath], graph=None) -> CombinatorialPath:
    paths = list(paths)
    out = paths[0]
    for p in paths[1:]:
        out = out.then(p, graph)
    return out


# spanning trees -----------------------------------------------------------

def spanning_tree(n: int, adjacency, root: int = 0):
    """Breadth-first tree.  Returns (parent step per vertex, set of tree edges).

    ``adjacency[v]`` lists ``(neighbour, ray, direction)``.  The parent step
    of ``v`` is the (ray, direction) crossing used to reach it.
    """
    parent = {root: None}
    tree = set()
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for w, ray, d in adjacency[v]:
            if w not in parent:
                parent[w] = (v, ray, d)
                tree.add(ray)
                queue.append(w)
    if len(parent) != n:
        raise DisconnectedCover(f"only {len(parent)} of {n} regions reachable from region {root}")
    return parent, tree


def tree_path(carrier: str, parent, root: int, target: int) -> CombinatorialPath:
    steps = []
    v = target
    while v != root:
        u, ray, d = parent[v]
        steps.append((ray, d))
        v = u
    return CombinatorialPath(carrier, root, tuple(reversed(steps)))


# spectral cover -----------------------------------------------------------

class SpectralGraph:
    """Orientation double cover of a Stokes graph with sink/source labelling."""

    def __init__(self, stokes: StokesGraph, levelt: Sequence[complex] | None = None,
                 residues: Sequence[complex] | None = None):
        self.stokes = stokes
        self.levelt = tuple(complex(x) for x in levelt) if levelt is not None else None
        self.residues = tuple(complex(x) for x in residues) if residues is not None else None
        if self.levelt is not None and len(self.levelt) != stokes.n_poles:
            raise InconsistentCover("one Levelt exponent per puncture expected")
        self.n_regions = 2 * len(stokes.regions)
        self.n_rays = 2 * len(stokes.rays)
        ends = []
        for a, s in enumerate(stokes.ray_sides):
            ends.append((2 * s.left + s.slot_left, 2 * s.right + s.slot_right))
            ends.append((2 * s.left + 1 - s.slot_left, 2 * s.right + 1 - s.slot_right))
        self.ray_ends = tuple(ends)
        self._check()

    @staticmethod
    def sigma(x: int) -> int:
        return x ^ 1

    def base_region(self, i: int) -> int:
        return i // 2

    def base_ray(self, e: int) -> int:
        return e // 2

    def parity(self, e: int) -> str:
        return "-" if e % 2 == 0 else "+"

    def sink(self, i: int) -> int:
        return self.stokes.regions[i // 2].poles[i % 2]

    def source(self, i: int) -> int:
        return self.stokes.regions[i // 2].poles[1 - i % 2]

    def polar_vertex(self, e: int) -> tuple:
        """(puncture, "-" for the sink lift or "+" for the source lift)."""
        return (self.stokes.rays[e // 2][1], self.parity(e))

    def lifts(self, region: int) -> tuple:
        return (2 * region, 2 * region + 1)

    def _check(self):
        for e, (i, j) in enumerate(self.ray_ends):
            if self.sigma(e) == e or self.sigma(i) == i:
                raise InconsistentCover(f"involution fixes spectral cell {e}")
            if self.ray_ends[self.sigma(e)] != (self.sigma(i), self.sigma(j)):
                raise InconsistentCover(f"involution does not commute with the ends of spectral ray {e}")
            p, parity = self.polar_vertex(e)
            for r in (i, j):
                pole = self.sink(r) if parity == "-" else self.source(r)
                if pole != p:
                    raise InconsistentCover(f"spectral ray {e} meets region {r} away from its polar lift")

    def counts(self) -> dict:
        return {
            "regions": self.n_regions,
            "rays": self.n_rays,
            "ramification": self.stokes.n_branch,
            "polar": 2 * self.stokes.n_poles,
        }

    def step(self, region: int, ray: int, direction: int) -> int:
        i, j = self.ray_ends[ray]
        if direction == 1 and region == i:
            return j
        if direction == -1 and region == j:
            return i
        raise InvalidPath(f"spectral region {region} cannot cross spectral ray {ray} in direction {direction}")

    def adjacency(self):
        adj = [[] for _ in range(self.n_regions)]
        for e, (i, j) in enumerate(self.ray_ends):
            adj[i].append((j, e, 1))
            adj[j].append((i, e, -1))
        return adj

    def lift_step(self, region: int, ray: int, direction: int) -> int:
        """Spectral ray over base ray ``ray`` leaving spectral ``region``."""
        for e in (2 * ray, 2 * ray + 1):
            i, j = self.ray_ends[e]
            if (direction == 1 and i == region) or (direction == -1 and j == region):
                return e
        raise InvalidPath(f"spectral region {region} is not on the expected side of ray {ray}")

    def ramification_loop(self, b: int, start_corner: int = 0) -> CombinatorialPath:
        """Six-crossing anticlockwise loop around the ramification vertex over ``b``."""
        base = self.stokes.corner_loop(BRANCH, b, start_corner, clockwise=False)
        twice = CombinatorialPath("base", base.start, base.steps + base.steps)
        return lift(self, twice, 2 * base.start)

    def puncture_loop(self, p: int, sign: str, corner: int = 0) -> CombinatorialPath:
        """Anticlockwise loop around the sink (``"-"``) or source (``"+"``) lift of pole ``p``."""
        base = self.stokes.corner_loop(POLE, p, corner, clockwise=False)
        region, pos = self.stokes.corner_region[(POLE, p, corner)]
        slot = (pos - 1) // 2
        start = 2 * region + (slot if sign == "-" else 1 - slot)
        return lift(self, base, start)


def double_cover(g: StokesGraph, marked=None) -> SpectralGraph:
    if marked is None:
        return SpectralGraph(g)
    return SpectralGraph(g, marked.levelt, marked.residues)


def lift(sg: SpectralGraph, base_path: CombinatorialPath, start_sheet: int) -> CombinatorialPath:
    if base_path.carrier != "base":
        raise InvalidPath("lift expects a base path")
    if start_sheet // 2 != base_path.start:
        raise InvalidPath(f"spectral region {start_sheet} does not lie over region {base_path.start}")
    steps = []
    r = start_sheet
    for ray, d in base_path.steps:
        e = sg.lift_step(r, ray, d)
        steps.append((e, d))
        r = sg.step(r, e, d)
    return CombinatorialPath("cover", start_sheet, tuple(steps))


def project(sg: SpectralGraph, path: CombinatorialPath) -> CombinatorialPath:
    return CombinatorialPath("base", path.start // 2, tuple((e // 2, d) for e, d in path.steps))


def detour_path(sg: SpectralGraph, ray: int) -> CombinatorialPath:
    """Detour of ``ray`` anchored on the side ``I(ray)``.

    Starts on the source lift of ``I(ray)``, runs clockwise around the
    ramification vertex crossing the lifts of the other two rays, and
    returns across the negative lift of ``ray`` to the sink lift of
    ``I(ray)``.  Its projection is a clockwise loop around the branch
    vertex of ``ray``.
    """
    g = sg.stokes
    b = g.rays[ray][0]
    i = g._ray_pos[(BRANCH, ray)]
    base = g.corner_loop(BRANCH, b, (i - 1) % 3, clockwise=True)
    s = g.ray_sides[ray]
    return lift(sg, base, 2 * s.left + 1 - s.slot_left)


# loops --------------------------------------------------------------------

@dataclass(frozen=True)
class NamedLoop:
    name: str
    kind: str  # "cotree" | "puncture" | "ramification"
    path: CombinatorialPath


def loop_basis(sg: SpectralGraph, root: int = 0) -> list:
    """Cotree loops of the cover, then puncture-lift loops and ramification loops, all based at ``root``."""
    parent, tree = spanning_tree(sg.n_regions, sg.adjacency(), root)
    loops = []
    for e, (i, j) in enumerate(sg.ray_ends):
        if e in tree:
            continue
        path = concat([tree_path("cover", parent, root, i),
                       CombinatorialPath("cover", i, ((e, 1),)),
                       tree_path("cover", parent, root, j).inverse(sg)])
        loops.append(NamedLoop(f"cotree:{e}", "cotree", path))

    def based(loop):
        to = tree_path("cover", parent, root, loop.start)
        return concat([to, loop, to.inverse(sg)])

    for p in range(sg.stokes.n_poles):
        for sign in "-+":
            loops.append(NamedLoop(f"puncture:{p}{sign}", "puncture", based(sg.puncture_loop(p, sign))))
    for b in range(sg.stokes.n_branch):
        loops.append(NamedLoop(f"ramification:{b}", "ramification", based(sg.ramification_loop(b))))
    return loops


def base_cotree_loops(g: StokesGraph, root: int = 0) -> list:
    parent, tree = spanning_tree(len(g.regions), g.adjacency(), root)
    out = []
    for a, s in enumerate(g.ray_sides):
        if a in tree:
            continue
        out.append(concat([tree_path("base", parent, root, s.left),
                           CombinatorialPath("base", s.left, ((a, 1),)),
                           tree_path("base", parent, root, s.right).inverse(g)]))
    return out


@dataclass(frozen=True)
class Generators:
    """Based loops around every vertex of the Stokes graph, one per vertex.

    ``faces`` lists ``(kind, vertex)`` in an order for which the
    concatenation of the *anticlockwise* loops, last to first, is null
    homotopic; equivalently the holonomies multiply to the identity when
    taken first to last as matrices.
    """

    root: int
    faces: tuple
    anticlockwise: tuple  # CombinatorialPath per face
    tree_parent: dict
    tree_rays: frozenset
    chords: tuple  # (ray, direction of first traversal, face index, children chords)


def generators(g: StokesGraph, root: int = 0) -> Generators:
    """Standard generators of the fundamental group of the punctured sphere.

    Walks the contour of a spanning tree of the region adjacency graph.
    Every cotree ray is met twice; the face just inside its first visit is
    the face that chord cuts off, and the faces in order of first visit
    give a product relation.
    """
    parent, tree = spanning_tree(len(g.regions), g.adjacency(), root)
    occ = {}
    for r_idx, reg in enumerate(g.regions):
        for k, ray in enumerate(reg.rays):
            occ[(ray, reg.sides[k])] = (r_idx, k)
    events = []
    R, k = root, 0
    guard = 0
    while True:
        guard += 1
        if guard > 16 * len(g.regions) + 8:
            raise DisconnectedCover("contour walk did not close")
        events.append(("corner", R, k))
        reg = g.regions[R]
        ray = reg.rays[k]
        side = reg.sides[k]
        if ray in tree:
            R, m = occ[(ray, "J" if side == "I" else "I")]
            k = (m + 1) % 4
        else:
            events.append(("chord", ray, R, k))
            k = (k + 1) % 4
        if (R, k) == (root, 0):
            break

    def face_of(R, k):
        kind, v, _ = g.regions[R].corners[k]
        return (kind, v)

    first_face = face_of(root, 0)
    order = [first_face]
    loops = {first_face: g.corner_loop(*g.regions[root].corners[0], clockwise=True)}
    chord_info = {}
    open_chords = []
    children = {None: []}
    for idx, ev in enumerate(events):
        if ev[0] != "chord":
            continue
        _, ray, R, k = ev
        if ray in chord_info:
            open_chords.pop()
            continue
        kk = (k + 1) % 4
        face = face_of(R, kk)
        if face in loops:
            raise DisconnectedCover(f"face {face} cut off twice by the contour")
        corner = g.regions[R].corners[kk]
        to = tree_path("base", parent, root, R)
        loops[face] = concat([to, g.corner_loop(*corner, clockwise=True), to.inverse(g)])
        order.append(face)
        d = 1 if g.regions[R].sides[k] == "I" else -1
        parent_chord = open_chords[-1] if open_chords else None
        children.setdefault(parent_chord, []).append(ray)
        children.setdefault(ray, [])
        chord_info[ray] = (d, face, R)
        open_chords.append(ray)
    n_faces = g.n_poles + g.n_branch
    if len(order) != n_faces:
        raise DisconnectedCover(f"contour walk found {len(order)} faces, expected {n_faces}")
    chords = tuple((ray, d, order.index(face), tuple(children[ray]))
                   for ray, (d, face, _) in chord_info.items())
    anticlockwise = tuple(loops[f].inverse(g) for f in order)
    return Generators(root, tuple(order), anticlockwise, parent, frozenset(tree), chords)


def chord_loop(g: StokesGraph, gens: Generators, ray: int, direction: int) -> CombinatorialPath:
    """Tree path to the ray, the crossing, and the tree path back."""
    s = g.ray_sides[ray]
    a, b = (s.left, s.right) if direction == 1 else (s.right, s.left)
    return concat([tree_path("base", gens.tree_parent, gens.root, a),
                   CombinatorialPath("base", a, ((ray, direction),)),
                   tree_path("base", gens.tree_parent, gens.root, b).inverse(g)])


# assembly from traced leaves ----------------------------------------------

def assemble(phi, trajectories: Sequence) -> StokesGraph:
    """Build the Stokes graph from the critical leaves of a saddle-free differential.

    Rays at a zero are ordered by launch angle, rays at a pole by the
    argument of their last point as seen from the pole (in the chart
    ``1/z`` at infinity).
    """
    from .quad_diff import is_inf, zeros

    bad = [t for t in trajectories if t.endpoint.kind != "pole"]
    if bad:
        raise NonQuadrilateralFace(f"leaf {bad[0].source_zero}/{bad[0].ray_index} ends at {bad[0].endpoint}")
    trajs = sorted(trajectories, key=lambda t: (t.source_zero, t.angle))
    n_zero = 1 + max(t.source_zero for t in trajs)
    n_pole = len(phi.marked)
    rays = [(t.source_zero, t.endpoint.index) for t in trajs]
    branch_rot = [[r for r, t in enumerate(trajs) if t.source_zero == b] for b in range(n_zero)]
    pole_rot = [sorted((r for r, t in enumerate(trajs) if t.endpoint.index == p),
                       key=lambda r: trajs[r].approach_angle % math.tau)
                for p in range(n_pole)]
    pole_positions = [None if is_inf(p) else complex(p) for p in phi.marked.punctures]
    return StokesGraph(branch_rot, pole_rot, rays,
                       pole_labels=[puncture_label(p) for p in phi.marked.punctures],
                       branch_positions=list(zeros(phi)),
                       pole_positions=pole_positions,
                       leaves=[t.points for t in trajs])


def puncture_label(p) -> str:
    from .quad_diff import is_inf

    if is_inf(p):
        return "inf"
    z = complex(p)

    def num(x):
        return f"{x:.6g}"

    if z.imag == 0:
        return num(z.real)
    if z.real == 0:
        return f"{num(z.imag)}i"
    return f"{num(z.real)}{'+' if z.imag > 0 else '-'}{num(abs(z.imag))}i"


def canonical_form(g: StokesGraph) -> tuple:
    """Relabelling-invariant code of the oriented ribbon graph.

    Two graphs are isomorphic as oriented ribbon graphs (preserving the
    branch/pole bipartition) exactly when their codes are equal.
    """
    best = None
    for b0 in range(g.n_branch):
        for i0 in range(3):
            code = _traverse_code(g, b0, i0)
            if best is None or code < best:
                best = code
    return best


def _traverse_code(g: StokesGraph, b0: int, i0: int) -> tuple:
    labels = {(BRANCH, b0): 0}
    offsets = {(BRANCH, b0): i0}
    queue = deque([(BRANCH, b0)])
    code = []
    while queue:
        kind, v = queue.popleft()
        rot = g._rot(kind)[v]
        off = offsets[(kind, v)]
        entry = [kind, len(rot)]
        for t in range(len(rot)):
            ray = rot[(off + t) % len(rot)]
            b, p = g.rays[ray]
            w = (POLE, p) if kind == BRANCH else (BRANCH, b)
            if w not in labels:
                labels[w] = len(labels)
                offsets[w] = g._ray_pos[(w[0], ray)]
                queue.append(w)
            entry.append(labels[w])
            entry.append((g._ray_pos[(w[0], ray)] - offsets[w]) % len(g._rot(w[0])[w[1]]))
        code.append(tuple(entry))
    return tuple(code)


def isomorphic(g: StokesGraph, h: StokesGraph) -> bool:
    return g.counts() == h.counts() and g.n_poles == h.n_poles and canonical_form(g) == canonical_form(h)
