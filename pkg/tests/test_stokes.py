import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stokesab import fixtures
from stokesab.errors import CountMismatch, InconsistentCover, InvalidPath, NonQuadrilateralFace
from stokesab.stokes import (
    BRANCH,
    POLE,
    CombinatorialPath,
    StokesGraph,
    canonical_form,
    concat,
    detour_path,
    double_cover,
    generators,
    isomorphic,
    lift,
    loop_basis,
    base_cotree_loops,
    project,
    reduce,
)

G3 = fixtures.stokes_0_3()
SG3 = double_cover(G3)


def sigma_path(path):
    return CombinatorialPath("cover", path.start ^ 1, tuple((e ^ 1, d) for e, d in path.steps))


def random_walk(g, start, choices):
    steps, r = [], start
    adj = g.adjacency()
    for c in choices:
        nbr, ray, d = adj[r][c % len(adj[r])]
        steps.append((ray, d))
        r = nbr
    return CombinatorialPath("base", start, tuple(steps))


def relabel(g, ray_perm, branch_perm, pole_perm):
    """The same ribbon graph with rays, branch vertices and poles renamed."""
    inv_b = np.argsort(branch_perm)
    inv_p = np.argsort(pole_perm)
    branch_rot = [[ray_perm[r] for r in g.branch_rot[inv_b[k]]] for k in range(g.n_branch)]
    pole_rot = [[ray_perm[r] for r in g.pole_rot[inv_p[k]]] for k in range(g.n_poles)]
    rays = [None] * len(g.rays)
    for a, (b, p) in enumerate(g.rays):
        rays[ray_perm[a]] = (branch_perm[b], pole_perm[p])
    return StokesGraph(branch_rot, pole_rot, rays)


# counts --------------------------------------------------------------------

def test_traced_counts(traced_0_3, traced_0_4):
    for (_, g, sg), d in ((traced_0_3, 3), (traced_0_4, 4)):
        assert g.counts() == {"branch": 2 * d - 4, "rays": 6 * d - 12, "regions": 3 * d - 6}
        assert sg.n_regions == 2 * len(g.regions) and sg.n_rays == 2 * len(g.rays)
        assert all(len(reg.corners) == 4 for reg in g.regions)


def test_wrong_genus_is_a_count_mismatch():
    with pytest.raises(CountMismatch):
        StokesGraph(G3.branch_rot, G3.pole_rot, G3.rays, genus=1)


def test_removing_a_leaf_breaks_the_faces():
    branch_rot = [list(r) for r in G3.branch_rot]
    pole_rot = [list(r) for r in G3.pole_rot]
    branch_rot[0].remove(0)
    pole_rot[0].remove(0)
    rays = list(G3.rays)
    with pytest.raises(NonQuadrilateralFace):
        StokesGraph(branch_rot, pole_rot, rays)


def test_region_sides_are_consistent():
    for a, s in enumerate(G3.ray_sides):
        assert a in G3.regions[s.left].rays and a in G3.regions[s.right].rays
        assert G3.step(s.left, a, 1) == s.right
    with pytest.raises(InvalidPath):
        G3.step(G3.ray_sides[0].right, 0, 1)


# spectral cover --------------------------------------------------------------

def test_sigma_is_a_fixed_point_free_involution():
    for e, (i, j) in enumerate(SG3.ray_ends):
        assert SG3.sigma(SG3.sigma(e)) == e != SG3.sigma(e)
        assert SG3.ray_ends[SG3.sigma(e)] == (i ^ 1, j ^ 1)
    assert SG3.counts() == {"regions": 6, "rays": 12, "ramification": 2, "polar": 6}


def test_sink_and_source_swap_under_sigma():
    for i in range(SG3.n_regions):
        assert SG3.sink(i) == SG3.source(i ^ 1)


def test_tampered_cover_is_rejected():
    sg = double_cover(G3)
    ends = list(sg.ray_ends)
    ends[0], ends[1] = ends[1], ends[0]
    sg.ray_ends = tuple(ends)
    with pytest.raises(InconsistentCover):
        sg._check()


def test_ramification_loop_changes_sheet_halfway():
    for b in range(G3.n_branch):
        loop = SG3.ramification_loop(b)
        regs = loop.regions(SG3)
        assert len(loop) == 6 and regs[-1] == regs[0]
        assert regs[3] == regs[0] ^ 1


def test_puncture_loops_close_on_their_lift():
    for p in range(G3.n_poles):
        for sign in "-+":
            loop = SG3.puncture_loop(p, sign)
            assert loop.is_closed(SG3)
            assert len(loop) == len(G3.pole_rot[p])
            assert all(SG3.polar_vertex(e) == (p, sign) for e, _ in loop.steps)


def test_detour_runs_from_source_to_sink_lift(traced_0_4):
    sg = traced_0_4[2]
    g = sg.stokes
    for a, s in enumerate(g.ray_sides):
        det = detour_path(sg, a)
        assert len(det) == 3
        assert det.start == 2 * s.left + 1 - s.slot_left
        assert det.end(sg) == 2 * s.left + s.slot_left
        assert project(sg, det) == g.corner_loop(BRANCH, g.rays[a][0], (g._ray_pos[(BRANCH, a)] - 1) % 3, True)


def test_detour_and_its_image_make_the_double_loop(traced_0_4):
    sg = traced_0_4[2]
    g = sg.stokes
    for a in range(len(g.rays)):
        det = detour_path(sg, a)
        both = det.then(sigma_path(det), sg)
        base = project(sg, det)
        twice = CombinatorialPath("base", base.start, base.steps * 2)
        assert both == lift(sg, twice, det.start)
        assert both.is_closed(sg)


# paths ---------------------------------------------------------------------

@given(st.lists(st.integers(0, 11), max_size=30), st.integers(0, 2))
@settings(max_examples=100, deadline=None)
def test_reduce_is_idempotent_and_lift_commutes(choices, start):
    p = random_walk(G3, start, choices)
    r = reduce(p)
    assert reduce(r) == r
    assert r.end(G3) == p.end(G3)
    for sheet in (2 * start, 2 * start + 1):
        assert reduce(lift(SG3, p, sheet)) == lift(SG3, r, sheet)


@given(st.lists(st.integers(0, 11), min_size=1, max_size=20), st.integers(0, 2))
@settings(max_examples=50, deadline=None)
def test_path_times_inverse_reduces_to_nothing(choices, start):
    p = random_walk(G3, start, choices)
    assert reduce(p.then(p.inverse(G3), G3)).steps == ()


def test_loop_counts(traced_0_4):
    assert len(base_cotree_loops(G3)) == 4
    basis = loop_basis(SG3)
    assert sum(lp.kind == "cotree" for lp in basis) == 7
    assert len(basis) == 7 + 6 + 2
    assert len(loop_basis(traced_0_4[2])) == 13 + 8 + 4
    for lp in basis:
        assert lp.path.start == 0 and lp.path.is_closed(SG3)


@pytest.mark.parametrize("which", ["0_3", "0_4"])
def test_generators_satisfy_the_product_relation(which, traced_0_4):
    g = G3 if which == "0_3" else traced_0_4[1]
    gens = generators(g)
    assert len(gens.faces) == g.n_poles + g.n_branch
    assert {v for k, v in gens.faces if k == POLE} == set(range(g.n_poles))
    clockwise = [lp.inverse(g) for lp in gens.anticlockwise]
    assert reduce(concat(clockwise, g)).steps == ()
    assert reduce(concat(gens.anticlockwise[::-1], g)).steps == ()


def test_traced_graph_matches_hand_written_fixture(traced_0_3):
    assert isomorphic(traced_0_3[1], G3)


@given(st.permutations(range(6)), st.permutations(range(2)), st.permutations(range(3)))
@settings(max_examples=40, deadline=None)
def test_canonical_form_ignores_labels(rays, branches, poles):
    h = relabel(G3, list(rays), list(branches), list(poles))
    assert canonical_form(h) == canonical_form(G3)

