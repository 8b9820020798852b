"""Acceptance checks, one test per criterion.

Each test prints a single ``criterion N: PASS`` or ``FAIL`` line with the
measured figure, then asserts.  Run with ``pytest tests/test_acceptance.py -v``.
"""

from __future__ import annotations

import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import sample_triples
from stokesab.abelian_system import (
    gauge_transform,
    holonomy_vector,
    random_gauge,
    random_system,
    sample_system,
    transport,
)
from stokesab.abelianise import abelianise, delta_consistency, roundtrip_ab, roundtrip_nonab
from stokesab.cli import DEFAULT_RESIDUES, build_graph, main
from stokesab.foliation import TraceConfig, horizontal_drift, trace_all
from stokesab.voros import (
    _Crossings,
    _perm,
    branch_defects,
    crossing_frame,
    delta_table,
    naturality_check,
    nonabelianise,
    region_frame,
    unipotent,
    voros_matrix,
)

N_SEEDS = 100
SWEEP_TRIPLES = (
    DEFAULT_RESIDUES,
    ("0.4325,0.2020", "0.0182,0.1399", "0.0998,-0.1299"),
    ("0.3680,-0.0348", "0.1295,-0.0836", "0.0407,0.1033"),
    ("0.0657,-0.0651", "0.0975,-0.0773", "0.5719,-0.3373"),
    ("0.2357,-0.1062", "0.0866,0.0889", "0.7320,-0.0109"),
)


@pytest.fixture
def report(capsys):
    def emit(n: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


@pytest.fixture(scope="module")
def triples():
    t0 = time.perf_counter()
    out = sample_triples(20, seed=7)
    return out, (time.perf_counter() - t0) / len(out)


@pytest.fixture(scope="module")
def graphs(traced_0_3, traced_0_4):
    return [(traced_0_3[0].marked.levelt, traced_0_3[2]), (traced_0_4[0].marked.levelt, traced_0_4[2])]


def test_criterion_01_counts_three_punctures(triples, report):
    items, per_triple = triples
    ok = len(items) >= 20 and per_triple < 5
    for _, g, sg in items:
        ok &= g.counts() == {"branch": 2, "rays": 6, "regions": 3}
        ok &= all(len(r.corners) == 4 for r in g.regions)
        ok &= (sg.n_regions, sg.n_rays, sg.counts()["ramification"]) == (6, 12, 2)
    report(1, ok, f"{len(items)} triples, {per_triple:.2f} s per triple (sampling included)")


def test_criterion_02_counts_four_punctures(report):
    from stokesab import fixtures

    t0 = time.perf_counter()
    g, sg = build_graph(fixtures.phi_0_4(), TraceConfig())
    dt = time.perf_counter() - t0
    ok = g.counts() == {"branch": 4, "rays": 12, "regions": 6} and dt < 20
    ok &= all(len(r.corners) == 4 for r in g.regions)
    report(2, ok, f"counts {g.counts()} in {dt:.2f} s")


def test_criterion_03_horizontality(triples, traced_0_4, report):
    phis = [phi for phi, _, _ in triples[0]] + [traced_0_4[0]]
    cfg = TraceConfig()
    drift = move = 0.0
    for phi in phis:
        for a, b in zip(trace_all(phi, cfg), trace_all(phi, cfg.halved())):
            drift = max(drift, float(np.max(np.abs(horizontal_drift(phi, a)))))
            move = max(move, abs(a.terminal - b.terminal))
    report(3, drift <= 1e-6 and move < 1e-5, f"max |Im int| {drift:.2e}, max terminal shift {move:.2e}")


def test_criterion_04_odd_structure(graphs, report):
    worst_ram = worst_punct = 0.0
    for lam, sg in graphs:
        for seed in range(N_SEEDS):
            sys_ = random_system(sg, lam, seed)
            for b in range(sg.stokes.n_branch):
                worst_ram = max(worst_ram, abs(transport(sys_, sg.ramification_loop(b)) + 1))
            for p in range(sg.stokes.n_poles):
                prod = transport(sys_, sg.puncture_loop(p, "-")) * transport(sys_, sg.puncture_loop(p, "+"))
                worst_punct = max(worst_punct, abs(prod - 1))
    ok = worst_ram < 1e-10 and worst_punct < 1e-10
    report(4, ok, f"ramification {worst_ram:.2e}, puncture lifts {worst_punct:.2e}")


def test_criterion_05_branch_monodromy(graphs, report):
    worst, control = 0.0, np.inf
    for lam, sg in graphs:
        for seed in range(N_SEEDS):
            worst = max(worst, float(branch_defects(random_system(sg, lam, seed)).max()))
            control = min(control, float(branch_defects(sample_system(sg, lam, seed, skew=1)).max()))
    report(5, worst < 1e-9 and control > 0.1, f"max defect {worst:.2e}, negative control min {control:.3f}")


def test_criterion_06_sl2_contracts(graphs, report):
    worst = {"det": 0.0, "trace": 0.0, "product": 0.0}
    for lam, sg in graphs:
        for seed in range(N_SEEDS):
            for k, v in nonabelianise(random_system(sg, lam, seed)).checks().items():
                worst[k] = max(worst[k], v)
    ok = worst["det"] < 1e-10 and worst["trace"] < 1e-8 and worst["product"] < 1e-9
    report(6, ok, ", ".join(f"{k} {v:.2e}" for k, v in worst.items()))


def test_criterion_07_abelian_round_trip(graphs, report):
    worst = 0.0
    for (lam, sg), n in zip(graphs, (N_SEEDS, 20)):
        for seed in range(n):
            worst = max(worst, roundtrip_ab(random_system(sg, lam, seed)).values["holonomy"])
    report(7, worst < 1e-8, f"max relative holonomy deviation {worst:.2e}")


def test_criterion_08_sl2_round_trip(graphs, report):
    rng = np.random.default_rng(8)
    worst = 0.0
    for lam, sg in graphs:
        for seed in range(20):
            rep = nonabelianise(random_system(sg, lam, seed))
            X = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            X /= np.sqrt(np.linalg.det(X))
            for r in (rep, rep.conjugate(X)):
                worst = max(worst, roundtrip_nonab(r, sg, n_words=20, length=6, seed=seed).values["trace"])
    report(8, worst < 1e-8, f"max scaled trace deviation {worst:.2e} (plain and conjugated inputs)")


def test_criterion_09_voros_from_delta_table(graphs, report):
    ok = True
    for lam, sg in graphs:
        for seed in range(20):
            sys_ = random_system(sg, lam, seed)
            table = delta_table(sys_)
            cache = _Crossings(sys_)
            for a in range(len(sg.stokes.rays)):
                ok &= np.array_equal(unipotent(table[a]), voros_matrix(sys_, a).matrix)
                # the glued crossing matrix from the weights and the table entry alone
                s = sg.stokes.ray_sides[a]
                C = np.diag([sys_.t[2 * a], sys_.t[2 * a + 1]]) @ unipotent(table[a])
                G = (_perm(region_frame(sg, s.right), crossing_frame(sg, a, "J")) @ C
                     @ _perm(crossing_frame(sg, a, "I"), region_frame(sg, s.left)))
                ok &= np.array_equal(G, cache.forward[a])
    report(9, bool(ok), "Voros factors and glued crossings rebuilt bitwise on every ray, 20 seeds per graph")


def test_criterion_10_delta_consistency(graphs, report):
    worst = 0.0
    for lam, sg in graphs:
        for seed in range(N_SEEDS):
            ex = abelianise(nonabelianise(random_system(sg, lam, seed)), sg)
            worst = max(worst, delta_consistency(ex))
    report(10, worst < 1e-8, f"max relative detour mismatch {worst:.2e}")


def test_criterion_11_naturality(graphs, report):
    rng = np.random.default_rng(11)
    hol = nat = 0.0
    for lam, sg in graphs:
        for seed in range(N_SEEDS):
            sys_ = random_system(sg, lam, seed)
            c = random_gauge(sg, rng)
            hol = max(hol, holonomy_vector(sys_).max_relative_deviation(holonomy_vector(gauge_transform(sys_, c))))
            if seed < 20:
                r = naturality_check(sys_, c, seed=seed)
                nat = max(nat, r.trace_deviation, r.conjugation_deviation)
    report(11, hol < 1e-12 and nat < 1e-8, f"holonomy {hol:.2e}, nonabelianisation vs conjugation {nat:.2e}")


def test_criterion_12_cli_sweep(report, capsys):
    t0 = time.perf_counter()
    codes = []
    for triple in SWEEP_TRIPLES:
        for seed in range(N_SEEDS):
            codes.append(main(["roundtrip", "--residues", *triple, "--seed", str(seed)]))
    capsys.readouterr()
    dt = time.perf_counter() - t0
    smoke = subprocess.run([sys.executable, "-m", "stokesab", "roundtrip", "--seed", "1"],
                           capture_output=True, text=True)
    bad = sum(c != 0 for c in codes)
    ok = bad == 0 and dt < 600 and smoke.returncode == 0
    report(12, ok, f"{len(codes)} runs, {bad} nonzero exits, {dt:.1f} s; subprocess exit {smoke.returncode}")
