from __future__ import annotations

import cmath

import numpy as np
import pytest

from stokesab import fixtures
from stokesab.cli import DEFAULT_RESIDUES, build_graph, parse_residue
from stokesab.errors import NonGeneric, SaddleError
from stokesab.foliation import TraceConfig
from stokesab.quad_diff import three_point_differential
from stokesab.stokes import double_cover


def default_phi():
    return three_point_differential(*(parse_residue(r) for r in DEFAULT_RESIDUES))


def sample_triples(n: int, seed: int, max_im: float = 0.25, cfg: TraceConfig | None = None):
    """Rejection-sample ``n`` generic, totally generic (0,3) differentials.

    Exponents are drawn with real part in (0.1, 0.95) and imaginary part
    at most ``max_im``; the residues are their squares.  Triples whose
    tracing reports a saddle or a near miss are rejected.
    """
    rng = np.random.default_rng(seed)
    cfg = cfg or TraceConfig()
    out, tries = [], 0
    while len(out) < n:
        tries += 1
        if tries > 50 * n:
            raise RuntimeError("rejection sampler gave up")
        lam = rng.uniform(0.1, 0.95, 3) + 1j * rng.uniform(-max_im, max_im, 3)
        residues = [complex(x) ** 2 for x in lam]
        try:
            phi = three_point_differential(*residues)
            g, sg = build_graph(phi, cfg)
        except (NonGeneric, SaddleError):
            continue
        out.append((phi, g, sg))
    return out


@pytest.fixture(scope="session")
def traced_0_3():
    phi = default_phi()
    g, sg = build_graph(phi, TraceConfig())
    return phi, g, sg


@pytest.fixture(scope="session")
def traced_0_4():
    phi = fixtures.phi_0_4()
    g, sg = build_graph(phi, TraceConfig())
    return phi, g, sg


@pytest.fixture(scope="session")
def frozen_0_4():
    phi = fixtures.phi_0_4()
    return phi, double_cover(fixtures.stokes_0_4(), phi.marked)


@pytest.fixture(scope="session")
def saddle_angle():
    # root of Im of the zero-to-zero period for residues (0.3, 0.3, 2 e^{i psi}),
    # found by bisection on a straight-segment quadrature, not by tracing
    return 1.369438406004566


def saddle_phi(psi: float):
    return three_point_differential(0.3, 0.3, 2 * cmath.exp(1j * psi))
