import cmath
import math

import numpy as np
import pytest

from conftest import saddle_phi
from stokesab.foliation import (
    TraceConfig,
    critical_directions,
    dopri_step,
    horizontal_drift,
    is_saddle_free,
    is_totally_generic,
    saddle_integral,
    trace_all,
)
from stokesab.quad_diff import zeros


def test_dopri_step_is_fifth_order():
    # z' = i z has solution exp(i h); the local error must scale like h^6
    errs = []
    for h in (0.1, 0.05):
        z, _ = dopri_step(lambda z: 1j * z, 1 + 0j, h)
        errs.append(abs(z - cmath.exp(1j * h)))
    assert 40 < errs[0] / errs[1] < 90


def test_critical_directions_are_horizontal(traced_0_3):
    phi = traced_0_3[0]
    for b in zeros(phi):
        angles = critical_directions(phi, b)
        gaps = sorted((angles[i] - angles[0]) % (2 * math.pi) for i in (1, 2))
        assert np.allclose(gaps, [2 * math.pi / 3, 4 * math.pi / 3])
        for th in angles:
            z = b + 1e-6 * cmath.exp(1j * th)
            # int_b^z sqrt(phi) ~ (2/3) sqrt(c) (z-b)^{3/2} is real up to O(|z-b|)
            w = cmath.sqrt(phi(z)) * (z - b)
            assert abs(w.imag) < 1e-4 * abs(w)


def test_every_leaf_stays_horizontal(traced_0_3, traced_0_4):
    for phi in (traced_0_3[0], traced_0_4[0]):
        for t in trace_all(phi):
            assert t.endpoint.kind == "pole"
            assert np.max(np.abs(horizontal_drift(phi, t))) <= 1e-6


def test_terminals_stable_under_halved_tolerance(traced_0_3):
    phi = traced_0_3[0]
    cfg = TraceConfig()
    for a, b in zip(trace_all(phi, cfg), trace_all(phi, cfg.halved())):
        assert a.endpoint == b.endpoint
        assert abs(a.terminal - b.terminal) < 1e-5


def test_default_triple_is_totally_generic(traced_0_3):
    assert is_totally_generic(traced_0_3[0])


def test_saddle_oracle_flips_classification(saddle_angle):
    phi = saddle_phi(saddle_angle)
    assert abs(saddle_integral(phi).imag) < 1e-12
    assert is_saddle_free(phi).status == "has-saddle"
    for d in (1e-3, -1e-3):
        off = saddle_phi(saddle_angle + d)
        assert abs(saddle_integral(off).imag) > 1e-4
        assert is_saddle_free(off).saddle_free


def test_zero_arclength_budget_is_inconclusive(traced_0_3):
    assert is_saddle_free(traced_0_3[0], TraceConfig(max_arclength_w=0)).status == "inconclusive"


def test_bad_config_is_rejected():
    with pytest.raises(ValueError):
        TraceConfig(rtol=0)
