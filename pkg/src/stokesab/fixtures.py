"""Bundled example inputs: a (0,4) differential and two Stokes graphs."""

from __future__ import annotations

from importlib import resources

from .graph_io import read_json, stokes_from_json
from .quad_diff import QuadraticDifferential


def path(name: str):
    return resources.files("stokesab") / "data" / name


def phi_0_4() -> QuadraticDifferential:
    """Saddle-free differential with punctures 0, 1, 1.5i and infinity."""
    return QuadraticDifferential.from_json(read_json(path("phi_0_4.json")))


def stokes_0_3():
    """Hand-written graph of a totally generic three-punctured sphere."""
    return stokes_from_json(read_json(path("stokes_0_3.json")))


def stokes_0_4():
    """Graph traced from ``phi_0_4`` and frozen."""
    return stokes_from_json(read_json(path("stokes_0_4.json")))
