"""Versioned JSON files for Stokes graphs and spectral graphs.

Stokes graph (``stokesab.stokes-graph/1``)::

    {
      "schema": "stokesab.stokes-graph/1",
      "genus": 0,
      "poles": [{"label": "0", "rays": [4, 1], "position": [0.0, 0.0] | null}, ...],
      "branch_vertices": [{"rays": [0, 1, 2], "position": [x, y] | null}, ...],
      "rays": [{"branch": 0, "pole": 1, "leaf": [[x, y], ...]}, ...],
      "regions": [{"corners": [["b", 0, 0], ["p", 0, 1], ...], "rays": [...]}, ...]
    }

Rotation lists are anticlockwise.  ``position`` is ``null`` for the pole at
infinity or for hand-written fixtures; ``leaf`` is optional.  ``regions``
is derived data: it is written for readers and, when present on input,
must agree with the face walk.

Spectral graph (``stokesab.spectral-graph/1``) embeds the Stokes graph under
``"stokes"`` together with optional ``"levelt"`` and ``"residues"`` lists of
``[re, im]`` pairs, and writes the derived lifts under ``"regions"`` and
``"rays"`` (checked on input when present).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import SchemaViolation, StokesabError
from .stokes import SpectralGraph, StokesGraph

STOKES_SCHEMA = "stokesab.stokes-graph/1"
SPECTRAL_SCHEMA = "stokesab.spectral-graph/1"


def require(obj, key, types, loc):
    if not isinstance(obj, dict):
        raise SchemaViolation("expected an object", loc)
    if key not in obj:
        raise SchemaViolation(f"missing key {key!r}", loc)
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, types):
        raise SchemaViolation(f"{key!r} has the wrong type", f"{loc}.{key}")
    return val


def _int_list(val, loc):
    if not isinstance(val, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in val):
        raise SchemaViolation("expected a list of integers", loc)
    return val


def _point(val, loc):
    if val is None:
        return None
    if not (isinstance(val, list) and len(val) == 2 and all(isinstance(x, (int, float)) for x in val)):
        raise SchemaViolation("expected [x, y] or null", loc)
    return complex(val[0], val[1])


def _xy(z):
    return None if z is None else [float(z.real), float(z.imag)]


def stokes_to_json(g: StokesGraph) -> dict:
    poles = []
    for p, rot in enumerate(g.pole_rot):
        pos = g.pole_positions[p] if g.pole_positions is not None else None
        poles.append({"label": g.pole_labels[p], "rays": list(rot), "position": _xy(pos)})
    branches = []
    for b, rot in enumerate(g.branch_rot):
        pos = g.branch_positions[b] if g.branch_positions is not None else None
        branches.append({"rays": list(rot), "position": _xy(pos)})
    rays = []
    for a, (b, p) in enumerate(g.rays):
        entry = {"branch": b, "pole": p}
        if g.leaves is not None:
            entry["leaf"] = [[float(z.real), float(z.imag)] for z in g.leaves[a]]
        rays.append(entry)
    regions = [{"corners": [list(c) for c in r.corners], "rays": list(r.rays)} for r in g.regions]
    return {"schema": STOKES_SCHEMA, "genus": g.genus, "poles": poles,
            "branch_vertices": branches, "rays": rays, "regions": regions}


def stokes_from_json(data, loc: str = "$") -> StokesGraph:
    schema = require(data, "schema", str, loc)
    if schema != STOKES_SCHEMA:
        raise SchemaViolation(f"unknown schema {schema!r}", f"{loc}.schema")
    genus = data.get("genus", 0)
    if not isinstance(genus, int) or genus < 0:
        raise SchemaViolation("genus must be a non-negative integer", f"{loc}.genus")
    poles = require(data, "poles", list, loc)
    branches = require(data, "branch_vertices", list, loc)
    rays = require(data, "rays", list, loc)
    pole_rot, labels, pole_pos = [], [], []
    for k, entry in enumerate(poles):
        ploc = f"{loc}.poles[{k}]"
        pole_rot.append(_int_list(require(entry, "rays", list, ploc), f"{ploc}.rays"))
        labels.append(str(entry.get("label", k)))
        pole_pos.append(_point(entry.get("position"), f"{ploc}.position"))
    branch_rot, branch_pos = [], []
    for k, entry in enumerate(branches):
        bloc = f"{loc}.branch_vertices[{k}]"
        rot = _int_list(require(entry, "rays", list, bloc), f"{bloc}.rays")
        if len(rot) != 3:
            raise SchemaViolation(f"branch vertex has degree {len(rot)}, expected 3", f"{bloc}.rays")
        branch_rot.append(rot)
        branch_pos.append(_point(entry.get("position"), f"{bloc}.position"))
    ray_list, leaves = [], []
    for k, entry in enumerate(rays):
        rloc = f"{loc}.rays[{k}]"
        b = require(entry, "branch", int, rloc)
        p = require(entry, "pole", int, rloc)
        if not 0 <= b < len(branch_rot):
            raise SchemaViolation("branch index out of range", f"{rloc}.branch")
        if not 0 <= p < len(pole_rot):
            raise SchemaViolation("pole index out of range", f"{rloc}.pole")
        ray_list.append((b, p))
        leaf = entry.get("leaf")
        if leaf is not None:
            if not isinstance(leaf, list):
                raise SchemaViolation("leaf must be a list of points", f"{rloc}.leaf")
            leaves.append(np.array([_point(z, f"{rloc}.leaf[{i}]") for i, z in enumerate(leaf)], dtype=complex))
        else:
            leaves.append(None)
    for k, rot in enumerate(branch_rot):
        for r in rot:
            if not 0 <= r < len(ray_list) or ray_list[r][0] != k:
                raise SchemaViolation(f"ray {r} does not start at this branch vertex", f"{loc}.branch_vertices[{k}].rays")
    for k, rot in enumerate(pole_rot):
        for r in rot:
            if not 0 <= r < len(ray_list) or ray_list[r][1] != k:
                raise SchemaViolation(f"ray {r} does not end at this pole", f"{loc}.poles[{k}].rays")
    has_pos = any(z is not None for z in branch_pos)
    try:
        g = StokesGraph(branch_rot, pole_rot, ray_list, pole_labels=labels, genus=genus,
                        branch_positions=branch_pos if has_pos else None,
                        pole_positions=pole_pos if has_pos or any(z is not None for z in pole_pos) else None,
                        leaves=leaves if all(leaf is not None for leaf in leaves) and leaves else None)
    except StokesabError as exc:
        raise SchemaViolation(str(exc), loc) from exc
    if "regions" in data:
        stored = data["regions"]
        derived = stokes_to_json(g)["regions"]
        if stored != derived:
            raise SchemaViolation("stored regions disagree with the face walk", f"{loc}.regions")
    return g


def spectral_to_json(sg: SpectralGraph) -> dict:
    pairs = lambda xs: None if xs is None else [[x.real, x.imag] for x in xs]  # noqa: E731
    regions = [{"id": i, "base": i // 2, "sink": sg.sink(i), "source": sg.source(i)}
               for i in range(sg.n_regions)]
    rays = []
    for e, (i, j) in enumerate(sg.ray_ends):
        p, sign = sg.polar_vertex(e)
        rays.append({"id": e, "base": e // 2, "parity": sign, "from": i, "to": j, "polar": [p, sign]})
    return {"schema": SPECTRAL_SCHEMA, "stokes": stokes_to_json(sg.stokes),
            "levelt": pairs(sg.levelt), "residues": pairs(sg.residues),
            "regions": regions, "rays": rays}


def spectral_from_json(data, loc: str = "$") -> SpectralGraph:
    schema = require(data, "schema", str, loc)
    if schema != SPECTRAL_SCHEMA:
        raise SchemaViolation(f"unknown schema {schema!r}", f"{loc}.schema")
    g = stokes_from_json(require(data, "stokes", dict, loc), f"{loc}.stokes")

    def pairs(key):
        val = data.get(key)
        if val is None:
            return None
        if not isinstance(val, list) or len(val) != g.n_poles:
            raise SchemaViolation("expected one [re, im] per puncture", f"{loc}.{key}")
        out = []
        for k, x in enumerate(val):
            z = _point(x, f"{loc}.{key}[{k}]")
            if z is None:
                raise SchemaViolation("expected [re, im]", f"{loc}.{key}[{k}]")
            out.append(z)
        return out

    try:
        sg = SpectralGraph(g, pairs("levelt"), pairs("residues"))
    except StokesabError as exc:
        raise SchemaViolation(str(exc), loc) from exc
    derived = spectral_to_json(sg)
    for key in ("regions", "rays"):
        if key in data and data[key] != derived[key]:
            raise SchemaViolation(f"stored {key} disagree with the lifted graph", f"{loc}.{key}")
    return sg


def read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"invalid JSON: {exc}", "$") from exc
    except OSError as exc:
        raise SchemaViolation(f"cannot read {path}: {exc}", "$") from exc


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=False) + "\n")


def load_stokes(path) -> StokesGraph:
    return stokes_from_json(read_json(path))


def load_spectral(path) -> SpectralGraph:
    return spectral_from_json(read_json(path))
