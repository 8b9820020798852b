"""SVG drawings of Stokes graphs: poles as circles, branch points as three-pronged crosses."""

from __future__ import annotations

import cmath
import math

import numpy as np

from .stokes import StokesGraph

SIZE = 600
MARGIN = 30


def _layout(g: StokesGraph):
    """Positions for graphs without geometry: poles on a circle, branch points at neighbour means."""
    n = g.n_poles
    poles = [cmath.exp(2j * math.pi * k / n) for k in range(n)]
    branches = []
    for b, rot in enumerate(g.branch_rot):
        z = np.mean([poles[g.rays[a][1]] for a in rot])
        branches.append(z * 0.6 + 0.15 * cmath.exp(2j * math.pi * b / max(1, g.n_branch)))
    return poles, branches


def render(g: StokesGraph, title: str | None = None) -> str:
    if g.branch_positions is not None and all(z is not None for z in g.branch_positions):
        branches = [complex(z) for z in g.branch_positions]
        poles = list(g.pole_positions) if g.pole_positions is not None else [None] * g.n_poles
    else:
        poles, branches = _layout(g)
    finite = [z for z in poles if z is not None] + branches
    centre = complex(np.mean(finite))
    radius = 1.4 * max(abs(z - centre) for z in finite) or 1.0

    def clamp(z):
        w = z - centre
        if abs(w) > radius:
            w = w / abs(w) * radius
        return w + centre

    def xy(z):
        z = clamp(z)
        s = (SIZE - 2 * MARGIN) / (2 * radius)
        return (SIZE / 2 + s * (z - centre).real, SIZE / 2 - s * (z - centre).imag)

    curves = []
    for a, (b, p) in enumerate(g.rays):
        if g.leaves is not None and g.leaves[a] is not None:
            pts = [complex(z) for z in g.leaves[a]]
        else:
            end = poles[p] if poles[p] is not None else centre + (branches[b] - centre) * 1e6
            pts = list(np.linspace(branches[b], end, 40))
        for k, z in enumerate(pts):
            if abs(z - centre) > radius:
                pts = pts[:k] + [clamp(z)]
                break
        curves.append(pts)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
           f'viewBox="0 0 {SIZE} {SIZE}">',
           '<rect width="100%" height="100%" fill="white"/>']
    if title:
        out.append(f'<text x="{MARGIN}" y="20" font-family="sans-serif" font-size="14">{title}</text>')
    if any(p is None for p in poles):
        cx, cy = xy(centre)
        r = (SIZE - 2 * MARGIN) / 2
        out.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{r:.2f}" fill="none" stroke="#999" '
                   'stroke-dasharray="4 4"/>')
    for a, pts in enumerate(curves):
        coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in map(xy, pts))
        out.append(f'<polyline points="{coords}" fill="none" stroke="#1f4e9a" stroke-width="1.5">'
                   f'<title>ray {a}</title></polyline>')
    for I, reg in enumerate(g.regions):
        mids = [curves[a][len(curves[a]) // 2] for a in reg.rays]
        x, y = xy(complex(np.mean([clamp(z) for z in mids])))
        out.append(f'<text x="{x:.2f}" y="{y:.2f}" font-family="sans-serif" font-size="12" '
                   f'fill="#555" text-anchor="middle">U{I}</text>')
    for p, z in enumerate(poles):
        label = g.pole_labels[p]
        if z is None:
            x, y = xy(centre + radius * 1j)
            out.append(f'<text x="{x:.2f}" y="{y - 6:.2f}" font-family="sans-serif" font-size="13" '
                       f'text-anchor="middle">{label}</text>')
            continue
        x, y = xy(z)
        out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="6" fill="white" stroke="black" stroke-width="1.5">'
                   f'<title>pole {label}</title></circle>')
        out.append(f'<text x="{x + 8:.2f}" y="{y - 8:.2f}" font-family="sans-serif" font-size="12">{label}</text>')
    for b, z in enumerate(branches):
        x, y = xy(z)
        for k in range(3):
            ang = math.pi / 2 + 2 * math.pi * k / 3
            out.append(f'<line x1="{x:.2f}" y1="{y:.2f}" x2="{x + 7 * math.cos(ang):.2f}" '
                       f'y2="{y - 7 * math.sin(ang):.2f}" stroke="#b00" stroke-width="2.5"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write(g: StokesGraph, path, title: str | None = None) -> None:
    with open(path, "w") as fh:
        fh.write(render(g, title))
