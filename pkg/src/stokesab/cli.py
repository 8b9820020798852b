"""Command line front end.

Exit codes: 0 success, 1 bad input or failed validation, 2 non-generic
residues, 3 saddle connection or inconclusive tracing, 4 numerical
failure, 5 inconsistent constraints, 6 nontrivial branch monodromy,
7 transversality failure, 8 degenerate monodromy.
"""

from __future__ import annotations

import argparse
import re
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import svg
from .abelian_system import (
    OddAbelianSystem,
    holonomy_vector,
    random_system,
    sample_system,
    validate,
)
from .abelianise import abelianise, check_transverse, continue_lines, delta_consistency, extract, frame
from .errors import (
    BranchMonodromyNontrivial,
    HasSaddle,
    Inconclusive,
    SchemaViolation,
    StokesabError,
    ValidationFailure,
)
from .foliation import TraceConfig, is_saddle_free
from .graph_io import load_spectral, read_json, spectral_from_json, spectral_to_json, stokes_from_json, stokes_to_json, write_json
from .quad_diff import QuadraticDifferential, three_point_differential
from .stokes import assemble, double_cover
from .voros import Sl2Representation, branch_defects, nonabelianise, random_words, trace_deviation

DEFAULT_SEED = 20240101
DEFAULT_RESIDUES = ("0.48,0.14", "0.6175,-0.24", "0.32,0.24")


@dataclass
class RunConfig:
    command: str
    seed: int = DEFAULT_SEED
    tol: float = 1e-8
    plot: bool = False
    residues: list | None = None
    phi: str | None = None
    out: str = "."
    trace: dict = field(default_factory=dict)
    inputs: list = field(default_factory=list)
    broken_ramification: bool = False


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        # let "-0.3,0.1" through as a residue value rather than an unknown option
        self._negative_number_matcher = re.compile(r"^-\d*\.?\d+(e[-+]?\d+)?(,[-+]?\d*\.?\d+(e[-+]?\d+)?)?$")

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def parse_residue(text: str) -> complex:
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise SchemaViolation(f"residue {text!r} is not of the form re,im", "--residues")


def _common(p):
    p.add_argument("--seed", type=int, default=None, help=f"random seed (default {DEFAULT_SEED})")
    p.add_argument("--tol", type=float, default=None, help="acceptance tolerance (default 1e-8)")
    p.add_argument("--plot", action="store_true", default=None, help="also write an SVG of the Stokes graph")
    p.add_argument("--config", default=None, help="JSON file with RunConfig fields")
    p.add_argument("--out", default=None, help="output directory or file")
    p.add_argument("--trace", action="append", default=None, metavar="KEY=VALUE",
                   help="override a tracing setting, e.g. rtol=1e-12")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stokesab", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("stokes", help="trace the Stokes graph of a differential")
    _common(p)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--residues", nargs=3, metavar="RE,IM", help="residues at 0, 1, infinity")
    src.add_argument("--phi", help="differential JSON file")

    p = sub.add_parser("random-system", help="sample an odd abelian system on a spectral graph")
    _common(p)
    p.add_argument("inputs", nargs=1, metavar="SPECTRAL_JSON")
    p.add_argument("--broken-ramification", action="store_true", default=None,
                   help="negative control: symmetric instead of skew odd constants")

    p = sub.add_parser("nonab", help="nonabelianise an abelian system")
    _common(p)
    p.add_argument("inputs", nargs=1, metavar="SYSTEM_JSON")

    p = sub.add_parser("ab", help="abelianise an SL(2) representation")
    _common(p)
    p.add_argument("inputs", nargs=2, metavar=("REP_JSON", "SPECTRAL_JSON"))

    p = sub.add_parser("roundtrip", help="run both round trips from residues")
    _common(p)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--residues", nargs=3, metavar="RE,IM")
    src.add_argument("--phi")
    p.add_argument("--broken-ramification", action="store_true", default=None,
                   help="negative control: break the odd structure before nonabelianising")

    p = sub.add_parser("validate", help="check any file this tool writes")
    _common(p)
    p.add_argument("inputs", nargs=1, metavar="JSON")
    return parser


def resolve_config(args) -> RunConfig:
    values = {}
    if args.config:
        data = read_json(args.config)
        if not isinstance(data, dict):
            raise SchemaViolation("config must be an object", "$")
        known = {f.name for f in fields(RunConfig)} - {"command"}
        for key, val in data.items():
            if key not in known:
                raise SchemaViolation(f"unknown config key {key!r}", f"$.{key}")
            values[key] = val
    for key in ("seed", "tol", "plot", "out", "residues", "phi", "broken_ramification", "inputs"):
        val = getattr(args, key, None)
        if val is not None:
            values[key] = val
    if args.trace:
        trace = dict(values.get("trace", {}))
        for item in args.trace:
            key, _, val = item.partition("=")
            trace[key] = val
        values["trace"] = trace
    return RunConfig(command=args.command, **values)


def trace_config(cfg: RunConfig) -> TraceConfig:
    known = {f.name: f.type for f in fields(TraceConfig)}
    kwargs = {}
    for key, val in cfg.trace.items():
        if key not in known:
            raise SchemaViolation(f"unknown tracing setting {key!r}", "--trace")
        kwargs[key] = int(val) if key == "max_steps" else float(val)
    try:
        return TraceConfig(**kwargs)
    except ValueError as exc:
        raise SchemaViolation(str(exc), "--trace") from exc


def load_phi(cfg: RunConfig) -> QuadraticDifferential:
    if cfg.phi:
        return QuadraticDifferential.load(cfg.phi)
    residues = cfg.residues or list(DEFAULT_RESIDUES)
    return three_point_differential(*(parse_residue(r) for r in residues))


def build_graph(phi: QuadraticDifferential, tcfg: TraceConfig, margin: float = 1e-2):
    """Trace, classify and assemble; leaves passing within ``margin * sep`` of a zero count as inconclusive."""
    result = is_saddle_free(phi, tcfg)
    if result.status == "has-saddle":
        i, j = result.saddle_pair
        raise HasSaddle(f"critical leaf from zero {i} runs into zero {j}")
    if not result.saddle_free:
        raise Inconclusive("some critical leaves did not reach a pole within the arclength budget")
    closest = min(t.closest_zero for t in result.trajectories)
    if closest <= margin:
        raise Inconclusive(f"a critical leaf passes within {closest:.2e} sep of another zero; too close to a saddle")
    g = assemble(phi, result.trajectories)
    return g, double_cover(g, phi.marked)


def _out_path(cfg: RunConfig, default_name: str) -> Path:
    out = Path(cfg.out)
    if out.suffix == ".json" or out.suffix == ".svg":
        return out
    out.mkdir(parents=True, exist_ok=True)
    return out / default_name


def _fmt(z: complex) -> str:
    return f"{z.real:+.12e}{z.imag:+.12e}i"


# commands ------------------------------------------------------------------

def cmd_stokes(cfg: RunConfig) -> int:
    phi = load_phi(cfg)
    g, sg = build_graph(phi, trace_config(cfg))
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "stokes.json", stokes_to_json(g))
    write_json(out / "spectral.json", spectral_to_json(sg))
    if cfg.plot:
        svg.write(g, out / "stokes.svg")
    c = g.counts()
    print(f"punctures {g.n_poles}  branch vertices {c['branch']}  rays {c['rays']}  regions {c['regions']}")
    print(f"spectral regions {sg.n_regions}  spectral rays {sg.n_rays}")
    return 0


def cmd_random_system(cfg: RunConfig) -> int:
    sg = load_spectral(cfg.inputs[0])
    if sg.levelt is None:
        raise SchemaViolation("spectral graph carries no Levelt exponents", "$.levelt")
    if cfg.broken_ramification:
        sys_ = sample_system(sg, sg.levelt, cfg.seed, skew=1)
    else:
        sys_ = random_system(sg, sg.levelt, cfg.seed)
    path = _out_path(cfg, "system.json")
    write_json(path, sys_.to_json(graph_ref=str(cfg.inputs[0])))
    for family, (res, loc) in validate(sys_).worst.items():
        print(f"{family:14s} worst residual {res:.3e} at {loc}")
    for name, val in holonomy_vector(sys_).entries:
        print(f"{name:16s} {_fmt(val)}")
    return 0


def _check_system(sys_: OddAbelianSystem, tol: float):
    """Branch monodromy first (exit 6), then the remaining odd-structure families (exit 1)."""
    defects = branch_defects(sys_, relative=True)
    if defects.size and defects.max() >= 1e-9:
        b = int(defects.argmax())
        raise BranchMonodromyNontrivial(
            f"monodromy around branch vertex {b} differs from the identity by {defects[b]:.3e}")
    report = validate(sys_)
    bad = report.violations(max(tol, 1e-10))
    if bad:
        raise ValidationFailure(f"abelian system violates {bad}")
    return report


def cmd_nonab(cfg: RunConfig) -> int:
    sys_ = OddAbelianSystem.from_json(read_json(cfg.inputs[0]))
    _check_system(sys_, 1e-10)
    rep = nonabelianise(sys_)
    write_json(_out_path(cfg, "rep.json"), rep.to_json())
    print("puncture  det-1        trace-2cos(2 pi lambda)")
    for p, A in zip(rep.punctures, rep.matrices):
        target = 2 * np.cos(2 * np.pi * rep.levelt[p])
        print(f"{rep.labels[p]:8s}  {abs(np.linalg.det(A) - 1):.3e}    {abs(np.trace(A) - target):.3e}")
    print(f"product relation deviation {rep.checks()['product']:.3e}")
    return 0


def cmd_ab(cfg: RunConfig) -> int:
    rep = Sl2Representation.from_json(read_json(cfg.inputs[0]))
    sg = load_spectral(cfg.inputs[1])
    fr = frame(rep)
    rl = continue_lines(fr, sg)
    tr = check_transverse(rl)
    print(f"transversality: min line distance {min(tr.distances.values()):.3e} (tol {tr.tol:g})")
    ex = extract(fr, rl, sg)
    for family, (res, loc) in validate(ex.system).worst.items():
        print(f"{family:14s} worst residual {res:.3e} at {loc}")
    print(f"detour consistency {delta_consistency(ex):.3e}")
    write_json(_out_path(cfg, "system.json"), ex.system.to_json(graph_ref=str(cfg.inputs[1])))
    return 0


def roundtrip_metrics(phi: QuadraticDifferential, seed: int, tcfg: TraceConfig | None = None,
                      broken: bool = False, sg=None) -> dict:
    if sg is None:
        _, sg = build_graph(phi, tcfg or TraceConfig())
    if broken:
        sys_ = sample_system(sg, phi.marked.levelt, seed, skew=1)
    else:
        sys_ = random_system(sg, phi.marked.levelt, seed)
    _check_system(sys_, 1e-10)
    rep = nonabelianise(sys_)
    ex = abelianise(rep, sg)
    hv_dev = holonomy_vector(sys_).max_relative_deviation(holonomy_vector(ex.system))
    rep2 = nonabelianise(ex.system)
    words = random_words(len(rep.punctures), 20, 6, np.random.default_rng(seed))
    checks = rep.checks()
    return {
        "holonomy": hv_dev,
        "trace": trace_deviation(rep, rep2, words),
        "delta": delta_consistency(ex),
        "det": checks["det"],
        "sl2-trace": checks["trace"],
        "product": checks["product"],
    }


def cmd_roundtrip(cfg: RunConfig) -> int:
    phi = load_phi(cfg)
    metrics = roundtrip_metrics(phi, cfg.seed, trace_config(cfg), bool(cfg.broken_ramification))
    for key, val in metrics.items():
        print(f"{key:10s} {val:.3e}")
    worst = max(metrics.values())
    print(f"max deviation {worst:.3e} (tol {cfg.tol:g})")
    return 0 if worst <= cfg.tol else 4


def cmd_validate(cfg: RunConfig) -> int:
    data = read_json(cfg.inputs[0])
    schema = data.get("schema") if isinstance(data, dict) else None
    if schema == "stokesab.stokes-graph/1":
        g = stokes_from_json(data)
        print(f"stokes graph ok: {g.counts()}")
    elif schema == "stokesab.spectral-graph/1":
        sg = spectral_from_json(data)
        print(f"spectral graph ok: {sg.counts()}")
    elif schema == "stokesab.abelian-system/1":
        sys_ = OddAbelianSystem.from_json(data)
        report = _check_system(sys_, cfg.tol if cfg.tol is not None else 1e-10)
        print(f"abelian system ok: worst residual {report.max_residual():.3e}")
    elif schema == "stokesab.sl2-representation/1":
        rep = Sl2Representation.from_json(data)
        checks = rep.checks()
        bad = {k: v for k, v in checks.items() if v > 1e-8}
        if bad:
            raise ValidationFailure(f"representation violates {bad}")
        print(f"representation ok: {checks}")
    elif isinstance(data, dict) and "punctures" in data:
        phi = QuadraticDifferential.from_json(data)
        print(f"differential ok: {len(phi.marked)} punctures")
    else:
        raise SchemaViolation("unrecognised file", "$.schema")
    return 0


COMMANDS = {
    "stokes": cmd_stokes,
    "random-system": cmd_random_system,
    "nonab": cmd_nonab,
    "ab": cmd_ab,
    "roundtrip": cmd_roundtrip,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        cfg = resolve_config(args)
        return COMMANDS[cfg.command](cfg)
    except StokesabError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code
    except (np.linalg.LinAlgError, FloatingPointError, ZeroDivisionError, OverflowError) as exc:
        print(f"error (numeric): {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
