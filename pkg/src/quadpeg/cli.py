"""Command-line front end.

Subcommands: ``solve``, ``params``, ``vertices``, ``maslov``, ``gen-curve``
and ``render``.  Exit codes are a stable contract: 0 success / found,
1 invalid input, 2 no inscription found, 3 sampling resolution failure.
All randomness flows from ``--seed``; output bytes are independent of
``--workers``.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from .curve import (
    CurveFormatError,
    CurveValidationError,
    FourierCurve,
    GenerationError,
    ResolutionError,
    generate,
    load_curve,
    save_curve,
)
from .maslov import FormWeights, image_torus_loop, maslov_index, torus_loop
from .quadrilateral import (
    CyclicQuadParams,
    QuadrilateralError,
    params_from_vertices,
    vertices_from_params,
)
from .solver import InscriptionProblem, SolverOptions, solve_all

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NONE_FOUND = 2
EXIT_RESOLUTION = 3


def _fmt(x: float) -> str:
    return repr(float(x))


def _parse_quad(values: list[float]) -> CyclicQuadParams:
    """Quadrilateral spec: 3 numbers (s t phi) or 8 (vertex coordinates)."""
    if len(values) == 3:
        s, t, phi = values
        return CyclicQuadParams(s, t, phi)
    if len(values) == 8:
        pts = [complex(values[2 * i], values[2 * i + 1]) for i in range(4)]
        return params_from_vertices(pts)
    raise QuadrilateralError(
        f"quadrilateral spec needs 3 or 8 numbers, got {len(values)}")


def _write_out(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="ascii")


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("PEG_SOLVER_THREADS", "1")))
    except ValueError:
        return 1


# -- subcommands -----------------------------------------------------------


def cmd_solve(args: argparse.Namespace) -> int:
    curve = load_curve(args.curve)
    params = _parse_quad(args.quad)
    options = SolverOptions(
        grid=args.grid, newton_tol=args.newton_tol, max_iter=args.max_iter,
        dedup_tol=args.dedup_tol, degen_tol=args.degen_tol)
    problem = InscriptionProblem(curve, params, options)
    result = solve_all(problem, workers=args.workers)
    lines = [
        " ".join(_fmt(v) for v in (ins.a, ins.b, ins.c, ins.d, ins.residual_norm))
        for ins in result
    ]
    _write_out("".join(ln + "\n" for ln in lines), args.out)
    if not result.found:
        print("no inscription found; " + result.diagnostics.summary(),
              file=sys.stderr)
        print("hint: raise --grid or --max-iter", file=sys.stderr)
        return EXIT_NONE_FOUND
    return EXIT_OK


def cmd_params(args: argparse.Namespace) -> int:
    pts = [complex(args.coords[2 * i], args.coords[2 * i + 1]) for i in range(4)]
    q = params_from_vertices(pts)
    _write_out(f"{_fmt(q.s)} {_fmt(q.t)} {_fmt(q.phi)}\n", args.out)
    return EXIT_OK


def cmd_vertices(args: argparse.Namespace) -> int:
    q = CyclicQuadParams(*args.params)
    v = vertices_from_params(q)
    coords = []
    for p in v.as_tuple():
        coords.extend([p.real, p.imag])
    _write_out(" ".join(_fmt(c) for c in coords) + "\n", args.out)
    return EXIT_OK


def cmd_maslov(args: argparse.Namespace) -> int:
    curve = load_curve(args.curve)
    if args.map is not None:
        if args.map.lower().replace("-", "_") == "f_t":
            if args.t is None:
                raise ValueError("--map F_t needs --t")
            loop = image_torus_loop(curve, "F_t", args.t, args.m, args.n,
                                    samples=args.samples)
        else:
            if args.s is None or args.phi is None:
                raise ValueError("--map R_phi_F_s needs --s and --phi")
            loop = image_torus_loop(curve, "R_phi_F_s", (args.s, args.phi),
                                    args.m, args.n, samples=args.samples)
    else:
        w = args.weights if args.weights is not None else [0.5]
        if len(w) == 1:
            weights = FormWeights(w[0], 1.0 - w[0])
        elif len(w) == 2:
            weights = FormWeights(w[0], w[1])
        else:
            raise ValueError("--weights takes one number r (meaning (r, 1-r)) "
                             "or two numbers c1 c2")
        loop = torus_loop(curve, weights, args.m, args.n, samples=args.samples)
    _write_out(f"{maslov_index(loop)}\n", args.out)
    return EXIT_OK


def cmd_gen_curve(args: argparse.Namespace) -> int:
    curve = generate(args.kind, seed=args.seed, K=args.modes, decay=args.decay,
                     a=args.a, b=args.b)
    text_path = args.out
    if text_path is None:
        raise ValueError("gen-curve requires --out")
    save_curve(curve, text_path)
    return EXIT_OK


def cmd_render(args: argparse.Namespace) -> int:
    curve = load_curve(args.curve)
    tuples: list[tuple[float, float, float, float]] = []
    if args.inscriptions is not None:
        text = Path(args.inscriptions).read_text(encoding="ascii")
        for ln in text.splitlines():
            ln = ln.strip()
            if not ln:
                continue
            parts = ln.split()
            if len(parts) != 5:
                raise ValueError(f"malformed inscription line {ln!r}")
            a, b, c, d, _ = (float(p) for p in parts)
            tuples.append((a, b, c, d))
    svg = render_svg(curve, tuples)
    if args.out is None:
        raise ValueError("render requires --out")
    Path(args.out).write_text(svg, encoding="ascii")
    return EXIT_OK


# -- SVG rendering -----------------------------------------------------------

_PALETTE = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"]
_CURVE_SAMPLES = 512


def render_svg(curve: FourierCurve,
               inscriptions: list[tuple[float, float, float, float]]) -> str:
    """Standalone SVG 1.1: the curve as a closed path plus each inscription
    as a labeled quadrilateral with both diagonals.  Deterministic bytes."""
    th = np.arange(_CURVE_SAMPLES) / _CURVE_SAMPLES
    z = curve.eval(th)
    quads = [curve.eval(np.array(t)) for t in inscriptions]

    all_pts = np.concatenate([z] + quads) if quads else z
    xs, ys = all_pts.real, -all_pts.imag  # flip: SVG's y axis points down
    span = max(float(xs.max() - xs.min()), float(ys.max() - ys.min()), 1e-9)
    pad = 0.08 * span
    x0, y0 = float(xs.min()) - pad, float(ys.min()) - pad
    w = float(xs.max() - xs.min()) + 2 * pad
    h = float(ys.max() - ys.min()) + 2 * pad
    sw = 0.004 * span
    font = 0.05 * span

    def pt(p: complex) -> str:
        return f"{p.real:.6f},{-p.imag:.6f}"

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="640" height="640" '
        f'viewBox="{x0:.6f} {y0:.6f} {w:.6f} {h:.6f}">',
        "<style>",
        f".curve {{ fill: none; stroke: #222222; stroke-width: {sw:.6f}; }}",
        f".quad {{ fill: none; stroke-width: {sw:.6f}; }}",
        f".diag {{ stroke-width: {0.6 * sw:.6f}; "
        f"stroke-dasharray: {3 * sw:.6f} {2 * sw:.6f}; }}",
        f".lbl {{ font-family: sans-serif; font-size: {font:.6f}px; "
        "fill: #222222; }}".replace("}}", "}"),
    ]
    for i in range(len(_PALETTE)):
        lines.append(f".c{i} {{ stroke: {_PALETTE[i]}; }}")
    lines.append("</style>")

    path = "M " + " L ".join(pt(p) for p in z) + " Z"
    lines.append(f'<path class="curve" d="{path}"/>')

    for i, pts in enumerate(quads):
        cls = f"c{i % len(_PALETTE)}"
        poly = " ".join(pt(p) for p in pts)
        lines.append(f'<polygon class="quad {cls} quad-{i}" points="{poly}"/>')
        for j, k in ((0, 2), (1, 3)):
            p, q = pts[j], pts[k]
            lines.append(
                f'<line class="diag {cls}" x1="{p.real:.6f}" y1="{-p.imag:.6f}" '
                f'x2="{q.real:.6f}" y2="{-q.imag:.6f}"/>')
        centroid = complex(np.mean(pts))
        for label, p in zip("ABCD", pts):
            direction = p - centroid
            mag = abs(direction)
            offset = (direction / mag * 1.5 * font) if mag > 0 else 0.0
            at = p + offset
            lines.append(
                f'<text class="lbl" x="{at.real:.6f}" y="{-at.imag:.6f}" '
                f'text-anchor="middle">{label}</text>')

    lines.append("</svg>")
    return "\n".join(lines) + "\n"


# -- parser ------------------------------------------------------------------


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid", type=int, default=12,
                   help="multistart grid density per axis (default 12)")
    p.add_argument("--newton-tol", type=float, default=1e-11,
                   help="Newton residual tolerance, relative to curve diameter")
    p.add_argument("--max-iter", type=int, default=50,
                   help="Newton iteration cap per seed")
    p.add_argument("--dedup-tol", type=float, default=1e-4,
                   help="torus distance for deduplication")
    p.add_argument("--degen-tol", type=float, default=1e-3,
                   help="degeneracy threshold |A-C|, relative to curve diameter")
    p.add_argument("--workers", type=int, default=_default_workers(),
                   help="seed-processing threads (default from "
                        "PEG_SOLVER_THREADS, else 1); never affects output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quadpeg",
        description="Inscribe cyclic quadrilaterals in smooth closed curves "
                    "and compute Maslov indices of torus-tangent loops.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="find inscriptions of a quadrilateral "
                                     "class in a curve")
    p.add_argument("curve", help="curve file (fourier-curve v1)")
    p.add_argument("quad", type=float, nargs="+",
                   help="quadrilateral: 's t phi' or 8 vertex coordinates")
    _add_solver_flags(p)
    p.add_argument("--out", default=None, help="write inscriptions here "
                                               "instead of stdout")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("params", help="parameters (s t phi) from 8 vertex "
                                      "coordinates")
    p.add_argument("coords", type=float, nargs=8,
                   help="Ax Ay Bx By Cx Cy Dx Dy")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("vertices", help="canonical vertices from (s t phi)")
    p.add_argument("params", type=float, nargs=3, help="s t phi")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_vertices)

    p = sub.add_parser("maslov", help="Maslov index of an (m, n) torus loop")
    p.add_argument("curve", help="curve file")
    p.add_argument("m", type=int)
    p.add_argument("n", type=int)
    p.add_argument("--weights", type=float, nargs="+", default=None,
                   help="form weights: one number r meaning (r, 1-r), or "
                        "two numbers c1 c2 (default r=0.5)")
    p.add_argument("--map", default=None, choices=["F_t", "R_phi_F_s"],
                   help="push the loop through this map and use weights (1, 1)")
    p.add_argument("--t", type=float, default=None, help="ratio for F_t")
    p.add_argument("--s", type=float, default=None, help="ratio for R_phi_F_s")
    p.add_argument("--phi", type=float, default=None,
                   help="angle for R_phi_F_s (radians)")
    p.add_argument("--samples", type=int, default=4096,
                   help="loop sample count (default 4096)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_maslov)

    p = sub.add_parser("gen-curve", help="write a curve file")
    p.add_argument("--kind", default="random",
                   choices=["circle", "ellipse", "random"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--modes", type=int, default=8, help="mode cutoff K")
    p.add_argument("--decay", type=float, default=2.5)
    p.add_argument("--a", type=float, default=2.0, help="ellipse semi-axis a")
    p.add_argument("--b", type=float, default=1.0, help="ellipse semi-axis b")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_curve)

    p = sub.add_parser("render", help="draw a curve and inscriptions as SVG")
    p.add_argument("curve", help="curve file")
    p.add_argument("inscriptions", nargs="?", default=None,
                   help="file of 'a b c d residual' lines (optional)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    try:
        return args.func(args)
    except ResolutionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("hint: raise --samples", file=sys.stderr)
        return EXIT_RESOLUTION
    except (QuadrilateralError, CurveFormatError, CurveValidationError,
            GenerationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
