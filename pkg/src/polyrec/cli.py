"""Command line front end: ``polyrec <subcommand> ...``.

Every JSON document carries ``schema_version`` and ``command`` and is
written with sorted keys, so equal inputs give byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import arcs, construct, core, errors, profile, smooth, spectral, weyl
from .errors import PolyrecError, ResourceLimit, SpecParseError
from .schemas import SCHEMA_VERSION

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CONTRACT = 2
EXIT_RESOURCE = 3


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _rational(text: str) -> Fraction:
    try:
        return core.as_fraction(text)
    except (SpecParseError, TypeError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _poly(text: str) -> core.Polynomial:
    try:
        return core.Polynomial.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad polynomial {text!r}: {exc}") from exc


def _windows(text: str) -> list[tuple[int, int]]:
    try:
        return [tuple(int(v) for v in item.split(":")) for item in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"windows must look like 'λ:μ,λ:μ', got {text!r}") from exc


def _threads() -> int | None:
    raw = os.environ.get("POLYREC_THREADS")
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"POLYREC_THREADS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError("POLYREC_THREADS must be >= 1")
    return n


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _emit_json(command: str, payload: dict, out: str | None) -> None:
    doc = {"schema_version": SCHEMA_VERSION, "command": command, **payload}
    _emit(json.dumps(doc, sort_keys=True, indent=2) + "\n", out)


def _svg_polyline(xs, ys, title: str, width: int = 640, height: int = 320) -> str:
    xs, ys = [float(x) for x in xs], [float(y) for y in ys]
    x0, x1 = min(xs), max(xs) if len(xs) > 1 else min(xs) + 1
    y0, y1 = min(0.0, min(ys)), max(ys) if max(ys) > 0 else 1.0
    sx = lambda x: 40 + (width - 60) * (x - x0) / ((x1 - x0) or 1)  # noqa: E731
    sy = lambda y: height - 30 - (height - 60) * (y - y0) / ((y1 - y0) or 1)  # noqa: E731
    pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">\n'
        f'<text x="40" y="20" font-size="14">{title}</text>\n'
        f'<polyline fill="none" stroke="black" stroke-width="1" points="{pts}"/>\n'
        "</svg>\n"
    )


def _svg_raster(times, range_end: int, title: str, width: int = 640, height: int = 80) -> str:
    scale = (width - 60) / max(range_end, 1)
    bars = "".join(
        f'<rect x="{40 + t * scale:.2f}" y="30" width="{max(scale, 1):.2f}" height="30"/>\n'
        for t in times
    )
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">\n'
        f'<text x="40" y="20" font-size="14">{title}</text>\n{bars}</svg>\n'
    )


# -- subcommand handlers -----------------------------------------------------------


def _profile_of(args) -> profile.RecurrenceProfile:
    A = core.read_set(args.set)
    if args.method == "direct":
        return profile.profile_direct(A, args.poly, args.L)
    return profile.profile_fft(A, args.poly, args.L, workers=_threads())


def cmd_profile(args) -> None:
    prof = _profile_of(args)
    N = prof.universe_size
    rows = [
        (n, d, int(c), int(c) / N) for n, (d, c) in enumerate(zip(prof.shifts, prof.counts))
    ]
    if args.format == "csv":
        body = "".join(f"{n},{d},{c},{r!r}\n" for n, d, c, r in rows)
        _emit("n,Pn,count,ratio\n" + body, args.out)
    elif args.format == "json":
        _emit_json(
            "profile",
            {
                "polynomial": list(args.poly.coeffs),
                "universe_size": N,
                "set_cardinality": prof.set_cardinality,
                "rows": [{"n": n, "Pn": d, "count": c, "ratio": r} for n, d, c, r in rows],
            },
            args.out,
        )
    else:
        _emit(_svg_polyline([r[0] for r in rows], [r[3] for r in rows], "recurrence profile"), args.out)


def cmd_returns(args) -> None:
    prof = _profile_of(args)
    R = profile.optimal_returns(prof, args.eps)
    if args.format == "svg":
        _emit(_svg_raster(R.times, R.range_end, f"return times, eps={R.epsilon}"), args.out)
        return
    _emit_json(
        "returns",
        {
            "epsilon": str(R.epsilon),
            "range_end": R.range_end,
            "times": list(R.times),
            "stats": profile.gap_stats(R).to_dict(),
        },
        args.out,
    )


def cmd_weyl_eval(args) -> None:
    alpha = weyl.TorusPoint.parse(args.alpha)
    if alpha.k != args.k:
        raise errors.ContractViolation(f"--alpha has {alpha.k} coordinates but --k is {args.k}")
    value = weyl.weyl_S_div(args.lam, args.mu, args.q, alpha)
    _emit_json(
        "weyl eval",
        {
            "re": value.real,
            "im": value.imag,
            "abs": abs(value),
            "alpha": str(alpha),
            "mu": args.mu,
            "lambda": args.lam,
            "q": args.q,
        },
        args.out,
    )


def cmd_weyl_relations(args) -> None:
    pts = weyl.random_torus_points(args.k, args.samples, args.seed)
    res = weyl.relation_residuals(args.lam, args.mu, args.q, pts)
    _emit_json("weyl relations", {**res.to_dict(), "samples": args.samples}, args.out)


def cmd_weyl_scan(args) -> None:
    res = weyl.minor_arc_scan(args.eta, args.mu, args.k, args.samples, args.seed)
    _emit_json("weyl scan", res.to_dict(), args.out)


def cmd_arcs_member(args) -> None:
    alpha = weyl.TorusPoint.parse(args.alpha)
    system = arcs.ArcSystem.build(args.eta, alpha.k, args.lam, args.mu)
    system.check_nondegenerate()
    point = weyl.apply_t_lambda(weyl.t_lambda(alpha.k, args.lam), alpha) if args.pulled_back else alpha
    in_outer = arcs.in_major_box(point, system.outer)
    in_inner = arcs.in_major_box(point, system.inner)
    _emit_json(
        "arcs member",
        {
            "alpha": str(alpha),
            "q": system.q,
            "in_outer": in_outer,
            "in_inner": in_inner,
            "in_omega": in_outer and not in_inner,
            "pulled_back": args.pulled_back,
        },
        args.out,
    )


def cmd_arcs_overlap(args) -> None:
    alpha = weyl.TorusPoint.parse(args.alpha)
    count = arcs.overlap_count(alpha, args.eta, args.windows)
    _emit_json(
        "arcs overlap",
        {"alpha": str(alpha), "count": count, "windows": [list(w) for w in args.windows]},
        args.out,
    )


def cmd_spectral_identity(args) -> None:
    B = core.read_grid(args.set)
    res = spectral.average_count_identity(B, args.lam, args.mu)
    _emit_json(
        "spectral identity",
        {
            "direct": float(res.direct),
            "quadrature": res.quadrature,
            "relative_error": res.relative_error,
            "grid": list(res.grid),
        },
        args.out,
    )


def cmd_spectral_mass(args) -> None:
    B = core.read_grid(args.set)
    system = arcs.ArcSystem.build(args.eta, B.dimension, args.lam, args.mu)
    region = spectral.omega_region(system, pulled_back=args.pulled_back)
    mass = spectral.box_region_mass(B, region)
    riemann = None if args.riemann is None else spectral.riemann_mass(B, region, args.riemann)
    _emit_json(
        "spectral mass",
        {"mass": mass, "riemann": riemann, "boxes": len(region.boxes), "pulled_back": args.pulled_back},
        args.out,
    )


def cmd_dichotomy(args) -> None:
    B = core.read_grid(args.set)
    rep = smooth.dichotomy_report(B, args.eps, args.lam, args.mu, args.eta, args.threshold_fraction)
    _emit_json("dichotomy", rep.to_dict(), args.out)


def cmd_lift(args) -> None:
    A = core.read_set(args.set)
    res = construct.lift_finite(
        A, args.poly, args.eps, args.L, n_prime=args.n_prime, tile_side=args.tile_side
    )
    verified = construct.verify_lift_inclusion(A, args.poly, args.eps, args.L, res)
    _emit_json("lift", {**res.to_dict(), "verified": verified}, args.out)


def cmd_counterexample_build(args) -> None:
    desc = construct.counterexample_build(args.poly, args.L)
    _emit_json("counterexample build", desc.to_dict(), args.out)


def cmd_counterexample_verify(args) -> None:
    desc = construct.counterexample_build(args.poly, args.L)
    ok = construct.counterexample_verify(desc, args.poly, args.L, args.j_max)
    _emit_json(
        "counterexample verify",
        {"verified": ok, "j_max": args.j_max, "a": desc.a, "M": desc.M},
        args.out,
    )


def cmd_khintchine(args) -> None:
    summary = profile.khintchine_experiment(
        args.generator, args.N, args.poly, args.eps, args.trials, args.seed, L=args.L
    )
    _emit_json("experiment khintchine", summary.to_dict(), args.out)


# -- parser --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="polyrec", description="Polynomial recurrence toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def leaf(parent, name, handler, help_text):
        sp = parent.add_parser(name, help=help_text)
        sp.set_defaults(handler=handler)
        sp.add_argument("--out", help="write here instead of stdout")
        return sp

    def group(name, help_text):
        sp = sub.add_parser(name, help=help_text)
        return sp.add_subparsers(dest="action", required=True, parser_class=_Parser)

    for name, handler, formats in (
        ("profile", cmd_profile, ("csv", "json", "svg")),
        ("returns", cmd_returns, ("json", "svg")),
    ):
        sp = leaf(sub, name, handler, f"{name} of a 1-D set")
        sp.add_argument("--set", required=True, help="set file with a #N= header")
        sp.add_argument("--poly", required=True, type=_poly, help="coefficients c1,...,ck")
        sp.add_argument("--L", required=True, type=int)
        sp.add_argument("--method", choices=("fft", "direct"), default="fft")
        sp.add_argument("--format", choices=formats, default=formats[0])
        if name == "returns":
            sp.add_argument("--eps", required=True, type=_rational)

    w = group("weyl", "Weyl sums")
    sp = leaf(w, "eval", cmd_weyl_eval, "evaluate S_{λ,μ,q}(α)")
    sp.add_argument("--mu", required=True, type=int)
    sp.add_argument("--alpha", required=True)
    sp.add_argument("--k", required=True, type=int)
    sp.add_argument("--lambda", dest="lam", type=int, default=0)
    sp.add_argument("--q", type=int, default=1)
    sp = leaf(w, "relations", cmd_weyl_relations, "residuals of the exact Weyl-sum relations")
    sp.add_argument("--lambda", dest="lam", required=True, type=int)
    sp.add_argument("--mu", required=True, type=int)
    sp.add_argument("--q", type=int, default=1)
    sp.add_argument("--k", required=True, type=int)
    sp.add_argument("--samples", type=int, default=64)
    sp.add_argument("--seed", type=int, default=0)
    sp = leaf(w, "scan", cmd_weyl_scan, "largest |S_μ| off the major arcs")
    sp.add_argument("--eta", required=True, type=_rational)
    sp.add_argument("--mu", required=True, type=int)
    sp.add_argument("--k", required=True, type=int)
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)

    a = group("arcs", "major-box geometry")
    sp = leaf(a, "member", cmd_arcs_member, "membership of α in the annulus")
    sp.add_argument("--eta", required=True, type=_rational)
    sp.add_argument("--lambda", dest="lam", required=True, type=int)
    sp.add_argument("--mu", required=True, type=int)
    sp.add_argument("--alpha", required=True)
    sp.add_argument("--pulled-back", action="store_true")
    sp = leaf(a, "overlap", cmd_arcs_overlap, "count pulled-back annuli containing α")
    sp.add_argument("--eta", required=True, type=_rational)
    sp.add_argument("--windows", required=True, type=_windows, help="λ:μ,λ:μ,...")
    sp.add_argument("--alpha", required=True)

    s = group("spectral", "Fourier-side checks on grid sets")
    sp = leaf(s, "identity", cmd_spectral_identity, "counting identity, direct vs quadrature")
    sp.add_argument("--set", required=True, help="grid file with a '#k= #M=' header")
    sp.add_argument("--lambda", dest="lam", required=True, type=int)
    sp.add_argument("--mu", required=True, type=int)
    sp = leaf(s, "mass", cmd_spectral_mass, "spectral mass over the annulus")
    sp.add_argument("--set", required=True)
    sp.add_argument("--eta", required=True, type=_rational)
    sp.add_argument("--lambda", dest="lam", required=True, type=int)
    sp.add_argument("--mu", required=True, type=int)
    sp.add_argument("--pulled-back", action="store_true")
    sp.add_argument("--riemann", type=_rational, help="also report a midpoint sum at this resolution")

    sp = leaf(sub, "dichotomy", cmd_dichotomy, "evaluate both branches of the dichotomy")
    sp.add_argument("--set", required=True)
    sp.add_argument("--eta", required=True, type=_rational)
    sp.add_argument("--eps", required=True, type=_rational)
    sp.add_argument("--lambda", dest="lam", required=True, type=int)
    sp.add_argument("--mu", required=True, type=int)
    sp.add_argument("--threshold-fraction", type=_rational, default=Fraction(1, 10))

    sp = leaf(sub, "lift", cmd_lift, "lift a 1-D set to the moment curve")
    sp.add_argument("--set", required=True)
    sp.add_argument("--poly", required=True, type=_poly)
    sp.add_argument("--eps", required=True, type=_rational)
    sp.add_argument("--L", required=True, type=int)
    sp.add_argument("--tile-side", type=int)
    sp.add_argument("--n-prime", type=int)

    c = group("counterexample", "periodic set with long runs of failed returns")
    for name, handler in (("build", cmd_counterexample_build), ("verify", cmd_counterexample_verify)):
        sp = leaf(c, name, handler, f"{name} the descriptor")
        sp.add_argument("--poly", required=True, type=_poly)
        sp.add_argument("--L", required=True, type=int)
        if name == "verify":
            sp.add_argument("--j-max", type=int, default=5)

    e = group("experiment", "reproducible experiments")
    sp = leaf(e, "khintchine", cmd_khintchine, "return-time densities over seeded trials")
    sp.add_argument("--generator", required=True, help="random:<δ> or a structured spec")
    sp.add_argument("--N", required=True, type=int)
    sp.add_argument("--poly", required=True, type=_poly)
    sp.add_argument("--eps", required=True, type=_rational)
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--L", type=int)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        args.handler(args)
    except (ConfigError, SpecParseError, OSError) as exc:
        print(f"polyrec: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceLimit as exc:
        print(f"polyrec: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except PolyrecError as exc:
        print(f"polyrec: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
