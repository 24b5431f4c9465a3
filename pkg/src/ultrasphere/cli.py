"""Command-line front end; every subcommand prints JSON lines.

Exit codes: 0 success, 1 computational failure, 2 usage error (bad flags,
unknown function, missing ``--seed`` for Monte-Carlo routes).
"""

import argparse
import json
import math
import sys

import numpy as np

from .catalog import CATALOG, UnknownFunctionError, parse_function
from .errors import UltrasphereError
from .polar_rep import (
    check_V_membership,
    default_grid,
    pullback_profiles,
    radial_factorize,
    reconstruct,
)
from .quadrature import CoeffTable, analyze, build_quadrature
from .regularity import DEFAULT_CAP, DEFAULT_H_GRID, DecayProfile, classify, decay_profile
from .rotmean import (
    invariance_test,
    spherical_mean_from_coeffs,
    spherical_mean_haar,
    spherical_mean_surface,
)
from .sphharm import build_basis
from .weight_seq import AssociatedFunction, build_gevrey, check_conditions, derived_root_sequence

__all__ = ["main"]


class UsageError(Exception):
    pass


def _plain(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return obj


def _emit(out, record):
    out.write(json.dumps(_plain(record)) + "\n")


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _function(args):
    try:
        return parse_function(args.f, args.n)
    except UnknownFunctionError as exc:
        raise UsageError(str(exc)) from None


def _setup(args):
    basis = build_basis(args.n, args.J)
    quad = build_quadrature(args.n, 2 * args.J)
    return basis, quad


def cmd_weights(args, out):
    W = build_gevrey(args.gevrey, args.P)
    report = check_conditions(W)
    _emit(out, {"record": "conditions", **report.to_dict()})
    if args.derived:
        N = derived_root_sequence(W)
        _emit(out, {"record": "derived_sequence", "label": N.label, "gevrey_order": N.gevrey_order})
    M = AssociatedFunction(W)
    for t in args.assoc or []:
        v = M.evaluate(t)
        _emit(out, {"record": "assoc", "label": W.label, "t": t, "M": v.value,
                    "argmax": v.index, "saturated": v.saturated})
    return 0


def cmd_transform(args, out):
    phi = _function(args)
    basis, quad = _setup(args)
    table = analyze(lambda W: phi(args.r * W), basis, quad)
    text = table.to_csv() if args.format == "csv" else table.to_jsonl()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        _emit(out, {"record": "transform", "f": phi.text, "n": args.n, "J": args.J, "r": args.r,
                    "out": args.out, "entries": int(table.flat().size)})
    else:
        out.write(text)
    return 0


def cmd_classify(args, out):
    sources = [args.table is not None, args.f is not None, args.decay is not None]
    if sum(sources) != 1:
        raise UsageError("give exactly one of --table, --f or --decay")
    if args.table is not None:
        with open(args.table, encoding="utf-8") as fh:
            profile = decay_profile(CoeffTable.from_jsonl(fh.read()))
        source = args.table
    elif args.decay is not None:
        profile = DecayProfile(args.decay)
        source = "decay"
    else:
        phi = _function(args)
        basis, quad = _setup(args)
        profile = decay_profile(analyze(lambda W: phi(args.r * W), basis, quad))
        source = phi.text
    W = build_gevrey(args.gevrey, args.P)
    verdict = classify(profile, W, args.h, args.cap)
    _emit(out, {"record": "classify", "source": source, "weights": W.label, **verdict.to_dict()})
    return 0


def cmd_polar(args, out):
    phi = _function(args)
    basis, quad = _setup(args)
    profiles = pullback_profiles(phi, basis, quad, default_grid(args.R))
    relative = derived_root_sequence(build_gevrey(args.gevrey)).label if args.gevrey else None
    report = check_V_membership(profiles, args.Mmax, args.tol, relative_to=relative)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(profiles.to_jsonl())
    rec = {"record": "v_membership", "f": phi.text, "n": args.n, "J": args.J, **report.to_dict()}
    _emit(out, rec)
    if report.passed:
        factors = [radial_factorize(p, args.Mmax, args.tol) for p in profiles]
        radii = np.linspace(0.0, args.R, 5)
        X = (radii[:, None, None] * quad.nodes[None]).reshape(-1, args.n)
        err = np.abs(reconstruct(factors, basis, X) - phi(X))
        _emit(out, {"record": "reconstruction", "f": phi.text, "points": int(X.shape[0]),
                    "radii": radii, "max_error": float(err.max())})
    return 0


def cmd_mean(args, out):
    x = np.array(args.x, dtype=float)
    if args.n is None:
        args.n = x.size
    if x.size != args.n:
        raise UsageError(f"--x has {x.size} coordinates but --n is {args.n}")
    phi = _function(args)
    routes = args.route.split(",")
    bad = [r for r in routes if r not in ("coeffs", "surface", "haar")]
    if bad:
        raise UsageError(f"unknown route(s) {', '.join(bad)}")
    if "haar" in routes and args.seed is None:
        raise UsageError("the haar route is Monte-Carlo and needs --seed")
    basis, quad = _setup(args)
    for route in routes:
        rec = {"record": "mean", "f": phi.text, "x": x, "route": route}
        if route == "coeffs":
            rec["value"] = spherical_mean_from_coeffs(phi, basis, quad, x)
        elif route == "surface":
            rec["value"] = spherical_mean_surface(phi, quad, x)
        else:
            value, sd = spherical_mean_haar(phi, x, args.N, args.seed, return_std=True)
            rec.update(value=value, sd=sd, N=args.N, seed=args.seed,
                       tolerance=5.0 * sd / math.sqrt(args.N))
        _emit(out, rec)
    return 0


def cmd_invariance(args, out):
    phi = _function(args)
    basis, quad = _setup(args)
    report = invariance_test(phi, basis, quad, default_grid(args.R), args.tol,
                             probes=args.probes, seed=args.seed)
    _emit(out, {"record": "invariance", "f": phi.text, "n": args.n, "J": args.J, **report.to_dict()})
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ultrasphere",
        description="Spherical harmonics, weight sequences and spherical means (JSON-lines output).",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    fn_help = "catalog function: " + ", ".join(CATALOG)

    p = sub.add_parser("weights", help="Gevrey weight sequence conditions and M(t)")
    p.add_argument("--gevrey", type=float, required=True, help="order s of M_p = (p!)^s")
    p.add_argument("--P", type=int, default=200, help="truncation index")
    p.add_argument("--assoc", type=_floats, help="comma-separated t values for M(t)")
    p.add_argument("--derived", action="store_true", help="also report the derived sequence sqrt(p! M_p)")
    p.set_defaults(run=cmd_weights)

    def geometry(p, J=8, n_required=True):
        p.add_argument("--n", type=int, required=n_required, default=None, help="ambient dimension")
        p.add_argument("--J", type=int, default=J, help="maximal harmonic degree")

    p = sub.add_parser("transform", help="coefficient table of phi(r * omega)")
    p.add_argument("--f", required=True, help=fn_help)
    geometry(p)
    p.add_argument("--r", type=float, default=1.0, help="sphere radius")
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(run=cmd_transform)

    p = sub.add_parser("classify", help="regularity class of a coefficient decay profile")
    p.add_argument("--table", help="coefficient table (JSON lines)")
    p.add_argument("--decay", type=_floats, help="comma-separated s_0,s_1,...")
    p.add_argument("--f", help=fn_help)
    geometry(p, J=12, n_required=False)
    p.add_argument("--r", type=float, default=1.0, help="sphere radius")
    p.add_argument("--gevrey", type=float, default=1.0, help="order s of M_p = (p!)^s")
    p.add_argument("--P", type=int, default=200, help="truncation index")
    p.add_argument("--h", type=_floats, default=list(DEFAULT_H_GRID), help="comma-separated h grid")
    p.add_argument("--cap", type=float, default=DEFAULT_CAP, help="bound on the normalized sup")
    p.set_defaults(run=cmd_classify)

    p = sub.add_parser("polar", help="radial profiles, membership test and reconstruction")
    p.add_argument("--f", required=True, help=fn_help)
    geometry(p)
    p.add_argument("--R", type=float, default=1.0, help="radial grid half-width")
    p.add_argument("--Mmax", type=int, default=None, help="fit degree near 0 (default max(12, J+2))")
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--gevrey", type=float, default=None, help="record the derived sequence of (p!)^s")
    p.add_argument("--out", help="write profiles (JSON lines)")
    p.set_defaults(run=cmd_polar)

    p = sub.add_parser("mean", help="spherical mean at a point")
    p.add_argument("--f", required=True, help=fn_help)
    p.add_argument("--x", type=_floats, required=True, help="comma-separated point")
    geometry(p, n_required=False)
    p.add_argument("--route", default="coeffs,surface", help="comma-separated: coeffs, surface, haar")
    p.add_argument("--N", type=int, default=10000, help="Haar sample count")
    p.add_argument("--seed", type=int, default=None, help="seed (required for the haar route)")
    p.set_defaults(run=cmd_mean)

    p = sub.add_parser("invariance", help="rotation-invariance test")
    p.add_argument("--f", required=True, help=fn_help)
    geometry(p)
    p.add_argument("--R", type=float, default=1.0, help="radial grid half-width")
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--probes", type=int, default=20, help="random probes for the cross-check")
    p.add_argument("--seed", type=int, default=0, help="probe seed")
    p.set_defaults(run=cmd_invariance)
    return parser


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "f", None) is not None and args.n is None and args.command != "mean":
            raise UsageError("--n is required with --f")
        return args.run(args, out)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ultrasphere: error: {exc}", file=sys.stderr)
        return 2
    except (UltrasphereError, OSError) as exc:
        print(f"ultrasphere: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
