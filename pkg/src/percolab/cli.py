"""Command-line front end: ``percolab <command> [options]``.

Exit codes: 0 success, 1 malformed input, 2 unreachable target,
3 verification failed (the report is still printed).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from fractions import Fraction
from typing import List, Optional

from . import __version__, cones, fields, gadgets, hilbert, scalar
from .errors import PercolabError, Unreachable
from .io import RunManifest, csv_text, json_text, points_csv, points_svg, write_atomic
from .lattice import Box, Configuration, ValueSet, passage_norm
from .numeric import json_number, to_number

EXIT_OK, EXIT_BAD_INPUT, EXIT_UNREACHABLE, EXIT_FAILED = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_BAD_INPUT, f"{self.prog}: error: {message}\n")


def _num(text: str):
    return to_number(Fraction(text.strip()))


def _vec(text: str) -> tuple:
    return tuple(_num(c) for c in text.split(","))


def _point(text: str) -> tuple:
    return tuple(int(c) for c in text.split(","))


def _vecs(text: str) -> list:
    return [_vec(part) for part in text.split(";") if part.strip()]


def _nums(text: str) -> list:
    return [_num(c) for c in text.split(",")]


def _box(text: str) -> Box:
    lo, hi = text.split(":")
    return Box(_point(lo), _point(hi))


def threads() -> int:
    """Parallelism cap from ``PERCOLAB_THREADS`` (default 1); every command here runs serially."""
    raw = os.environ.get("PERCOLAB_THREADS", "1")
    n = int(raw)
    if n < 1:
        raise ValueError("PERCOLAB_THREADS must be a positive integer")
    return n


def _load_config(path: str) -> Configuration:
    with open(path) as fh:
        return Configuration.from_json(json.load(fh))


def _emit(args, text: str, manifest: RunManifest, path: Optional[str] = None):
    path = path or getattr(args, "out", None)
    if path:
        write_atomic(path, text)
        manifest.record_output(path)
    else:
        sys.stdout.write(text)


# --- commands ---------------------------------------------------------------


def cmd_passage(args, manifest) -> int:
    cfg = _load_config(args.config)
    manifest.inputs.append(args.config)
    x, y = _point(args.source), _point(args.target)
    box = _box(args.box) if args.box else None
    if cfg.is_vector:
        t, path = hilbert.passage_time_h(cfg, x, y, args.cap, box)
    else:
        t, path = scalar.passage_time(cfg, x, y, box)
    _emit(args, json_text({"time": t, "witness": path.to_json()}), manifest)
    return EXIT_OK


def cmd_ball(args, manifest) -> int:
    cfg = _load_config(args.config)
    manifest.inputs.append(args.config)
    if cfg.dim != 2 and args.svg:
        warnings.warn("SVG output is planar only; writing CSV alone")
        args.svg = None
    if args.trace:
        K = scalar.sample_l1_ball(cfg.dim, _num(args.target_radius), Fraction(1, args.sample))
        box = (lambda t: _box(args.box)) if args.box else None
        rows = scalar.ball_convergence_trace(cfg, _nums(args.t), K, box)
        _emit(args, csv_text(["t", "d_H"], rows), manifest)
        return EXIT_OK
    text = []
    for t in _nums(args.t):
        box = _box(args.box) if args.box else Box.cube(cfg.dim, int(t / scalar.min_value(cfg)) + 1)
        snap = scalar.grow_ball(cfg, t, box)
        if args.svg:
            path = args.svg if len(args.t.split(",")) == 1 else f"{args.svg}.t{t}.svg"
            write_atomic(path, points_svg(snap.points))
            manifest.record_output(path)
        text.append(points_csv(snap.points))
    _emit(args, "".join(text), manifest)
    return EXIT_OK


def _verify_report(args) -> gadgets.GadgetReport:
    claim = args.claim
    if claim == "funnel":
        proof = gadgets.choose_gadget_params(2, args.m, args.a, args.b)
        params = proof if args.proof_params else gadgets.minimal_verified_params(proof)
        if args.config:
            cfg = _load_config(args.config)
            _, cheap = gadgets.skew_box_config(params)
        else:
            cfg, cheap = gadgets.skew_box_config(params)
        rep = gadgets.verify_funneling(cfg, cheap, params)
        rep.stats["proof_params"] = [proof.p, proof.q, proof.r, proof.q_prime]
        return rep
    if claim == "funnel-h":
        q, r, qq = args.hilbert_params
        params = gadgets.SkewBoxParams(2, 1, q, r, qq, proof_faithful=False)
        g = gadgets.bfs_alternating_config(params, _vec(args.va), _vec(args.vb))
        cap = args.cap or 2 * (q + qq + 2 * r)
        return gadgets.verify_funneling_h(g.config, params, cap)
    if claim == "lemma52":
        cfg, inner, outer = gadgets.lemma52_counterexample(_vec(args.va), _vec(args.vb))
        t1 = passage_norm(cfg, inner)
        t2 = passage_norm(cfg, outer)
        ok = t2 < t1
        return gadgets.GadgetReport("lemma52", ok, None if ok else (inner, outer),
                                    {"n": len(inner), "tau_inner": t1, "tau_outer": t2})
    if claim == "lemma53-eq":
        cfg, X, Y, Z = gadgets.lemma53_equal_norm_config(_vec(args.va), _vec(args.vb))
        return gadgets.verify_lemma53_equal(cfg, X, Y, Z)
    if claim == "lemma53-neq":
        g = gadgets.lemma53_unequal_norm_config(_vec(args.va), _vec(args.vb), args.M)
        return gadgets.verify_lemma53_unequal(g, exhaustive=args.exhaustive)
    if claim == "no-ray":
        cfg = _load_config(args.config) if args.config else gadgets.no_ray_config(args.q)
        return gadgets.verify_no_geodesic_ray(cfg, args.q, args.cap or 8)
    if claim == "thm43":
        A = _vecs(args.A)
        host = Configuration(2, A[0], kind=len(A[0]), value_set=ValueSet.finite(A))
        c = gadgets.thm43_cycle_builder(A, _vec(args.target), _point(args.source), _point(args.dest),
                                        host, eps=_num(args.eps), odd=args.odd)
        ok = c.error < float(c.eps)
        return gadgets.GadgetReport("thm43", ok, None if ok else (c.witness,),
                                    {"q": c.q, "p": list(c.p), "Q": c.Q, "residual": c.residual,
                                     "error": c.error, "witness_length": len(c.witness)})
    if claim == "dirichlet":
        r = _nums(args.r)
        p, q = cones.dirichlet_approx(r, args.Q)
        ok = cones.dirichlet_bound_holds(r, p, q, args.Q)
        return gadgets.GadgetReport("dirichlet", ok, None if ok else (p, q), {"p": p, "q": q})
    if claim == "spd":
        A = _vecs(args.A)
        spd = cones.is_strongly_positively_dependent(A)
        interior = cones.conv_contains_origin_interior(A)
        ok = spd or not interior
        return gadgets.GadgetReport("spd", ok, None if ok else (A,),
                                    {"spd": spd, "origin_interior": interior})
    raise ValueError(f"unknown claim {claim!r}")


def cmd_verify(args, manifest) -> int:
    rep = _verify_report(args)
    _emit(args, json_text(rep.to_json()), manifest)
    return EXIT_OK if rep.verified else EXIT_FAILED


def cmd_field(args, manifest) -> int:
    if args.action == "build":
        K = fields.cross_polytope(args.dim, 1)
        A = _nums(args.A)
        f = fields.build_star_field(K, A, _num(args.eps))
        if args.alternate:
            f = fields.alternate_field(f, _num(args.eps))
        if args.theta:
            f = fields.cone_and_grid_field(f, _num(args.theta))
        _emit(args, json_text(f.to_json()), manifest)
        return EXIT_OK
    with open(args.field) as fh:
        f = fields.CostField.from_json(json.load(fh))
    manifest.inputs.append(args.field)
    if args.action == "evaluate":
        v = f.value_at(_vec(args.point))
        _emit(args, json_text({"value": v}), manifest)
        return EXIT_OK
    pts = fields.unit_ball(f, args.grid)
    _emit(args, points_csv(pts), manifest)
    return EXIT_OK


def cmd_cone(args, manifest) -> int:
    if args.action == "in-cone":
        cert = cones.in_cone(_vec(args.vector), _vecs(args.A))
        out = cert.to_json()
    elif args.action == "spd":
        A = _vecs(args.A)
        out = {"spd": cones.is_strongly_positively_dependent(A),
               "origin_interior": cones.conv_contains_origin_interior(A),
               "positive": cones.is_positive(A), "ray_contained": cones.is_ray_contained(A)}
    elif args.action == "dirichlet":
        p, q = cones.dirichlet_approx(_nums(args.r), args.Q)
        out = {"p": p, "q": q}
    else:
        out = {"elements": sorted(cones.monoid_elements(_vecs(args.A), args.max_total))}
    _emit(args, json_text(out), manifest)
    return EXIT_OK


def cmd_gadget(args, manifest) -> int:
    kind = args.kind
    if kind == "skew":
        params = gadgets.choose_gadget_params(2, args.m, args.a, args.b)
        if args.minimal:
            params = gadgets.minimal_verified_params(params)
        cfg, _ = gadgets.skew_box_config(params)
    elif kind == "alternating":
        q, r, qq = args.hilbert_params
        params = gadgets.SkewBoxParams(2, 1, q, r, qq, proof_faithful=False)
        cfg = gadgets.bfs_alternating_config(params, _vec(args.va), _vec(args.vb)).config
    elif kind == "lemma52":
        cfg, _, _ = gadgets.lemma52_counterexample(_vec(args.va), _vec(args.vb))
    elif kind == "lemma53-eq":
        cfg = gadgets.lemma53_equal_norm_config(_vec(args.va), _vec(args.vb))[0]
    elif kind == "lemma53-neq":
        cfg = gadgets.lemma53_unequal_norm_config(_vec(args.va), _vec(args.vb), args.M).config
    else:
        cfg = gadgets.no_ray_config(args.q)
    _emit(args, json_text(cfg.to_json()), manifest)
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="percolab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--out", help="write the result here instead of stdout")
        p.add_argument("--manifest", help="write a run manifest (JSON) here")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("passage", help="passage time between two points")
    p.add_argument("--config", required=True)
    p.add_argument("--source", required=True, help="x0,x1,...")
    p.add_argument("--target", required=True)
    p.add_argument("--cap", type=int, help="length cap for vector configurations")
    p.add_argument("--box", help="lo:hi search box, e.g. -5,-5:5,5")
    common(p)

    p = sub.add_parser("ball", help="lattice balls B(t) or a convergence trace")
    p.add_argument("--config", required=True)
    p.add_argument("--t", required=True, help="comma-separated times")
    p.add_argument("--box")
    p.add_argument("--svg", help="SVG path (planar only)")
    p.add_argument("--trace", action="store_true", help="emit (t, d_H) against an l1 ball")
    p.add_argument("--target-radius", default="1")
    p.add_argument("--sample", type=int, default=64, help="l1 target sampling density")
    common(p)

    p = sub.add_parser("verify", help="run a gadget verifier")
    p.add_argument("--claim", required=True, choices=["funnel", "funnel-h", "lemma52", "lemma53-eq",
                                                       "lemma53-neq", "no-ray", "thm43", "dirichlet", "spd"])
    p.add_argument("--config", help="use this configuration instead of the generated one")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--a", type=_num, default=1)
    p.add_argument("--b", type=_num, default=7)
    p.add_argument("--proof-params", action="store_true", help="skip minimal mode")
    p.add_argument("--va", default="1,0")
    p.add_argument("--vb", default="0,1")
    p.add_argument("--hilbert-params", type=int, nargs=3, default=[7, 45, 262], metavar=("Q", "R", "QP"))
    p.add_argument("--cap", type=int)
    p.add_argument("--M", type=int, default=40)
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--q", type=int, default=10)
    p.add_argument("--A", default="1,0;-1,0")
    p.add_argument("--target", default="0,0", help="target vector m")
    p.add_argument("--source", default="0,0")
    p.add_argument("--dest", default="2,0")
    p.add_argument("--eps", default="1/2")
    p.add_argument("--odd", action="store_true")
    p.add_argument("--r", default="0.5")
    p.add_argument("--Q", type=int, default=10)
    common(p)

    p = sub.add_parser("field", help="build, evaluate or take unit balls of cost fields")
    p.add_argument("action", choices=["build", "evaluate", "unitball"])
    p.add_argument("--field")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--A", default="1,2")
    p.add_argument("--eps", default="1/4")
    p.add_argument("--alternate", action="store_true")
    p.add_argument("--theta", help="cone angle for the cone/grid stage")
    p.add_argument("--point")
    p.add_argument("--grid", type=int, default=8)
    common(p)

    p = sub.add_parser("cone", help="cone membership, dependence tests, Dirichlet, M(A)")
    p.add_argument("action", choices=["in-cone", "spd", "dirichlet", "monoid"])
    p.add_argument("--A", default="1,0;-1,0")
    p.add_argument("--vector")
    p.add_argument("--r", default="0.5")
    p.add_argument("--Q", type=int, default=10)
    p.add_argument("--max-total", type=int, default=4)
    common(p)

    p = sub.add_parser("gadget", help="emit a gadget configuration as JSON")
    p.add_argument("--kind", required=True,
                   choices=["skew", "alternating", "lemma52", "lemma53-eq", "lemma53-neq", "no-ray"])
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--a", type=_num, default=1)
    p.add_argument("--b", type=_num, default=7)
    p.add_argument("--minimal", action="store_true")
    p.add_argument("--va", default="1,0")
    p.add_argument("--vb", default="0,1")
    p.add_argument("--hilbert-params", type=int, nargs=3, default=[7, 45, 262], metavar=("Q", "R", "QP"))
    p.add_argument("--M", type=int, default=40)
    p.add_argument("--q", type=int, default=10)
    common(p)
    return ap


COMMANDS = {"passage": cmd_passage, "ball": cmd_ball, "verify": cmd_verify, "field": cmd_field,
            "cone": cmd_cone, "gadget": cmd_gadget}


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    params = {k: v for k, v in vars(args).items() if k not in ("out", "manifest", "seed", "command")}
    try:
        n_threads = threads()
    except ValueError as exc:
        print(f"percolab: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    params["threads"] = n_threads
    manifest = RunManifest(args.command, json_number(params), seed=args.seed, tool_version=__version__)
    try:
        code = COMMANDS[args.command](args, manifest)
    except Unreachable as exc:
        print(f"percolab: unreachable: {exc}", file=sys.stderr)
        code = EXIT_UNREACHABLE
    except (PercolabError, ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"percolab: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = EXIT_BAD_INPUT
    if args.manifest:
        manifest.write(args.manifest)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
