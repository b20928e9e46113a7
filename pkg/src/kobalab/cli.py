"""Command-line front end: one subcommand per operation, JSON or CSV output."""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import __version__
from .domains import domain_from_json, local_hausdorff
from .errors import BudgetExhausted, DimensionError, KobalabError, PreconditionError, SingularMapError
from .finite_type import line_type, m_convexity_constant
from .hyperbolicity import fat_triangle_witness, four_point_scan
from .kobayashi import DEFAULT_BUDGET, distance_bracket, finsler_bracket, quasi_geodesic, verify_quasi_geodesic
from .linalg import cvec
from .polynomial import HermitianPolynomial, multitype
from .rescaling import blowup_sequence, distance_continuity_check


class ParseError(Exception):
    pass


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc


def _domain(path):
    try:
        return domain_from_json(_load_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad domain file {path}: {exc}") from exc


def _point(text):
    try:
        return cvec(json.loads(text))
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise ParseError(f"bad point {text!r}: {exc}") from exc


def workers() -> int:
    try:
        return max(1, int(os.environ.get("KOBALAB_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# subcommands: each returns (result document, list of flat records for CSV)

def cmd_distance(a):
    br = distance_bracket(_domain(a.domain), _point(a.p), _point(a.q), a.budget, a.seed)
    doc = br.to_json()
    return doc, [{"lower": br.lower, "upper": br.upper, "methods": "|".join(br.methods)}]


def cmd_finsler(a):
    fb = finsler_bracket(_domain(a.domain), _point(a.p), _point(a.v))
    return fb.to_json(), [fb.to_json()]


def cmd_geodesic(a):
    dom = _domain(a.domain)
    cert = quasi_geodesic(dom, _point(a.p), _point(a.x))
    doc = cert.to_json()
    rows = []
    if not a.no_verify:
        chk = verify_quasi_geodesic(dom, cert, budget=a.budget)
        doc["verification"] = chk.to_json()
        rows = chk.pairs
    return doc, rows or [{"epsilon": cert.epsilon, "A": cert.A, "B": cert.B}]


def cmd_hyperbolicity(a):
    rep = four_point_scan(_domain(a.domain), a.n, range(a.kmin, a.kmax + 1), a.seed, a.budget,
                          workers=workers())
    return rep.to_json(), rep.per_scale


def cmd_witness(a):
    res = fat_triangle_witness(_domain(a.domain), _point(a.o), _point(a.x), _point(a.y), a.M,
                               max_doublings=a.max_doublings)
    return res.to_json(), res.history


def cmd_hausdorff(a):
    est = local_hausdorff(_domain(a.domain), _domain(a.domain2), a.R, a.dirs, a.seed)
    return est.to_json(), [est.to_json()]


def cmd_blowup(a):
    target = _domain(a.target) if a.target else None
    direction = _point(a.direction) if a.direction else None
    tr = blowup_sequence(_domain(a.domain), _point(a.xi), a.n_max, direction=direction, R=a.R,
                         target=target, n_dirs=a.dirs, seed=a.seed)
    doc = tr.to_json()
    rows = [{"n": s["n"], "hausdorff": s["hausdorff"], **{f"tau{i}": t for i, t in enumerate(s["tau"])}}
            for s in doc]
    return {"trace": doc}, rows


def cmd_continuity(a):
    doms = [_domain(p) for p in a.sequence]
    try:
        probes = [(cvec(p), cvec(q)) for p, q in json.loads(a.probes)]
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise ParseError(f"bad probes: {exc}") from exc
    rep = distance_continuity_check(doms, _domain(a.limit), probes, budget=a.budget, seed=a.seed)
    return rep.to_json(), rep.records


def cmd_multitype(a):
    try:
        poly = HermitianPolynomial.from_json(_load_json(a.poly))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad polynomial {a.poly}: {exc}") from exc
    mt = multitype(poly, seed=a.seed)
    doc = mt.to_json()
    return doc, [{"m": " ".join(str(m) for m in doc["m"]), "adapted": doc["adapted"]}]


def cmd_linetype(a):
    res = line_type(_domain(a.domain), _point(a.x), cap=a.cap, seed=a.seed)
    return res.to_json(), [{"line_type": res.label, "cap": res.cap}]


def cmd_mconvex(a):
    rep = m_convexity_constant(_domain(a.domain), a.m, a.R, a.samples, a.seed)
    return rep.to_json(), rep.per_layer


COMMANDS = {
    "distance": cmd_distance,
    "finsler": cmd_finsler,
    "geodesic": cmd_geodesic,
    "hyperbolicity": cmd_hyperbolicity,
    "witness": cmd_witness,
    "hausdorff": cmd_hausdorff,
    "blowup": cmd_blowup,
    "continuity": cmd_continuity,
    "multitype": cmd_multitype,
    "linetype": cmd_linetype,
    "mconvex": cmd_mconvex,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kobalab", description="Kobayashi-metric laboratory for convex domains.")
    ap.add_argument("--version", action="version", version=f"kobalab {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", "-o", default=None, help="output path (default: stdout)")
    common.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="optimizer sweeps per path")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    p = add("distance", "certified Kobayashi distance bracket")
    p.add_argument("--domain", required=True)
    p.add_argument("--p", required=True)
    p.add_argument("--q", required=True)

    p = add("finsler", "two-sided bound for the infinitesimal metric")
    p.add_argument("--domain", required=True)
    p.add_argument("--p", required=True)
    p.add_argument("--v", required=True)

    p = add("geodesic", "quasi-geodesic ray toward a boundary point, with verification")
    p.add_argument("--domain", required=True)
    p.add_argument("--p", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--no-verify", action="store_true")

    p = add("hyperbolicity", "four-point scan over layered boundary scales")
    p.add_argument("--domain", required=True)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--kmin", type=int, default=4)
    p.add_argument("--kmax", type=int, default=12)

    p = add("witness", "fat-triangle witness near a boundary disk")
    p.add_argument("--domain", required=True)
    p.add_argument("--o", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--M", type=float, required=True)
    p.add_argument("--max-doublings", type=int, default=8)

    p = add("hausdorff", "local Hausdorff distance of two domains inside B_R(0)")
    p.add_argument("--domain", required=True)
    p.add_argument("--domain2", required=True)
    p.add_argument("--R", type=float, default=2.0)
    p.add_argument("--dirs", type=int, default=4096)

    p = add("blowup", "affine blow-up trace at a boundary point")
    p.add_argument("--domain", required=True)
    p.add_argument("--xi", required=True)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--R", type=float, default=2.0)
    p.add_argument("--target", default=None)
    p.add_argument("--direction", default=None)
    p.add_argument("--dirs", type=int, default=4096)

    p = add("continuity", "distance brackets along a converging sequence of domains")
    p.add_argument("--sequence", nargs="+", required=True)
    p.add_argument("--limit", required=True)
    p.add_argument("--probes", required=True, help="JSON list of [p, q] pairs")

    p = add("multitype", "multi-type weights and limit polynomial")
    p.add_argument("--poly", required=True)

    p = add("linetype", "line type at a boundary point")
    p.add_argument("--domain", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--cap", type=int, default=16)

    p = add("mconvex", "empirical m-convexity constant")
    p.add_argument("--domain", required=True)
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--R", type=float, default=2.0)
    p.add_argument("--samples", type=int, default=10_000)
    return ap


def _render(doc, rows, args, fmt):
    if fmt == "json":
        return json.dumps(doc, sort_keys=True, indent=2, allow_nan=True) + "\n"
    buf = io.StringIO()
    buf.write(f"# kobalab {__version__}\n")
    buf.write(f"# config {json.dumps(doc['config'], sort_keys=True)}\n")
    if doc.get("error"):
        buf.write(f"# error {doc['error']}\n")
    rows = [dict(r, seed=args.seed) for r in rows]
    keys = sorted({k for r in rows for k in r})
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})
    return buf.getvalue()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = {k: v for k, v in sorted(vars(args).items()) if k != "output"}
    doc = {"command": args.command, "config": config, "version": __version__, "seed": args.seed}
    rows = []
    status = 0
    try:
        result, rows = COMMANDS[args.command](args)
        doc["result"] = result
    except ParseError as exc:
        print(f"kobalab: {exc}", file=sys.stderr)
        return 2
    except BudgetExhausted as exc:
        partial = exc.partial.to_json() if getattr(exc, "partial", None) is not None else None
        doc["result"] = partial
        doc["error"] = str(exc)
        rows = partial.get("history", []) if isinstance(partial, dict) else []
        status = 4
    except (PreconditionError, DimensionError, SingularMapError) as exc:
        doc["error"] = str(exc)
        status = 3
    except KobalabError as exc:
        doc["error"] = str(exc)
        status = 1
    text = _render(doc, rows, args, args.format)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if status:
        print(f"kobalab: {doc.get('error')}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
