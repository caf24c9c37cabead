"""Command-line front end: ``kakeya-lab <module> <command> [options]``.

Exit codes: 0 success, 1 library or I/O error, 2 constraint violation,
64 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import bounds, filterbank, multiplier, sphere
from .besicovitch import FCurve, f_curve, keich_family, optimize_family
from .errors import ConstraintViolation, InvalidArgument, KakeyaLabError
from .report import BoundReport, to_jsonable
from .tubes import TubeFamily

SCHEMA_VERSION = "1"
EXIT_OK, EXIT_ERROR, EXIT_CONSTRAINT, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


@dataclass
class RunConfig:
    """Everything needed to reproduce a run."""

    subcommand: str
    params: dict = field(default_factory=dict)
    seed: int | None = None
    resolution: str | None = None
    outputs: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return to_jsonable({"subcommand": self.subcommand, "params": self.params, "seed": self.seed,
                            "resolution": self.resolution, "outputs": self.outputs})


# ------------------------------------------------------------ parsing helpers

def int_range(text: str) -> list:
    """'4..9' -> [4, ..., 9]; '1,3,5' -> [1, 3, 5]; '6' -> [6]."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(t) for t in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad integer range {text!r}") from exc


def pair(text: str) -> tuple:
    try:
        a, b = (float(t) for t in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected 'a,b', got {text!r}") from exc
    return a, b


def dumps(obj) -> str:
    # json uses repr for floats: shortest round-trip decimal
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write(text: str, path: str | None, out):
    if path in (None, "-"):
        out.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def report_document(reports, cfg: RunConfig) -> dict:
    return {"schema": f"kakeya_lab/reports/v{SCHEMA_VERSION}", "run_config": cfg.to_dict(),
            "reports": [r.to_dict() for r in reports]}


def read_reports(text: str) -> list:
    doc = json.loads(text)
    items = doc["reports"] if isinstance(doc, dict) and "reports" in doc else doc
    if isinstance(items, dict):
        items = [items]
    return [BoundReport.from_dict(d) for d in items]


def family_document(fam: TubeFamily, cfg: RunConfig) -> dict:
    doc = fam.to_dict()
    doc["schema"] = f"kakeya_lab/family/v{SCHEMA_VERSION}"
    doc["meta"]["run_config"] = cfg.to_dict()
    return doc


def load_family(path: str) -> TubeFamily:
    with open(path) as fh:
        return TubeFamily.from_dict(json.load(fh))


def load_sampled(path: str) -> filterbank.SampledFunction:
    with open(path) as fh:
        return filterbank.SampledFunction.from_csv(fh.read())


# ------------------------------------------------------------ plot data

def _lookup(rep: BoundReport, key: str):
    if key == "value":
        return rep.value
    if key == "slack_min":
        slacks = rep.data.get("slacks")
        return min(slacks.values()) if slacks else None
    for src in (rep.params, rep.params.get("family_params", {}), rep.data):
        if isinstance(src, dict) and key in src:
            return src[key]
    return None


def emit_plotdata(reports, axis: str = "k", fields=("value",), group: str | None = None) -> str:
    """Tidy CSV, one row per report (or per curve point for an FCurve).

    ``group`` names a parameter distinguishing several series (long format); an
    axis value missing, or repeated within a series, raises InvalidArgument.
    """
    if isinstance(reports, FCurve):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "delta", "epsilon", "err"])
        for p in reports.points:
            w.writerow([p["k"], repr(float(p["delta"])), repr(float(p["epsilon"])), repr(float(p["err"]))])
        return buf.getvalue()
    reports = list(reports)
    if not reports:
        raise InvalidArgument("no reports to emit")
    rows, seen = [], set()
    for rep in reports:
        x = _lookup(rep, axis)
        if x is None:
            raise InvalidArgument(f"report {rep.name!r} has no axis value {axis!r}")
        g = None
        if group is not None:
            g = _lookup(rep, group)
            g = json.dumps(g, sort_keys=True) if isinstance(g, (dict, list)) else g
        if (g, x) in seen:
            raise InvalidArgument(f"axis value {axis}={x} repeated within a series")
        seen.add((g, x))
        rows.append(([g] if group is not None else []) + [x] + [_lookup(rep, f) for f in fields])
    if group is None and len({r.name for r in reports}) > 1:
        raise InvalidArgument("reports of different kinds need a group column")
    names = {"value": "lower_bound"} if reports[0].name == "certify_lower_bound" else {}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(([group] if group is not None else []) + [axis] + [names.get(f, f) for f in fields])
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


# ------------------------------------------------------------ commands

def _tubes(args, cfg, out):
    if args.cmd == "keich":
        fam = keich_family(args.k, args.window)
        _write(dumps(family_document(fam, cfg)), args.out, out)
    elif args.cmd == "optimize":
        fam = optimize_family(args.n, args.delta, args.seed, args.iters)
        _write(dumps(family_document(fam, cfg)), args.out, out)
    elif args.cmd == "fcurve":
        curve = f_curve(args.ks, mode=args.mode, h_factor=args.resolution, seed=args.seed or 0,
                        iters=args.iters)
        _write(curve.to_csv(), args.out, out)
        if args.report:
            _write(dumps({"run_config": cfg.to_dict(), "curve": curve.to_dict()}), args.report, out)
    return EXIT_OK


def _lp(args, cfg, out):
    f = load_sampled(args.input)
    if args.cmd == "coeffs":
        pieces = filterbank.lp_coefficients(f, args.levels, periodic=args.periodic)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cplx = any(not p.is_real for p in pieces)
        w.writerow(["n", "x", "re"] + (["im"] if cplx else []))
        for n, p in enumerate(pieces):
            for x, v in zip(p.x, p.values):
                row = [n, repr(float(x)), repr(float(np.real(v)))]
                if cplx:
                    row.append(repr(float(np.imag(v))))
                w.writerow(row)
        _write(buf.getvalue(), args.out, out)
        return EXIT_OK
    if args.cmd == "classify":
        rep = filterbank.classify_b0(f, args.levels, periodic=args.periodic)
    else:
        val = filterbank.zygmund_modulus(f, args.h)
        rep = BoundReport(name="zygmund_modulus", value=val, params={"h": args.h},
                          provenance=["second difference quotient of the samples"])
    _write(dumps(report_document([rep], cfg)), args.out, out)
    return EXIT_OK


def _bounds(args, cfg, out):
    fds = [bounds.FModel.parse(t) for t in args.fd]
    reps = []
    for fd in fds:
        if args.cmd == "wn":
            for n in args.n:
                if args.domain == "euclid":
                    reps.append(bounds.wn_bound_euclidean(fd, args.p, n))
                else:
                    reps.append(bounds.wn_bound_spherical(fd, args.p, n, args.theta))
        elif args.cmd == "modulus":
            if args.domain == "euclid":
                reps.append(bounds.modulus_bound_euclidean(fd, args.p, args.gap))
            else:
                reps.append(bounds.modulus_bound_spherical(fd, args.p, args.theta, args.theta + args.gap))
        else:
            reps.append(bounds.integrability_test(fd, args.p, args.weight))
    text = dumps(report_document(reps, cfg))
    _write(text, args.out, out)
    if args.plot:
        _write(emit_plotdata(reps, "n" if args.cmd == "wn" else "p", group="fd"), args.plot, out)
    return EXIT_OK


def _multiplier(args, cfg, out):
    if args.cmd == "certify":
        p = args.p if args.p < 2 else args.p / (args.p - 1)  # duality: certify the conjugate
        cfg.params["p_certified"] = p
        fam = load_family(args.family)
        rep = multiplier.certify_lower_bound(fam, multiplier.parse_profile(args.symbol), p, args.r,
                                             n=args.grid)
    else:
        m = multiplier.parse_profile(args.m)
        F = load_sampled(args.F) if args.F else filterbank.SampledFunction.from_callable(
            lambda x: multiplier.bump(x, -1.0, 1.0), -1.0, 1.0 / 1024, 2049)
        G = load_sampled(args.G) if args.G else F
        rep = multiplier.change_of_variable_check(F, G, m, args.r1, args.r2)
    _write(dumps(report_document([rep], cfg)), args.out, out)
    return EXIT_OK


def _sphere(args, cfg, out):
    if args.cmd == "distortion":
        conf = sphere.ReflectedPoleConfig(args.theta, args.r, args.d)
        radius = args.radius if args.radius is not None else args.r / 100
        cfg.params["radius"] = radius
        rep = sphere.psi_distortion_check(conf, args.samples, radius, args.seed)
    elif args.cmd == "msp":
        m = sphere.parse_sphere_profile(args.m)
        pts = (sphere.SphereSample.fibonacci(args.points) if args.sampling == "fibonacci"
               else sphere.SphereSample.random(args.points, 2, args.seed))
        rep = sphere.msp_lower_bound(m, pts, args.p, args.trials, args.seed,
                                     diagonal=args.diagonal)
        rep.data.pop("best_matrix", None)
    else:
        m = sphere.parse_sphere_profile(args.m)
        norms = sphere.spherical_sup_norms(m, args.levels, args.grid)
        rep = BoundReport(name="spherical_lp", value=float(norms.max()), params={"levels": args.levels},
                          provenance=["dyadic pieces of the symbol composed with cosine"],
                          data={"sup_norms": norms})
    _write(dumps(report_document([rep], cfg)), args.out, out)
    return EXIT_OK


def _plot(args, cfg, out):
    reps = []
    for path in args.inputs:
        with open(path) as fh:
            reps += read_reports(fh.read())
    _write(emit_plotdata(reps, args.axis, tuple(args.fields.split(",")), args.group), args.out, out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--grid", type=int, default=None)
    common.add_argument("--out", default=None, help="output path (default: stdout)")

    top = _Parser(prog="kakeya-lab", description=__doc__.splitlines()[0])
    mods = top.add_subparsers(dest="module", required=True, parser_class=_Parser)

    def sub(mod, name, **kw):
        return mod.add_parser(name, parents=[common], **kw)

    t = mods.add_parser("tubes").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    s = sub(t, "keich")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--window", type=pair, default=(2.0, 3.0))
    s = sub(t, "optimize")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--iters", type=int, default=2000)
    s = sub(t, "fcurve")
    s.add_argument("--ks", type=int_range, default=list(range(4, 10)))
    s.add_argument("--mode", choices=["keich", "separated", "optimized"], default="keich")
    s.add_argument("--resolution", type=float, default=0.125, help="raster step as a fraction of delta")
    s.add_argument("--iters", type=int, default=2000)
    s.add_argument("--report", default=None, help="also write the fit as JSON here")

    lp = mods.add_parser("lp").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    for name in ("coeffs", "classify", "zygmund"):
        s = sub(lp, name)
        s.add_argument("--in", dest="input", required=True)
        s.add_argument("--periodic", action="store_true")
        if name != "zygmund":
            s.add_argument("--levels", type=int, default=12 if name == "coeffs" else 20)
        else:
            s.add_argument("--h", type=float, required=True)

    b = mods.add_parser("bounds").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    for name in ("wn", "modulus", "integrable"):
        s = sub(b, name)
        s.add_argument("--fd", action="append", required=True, help="log:A or power:E (repeatable)")
        s.add_argument("--p", type=float, required=True)
        s.add_argument("--plot", default=None)
        if name == "wn":
            s.add_argument("--n", type=int_range, default=list(range(1, 21)))
        if name in ("wn", "modulus"):
            s.add_argument("--domain", choices=["euclid", "sphere"], default="euclid")
            s.add_argument("--theta", type=float, default=math.pi / 2)
        if name == "modulus":
            s.add_argument("--gap", type=float, required=True)
        if name == "integrable":
            s.add_argument("--weight", choices=["none", "loglog"], default="none")

    mu = mods.add_parser("multiplier").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    s = sub(mu, "certify")
    s.add_argument("--family", required=True)
    s.add_argument("--symbol", default="ball")
    s.add_argument("--p", type=float, default=4.0 / 3.0)
    s.add_argument("--r", type=float, default=4096.0)
    s = sub(mu, "cov-check")
    s.add_argument("--r1", type=float, required=True)
    s.add_argument("--r2", type=float, required=True)
    s.add_argument("--m", required=True)
    s.add_argument("--F", default=None)
    s.add_argument("--G", default=None)

    sp = mods.add_parser("sphere").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    s = sub(sp, "distortion")
    s.add_argument("--r", type=float, required=True)
    s.add_argument("--theta", type=float, required=True)
    s.add_argument("--samples", type=int, default=10000)
    s.add_argument("--radius", type=float, default=None, help="default r/100")
    s.add_argument("--d", type=int, default=2)
    s = sub(sp, "msp")
    s.add_argument("--m", required=True)
    s.add_argument("--points", type=int, default=200)
    s.add_argument("--p", type=float, default=4.0)
    s.add_argument("--trials", type=int, default=64)
    s.add_argument("--diagonal", type=float, default=None)
    s.add_argument("--sampling", choices=["fibonacci", "random"], default="fibonacci")
    s = sub(sp, "lp")
    s.add_argument("--m", required=True)
    s.add_argument("--levels", type=int, default=12)

    s = mods.add_parser("plotdata", parents=[common])
    s.add_argument("inputs", nargs="+")
    s.add_argument("--axis", default="k")
    s.add_argument("--fields", default="value")
    s.add_argument("--group", default=None)
    return top


def _needs_seed(args) -> bool:
    cmd = (args.module, getattr(args, "cmd", None))
    if cmd in (("tubes", "optimize"), ("sphere", "distortion"), ("sphere", "msp")):
        return True
    return cmd == ("tubes", "fcurve") and args.mode == "optimized"


HANDLERS = {"tubes": _tubes, "lp": _lp, "bounds": _bounds, "multiplier": _multiplier,
            "sphere": _sphere, "plotdata": _plot}


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        err.write(f"kakeya-lab: usage error: {exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    if args.seed is None and _needs_seed(args):
        err.write("kakeya-lab: usage error: this command is randomized and needs --seed\n")
        return EXIT_USAGE
    params = {k: v for k, v in vars(args).items()
              if k not in ("module", "cmd", "seed", "out", "grid")}
    if args.grid is None and args.module in ("multiplier",):
        args.grid = 2048
    cfg = RunConfig(" ".join(x for x in (args.module, getattr(args, "cmd", None)) if x), params,
                    args.seed, None if args.grid is None else f"grid={args.grid}",
                    [args.out] if args.out else [])
    try:
        return HANDLERS[args.module](args, cfg, out)
    except ConstraintViolation as exc:
        err.write(f"kakeya-lab: constraint violation: {exc}\n")
        return EXIT_CONSTRAINT
    except (KakeyaLabError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        err.write(f"kakeya-lab: error: {exc}\n")
        return EXIT_ERROR


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
