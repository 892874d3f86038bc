"""Command-line entry point ``oseenlab``.

Every command writes its outputs and a ``manifest.json`` into a run
directory (``--out``, else ``$OSEENLAB_OUT/<command>-<hash>``, else
``./oseenlab-runs/<command>-<hash>``).  ``oseenlab rerun manifest.json``
repeats a run and checks that every output file is byte-identical.

Exit codes: 0 pass, 1 quantitative failure, 2 configuration error,
3 region not applicable.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import hashlib
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import field as fld
from .errors import ConfigurationError, InputError, OseenLabError, WrapAroundError

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NOT_APPLICABLE = 0, 1, 2, 3
OUT_ENV = "OSEENLAB_OUT"

MUCKENHOUPT_HELP = """\
CSV columns (scan.csv): center_label,center_x,center_y,center_z,radius,ratio
  one row per (centre, radius) of the sup-over-centres scan.
CSV columns (asymptotic.csv): radius,ratio
  origin-centred series used for the growth classification.
stdout: the verdict, one of bounded | log | power(p)."""

DECAY_HELP = """\
CSV columns (results.csv): name,status,passed,predicted,predicted_float,rule,
  slope,r2,stderr,n_points,log_curvature,guard_max,max_safe_t,message
CSV columns (series.csv): name,t,value,guard_ratio
summary.json: {pass_count, fail_count, rows}.
Without --plan a single row is built from the inline flags."""

REGION_HELP = """\
stdout and verdict.json: {"query", "applicable": [{rule, exponents, note}],
  "violated": [{rule, inequality}], "optimality_flag", "notes"}.
Exponents are exact rationals written as strings."""

KERNEL_HELP = "CSV columns (kernel.csv): index,k,s,t,a,alpha,beta,norm"
BALLINT_HELP = "CSV columns (ballint.csv): gamma,delta,radius,center_x,center_y,center_z,value,mc_estimate,mc_stderr"
DUHAMEL_HELP = """\
CSV columns (series.csv): t,weighted_l3,guard_ratio
summary.json: slope fit, predicted bound -1/4+epsilon+alpha+beta/2, pass flag.
All results are a whole-space surrogate of the exterior problem."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _vector(text: str) -> tuple[float, float, float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated numbers")
    return tuple(parts)


def _float_or_inf(text: str) -> float:
    return math.inf if text.strip().lower() in ("inf", "infinity") else float(text)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="oseenlab", description="Weighted decay experiments for the Oseen semigroup.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--out", help="run directory (default from $%s)" % OUT_ENV)
        sp.add_argument("--threads", type=int, default=1, help="FFT and sweep workers")
        sp.add_argument("--seed", type=int, default=0)

    fmt = argparse.RawDescriptionHelpFormatter
    m = sub.add_parser("muckenhoupt", help="A_q ratio scan and growth class", epilog=MUCKENHOUPT_HELP, formatter_class=fmt)
    m.add_argument("--alpha", type=float, required=True)
    m.add_argument("--beta", type=float, required=True)
    m.add_argument("--q", type=float, required=True)
    m.add_argument("--rmax", type=float, default=1e3)
    m.add_argument("--nradii", type=int, default=25)
    m.add_argument("--centers", default="default",
                   help="'default' (origin and +-e1, e2 at r/4, r, 4r) or 'x,y,z;x,y,z;...'")
    common(m)

    d = sub.add_parser("decay", help="semigroup decay sweep", epilog=DECAY_HELP, formatter_class=fmt)
    d.add_argument("--plan", help="JSON plan file")
    d.add_argument("--name", default="inline")
    d.add_argument("--a", type=float, default=1.0)
    d.add_argument("--alpha", default="0")
    d.add_argument("--beta", default="0")
    d.add_argument("--q", default="2")
    d.add_argument("--r", default="2")
    d.add_argument("--deriv", type=int, default=0, choices=(0, 1))
    d.add_argument("--dual", action="store_true")
    d.add_argument("--data", default="compact", choices=("compact", "scaled-gaussian"))
    d.add_argument("--tmin", type=float, default=4.0)
    d.add_argument("--tmax", type=float, default=32.0)
    d.add_argument("--ntimes", type=int, default=10)
    d.add_argument("--n", type=int, default=128)
    d.add_argument("--width", type=float, default=1.0)
    d.add_argument("--half-width", type=float, default=None, help="fix the box instead of sizing it for tmax")
    d.add_argument("--tol", type=float, default=0.1)
    d.add_argument("--rule", default=None)
    d.add_argument("--predicted", default=None)
    common(d)

    r = sub.add_parser("region", help="exact applicability of decay estimates", epilog=REGION_HELP, formatter_class=fmt)
    r.add_argument("--setting", default="exterior", choices=("exterior", "whole-space"))
    r.add_argument("--a", default="positive", choices=("positive", "zero", "dual"))
    r.add_argument("--deriv", default="0", choices=("0", "1", "div"))
    r.add_argument("--q", required=True)
    r.add_argument("--r", required=True)
    r.add_argument("--qs", default=None, help="q1,q2,q3,q4")
    r.add_argument("--alpha", default="0")
    r.add_argument("--beta", default="0")
    r.add_argument("--epsilon", default=None)
    r.add_argument("--regime", default="large-time", choices=("large-time", "small-time"))
    r.add_argument("--dual-weight", action="store_true", help="negative weights with a = 0")
    common(r)

    k = sub.add_parser("kernel", help="weighted L^s norm of a majorant kernel", epilog=KERNEL_HELP, formatter_class=fmt)
    k.add_argument("--i", type=int, default=1, choices=(1, 2, 3, 4))
    k.add_argument("--k", default="0", choices=("0", "e1", "e2", "e3"), help="0 for no derivative")
    k.add_argument("--s", type=float, default=1.0)
    k.add_argument("--t", type=float, default=1.0)
    k.add_argument("--a", type=float, default=0.0)
    k.add_argument("--alpha", type=float, default=0.0)
    k.add_argument("--beta", type=float, default=0.0)
    common(k)

    b = sub.add_parser("ballint", help="weight integral over a ball", epilog=BALLINT_HELP, formatter_class=fmt)
    b.add_argument("--gamma", type=float, required=True)
    b.add_argument("--delta", type=float, required=True)
    b.add_argument("--r", type=_float_or_inf, required=True)
    b.add_argument("--center", type=_vector, default=(0.0, 0.0, 0.0))
    b.add_argument("--mc", type=int, default=0, help="also run a Monte-Carlo check with this many samples")
    common(b)

    u = sub.add_parser("duhamel", help="start-up problem surrogate", epilog=DUHAMEL_HELP, formatter_class=fmt)
    u.add_argument("--forcing", default="f1+f2", choices=("f1", "f2", "f1+f2"))
    u.add_argument("--alpha", type=float, default=0.2)
    u.add_argument("--beta", type=float, default=0.2)
    u.add_argument("--epsilon", type=float, default=0.05)
    u.add_argument("--a", type=float, default=0.25)
    u.add_argument("--n", type=int, default=128)
    u.add_argument("--half-width", type=float, default=84.0)
    u.add_argument("--shift", type=float, default=12.0)
    u.add_argument("--amplitude", type=float, default=0.01)
    u.add_argument("--tmax", type=float, default=64.0)
    u.add_argument("--nodes", type=int, default=96)
    u.add_argument("--psi", default="smoothstep", choices=("smoothstep", "quintic"))
    u.add_argument("--tol", type=float, default=0.1)
    common(u)

    rr = sub.add_parser("rerun", help="repeat a run from its manifest and compare outputs")
    rr.add_argument("manifest")
    rr.add_argument("--out", help="directory for the repeated run")
    return p


# manifest handling


def _params(args: argparse.Namespace) -> dict:
    skip = {"out", "command"}
    out = {}
    for key, val in vars(args).items():
        if key in skip:
            continue
        if isinstance(val, tuple):
            val = list(val)
        if isinstance(val, float) and math.isinf(val):
            val = "inf"
        out[key] = val
    return out


def _run_dir(args: argparse.Namespace) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    digest = hashlib.sha256(json.dumps(_params(args), sort_keys=True).encode()).hexdigest()[:10]
    base = Path(os.environ.get(OUT_ENV, "oseenlab-runs"))
    return base / f"{args.command}-{digest}"


class Run:
    """Collects output files of one command and writes the manifest."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.dir = _run_dir(args)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.outputs: dict[str, str] = {}

    def write(self, name: str, text: str) -> None:
        data = text.encode("utf-8")
        (self.dir / name).write_bytes(data)
        self.outputs[name] = hashlib.sha256(data).hexdigest()

    def write_json(self, name: str, obj) -> None:
        self.write(name, json.dumps(obj, indent=2, default=_json_default) + "\n")

    def finish(self, exit_code: int) -> int:
        manifest = {
            "command": self.args.command,
            "params": _params(self.args),
            "version": __version__,
            "seed": getattr(self.args, "seed", 0),
            "timestamp": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
            "exit_code": exit_code,
            "outputs": self.outputs,
        }
        (self.dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
        print(f"run directory: {self.dir}", file=sys.stderr)
        return exit_code


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    return str(obj)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


# commands


def cmd_muckenhoupt(args) -> int:
    from .muckenhoupt import AqScan, aq_scan_classify
    from .weights import WeightSpec, is_muckenhoupt_admissible

    if not args.rmax > 1:
        raise ConfigurationError("--rmax must exceed 1")
    radii = np.logspace(0, math.log10(args.rmax), args.nradii)
    centers = None
    if args.centers != "default":
        try:
            centers = [_vector(c) for c in args.centers.split(";") if c.strip()]
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise ConfigurationError(f"bad --centers: {exc}") from exc
    weight = WeightSpec(args.alpha, args.beta)
    res = aq_scan_classify(AqScan(weight, args.q, radii, centers))
    run = Run(args)
    run.write("scan.csv", res.to_csv())
    run.write("asymptotic.csv", _csv(["radius", "ratio"], zip(res.asymptotic_radii.tolist(), res.asymptotic_ratio.tolist())))
    adm = is_muckenhoupt_admissible(weight, args.q)
    run.write_json("summary.json", {
        "verdict": res.verdict,
        "label": res.label,
        "slope": res.slope,
        "scan_slope": res.scan_slope,
        "admissible": adm.admissible,
        "violated": adm.violated,
        "fits": {k: v._asdict() for k, v in res.fits.items()},
    })
    print(res.verdict)
    return run.finish(EXIT_PASS)


def cmd_decay(args) -> int:
    from .rates import SweepRow, load_plan, sweep

    if args.plan:
        rows = load_plan(args.plan)
    else:
        rows = [SweepRow(
            args.name, data=args.data, a=args.a, alpha=args.alpha, beta=args.beta, q=args.q, r=args.r,
            deriv=args.deriv, dual=args.dual, t_min=args.tmin, t_max=args.tmax, n_times=args.ntimes, n=args.n,
            width=args.width, tol=args.tol, rule=args.rule, predicted=args.predicted, half_width=args.half_width,
        )]
    res = sweep(rows, workers=max(1, args.threads))
    run = Run(args)
    run.write("results.csv", res.to_csv())
    run.write("series.csv", res.series_csv())
    run.write_json("summary.json", res.summary())
    for row in res.rows:
        slope = "nan" if row.fit is None else f"{row.fit.slope:.4f}"
        pred = "none" if row.predicted is None else str(row.predicted)
        print(f"{row.name}: {row.status} slope={slope} predicted={pred} rule={row.rule}")
    if res.guard_failures:
        for row in res.guard_failures:
            print(f"{row.name}: guard violated; max safe t ~ {row.max_safe_t:.4g}", file=sys.stderr)
        return run.finish(EXIT_CONFIG)
    return run.finish(EXIT_PASS if res.fail_count == 0 else EXIT_FAIL)


def cmd_region(args) -> int:
    from .regions import RateQuery, check

    deriv = "div" if args.deriv == "div" else int(args.deriv)
    qs = tuple(args.qs.split(",")) if args.qs else None
    query = RateQuery(
        args.q, args.r, args.alpha, args.beta, drift=args.a, deriv=deriv, setting=args.setting, regime=args.regime,
        epsilon=args.epsilon, qs=qs, dual_weight=args.dual_weight,
    )
    verdict = check(query)
    out = {"query": query.to_json(), **verdict.to_json()}
    run = Run(args)
    run.write_json("verdict.json", out)
    print(json.dumps(out, indent=2))
    return run.finish(EXIT_PASS if verdict else EXIT_NOT_APPLICABLE)


def cmd_kernel(args) -> int:
    from .semigroup import KernelSpec, OseenParams, kernel_norm

    k = None if args.k == "0" else int(args.k[1]) - 1
    spec = KernelSpec(args.i, OseenParams(args.a, args.t, k), args.alpha, args.beta, args.s)
    value = kernel_norm(spec)
    run = Run(args)
    run.write("kernel.csv", _csv(["index", "k", "s", "t", "a", "alpha", "beta", "norm"],
                                 [(args.i, args.k, args.s, args.t, args.a, args.alpha, args.beta, value)]))
    print(repr(value))
    return run.finish(EXIT_PASS)


def cmd_ballint(args) -> int:
    from .quadrature import BallIntegralSpec, Divergent, ball_integral, ball_integral_mc

    spec = BallIntegralSpec(args.gamma, args.delta, args.r, tuple(args.center))
    value = ball_integral(spec)
    mc = (None, None)
    if args.mc > 0 and not isinstance(value, Divergent):
        mc = ball_integral_mc(spec, args.mc, args.seed)
    shown = f"divergent: {value.reason}" if isinstance(value, Divergent) else repr(value)
    run = Run(args)
    row = (args.gamma, args.delta, args.r, *args.center, "divergent" if isinstance(value, Divergent) else value, *mc)
    run.write("ballint.csv", _csv(
        ["gamma", "delta", "radius", "center_x", "center_y", "center_z", "value", "mc_estimate", "mc_stderr"],
        [tuple("" if v is None else v for v in row)]))
    print(shown)
    if mc[0] is not None:
        print(f"monte-carlo: {mc[0]!r} +- {mc[1]!r}")
    return run.finish(EXIT_PASS)


def cmd_duhamel(args) -> int:
    from .duhamel import StartupConfig, run_startup

    cfg = StartupConfig(
        a=args.a, n=args.n, half_width=args.half_width, shift=args.shift, amplitude=args.amplitude, t_max=args.tmax,
        nodes=args.nodes, alpha=args.alpha, beta=args.beta, epsilon=args.epsilon,
        fit_window=(args.tmax / 10, args.tmax), forcing=args.forcing, psi=args.psi, tol=args.tol,
    )
    res = run_startup(cfg)
    run = Run(args)
    run.write("series.csv", _csv(["t", "weighted_l3", "guard_ratio"], res.rows()))
    run.write_json("summary.json", {
        "label": res.label,
        "forcing": cfg.forcing,
        "bound": cfg.bound,
        "tolerance": cfg.tol,
        "fit": res.fit.to_json(),
        "passed": res.passed,
        "guard_max": float(res.guard.max()),
    })
    print(f"{res.label}: late-time slope {res.fit.slope:.4f} +- {res.fit.stderr:.2g}; "
          f"bound -1/4+eps+alpha+beta/2 = {cfg.bound:.4f} (+{cfg.tol}); {'pass' if res.passed else 'fail'}")
    return run.finish(EXIT_PASS if res.passed else EXIT_FAIL)


def cmd_rerun(args) -> int:
    try:
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
        command, params = manifest["command"], manifest["params"]
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigurationError(f"cannot read manifest: {exc}") from exc
    argv = [command]
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices[command]
    for action in sub._actions:
        if action.dest not in params or action.dest in ("help", "out"):
            continue
        val = params[action.dest]
        flag = action.option_strings[-1] if action.option_strings else None
        if flag is None:
            continue
        if isinstance(action, argparse._StoreTrueAction):
            if val:
                argv.append(flag)
        elif val is not None:
            if isinstance(val, list):
                val = ",".join(str(v) for v in val)
            argv += [flag, str(val)]
    out = args.out or str(Path(args.manifest).resolve().parent) + "-rerun"
    argv += ["--out", out]
    code = main(argv)
    original = Path(args.manifest).resolve().parent
    mismatched = []
    for name, digest in manifest.get("outputs", {}).items():
        new = Path(out) / name
        if not new.exists() or hashlib.sha256(new.read_bytes()).hexdigest() != digest:
            mismatched.append(name)
    if mismatched:
        print(f"outputs differ from {original}: {', '.join(mismatched)}", file=sys.stderr)
        return EXIT_FAIL
    print(f"all {len(manifest.get('outputs', {}))} outputs identical")
    return code


COMMANDS = {
    "muckenhoupt": cmd_muckenhoupt,
    "decay": cmd_decay,
    "region": cmd_region,
    "kernel": cmd_kernel,
    "ballint": cmd_ballint,
    "duhamel": cmd_duhamel,
    "rerun": cmd_rerun,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_CONFIG
    threads = max(1, getattr(args, "threads", 1))
    fld.FFT_WORKERS = threads
    try:
        return COMMANDS[args.command](args)
    except WrapAroundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"max safe t ~ {exc.max_safe_t:.4g}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigurationError, InputError, OseenLabError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
