"""Command-line front end.

    bohl-spectra spectrum --kind ed --gen diag --entries 2,0.5 --horizon 20000
    bohl-spectra exponents --gen constant --matrix 2 --direction 1 --horizon 1000
    bohl-spectra check --suite all

Exit status: 0 success, 1 computation error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import theoremcheck as tc
from .exponents import bohl_exponents_direction, bohl_exponents_fullspace
from .propagation import WindowConfig, propagate_direction
from .spectra import SpectrumConfig, _clean, classify_gamma, spectrum
from .systems import SystemSpec, load_system, validate_lyapunov
from .triangularize import qr_normal_form

GENERATORS = ("constant", "periodic", "diag", "upper", "dyadic", "random_qdq", "file")


class UsageError(Exception):
    pass


def _floats(text, what):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise UsageError(f"{what} is empty")
    return vals


def _square(vals, what):
    d = int(round(math.sqrt(len(vals))))
    if d * d != len(vals):
        raise UsageError(f"{what}: {len(vals)} entries do not form a square matrix")
    return np.array(vals).reshape(d, d).tolist(), d


def spec_from_args(args):
    """SystemSpec from --spec or the inline generator flags."""
    if args.spec:
        if args.gen:
            raise UsageError("give either --spec or --gen, not both")
        spec = SystemSpec.from_json(args.spec)
        spec.horizon_hint = args.horizon
        return spec
    g = args.gen
    if g is None:
        raise UsageError("a system is required: --spec FILE or --gen KIND")
    h = args.horizon

    def need(flag):
        val = getattr(args, flag)
        if val is None:
            raise UsageError(f"--gen {g} needs --{flag.replace('_', '-')}")
        return val

    if g == "constant":
        m, d = _square(_floats(need("matrix"), "--matrix"), "--matrix")
        return SystemSpec("constant", d, {"matrix": m}, h)
    if g in ("periodic", "upper"):
        mats = [_square(_floats(part, "--matrices"), "--matrices")
                for part in need("matrices").split(";") if part.strip()]
        if len({d for _, d in mats}) != 1:
            raise UsageError("--matrices: all matrices need the same size")
        kind = "periodic" if g == "periodic" else "upper_triangular"
        return SystemSpec(kind, mats[0][1], {"matrices": [m for m, _ in mats]}, h)
    if g == "diag":
        entries = []
        for part in need("entries").split(","):
            vals = _floats(part.replace("|", ","), "--entries")
            entries.append(vals[0] if len(vals) == 1 else vals)
        return SystemSpec("diagonal", len(entries), {"entries": entries}, h)
    if g == "dyadic":
        return SystemSpec("dyadic_switching_scalar", 1, {"amplitude": args.amplitude}, h)
    if g == "random_qdq":
        lo, hi = _floats(args.range, "--range") if args.range else (0.5, 2.0)
        if not 0 < lo <= hi:
            raise UsageError("--range needs 0 < lo <= hi")
        return SystemSpec("random_qdq", need("dim"), {"seed": args.seed, "range": [lo, hi]}, h)
    if g == "file":
        from .systems import load_matrix_file
        d = args.dim or load_matrix_file(need("path")).shape[1]
        return SystemSpec("file", d, {"path": need("path"), "format": "json-matrices"}, h)
    raise UsageError(f"unknown generator {g!r}")


def _window(args):
    try:
        return WindowConfig.default(args.horizon, args.n_last, args.representation)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _spectrum_cfg(args):
    return SpectrumConfig(_window(args), args.grid_tol, args.alpha_min, args.samples, args.seed)


def dump_json(obj):
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


# --------------------------------------------------------------------------
# commands


def cmd_spectrum(args):
    seq = load_system(spec_from_args(args))
    return dump_json(spectrum(seq, args.kind, _spectrum_cfg(args)).to_dict()), 0


def cmd_exponents(args):
    seq = load_system(spec_from_args(args))
    win = _window(args)
    if args.direction is None:
        est = bohl_exponents_fullspace(seq, win)
    else:
        x0 = _floats(args.direction, "--direction")
        if len(x0) != seq.dim:
            raise UsageError(f"--direction has {len(x0)} entries, system dimension is {seq.dim}")
        est = bohl_exponents_direction(propagate_direction(seq, x0, win.n_max), win)
    if args.format == "csv":
        return _csv(["N", "sup", "inf"], est.per_threshold), 0
    return dump_json(est.to_dict()), 0


def cmd_triangularize(args):
    """Writes B (and T) to files; the summary goes to stdout."""
    if not args.output:
        raise UsageError("triangularize needs --output for the B matrices")
    seq = load_system(spec_from_args(args))
    tri = qr_normal_form(seq, args.horizon)
    tri.dump(args.output, args.frames_output)
    summary = {"b_path": args.output, "t_path": args.frames_output, "n": tri.n_max,
               "dim": tri.dim, "residual": tri.residual, "orthogonality": tri.orthogonality}
    return dump_json(summary), 0


def cmd_classify(args):
    seq = load_system(spec_from_args(args))
    cfg = _spectrum_cfg(args)
    gammas = _floats(args.gamma, "--gamma")
    verdicts = [classify_gamma(seq, g, args.mode, cfg) for g in gammas]
    if args.format == "csv":
        return _csv(["gamma", "verdict", "margin"],
                    [(v.gamma, v.verdict, v.margin) for v in verdicts]), 0
    out = verdicts[0].to_dict() if len(verdicts) == 1 else [v.to_dict() for v in verdicts]
    return dump_json(out), 0


def cmd_check(args):
    horizons = tc.DEFAULT_HORIZONS if args.horizon_given is None else \
        (max(2, args.horizon_given // 10), args.horizon_given)
    cfg = tc.CheckConfig(args.grid_tol, args.alpha_min, args.samples,
                         threads=args.threads, seed=args.seed)
    report = tc.run_suite(args.suite, cfg, horizons)
    out = report.to_dict()
    out["config"] = {"suite": args.suite, "horizons": list(horizons),
                     "grid_tol": args.grid_tol, "alpha_min": args.alpha_min,
                     "samples_per_dim": args.samples, "seed": args.seed}
    return dump_json(out), 0 if report.ok else 1


def cmd_validate(args):
    seq = load_system(spec_from_args(args))
    return dump_json(validate_lyapunov(seq, args.horizon).to_dict()), 0


COMMANDS = {"spectrum": cmd_spectrum, "exponents": cmd_exponents,
            "triangularize": cmd_triangularize, "classify": cmd_classify,
            "check": cmd_check, "validate": cmd_validate}
CSV_OK = {"exponents", "classify"}


def _positive_int(text):
    try:
        v = int(float(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v <= 0 or v != float(text):
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--horizon", type=_positive_int, default=None,
                        help="steps to analyse (default 100000)")
    common.add_argument("--grid-tol", type=_positive_float, default=1e-2)
    common.add_argument("--alpha-min", type=_positive_float, default=1e-2)
    common.add_argument("--n-last", type=_positive_int, default=None,
                        help="largest window threshold (default horizon // 8)")
    common.add_argument("--representation", choices=("all_m", "m_beyond_N"), default="all_m")
    common.add_argument("--samples", type=int, default=64,
                        help="sampled directions per dimension")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=_positive_int, default=None)
    common.add_argument("--output", "-o", default=None, help="output path (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    system = argparse.ArgumentParser(add_help=False)
    system.add_argument("--spec", help="system spec JSON file")
    system.add_argument("--gen", choices=GENERATORS)
    system.add_argument("--matrix", help="row-major entries, e.g. 2,1,0,0.5")
    system.add_argument("--matrices", help="';'-separated row-major matrices")
    system.add_argument("--entries", help="diagonal entries; '|' separates a periodic entry")
    system.add_argument("--dim", type=_positive_int)
    system.add_argument("--range", help="lo,hi singular value range for random_qdq")
    system.add_argument("--amplitude", type=_positive_float, default=1.0)
    system.add_argument("--path", help="matrix file for --gen file")

    p = argparse.ArgumentParser(prog="bohl-spectra",
                                description="Bohl exponents and dichotomy spectra of x(n+1) = A(n) x(n).")
    sub = p.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("spectrum", parents=[common, system])
    sp.add_argument("--kind", choices=("ed", "bd", "bohl"), required=True)
    sp = sub.add_parser("exponents", parents=[common, system])
    sp.add_argument("--direction", help="initial vector; omit for the whole space")
    sp = sub.add_parser("triangularize", parents=[common, system])
    sp.add_argument("--frames-output", help="where to write the orthogonal frames T(n)")
    sp = sub.add_parser("classify", parents=[common, system])
    sp.add_argument("--gamma", required=True, help="value or comma-separated values")
    sp.add_argument("--mode", choices=("bd", "ed"), required=True)
    sp = sub.add_parser("check", parents=[common])
    sp.add_argument("--suite", choices=tc.SUITES + ("all",), required=True)
    sub.add_parser("validate", parents=[common, system])
    return p


def run_cli(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.horizon_given = args.horizon
    if args.horizon is None:
        args.horizon = 100_000
    if args.threads is None:
        args.threads = tc.default_threads()
    if args.format == "csv" and args.command not in CSV_OK:
        print(f"bohl-spectra: error: --format csv is not available for {args.command}", file=stderr)
        return 2
    if args.samples < 0:
        print("bohl-spectra: error: --samples must be >= 0", file=stderr)
        return 2
    try:
        res = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"bohl-spectra: error: {exc}", file=stderr)
        return 2
    except Exception as exc:  # any failure inside the computation
        print(f"bohl-spectra: {type(exc).__name__}: {exc}", file=stderr)
        return 1
    text, code = res
    if args.output and args.command != "triangularize":
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return code


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
