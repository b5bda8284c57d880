"""Command-line front end.

Subcommands::

    nctails kfunc SEQFILE --t 0.5,1,2 [--out FILE]
    nctails norms SAMPLES.csv [--orlicz-p P] [--lorentz Q R] [--orlicz-lorentz P R] [--pnorms LIST]
    nctails simulate CONFIG --kind KIND --out FILE [--trials N] [--seed S] [--workers W]
    nctails verify CONFIG [--report DIR] [--seed S] [--workers W] [--no-figures]

Exit codes: 0 success, 1 check failure, 2 usage or config error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from pathlib import Path

import numpy as np

from .ri_norms import (
    DivergentIntegralError,
    OrliczParams,
    WeightMode,
    lorentz_function_norm,
    orlicz_exp_norm,
    orlicz_lorentz_norm,
    pnorm_profile,
)
from .sampling import parse_seed
from .sequences import k_profile, read_sequence_file
from .series import SeriesKind, monte_carlo, read_samples_csv
from .verify import ConfigError, load_scenario, run_checks, write_report

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3

SEED_ENV = "NC_TAILS_SEED"


class UsageError(ValueError):
    pass


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _seed(text: str) -> int:
    try:
        return parse_seed(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nctails",
        description="K-functionals, random-series Monte Carlo and tail checks.",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    kf = sub.add_parser("kfunc", help="K_{1,2} profile of a sequence file",
                        description="Exact and Holmstedt K_{1,2}(a, t) for a sequence "
                                    "(one number per line, '#' comments).")
    kf.add_argument("seqfile", metavar="SEQFILE", help="sequence file")
    kf.add_argument("--t", dest="t", action="append", type=_float_list, required=True,
                    help="t value(s); repeat the flag or give a comma list")
    kf.add_argument("--out", help="write the CSV here instead of standard output")

    nm = sub.add_parser("norms", help="rearrangement-invariant norms of a sample CSV",
                        description="Norms of the empirical law in a 'trial,value' CSV. "
                                    "Prints rows norm,value,reliable.")
    nm.add_argument("samples", metavar="SAMPLES", help="CSV written by 'simulate'")
    nm.add_argument("--orlicz-p", action="append", type=float, default=[], metavar="P",
                    help="Orlicz exp(t^P) norm (repeatable)")
    nm.add_argument("--lorentz", action="append", nargs=2, type=float, default=[], metavar=("Q", "R"),
                    help="Lorentz L_{Q,R} norm; R may be inf (repeatable)")
    nm.add_argument("--orlicz-lorentz", action="append", nargs=2, type=float, default=[],
                    metavar=("P", "R"), help="Orlicz-Lorentz exp(t^P),R norm (repeatable)")
    nm.add_argument("--weight-mode", choices=[m.value for m in WeightMode],
                    default=WeightMode.INTEGRABLE.value,
                    help="weight for --orlicz-lorentz (default: integrable)")
    nm.add_argument("--pnorms", type=_float_list, metavar="LIST",
                    help="comma-separated L_p exponents, each >= 1")

    sm = sub.add_parser("simulate", help="Monte Carlo samples of one series",
                        description="Draw samples of one series kind for the blocks of a "
                                    "scenario config; writes CSV plus a JSON sidecar.")
    sm.add_argument("config", metavar="CONFIG", help="scenario JSON")
    sm.add_argument("--kind", required=True,
                    help="epsilon, gauss, gauss_trunc, gauss_star or commutative")
    sm.add_argument("--trials", type=_positive_int, help="number of trials (default: config)")
    sm.add_argument("--seed", type=_seed, help=f"master seed; overrides config and ${SEED_ENV}")
    sm.add_argument("--out", required=True, help="output CSV path")
    sm.add_argument("--workers", type=_positive_int, default=1,
                    help="worker threads; the output does not depend on it")

    vf = sub.add_parser("verify", help="run the checks of a scenario",
                        description="Run a scenario's checks and print one line per check. "
                                    "Exit status 1 when a conclusive check fails.")
    vf.add_argument("config", metavar="CONFIG", help="scenario JSON")
    vf.add_argument("--report", metavar="DIR",
                    help="write report.json, per-check CSV tables, theorem21.tsv and PNG figures")
    vf.add_argument("--seed", type=_seed, help=f"master seed; overrides config and ${SEED_ENV}")
    vf.add_argument("--workers", type=_positive_int, default=1,
                    help="worker threads; the output does not depend on it")
    vf.add_argument("--no-figures", action="store_true", help="skip the PNG figures")
    return parser


def _write_rows(rows, header, out: str | None) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    if out:
        Path(out).write_text(buf.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(buf.getvalue())


def _fmt(value: float) -> str:
    return repr(float(value))


def cmd_kfunc(args) -> int:
    ts = [t for group in args.t for t in group]
    if not ts:
        raise UsageError("--t: no values given")
    if any(not t >= 0 for t in ts):
        raise UsageError("--t: values must be >= 0")
    seq = read_sequence_file(args.seqfile)
    prof = k_profile(seq, ts)
    rows = [[_fmt(t), _fmt(e), _fmt(h)] for t, e, h in prof.rows()]
    _write_rows(rows, ["t", "k_exact", "k_holmstedt"], args.out)
    return EXIT_OK


def cmd_norms(args) -> int:
    for q, r in args.lorentz:
        if not q > 0 or not r > 0:
            raise UsageError(f"--lorentz: Q and R must be positive, got {q:g} {r:g}")
    for p, r in args.orlicz_lorentz:
        if not p > 0 or not r > 0:
            raise UsageError(f"--orlicz-lorentz: P and R must be positive, got {p:g} {r:g}")
    for p in args.orlicz_p:
        if not p > 0:
            raise UsageError(f"--orlicz-p: P must be positive, got {p:g}")
    if args.pnorms and any(not p >= 1 for p in args.pnorms):
        raise UsageError("--pnorms: exponents must be >= 1")
    if not (args.orlicz_p or args.lorentz or args.orlicz_lorentz or args.pnorms):
        raise UsageError("request at least one norm")

    x = read_samples_csv(args.samples)
    rows = []
    for p in args.orlicz_p:
        rows.append([f"orlicz_exp p={p:g}", _fmt(orlicz_exp_norm(x, p)), "true"])
    for q, r in args.lorentz:
        rows.append([f"lorentz q={q:g} r={r:g}", _fmt(lorentz_function_norm(x, q, r)), "true"])
    mode = WeightMode(args.weight_mode)
    for p, r in args.orlicz_lorentz:
        name = f"orlicz_lorentz p={p:g} r={r:g} {mode.value}"
        try:
            rows.append([name, _fmt(orlicz_lorentz_norm(x, OrliczParams(p, r, mode))), "true"])
        except DivergentIntegralError:
            rows.append([name, "inf", "false"])
    if args.pnorms:
        for entry in pnorm_profile(x, args.pnorms):
            rows.append([f"lp p={entry.p:g}", _fmt(entry.norm), "true" if entry.reliable else "false"])
    _write_rows(rows, ["norm", "value", "reliable"], None)
    return EXIT_OK


def _scenario(args):
    fallback = args.seed if args.seed is not None else os.environ.get(SEED_ENV)
    scenario = load_scenario(args.config, seed_fallback=fallback)
    if args.seed is not None:
        scenario = scenario.replace(master_seed=args.seed)
    return scenario


def cmd_simulate(args) -> int:
    try:
        scenario = _scenario(args)
        kind = SeriesKind.parse(args.kind, lam=scenario.lam)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    trials = args.trials or scenario.trials
    sample_set = monte_carlo(scenario.blocks, kind, trials, scenario.master_seed, args.workers)
    sample_set.write_csv(args.out)
    x = sample_set.samples
    std = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    print(f"kind={kind.name} trials={trials} seed={scenario.master_seed} "
          f"mean={x.mean():.6g} std={std:.6g} min={x.min():.6g} max={x.max():.6g}")
    return EXIT_OK


def cmd_verify(args) -> int:
    scenario = _scenario(args)
    reports = run_checks(scenario, args.workers)
    for r in reports:
        verdict = {True: "PASS", False: "FAIL", None: "INCONCLUSIVE"}[r.passed]
        consts = " ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
                          for k, v in r.fitted_constants.items())
        print(f"{verdict:<12} {r.check_id:<20} {consts}")
    if args.report:
        write_report(scenario, reports, args.report, figures=not args.no_figures)
    failed = any(r.passed is False for r in reports)
    return EXIT_CHECK_FAILED if failed else EXIT_OK


COMMANDS = {"kfunc": cmd_kfunc, "norms": cmd_norms, "simulate": cmd_simulate, "verify": cmd_verify}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except OSError as exc:
        name = exc.filename if exc.filename is not None else ""
        print(f"nctails: I/O error: {exc.strerror or exc} {name}".rstrip(), file=sys.stderr)
        return EXIT_IO
    except (ConfigError, UsageError, ValueError) as exc:
        print(f"nctails: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
