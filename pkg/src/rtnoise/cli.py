"""Batch command-line front end.

Every command writes CSV (with ``#`` comment lines naming the command and its
parameters) or JSON to stdout or ``--out``.  Output depends only on the flags
and the seed.

Exit codes: 0 success, 1 usage error, 2 model-domain error, 3 fit did not
converge.  Any flag default can be overridden by an environment variable
``RTNOISE_<FLAG>``, e.g. ``RTNOISE_KAPPA=0.05``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from rtnoise import __version__, model
from rtnoise.datasets import DATASET_NAMES, dataset_to_csv, load_dataset, read_csv_dataset
from rtnoise.errors import (
    DatasetNotFoundError,
    ModelDomainError,
    UndefinedFidelityError,
    UndefinedRatioError,
    UndefinedSNRError,
)
from rtnoise.fidelity import (
    CLASSICAL_LIMIT,
    SECURE_THRESHOLD,
    TABLE_RATIO_R,
    counts_for_snr,
    fidelity_from_snr,
    mc_uncertainty,
    table_counts,
)
from rtnoise.fitting import (
    compare_fidelity,
    fit_ccg_vs_attenuation,
    fit_ccg_vs_pump,
    fit_snr_vs_ccg,
    fit_snr_vs_r,
)
from rtnoise.model import SourceParams
from rtnoise.protocol import DEFAULT_DURATION_S, DEFAULT_REP_RATE_HZ, run_three_step

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_NO_FIT = 0, 1, 2, 3
ENV_PREFIX = "RTNOISE_"

DEFAULTS = SourceParams()


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class Sweep:
    var: str
    lo: float
    hi: float
    steps: int
    log: bool

    def values(self) -> np.ndarray:
        if self.log:
            return np.logspace(math.log10(self.lo), math.log10(self.hi), self.steps)
        return np.linspace(self.lo, self.hi, self.steps)


def parse_sweep(text: str, allowed: tuple[str, ...]) -> Sweep:
    """Parse ``var:lo:hi:steps:log|lin``."""
    parts = text.split(":")
    if len(parts) != 5:
        raise UsageError(f"sweep must look like var:lo:hi:steps:log|lin, got {text!r}")
    var, lo, hi, steps, kind = parts
    if var not in allowed:
        raise UsageError(f"cannot sweep {var!r}; choose from {', '.join(allowed)}")
    try:
        lo_f, hi_f, n = float(lo), float(hi), int(steps)
    except ValueError:
        raise UsageError(f"bad numbers in sweep {text!r}") from None
    if kind not in ("log", "lin"):
        raise UsageError("sweep spacing must be 'log' or 'lin'")
    if n < 2:
        raise UsageError("sweep needs at least 2 steps")
    if kind == "log" and (lo_f <= 0 or hi_f <= 0):
        raise UsageError("log sweep needs positive bounds")
    return Sweep(var, lo_f, hi_f, n, kind == "log")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


# ------------------------------------------------------------------ output


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _header(command: str, params: dict) -> str:
    kv = " ".join(f"{k}={_fmt(v)}" for k, v in params.items())
    return f"rtnoise {__version__} {command}\nparams: {kv}"


def _csv(command: str, params: dict, columns: list[str], rows: list[list], extra_comments=()) -> str:
    buf = io.StringIO()
    for line in _header(command, params).splitlines():
        buf.write(f"# {line}\n")
    for line in extra_comments:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json(command: str, params: dict, payload: dict) -> str:
    doc = {"command": command, "version": __version__, "params": params}
    doc.update(payload)
    return json.dumps(doc, indent=2) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _params_from(args) -> SourceParams:
    return SourceParams(
        kappa=args.kappa,
        alpha=args.alpha,
        t1=args.t1,
        t2=args.t2,
        n_terms=args.n_terms,
        scale=args.scale,
        cutoff=args.cutoff,
    )


# ---------------------------------------------------------------- commands


def cmd_sweep_r(args) -> int:
    sweep = parse_sweep(args.sweep, ("R",))
    if sweep.lo <= 0 or sweep.hi > 100:
        raise UsageError("R range must lie inside (0, 100]")
    params = {"kappa": args.kappa, "t2": args.t2, "n_terms": ",".join(map(str, args.n_terms)), "sweep": args.sweep}
    rs = sweep.values()
    curves = []
    for n in args.n_terms:
        if n < 2:
            raise UsageError("n-terms must be >= 2")
        snr = [model.snr_of_R(float(r), args.kappa, args.t2, n) for r in rs]
        r_opt, snr_max = model.optimal_R(args.kappa, args.t2, n)
        curves.append({
            "n_terms": n,
            "R": rs.tolist(),
            "snr_db": [float(model.to_db(s)) for s in snr],
            "r_opt": r_opt,
            "snr_max_db": float(model.to_db(snr_max)),
        })
    if args.format == "json":
        _emit(_json("sweep-r", params, {"curves": curves}), args.out)
        return EXIT_OK
    rows = []
    for c in curves:
        rows += [[c["n_terms"], r, s, 0] for r, s in zip(c["R"], c["snr_db"])]
        rows.append([c["n_terms"], c["r_opt"], c["snr_max_db"], 1])
    _emit(_csv("sweep-r", params, ["n_terms", "R", "snr_db", "is_optimum"], rows), args.out)
    return EXIT_OK


THREE_STEP_COLUMNS = [
    "index", "kappa", "alpha", "t1", "t2", "engine",
    "cc_a", "cc_s", "cc_f", "cc_g", "snr_db", "ratio_r", "negative_genuine",
]


def cmd_three_step(args) -> int:
    base = _params_from(args)
    engines = ["analytic", "oracle"] if args.engine == "both" else [args.engine]
    if args.sample and args.seed is None:
        raise UsageError("--sample needs --seed")
    points = [base]
    if args.sweep:
        sweep = parse_sweep(args.sweep, ("kappa", "alpha", "t1", "t2"))
        points = [base.replace(**{sweep.var: float(v)}) for v in sweep.values()]
    params = {
        "kappa": args.kappa, "alpha": args.alpha, "t1": args.t1, "t2": args.t2,
        "n_terms": args.n_terms, "scale": args.scale, "cutoff": args.cutoff, "engine": args.engine,
        "sample": args.sample, "seed": args.seed, "rep_rate": args.rep_rate, "duration": args.duration,
        "sweep": args.sweep,
    }
    rows, records = [], []
    for i, p in enumerate(points):
        for eng in engines:
            res = run_three_step(
                p, eng,
                sample=args.sample,
                seed=None if args.seed is None else args.seed + i,
                rep_rate_hz=args.rep_rate,
                duration_s=args.duration,
            )
            rows.append([i, abs(p.kappa), abs(p.alpha), p.t1, p.t2, eng, res.cc_a, res.cc_s, res.cc_f,
                         res.cc_g, res.snr_db, res.ratio_R, res.negative_genuine])
            rec = res.to_dict()
            rec["index"] = i
            records.append(rec)
    if args.format == "json":
        _emit(_json("three-step", params, {"results": records}), args.out)
    else:
        _emit(_csv("three-step", params, THREE_STEP_COLUMNS, rows), args.out)
    return EXIT_OK


def cmd_fidelity(args) -> int:
    params = {
        "sweep": args.sweep, "counts": args.counts, "ratio": args.ratio, "trials": args.trials,
        "seed": args.seed, "interval": args.interval, "table": args.table,
    }
    columns = ["snr_db", "f_mean", "f_low", "f_high", "snr", "above_classical", "above_secure"]
    rows = []
    if args.table:
        fid = load_dataset("fidelity_vs_snr")
        columns += ["published_f", "published_low", "published_high"]
        for (snr_db, counts), pt in zip(table_counts(args.ratio), fid.points):
            est = mc_uncertainty(counts, args.trials, args.seed, args.interval)
            rows.append(_fid_row(snr_db, est.mean, est.interval_low, est.interval_high) + [pt.y, pt.y_low, pt.y_high])
    else:
        sweep = parse_sweep(args.sweep, ("snr", "snr_db"))
        vals = sweep.values()
        snrs = 10.0 ** (vals / 10.0) if sweep.var == "snr_db" else vals
        if np.any(snrs <= 0):
            raise UsageError("SNR range must be positive")
        for s in snrs:
            f = fidelity_from_snr(float(s))
            lo = hi = math.nan
            if args.counts is not None:
                est = mc_uncertainty(counts_for_snr(args.counts, float(s), args.ratio), args.trials, args.seed, args.interval)
                lo, hi = est.interval_low, est.interval_high
            rows.append(_fid_row(float(model.to_db(s)), f, lo, hi))
    if args.format == "json":
        recs = [dict(zip(columns, r)) for r in rows]
        _emit(_json("fidelity", params, {"thresholds": {"classical": CLASSICAL_LIMIT, "secure": SECURE_THRESHOLD}, "rows": recs}), args.out)
    else:
        comments = [f"thresholds: classical={CLASSICAL_LIMIT!r} secure={SECURE_THRESHOLD!r}"]
        _emit(_csv("fidelity", params, columns, rows, comments), args.out)
    return EXIT_OK


def _fid_row(snr_db: float, f: float, lo: float, hi: float) -> list:
    snr = 10.0 ** (snr_db / 10.0)
    return [snr_db, f, lo, hi, snr, f > CLASSICAL_LIMIT, f > SECURE_THRESHOLD]


def _run_fits(name: str, data, args) -> list[tuple[str, object]]:
    if name == "snr_vs_r":
        return [(f"N={n}", fit_snr_vs_r(data, n)) for n in args.n_terms]
    if name == "snr_vs_ccg":
        return [("fit", fit_snr_vs_ccg(data))]
    if name == "ccg_vs_pump":
        return [
            ("fit", fit_ccg_vs_pump(data, use_x_errors=args.x_errors)),
            ("free_exponent", fit_ccg_vs_pump(data, free_exponent=True, use_x_errors=args.x_errors)),
        ]
    if name in ("ccg_vs_a1", "ccg_vs_a2"):
        mode = "idler" if name == "ccg_vs_a1" else "signal"
        return [
            ("fit", fit_ccg_vs_attenuation(data, mode, use_x_errors=args.x_errors)),
            ("free_exponent", fit_ccg_vs_attenuation(data, mode, free_exponent=True, use_x_errors=args.x_errors)),
        ]
    if name == "fidelity_vs_snr":
        return [("comparison", compare_fidelity(data))]
    raise DatasetNotFoundError(name)


def cmd_fit(args) -> int:
    if args.data:
        if not args.model:
            raise UsageError("--data needs --model to pick the fit model")
        name = args.model
        data = read_csv_dataset(args.data, name)
    else:
        if not args.dataset:
            raise UsageError("give --dataset or --data")
        name = args.dataset
        data = load_dataset(name)
    if name not in DATASET_NAMES:
        raise DatasetNotFoundError(f"unknown dataset/model {name!r}")
    if name == "snr_vs_r" and any(n not in (2, 3, 4, 5) for n in args.n_terms):
        raise UsageError("snr_vs_r fits support n-terms 2..5")
    fits = _run_fits(name, data, args)
    params = {"dataset": name, "source": args.data or "embedded", "n_terms": ",".join(map(str, args.n_terms)),
              "x_errors": args.x_errors}
    if args.format == "json":
        _emit(_json("fit", params, {"fits": {label: f.to_dict() for label, f in fits}}), args.out)
    else:
        rows, comments = [], []
        for label, f in fits:
            comments.append(f"{label}: {f.to_json()}")
            pred = f.predict(data.x)
            for p, m, r in zip(data.points, pred, f.residuals):
                rows.append([label, float(p.x), float(p.y), float(p.y_err), float(m), float(r)])
        _emit(_csv("fit", params, ["fit", "x", "y", "y_err", "model", "residual"], rows, comments), args.out)
    return EXIT_OK if all(f.converged for _, f in fits) else EXIT_NO_FIT


def cmd_dataset(args) -> int:
    if args.list or not args.name:
        _emit("".join(f"{n}\n" for n in DATASET_NAMES), args.out)
        return EXIT_OK
    ds = load_dataset(args.name)
    _emit(dataset_to_csv(ds, f"rtnoise {__version__} dataset {ds.name}\n{ds.units}"), args.out)
    return EXIT_OK


# ------------------------------------------------------------------ parser


def _add_source_flags(p: argparse.ArgumentParser, n_terms_list: bool = False) -> None:
    p.add_argument("--kappa", type=float, default=DEFAULTS.kappa, help="SPDC gain |kappa| (default: %(default)s)")
    p.add_argument("--alpha", type=float, default=DEFAULTS.alpha, help="coherent amplitude |alpha| (default: %(default)s)")
    p.add_argument("--t1", type=float, default=DEFAULTS.t1, help="idler amplitude transmissivity (default: %(default)s)")
    p.add_argument("--t2", type=float, default=DEFAULTS.t2, help="signal amplitude transmissivity (default: %(default)s)")
    if n_terms_list:
        p.add_argument("--n-terms", type=_int_list, default="2,3,4", help="comma-separated expansion orders (default: %(default)s)")
    else:
        p.add_argument("--n-terms", type=int, default=DEFAULTS.n_terms, help="coherent expansion order N (default: %(default)s)")
    p.add_argument("--scale", type=float, default=DEFAULTS.scale, help="probability-to-rate scale (default: %(default)s)")
    p.add_argument("--cutoff", type=int, default=DEFAULTS.cutoff, help="Fock cutoff for the oracle (default: %(default)s)")


def _add_output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="output path (default: stdout)")


def _apply_env(parser: argparse.ArgumentParser) -> None:
    for action in parser._actions:
        if not action.option_strings or action.dest in ("help",):
            continue
        val = os.environ.get(ENV_PREFIX + action.dest.upper())
        if val is None:
            continue
        if isinstance(action, argparse._StoreTrueAction):
            action.default = val.lower() in ("1", "true", "yes")
        else:
            action.default = val


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rtnoise", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"rtnoise {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sweep-r", help="SNR versus R curves for several expansion orders")
    _add_source_flags(p, n_terms_list=True)
    p.add_argument("--sweep", default="R:0.01:10:50:log", help="R:lo:hi:steps:log|lin (default: %(default)s)")
    _add_output_flags(p)
    p.set_defaults(func=cmd_sweep_r)

    p = sub.add_parser("three-step", help="simulate the three-step shutter measurement")
    _add_source_flags(p)
    p.add_argument("--engine", choices=("analytic", "oracle", "both"), default="both")
    p.add_argument("--sample", action="store_true", help="draw Poisson counts instead of exact probabilities")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--rep-rate", type=float, default=DEFAULT_REP_RATE_HZ, help="laser repetition rate in Hz (default: %(default)s)")
    p.add_argument("--duration", type=float, default=DEFAULT_DURATION_S, help="seconds per step (default: %(default)s)")
    p.add_argument("--sweep", default=None, help="kappa|alpha|t1|t2:lo:hi:steps:log|lin")
    _add_output_flags(p)
    p.set_defaults(func=cmd_three_step)

    p = sub.add_parser("fidelity", help="average teleportation fidelity versus SNR")
    p.add_argument("--sweep", default="snr:0.1:100:50:log", help="snr|snr_db:lo:hi:steps:log|lin (default: %(default)s)")
    p.add_argument("--counts", type=float, default=None, help="expected genuine counts per acquisition; enables Monte-Carlo intervals")
    p.add_argument("--ratio", type=float, default=TABLE_RATIO_R, help="R used to split the noise (default: %(default)s)")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--interval", choices=("envelope", "central"), default="envelope")
    p.add_argument("--table", action="store_true", help="reproduce the published fidelity table rows")
    _add_output_flags(p)
    p.set_defaults(func=cmd_fidelity)

    p = sub.add_parser("fit", help="fit the model to an embedded or imported dataset")
    p.add_argument("--dataset", default=None, help=f"one of: {', '.join(DATASET_NAMES)}")
    p.add_argument("--data", default=None, help="CSV file with columns x,x_err,y,y_err")
    p.add_argument("--model", default=None, help="fit model for --data (a dataset name)")
    p.add_argument("--n-terms", type=_int_list, default="2,3,4", help="expansion orders for snr_vs_r (default: %(default)s)")
    p.add_argument("--x-errors", action="store_true", help="propagate x errors into the weights")
    _add_output_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("dataset", help="list or export embedded datasets as CSV")
    p.add_argument("name", nargs="?", default=None)
    p.add_argument("--list", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_dataset)

    for sp in sub.choices.values():
        _apply_env(sp)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"rtnoise: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DatasetNotFoundError as exc:
        print(f"rtnoise: not found: {exc.args[0]}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelDomainError, UndefinedSNRError, UndefinedRatioError, UndefinedFidelityError) as exc:
        print(f"rtnoise: model-domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ValueError as exc:
        print(f"rtnoise: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
