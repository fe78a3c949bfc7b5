"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 resource cap exceeded, 3 a check
residual exceeded its tolerance.
"""

import argparse
import cmath
import csv
import datetime as _dt
import enum
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .conformal import conformal_table, detect_nonexistence
from .critical import series_G, solve_beta0
from .errors import CapExceeded, DivergentSeries, InvalidSymbol
from .gibbs import (build_rep, check_covariance, check_cuntz, check_kms, circle_average,
                    gibbs_state, random_sparse_pair)
from .partition import partition_sequence, total_mass

EXIT_OK, EXIT_USAGE, EXIT_CAP, EXIT_CHECK = 0, 1, 2, 3

SCAN_COLUMNS = ["beta", "classification", "G_low", "G_high",
                "partial_M_or_flag", "first_negative_depth_or_none"]


class Phase(enum.Enum):
    NoKMS = "NoKMS"
    UniqueCritical = "UniqueCritical"
    CircleSimplex = "CircleSimplex"


@dataclass(frozen=True)
class PhaseClassification:
    phase: Phase
    witness: float
    G_low: Optional[float] = None
    G_high: Optional[float] = None


def classify_phase(beta: float, tol: float = 1e-6) -> PhaseClassification:
    """Place beta in the no-KMS / critical / circle-simplex regime.

    Uses the certified enclosure of G(beta); for beta <= 1 the series diverges
    and the witness is how far the partial sums overshoot 1.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    try:
        res = series_G(beta, tol=tol)
    except DivergentSeries:
        report = detect_nonexistence(beta, 10**6)
        witness = min(-report.last_residual, sys.float_info.max)
        return PhaseClassification(Phase.NoKMS, witness)
    lo, hi = res.lower, res.upper
    if lo > 1.0:
        return PhaseClassification(Phase.NoKMS, lo - 1.0, lo, hi)
    if hi < 1.0:
        return PhaseClassification(Phase.CircleSimplex, 1.0 - hi, lo, hi)
    return PhaseClassification(Phase.UniqueCritical, max(1.0 - lo, hi - 1.0), lo, hi)


@dataclass(frozen=True)
class RunConfig:
    betas: tuple
    tol: float = 1e-6
    probe_depth: int = 100_000
    mass_tol: float = 1e-6
    jobs: int = 1


def beta_grid(start, stop, step):
    if not (step > 0 and math.isfinite(start) and math.isfinite(stop)) or stop < start:
        raise ValueError("invalid grid")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + i * step, 12) for i in range(count))


def scan_row(beta, tol, probe_depth, mass_tol=1e-6):
    cls = classify_phase(beta, tol)
    mass = total_mass(beta, rel_tol=mass_tol) if beta > 1.0 else None
    if mass is not None and mass.converged:
        partial = repr(mass.value)
    else:
        partial = "not-converged"
    report = detect_nonexistence(beta, probe_depth)
    return {
        "beta": repr(float(beta)),
        "classification": cls.phase.value,
        "G_low": "divergent" if cls.G_low is None else repr(cls.G_low),
        "G_high": "divergent" if cls.G_high is None else repr(cls.G_high),
        "partial_M_or_flag": partial,
        "first_negative_depth_or_none": ("none" if report.first_negative_depth is None
                                         else str(report.first_negative_depth)),
    }


def _scan_task(args):
    return scan_row(*args)


def scan(config: RunConfig) -> list:
    """One row per grid beta, sorted by beta whatever the evaluation order."""
    if not config.betas:
        raise ValueError("invalid grid")
    tasks = [(b, config.tol, config.probe_depth, config.mass_tol)
             for b in sorted(set(config.betas))]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            rows = list(pool.map(_scan_task, tasks))
    else:
        rows = [_scan_task(t) for t in tasks]
    return sorted(rows, key=lambda r: float(r["beta"]))


# ---------------------------------------------------------------------------
# output


def _stamp():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def rows_to_csv(rows, columns, reproducible):
    buf = io.StringIO()
    if not reproducible:
        buf.write(f"# generated {_stamp()}\n")
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def to_json(payload, reproducible):
    if not reproducible:
        payload = {"generated": _stamp(), **payload}
    return json.dumps(payload, indent=1) + "\n"


def emit(text, out):
    """Write to stdout, or atomically replace ``out``."""
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".o2kms-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _render(args, rows, columns, extra=None):
    if args.format == "json":
        return to_json({**(extra or {}), "rows": rows}, args.reproducible)
    return rows_to_csv(rows, columns, args.reproducible)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_beta0(args):
    res = solve_beta0(args.tol)
    row = {k: repr(float(v)) for k, v in res.to_dict().items()}
    if args.format == "json":
        text = to_json({k: float(v) for k, v in res.to_dict().items()}, args.reproducible)
    else:
        text = rows_to_csv([row], ["lo", "hi", "midpoint", "residual"], args.reproducible)
    emit(text, args.out)
    return EXIT_OK


def _cmd_classify(args):
    cls = classify_phase(_need_beta(args), args.tol)
    row = {"beta": repr(args.beta), "classification": cls.phase.value,
           "witness": repr(cls.witness),
           "G_low": "divergent" if cls.G_low is None else repr(cls.G_low),
           "G_high": "divergent" if cls.G_high is None else repr(cls.G_high)}
    emit(_render(args, [row], list(row)), args.out)
    return EXIT_OK


def _cmd_measure(args):
    table = conformal_table(_need_beta(args), args.depth)
    if args.format == "json":
        text = table.to_json() + "\n"
    else:
        text = table.to_csv()
        if not args.reproducible:
            text = f"# generated {_stamp()}\n" + text
    emit(text, args.out)
    return EXIT_OK


def _cmd_partition(args):
    table = partition_sequence(_need_beta(args), args.level_cap)
    rows = [{"n": str(n), "Z": repr(float(z)), "partial_M": repr(float(m))}
            for n, (z, m) in enumerate(zip(table.Z, table.partial_M))]
    emit(_render(args, rows, ["n", "Z", "partial_M"], {"beta": table.beta}), args.out)
    return EXIT_OK


CHECK_COLUMNS = ["check", "N", "beta", "lambda", "residual", "pass"]


def _check_row(name, rep, residual, tol):
    return {"check": name, "N": str(rep.N), "beta": repr(rep.beta),
            "lambda": f"{rep.lam.real!r}{rep.lam.imag:+}j",
            "residual": repr(float(residual)), "pass": str(bool(residual <= tol)).lower()}


def _lambda(args):
    return cmath.exp(2j * math.pi * args.lambda_turns)


def _finish_checks(args, rows):
    emit(_render(args, rows, CHECK_COLUMNS), args.out)
    return EXIT_OK if all(r["pass"] == "true" for r in rows) else EXIT_CHECK


def _cmd_rep_check(args):
    beta = _need_beta(args, default=4.0)
    rep = build_rep(beta, _lambda(args), args.level_cap)
    cuntz = check_cuntz(rep)
    rows = [
        _check_row("cuntz_completeness", rep, cuntz.completeness, 1e-14),
        _check_row("isometry_interior", rep, cuntz.isometry_interior, 1e-14),
        _check_row("isometry_boundary_zero", rep, cuntz.boundary, 1e-14),
    ]
    for t in (0.37, 1.0):
        rows.append(_check_row(f"covariance_t={t}", rep, check_covariance(rep, t), 1e-13))
    trace = gibbs_state(rep).trace_H
    expected = 1.0 + float(partition_sequence(beta, args.level_cap).partial_M[-1])
    rows.append(_check_row("trace_H_vs_partition", rep, abs(trace - expected), 1e-12))
    return _finish_checks(args, rows)


def _words_up_to(n):
    out = [""]
    for m in range(1, n + 1):
        out += [format(i, f"0{m}b") for i in range(1 << m)]
    return out


def _cmd_kms_check(args):
    beta = _need_beta(args, default=4.0)
    rep = build_rep(beta, _lambda(args), args.level_cap)
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for _ in range(args.pairs):
        a, b = random_sparse_pair(rep.dim, rng)
        worst = max(worst, check_kms(rep, a, b))
    rows = [_check_row(f"kms_random_pairs={args.pairs}", rep, worst, 1e-10)]
    worst_avg = 0.0
    words = _words_up_to(args.depth)
    for u in words:
        for v in words:
            mean, ref = circle_average(beta, args.level_cap, args.quadrature, u, v)
            worst_avg = max(worst_avg, abs(mean - ref))
    rows.append(_check_row(f"circle_average_Q={args.quadrature}", rep, worst_avg, 1e-10))
    return _finish_checks(args, rows)


def _cmd_scan(args):
    if args.beta is not None:
        betas = (args.beta,)
    elif None not in (args.beta_start, args.beta_stop, args.beta_step):
        betas = beta_grid(args.beta_start, args.beta_stop, args.beta_step)
    else:
        raise ValueError("invalid grid: give --beta or all of --beta-start/--beta-stop/--beta-step")
    config = RunConfig(betas, tol=args.tol, probe_depth=args.depth, mass_tol=args.mass_tol,
                       jobs=args.jobs)
    rows = scan(config)
    emit(_render(args, rows, SCAN_COLUMNS), args.out)
    return EXIT_OK


def _need_beta(args, default=None):
    if args.beta is None:
        if default is None:
            raise ValueError("--beta is required")
        args.beta = default
    return args.beta


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--reproducible", action="store_true",
                        help="omit timestamps so repeated runs are byte-identical")
    common.add_argument("--beta", type=float, default=None)

    parser = _Parser(prog="o2kms", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("beta0", parents=[common], help="certified bracket for beta_0")
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=_cmd_beta0)

    p = sub.add_parser("classify", parents=[common], help="phase of a single beta")
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("measure", parents=[common], help="conformal cylinder table")
    p.add_argument("--depth", type=int, default=8)
    p.set_defaults(func=_cmd_measure)

    p = sub.add_parser("partition", parents=[common], help="renewal sequence Z_n")
    p.add_argument("--level-cap", type=int, default=20)
    p.set_defaults(func=_cmd_partition)

    for name, func, text in (
            ("rep-check", _cmd_rep_check, "Cuntz relations, covariance and Tr(H)"),
            ("kms-check", _cmd_kms_check, "KMS condition and circle average")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--level-cap", type=int, default=12)
        p.add_argument("--lambda-turns", type=float, default=0.0,
                       help="lambda = exp(2 pi i * turns)")
        if name == "kms-check":
            p.add_argument("--pairs", type=int, default=100)
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--quadrature", type=int, default=64)
            p.add_argument("--depth", type=int, default=2,
                           help="longest word in the circle-average check")
        p.set_defaults(func=func)

    p = sub.add_parser("scan", parents=[common], help="phase diagram over a beta grid")
    p.add_argument("--beta-start", type=float)
    p.add_argument("--beta-stop", type=float)
    p.add_argument("--beta-step", type=float)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--depth", type=int, default=100_000, help="nonexistence probe depth")
    p.add_argument("--mass-tol", type=float, default=1e-6,
                   help="relative doubling gap at which M counts as converged")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_scan)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CapExceeded as exc:
        print(f"o2kms: resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ValueError, InvalidSymbol, DivergentSeries) as exc:
        print(f"o2kms: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"o2kms: cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
