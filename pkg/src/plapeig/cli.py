"""Command-line front end.

Machine-readable records go to stdout (and to ``--out`` when given); a short
human summary goes to stderr.  Exit codes: 0 success, 1 usage error,
2 verification verdict failed, 3 numerical failure.

Relative ``--out`` paths are resolved under ``$PLAPEIG_OUTPUT_DIR`` when that
variable is set.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .bounds import RegimeError, bound_report
from .eigensolve import BracketError, EigenQuery, model_eigenfunction, mu_shoot
from .model_ode import IntegrationError
from .ptrig import as_exponent, cos_p, sin_p, tan_p
from .verify.campaign import CampaignSpec, run_campaign, summarize, summary_csv, write_jsonl
from .verify.checks import check_gradient_comparison, check_lichnerowicz, check_lower_bound, RangeError
from .verify.rayleigh import ConvergenceError, discrete_first_eigenvalue
from .verify.segment import BumpSpec, CertificateError, make_segment

OUTPUT_DIR_ENV = "PLAPEIG_OUTPUT_DIR"

EXIT_OK, EXIT_USAGE, EXIT_VERDICT, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("plapeig")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _exponent(text: str) -> float:
    p = float(text)
    if not (p > 1 and math.isfinite(p)):
        raise argparse.ArgumentTypeError(f"p must be > 1, got {text}")
    return p


def _positive(text: str) -> float:
    x = float(text)
    if not (x > 0 and math.isfinite(x)):
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return x


def _finite(text: str) -> float:
    x = float(text)
    if not math.isfinite(x):
        raise argparse.ArgumentTypeError(f"must be finite, got {text}")
    return x


def _grid(text: str) -> int:
    n = int(text)
    if n < 32:
        raise argparse.ArgumentTypeError(f"grid must be at least 32, got {text}")
    return n


def _resolve(path: str) -> Path:
    out = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not out.is_absolute():
        out = Path(base) / out
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


def _render(rows: List[dict], fmt: str) -> str:
    if fmt == "json":
        body = rows[0] if len(rows) == 1 else rows
        return json.dumps(body, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    keys = sorted({k for r in rows for k in r})
    writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v
                         for k, v in r.items()})
    return buf.getvalue()


def _emit(args, rows: List[dict]) -> None:
    text = _render(rows, args.format)
    sys.stdout.write(text)
    if args.out:
        _resolve(args.out).write_text(text)


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def cmd_mu(args) -> int:
    query = EigenQuery(args.p, args.kappa, args.diameter)
    res = mu_shoot(query, tol=args.tol)
    _emit(args, [res.to_json()])
    _say(f"mu_p(kappa={args.kappa:g}, D={args.diameter:g}) at p={args.p:g}: {res.mu:.10g}")
    if args.trajectory:
        traj = model_eigenfunction(query, res).resample(args.samples)
        path = _resolve(args.trajectory)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "theta", "log_r", "w", "dw"])
            writer.writerows([f"{v:.12g}" for v in row] for row in traj.rows())
        _say(f"trajectory written to {path}")
    return EXIT_OK


def cmd_bounds(args) -> int:
    rep = bound_report(args.p, args.kappa, args.diameter, tol=args.tol)
    _emit(args, [rep.to_json()])
    _say(f"best proved bound {rep.best} ({rep.regime})")
    return EXIT_OK


def cmd_table(args) -> int:
    rows = []
    for p, kappa, d in itertools.product(sorted(args.p), sorted(args.kappa), sorted(args.diameter)):
        rows.append(bound_report(p, kappa, d, tol=args.tol).to_json())
    _emit(args, rows)
    _say(f"{len(rows)} rows")
    return EXIT_OK


def _segment(args, seed: Optional[int]):
    bump = None
    if seed is not None:
        bump = BumpSpec.random(np.random.default_rng(seed), args.diameter)
    return make_segment(args.kappa, args.diameter, bump, n=args.grid), bump


def cmd_verify_sharpness(args) -> int:
    seg, _ = _segment(args, None)
    res = discrete_first_eigenvalue(seg, args.p)
    rep = check_lower_bound(seg, args.p, res)
    ok = abs(rep.relative_margin) < args.threshold
    row = rep.to_json()
    row.update(residual=res.residual, threshold=args.threshold, sharp=ok)
    _emit(args, [row])
    _say(f"lambda_h={rep.lambda_h:.8g} mu={rep.mu:.8g} relative margin={rep.relative_margin:.3e}"
         f" -> {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_VERDICT


def cmd_verify_bound(args) -> int:
    if args.campaign:
        spec = CampaignSpec.from_json(json.loads(Path(args.campaign).read_text()))
    else:
        spec = CampaignSpec((args.p,), (args.kappa,), (args.diameter,), (args.grid,),
                            tuple(range(args.seed or 0, (args.seed or 0) + args.seeds)),
                            "random", args.gradient)
    records = run_campaign(spec, workers=args.workers)
    rows = summarize(records)
    if args.records:
        with _resolve(args.records).open("w") as fh:
            write_jsonl(records, fh)
    if args.format == "csv":
        sys.stdout.write(summary_csv(rows))
        if args.out:
            _resolve(args.out).write_text(summary_csv(rows))
    else:
        _emit(args, rows)
    bad = sum(r["violations"] + r["gradient_violations"] for r in rows)
    failed = sum(r["failures"] for r in rows)
    _say(f"{len(records)} runs, {bad} adjusted violations, {failed} numerical failures")
    if failed:
        return EXIT_NUMERIC
    return EXIT_VERDICT if bad else EXIT_OK


def cmd_verify_gradient(args) -> int:
    seg, bump = _segment(args, args.seed)
    res = discrete_first_eigenvalue(seg, args.p)
    rep = check_gradient_comparison(seg, args.p, res)
    row = rep.to_json()
    row.update(seed=args.seed, perturbation=bump.to_json() if bump else None)
    _emit(args, [row])
    _say(f"max excess {rep.max_excess:.3e} (tolerance {rep.tolerance_h * rep.max_gradient:.3e}),"
         f" {rep.violations} violations")
    return EXIT_OK if rep.ok else EXIT_VERDICT


def cmd_verify_lich(args) -> int:
    if args.p < 2 or args.kappa <= 0:
        raise UsageError("verify-lich needs --p >= 2 and --kappa > 0")
    seg, bump = _segment(args, args.seed)
    res = discrete_first_eigenvalue(seg, args.p)
    rep = check_lichnerowicz(seg, args.p, res)
    _emit(args, [rep.to_json()])
    _say(f"lambda_h={rep.lambda_h:.8g} bound={rep.bound:.8g} -> {'PASS' if rep.holds else 'FAIL'}")
    return EXIT_OK if rep.holds else EXIT_VERDICT


def cmd_ptrig(args) -> int:
    pe = as_exponent(args.p)
    t = np.asarray(args.t if args.t else np.linspace(0.0, 2.0 * pe.pi_p, args.samples))
    s, c = sin_p(pe, t), cos_p(pe, t)
    with np.errstate(divide="ignore"):
        tn = tan_p(pe, t)
    rows = [{"t": float(a), "sin_p": float(b), "cos_p": float(d), "tan_p": float(e)}
            for a, b, d, e in zip(np.atleast_1d(t), np.atleast_1d(s), np.atleast_1d(c),
                                  np.atleast_1d(tn))]
    if args.format == "json":
        rows = [{"p": pe.p, "pi_p": pe.pi_p, "values": rows}]
    _emit(args, rows)
    _say(f"pi_p = {pe.pi_p:.15g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="plapeig", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, grid=False, diameter_required=True):
        sp.add_argument("--p", type=_exponent, required=True)
        sp.add_argument("--kappa", type=_finite, required=True)
        sp.add_argument("--diameter", type=_positive, required=diameter_required)
        sp.add_argument("--tol", type=_positive, default=1e-8)
        sp.add_argument("--out")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        if grid:
            sp.add_argument("--grid", type=_grid, default=2048)
            sp.add_argument("--seed", type=int)

    sp = sub.add_parser("mu", help="sharp model eigenvalue by shooting")
    common(sp)
    sp.add_argument("--trajectory", help="write the model eigenfunction as CSV")
    sp.add_argument("--samples", type=int, default=401)
    sp.set_defaults(func=cmd_mu)

    sp = sub.add_parser("bounds", help="all applicable lower bounds")
    common(sp, diameter_required=False)
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("table", help="bounds over a Cartesian grid")
    sp.add_argument("--p", type=_exponent, nargs="+", required=True)
    sp.add_argument("--kappa", type=_finite, nargs="+", required=True)
    sp.add_argument("--diameter", type=_positive, nargs="+", required=True)
    sp.add_argument("--tol", type=_positive, default=1e-8)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("json", "csv"), default="csv")
    sp.set_defaults(func=cmd_table)

    sp = sub.add_parser("verify-sharpness", help="discrete eigenvalue on the model segment")
    common(sp, grid=True)
    sp.add_argument("--threshold", type=_positive, default=0.01)
    sp.set_defaults(func=cmd_verify_sharpness)

    sp = sub.add_parser("verify-bound", help="lower-bound campaign on perturbed segments")
    common(sp, grid=True)
    sp.add_argument("--seeds", type=int, default=50)
    sp.add_argument("--campaign", help="JSON campaign spec (overrides the flags)")
    sp.add_argument("--records", help="JSON-lines file for per-run records")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--no-gradient", dest="gradient", action="store_false")
    sp.set_defaults(func=cmd_verify_bound)

    sp = sub.add_parser("verify-gradient", help="gradient comparison on one segment")
    common(sp, grid=True)
    sp.set_defaults(func=cmd_verify_gradient)

    sp = sub.add_parser("verify-lich", help="Lichnerowicz-type bound on a Gaussian-type segment")
    common(sp, grid=True)
    sp.set_defaults(func=cmd_verify_lich)

    sp = sub.add_parser("ptrig", help="tabulate p-trigonometric functions")
    sp.add_argument("--p", type=_exponent, required=True)
    sp.add_argument("--t", type=_finite, nargs="*")
    sp.add_argument("--samples", type=int, default=9)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("json", "csv"), default="csv")
    sp.set_defaults(func=cmd_ptrig)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except RangeError as exc:
        _say(f"plapeig {args.command}: numerical failure: {exc}")
        return EXIT_NUMERIC
    except (UsageError, RegimeError, CertificateError, ValueError) as exc:
        _say(f"plapeig {args.command}: error: {exc}")
        return EXIT_USAGE
    except (IntegrationError, BracketError, ConvergenceError, ArithmeticError) as exc:
        _say(f"plapeig {args.command}: numerical failure: {exc}")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
