"""Command-line entry point: ``adm <subcommand> ...``.

Exit status is 0 on success, 1 for usage or data validation problems and 2
for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from .cwfit import (
    FitOptions,
    Formula,
    canonicalize,
    direct_regression,
    fit_constrained,
    fit_ols,
    predict,
    rescale_fit,
)
from .dataset import BUILTINS, Dataset, builtin, parse_csv
from .dea import DEFAULT_ZERO_TOL, ccr_scores
from .errors import DatasetError, NumericalError
from .report import _write_text, compare, emit, formula_block, formula_from_block, rank, write_dataset
from .synth import SynthSpec, generate, recovery_error, true_scores


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _flag(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {text!r}")


def _default_seed() -> int:
    env = os.environ.get("ADM_SEED")
    if env is None:
        return FitOptions().seed
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"ADM_SEED must be an integer, got {env!r}") from None


def _add_source(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--builtin", choices=sorted(BUILTINS), help="use a built-in dataset")
    g.add_argument("--in", dest="path", metavar="PATH", help="dataset CSV ('-' for stdin)")


def _add_output(p):
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default="-", help="output path ('-' for stdout)")
    p.add_argument("--full-precision", action="store_true", help="print reals at full precision")


def _add_fit(p, default_rescale):
    p.add_argument("--fit", choices=("ols", "constrained", "both"), default="constrained")
    p.add_argument("--intercept", type=_flag, nargs="?", const=True, default=False)
    p.add_argument("--rescale", type=_flag, nargs="?", const=True, default=default_rescale)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n-starts", type=int, default=FitOptions().n_starts)
    p.add_argument("--max-iterations", type=int, default=FitOptions().max_iterations)
    p.add_argument("--gradient-tol", type=float, default=FitOptions().gradient_tolerance)
    p.add_argument("--feasibility-tol", type=float, default=FitOptions().feasibility_tolerance)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="adm", description="DEA scores and common-weights scoring formulas")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("dea", help="CCR scores, multipliers and zero-weight diagnostics")
    _add_source(p)
    p.add_argument("--zero-tol", type=float, default=DEFAULT_ZERO_TOL)
    _add_output(p)

    p = sub.add_parser("fit", help="fit a common-weights formula to the DEA scores")
    _add_source(p)
    _add_fit(p, default_rescale=False)
    _add_output(p)

    p = sub.add_parser("score", help="apply a saved formula to a dataset")
    p.add_argument("--formula", required=True, help="JSON file holding a 'formula' block")
    _add_source(p)
    _add_output(p)

    p = sub.add_parser("rank", help="competition-rank a score column")
    p.add_argument("--in", dest="path", required=True, metavar="PATH", help="CSV with a dmu column ('-' for stdin)")
    p.add_argument("--column", help="score column (default: the second column)")
    p.add_argument("--tie-tol", type=float, default=1e-6)
    _add_output(p)

    p = sub.add_parser("synth", help="generate known-truth data, or evaluate recovery of true weights")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--spec", metavar="PATH", help="CSV: dmu, output:<label>..., efficiency")
    g.add_argument("--builtin", choices=sorted(BUILTINS), help="single-input dataset to evaluate")
    g.add_argument("--in", dest="path", metavar="PATH", help="single-input dataset CSV to evaluate")
    p.add_argument("--weights", required=True, help="true output weights, comma separated (input weight is 1)")
    p.add_argument("--evaluate", action="store_true", help="run DEA + constrained fit and report recovery")
    _add_fit(p, default_rescale=False)
    p.add_argument("--out", default="-")

    p = sub.add_parser("pipeline", help="DEA -> fit -> rescale -> compare -> emit")
    _add_source(p)
    _add_fit(p, default_rescale=True)
    _add_output(p)
    return parser


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _load(args) -> tuple[Dataset, str]:
    if getattr(args, "builtin", None):
        return builtin(args.builtin), args.builtin
    return parse_csv(_read_text(args.path)), ("stdin" if args.path == "-" else Path(args.path).stem)


def _options(args) -> FitOptions:
    seed = args.seed if args.seed is not None else _default_seed()
    return FitOptions(
        intercept=args.intercept,
        n_starts=args.n_starts,
        seed=seed,
        max_iterations=args.max_iterations,
        gradient_tolerance=args.gradient_tol,
        feasibility_tolerance=args.feasibility_tol,
    )


def _check_rescale(args):
    if args.rescale and args.fit == "constrained":
        raise UsageError("--rescale only applies to OLS fits (--fit ols or --fit both)")


def _cmd_dea(args):
    d, name = _load(args)
    r = ccr_scores(d, zero_tol=args.zero_tol)
    emit(r, args.format, args.out, args.full_precision, name)


def _fits(d, dea, args):
    opts = _options(args)
    fits, rescaled = [], None
    if args.fit in ("ols", "both"):
        ols = fit_ols(d, dea.scores, opts, dea)
        fits.append(ols)
        if args.rescale:
            rescaled = rescale_fit(ols)
    if args.fit in ("constrained", "both"):
        fits.append(fit_constrained(d, dea.scores, opts, dea))
    return fits, rescaled


def _cmd_fit(args):
    _check_rescale(args)
    d, name = _load(args)
    dea = ccr_scores(d)
    fits, rescaled = _fits(d, dea, args)
    if args.fit == "both":
        emit(compare(dea, fits, rescaled, name=name), args.format, args.out, args.full_precision)
    else:
        emit(rescaled or fits[0], args.format, args.out, args.full_precision, name)


def _cmd_pipeline(args):
    _check_rescale(args)
    d, name = _load(args)
    dea = ccr_scores(d)
    fits, rescaled = _fits(d, dea, args)
    emit(compare(dea, fits, rescaled, name=name), args.format, args.out, args.full_precision)


def _cmd_score(args):
    try:
        block = json.loads(_read_text(args.formula))
        f, out_labels, in_labels = formula_from_block(block)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        raise DatasetError(f"cannot read formula from {args.formula}: {exc}") from exc
    d, name = _load(args)
    if set(out_labels) != set(d.output_labels) or set(in_labels) != set(d.input_labels):
        raise DatasetError(
            f"formula columns {list(in_labels) + list(out_labels)} do not match "
            f"dataset columns {list(d.column_labels)}"
        )
    # Reorder weights to the dataset's column order.
    u = dict(zip(out_labels, f.output_weights))
    v = dict(zip(in_labels, f.input_weights))
    f = Formula([u[k] for k in d.output_labels], [v[k] for k in d.input_labels], f.intercept)
    scores = predict(f, d)
    emit((d.names, scores, rank(scores)), args.format, args.out, args.full_precision, name)


def _cmd_rank(args):
    rows = list(csv.reader(io.StringIO(_read_text(args.path))))
    if len(rows) < 2:
        raise DatasetError("rank input needs a header and at least one row")
    header = [h.strip() for h in rows[0]]
    col = 1 if args.column is None else (header.index(args.column) if args.column in header else -1)
    if col < 0 or col >= len(header):
        raise DatasetError(f"score column {args.column!r} not found in {header}")
    names, scores = [], []
    for r, row in enumerate(rows[1:], start=2):
        if not any(c.strip() for c in row):
            continue
        try:
            scores.append(float(row[col]))
        except (ValueError, IndexError):
            raise DatasetError(f"row {r}, column {col + 1}: not a number") from None
        names.append(row[0].strip())
    scores = np.array(scores)
    emit((names, scores, rank(scores, args.tie_tol)), args.format, args.out, args.full_precision)


def _parse_weights(text: str) -> np.ndarray:
    try:
        w = np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise DatasetError(f"--weights must be comma-separated numbers, got {text!r}") from None
    if (w < 0).any():
        raise DatasetError("--weights must be non-negative")
    return w


def _read_spec(path: str, weights: np.ndarray) -> SynthSpec:
    rows = [r for r in csv.reader(io.StringIO(_read_text(path))) if any(c.strip() for c in r)]
    header = [h.strip() for h in rows[0]]
    if header[0] != "dmu" or "efficiency" not in header:
        raise DatasetError("spec CSV needs a 'dmu' first column and an 'efficiency' column")
    out_cols = [c for c, h in enumerate(header) if h.startswith("output:")]
    eff_col = header.index("efficiency")
    try:
        body = [[float(r[c]) for c in out_cols + [eff_col]] for r in rows[1:]]
    except (ValueError, IndexError) as exc:
        raise DatasetError(f"spec CSV has a non-numeric cell: {exc}") from None
    body = np.array(body)
    if len(weights) != len(out_cols):
        raise DatasetError(f"{len(weights)} weights given for {len(out_cols)} outputs")
    return SynthSpec(
        Formula(weights, [1.0]),
        body[:, :-1],
        body[:, -1],
        names=tuple(r[0].strip() for r in rows[1:]),
        output_labels=tuple(header[c][len("output:"):] for c in out_cols),
    )


def _cmd_synth(args):
    weights = _parse_weights(args.weights)
    truth = Formula(weights, [1.0])
    if args.spec:
        d = generate(_read_spec(args.spec, weights))
        name = Path(args.spec).stem
        if not args.evaluate:
            write_dataset(d, args.out)
            return
    else:
        d, name = _load(args)
        if d.m != 1:
            raise DatasetError("synth evaluation needs a single-input dataset")
        if len(weights) != d.s:
            raise DatasetError(f"{len(weights)} weights given for {d.s} outputs")
    dea = ccr_scores(d)
    fit = fit_constrained(d, dea.scores, _options(args), dea)
    direct = direct_regression(d)
    truth_scores = true_scores(d, truth)
    fitted = recovery_error(truth, fit.formula, d)
    baseline = recovery_error(truth, direct, d)
    report = {
        "dataset": name,
        "true_formula": formula_block(truth, d),
        "fitted_formula": formula_block(canonicalize(fit.formula, normalize_input=True), d),
        "direct_regression_formula": formula_block(direct, d),
        "recovery": {
            "constrained": _metrics(fitted, d),
            "direct_regression": _metrics(baseline, d),
        },
        "entities": [
            {
                "dmu": nm,
                "true_score": float(f"{truth_scores[i]:.6g}"),
                "dea_score": float(f"{dea.scores[i]:.6g}"),
                "fitted_score": float(f"{fit.predicted[i]:.6g}"),
            }
            for i, nm in enumerate(d.names)
        ],
    }
    _write_text(json.dumps(report, indent=2) + "\n", args.out)


def _metrics(m, d):
    labels = list(d.output_labels) + list(d.input_labels)
    return {
        "coefficient_relative_errors": {k: float(f"{e:.6g}") for k, e in zip(labels, m.coefficient_errors)},
        "max_score_error": float(f"{m.max_score_error:.6g}"),
        "mean_score_error": float(f"{m.mean_score_error:.6g}"),
    }


_COMMANDS = {
    "dea": _cmd_dea,
    "fit": _cmd_fit,
    "score": _cmd_score,
    "rank": _cmd_rank,
    "synth": _cmd_synth,
    "pipeline": _cmd_pipeline,
}


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(str(exc).rstrip() + "\n")
        return 1
    except (DatasetError, FileNotFoundError, ValueError) as exc:
        sys.stderr.write(f"adm: error: {exc}\n")
        return 1
    except NumericalError as exc:
        sys.stderr.write(f"adm: numerical failure: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"adm: I/O error: {exc}\n")
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
