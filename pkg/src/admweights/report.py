"""Ranking, side-by-side comparison tables and JSON/CSV output."""

from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import TextIO

import numpy as np

from .cwfit import FitResult, Formula, Stats, residual_stats
from .dataset import Dataset, to_csv
from .dea import DeaResult, zero_weight_diagnostics

DEFAULT_TIE_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class Ranks:
    """Standard competition ranks (1, 1, 3, ...); 1 is the best score."""

    ranks: np.ndarray
    tie_tol: float = DEFAULT_TIE_TOL

    def __len__(self):
        return len(self.ranks)

    def __getitem__(self, i):
        return int(self.ranks[i])

    def tolist(self) -> list[int]:
        return [int(r) for r in self.ranks]


def rank(scores, tie_tol: float = DEFAULT_TIE_TOL) -> Ranks:
    scores = np.asarray(scores, dtype=float).ravel()
    if scores.size == 0:
        raise ValueError("cannot rank an empty score vector")
    if tie_tol < 0:
        raise ValueError("tie_tol must be non-negative")
    order = np.argsort(-scores, kind="stable")
    ranks = np.empty(scores.size, dtype=int)
    leader = scores[order[0]]
    current = 1
    for pos, i in enumerate(order):
        # Ties are measured against the first member of the group, so a run
        # of small steps cannot chain into one long tie.
        if leader - scores[i] > tie_tol:
            leader, current = scores[i], pos + 1
        ranks[i] = current
    ranks.setflags(write=False)
    return Ranks(ranks, tie_tol)


@dataclass(eq=False)
class ComparisonTable:
    dataset: Dataset
    dea_scores: np.ndarray
    columns: dict[str, np.ndarray] = field(default_factory=dict)
    ranks: dict[str, Ranks] = field(default_factory=dict)
    stats: dict[str, Stats] = field(default_factory=dict)
    formulas: dict[str, Formula] = field(default_factory=dict)
    name: str | None = None

    @property
    def names(self):
        return self.dataset.names

    @property
    def methods(self) -> list[str]:
        return list(self.columns)

    def preferred_formula(self) -> tuple[str, Formula] | None:
        for key in ("constrained", "constrained_intercept", "ols_rescaled", "ols_intercept_rescaled"):
            if key in self.formulas:
                return key, self.formulas[key]
        return next(iter(self.formulas.items()), None)


def compare(
    dea: DeaResult,
    fits: list[FitResult] = (),
    rescaled=None,
    tie_tol: float = DEFAULT_TIE_TOL,
    name: str | None = None,
) -> ComparisonTable:
    """Line up DEA scores with each fitted formula's scores, ranks and residual stats.

    ``rescaled`` is either a score vector or the FitResult of a rescaled OLS
    formula; it is shown next to the OLS column it came from.
    """
    n = dea.dataset.n
    table = ComparisonTable(dea.dataset, dea.scores, name=name)
    table.ranks["dea"] = rank(dea.scores, tie_tol)
    for fit in fits:
        if len(fit.predicted) != n:
            raise ValueError(f"{fit.label} has {len(fit.predicted)} scores, DEA has {n}")
        table.columns[fit.label] = fit.predicted
        table.ranks[fit.label] = rank(fit.predicted, tie_tol)
        table.stats[fit.label] = residual_stats(fit.predicted, dea.scores)
        table.formulas[fit.label] = fit.formula
        if rescaled is not None and fit.method == "ols":
            if isinstance(rescaled, FitResult):
                key, scores = rescaled.label, rescaled.predicted
                table.formulas[key] = rescaled.formula
            else:
                key, scores = fit.label + "_rescaled", np.asarray(rescaled, dtype=float)
            if len(scores) != n:
                raise ValueError(f"rescaled scores have length {len(scores)}, DEA has {n}")
            table.columns[key] = scores
            table.stats[key] = residual_stats(scores, dea.scores)
    return table


# -- formatting -----------------------------------------------------------


def _num(x: float, full: bool):
    x = float(x)
    return x if full else float(f"{x:.6g}")


def _cell(x, full: bool) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x)) if full else f"{float(x):.6g}"
    return "" if x is None else str(x)


def formula_block(f: Formula, d: Dataset, full: bool = False) -> dict:
    return {
        "outputs": {lab: _num(w, full) for lab, w in zip(d.output_labels, f.output_weights)},
        "inputs": {lab: _num(w, full) for lab, w in zip(d.input_labels, f.input_weights)},
        "intercept": None if f.intercept is None else _num(f.intercept, full),
    }


def formula_from_block(block: dict) -> tuple[Formula, tuple[str, ...], tuple[str, ...]]:
    """Read a saved ``formula`` block; returns the formula plus its output and input labels."""
    if "formula" in block and isinstance(block["formula"], dict):
        block = block["formula"]
    try:
        outs, ins = block["outputs"], block["inputs"]
    except (KeyError, TypeError):
        raise ValueError("formula block needs 'outputs' and 'inputs' objects") from None
    f = Formula(list(outs.values()), list(ins.values()), block.get("intercept"))
    return f, tuple(outs), tuple(ins)


def _stats_block(st: Stats, full: bool) -> dict:
    return {
        "mean_abs_dev": _num(st.mean_abs_dev, full),
        "max_abs_dev": _num(st.max_abs_dev, full),
        "sse": _num(st.sse, full),
    }


def _table_rows(table: ComparisonTable):
    header = ["dmu", "dea_score"]
    for key in table.columns:
        header.append(key if key.endswith("_rescaled") else f"{key}_score")
    header += [f"{key}_rank" for key in table.ranks]
    rows = []
    for i, nm in enumerate(table.names):
        row = [nm, table.dea_scores[i]]
        row += [table.columns[k][i] for k in table.columns]
        row += [table.ranks[k][i] for k in table.ranks]
        rows.append(row)
    return header, rows


def _table_json(table: ComparisonTable, full: bool, name) -> dict:
    header, rows = _table_rows(table)
    entities = [
        {h: (_num(v, full) if isinstance(v, float) else v) for h, v in zip(header, row)}
        for row in rows
    ]
    preferred = table.preferred_formula()
    return {
        "dataset": name,
        "methods": ["dea"] + table.methods,
        "entities": entities,
        "formulas": {k: formula_block(f, table.dataset, full) for k, f in table.formulas.items()},
        "formula": None if preferred is None else formula_block(preferred[1], table.dataset, full),
        "stats": {k: _stats_block(st, full) for k, st in table.stats.items()},
    }


def _dea_rows(r: DeaResult):
    d = r.dataset
    header = ["dmu", "dea_score", "dea_rank"]
    header += [f"v:{lab}" for lab in d.input_labels] + [f"u:{lab}" for lab in d.output_labels]
    header.append("zero_weights")
    ranks = rank(r.scores)
    rows = []
    for i, nm in enumerate(d.names):
        zeros = [lab for lab, z in zip(d.column_labels, r.zero_flags[i]) if z]
        rows.append(
            [nm, r.scores[i], ranks[i], *r.input_weights[i], *r.output_weights[i], ";".join(zeros)]
        )
    return header, rows


def _dea_json(r: DeaResult, full: bool, name) -> dict:
    d = r.dataset
    ranks = rank(r.scores)
    _, counts = zero_weight_diagnostics(r)
    entities = []
    for i, nm in enumerate(d.names):
        entities.append(
            {
                "dmu": nm,
                "dea_score": _num(r.scores[i], full),
                "dea_rank": ranks[i],
                "input_weights": {lab: _num(w, full) for lab, w in zip(d.input_labels, r.input_weights[i])},
                "output_weights": {lab: _num(w, full) for lab, w in zip(d.output_labels, r.output_weights[i])},
                "zero_weights": [lab for lab, z in zip(d.column_labels, r.zero_flags[i]) if z],
            }
        )
    zero_counts = {lab: int((r.zero_flags[:, k]).sum()) for k, lab in enumerate(d.column_labels)}
    return {
        "dataset": name,
        "methods": ["dea"],
        "entities": entities,
        "efficient": int((r.scores == 1.0).sum()),
        "zero_weight_counts": zero_counts,
    }


def _fit_rows(fit: FitResult):
    header = ["dmu", "target", "predicted", "residual"]
    rows = [
        [nm, fit.target[i], fit.predicted[i], fit.residuals[i]]
        for i, nm in enumerate(fit.dataset.names)
    ]
    return header, rows


def _fit_json(fit: FitResult, full: bool, name) -> dict:
    header, rows = _fit_rows(fit)
    ranks = rank(fit.predicted)
    entities = []
    for row, rk in zip(rows, ranks.tolist()):
        entry = {h: (_num(v, full) if isinstance(v, float) else v) for h, v in zip(header, row)}
        entry["rank"] = rk
        entities.append(entry)
    out = {
        "dataset": name,
        "method": fit.label,
        "formula": formula_block(fit.formula, fit.dataset, full),
        "stats": _stats_block(Stats(fit.mean_abs_dev, fit.max_abs_dev, fit.sse), full),
        "feasible": fit.feasible,
        "optimizer": {
            "n_starts": fit.n_starts,
            "seed": fit.seed,
            "converged_starts": fit.converged_starts,
            "best_start": fit.best_start,
        },
        "entities": entities,
    }
    if fit.rescale_factor is not None:
        out["rescale_factor"] = _num(fit.rescale_factor, full)
    if fit.warnings:
        out["warnings"] = list(fit.warnings)
    return out


def _ranks_rows(obj: tuple[Dataset | list, np.ndarray, Ranks]):
    names, scores, ranks = obj
    return ["dmu", "score", "rank"], [[nm, scores[i], ranks[i]] for i, nm in enumerate(names)]


def render(obj, fmt: str = "json", full_precision: bool = False, name: str | None = None) -> str:
    """Serialize a ComparisonTable, DeaResult or FitResult as JSON or CSV text.

    A ``(names, scores, Ranks)`` tuple is also accepted for plain rankings.
    """
    if fmt not in ("json", "csv"):
        raise ValueError(f"unknown format {fmt!r}")
    if isinstance(obj, ComparisonTable):
        rows_fn, json_obj = _table_rows, lambda: _table_json(obj, full_precision, name or obj.name)
    elif isinstance(obj, DeaResult):
        rows_fn, json_obj = _dea_rows, lambda: _dea_json(obj, full_precision, name)
    elif isinstance(obj, FitResult):
        rows_fn, json_obj = _fit_rows, lambda: _fit_json(obj, full_precision, name)
    elif isinstance(obj, tuple) and len(obj) == 3:
        rows_fn = _ranks_rows

        def json_obj():
            names, scores, ranks = obj
            return {
                "dataset": name,
                "entities": [
                    {"dmu": nm, "score": _num(scores[i], full_precision), "rank": ranks[i]}
                    for i, nm in enumerate(names)
                ],
            }
    else:
        raise TypeError(f"cannot emit {type(obj).__name__}")
    if fmt == "json":
        return json.dumps(json_obj(), indent=2) + "\n"
    header, rows = rows_fn(obj)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v, full_precision) for v in row])
    return buf.getvalue()


def _write_text(text: str, destination) -> None:
    if hasattr(destination, "write"):
        destination.write(text)
    elif str(destination) == "-":
        sys.stdout.write(text)
    else:
        path = Path(destination)
        try:
            path.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}", str(path)) from exc


def emit(
    obj,
    fmt: str = "json",
    destination: str | Path | TextIO = "-",
    full_precision: bool = False,
    name: str | None = None,
) -> None:
    """Write ``render(obj, fmt)`` to a path, an open stream, or stdout for ``"-"``."""
    _write_text(render(obj, fmt, full_precision, name), destination)


def write_dataset(d: Dataset, destination: str | Path | TextIO = "-") -> None:
    """CSV writer matching ``dataset.parse_csv``; values round-trip exactly."""
    _write_text(to_csv(d), destination)
