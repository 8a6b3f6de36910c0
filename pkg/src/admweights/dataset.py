"""Attribute datasets: CSV parsing, validation and the built-in reference data.

A dataset file is self-describing: the first column is ``dmu`` and every other
header is ``input:<label>`` or ``output:<label>``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

from .errors import DatasetError

INPUT_PREFIX = "input:"
OUTPUT_PREFIX = "output:"


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True)
    if arr.ndim != 2:
        raise DatasetError(f"expected a 2-d matrix, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """n entities described by m inputs (more is worse) and s outputs (more is better)."""

    names: tuple[str, ...]
    inputs: np.ndarray
    outputs: np.ndarray
    input_labels: tuple[str, ...] = ()
    output_labels: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(str(x) for x in self.names))
        object.__setattr__(self, "inputs", _frozen(self.inputs))
        object.__setattr__(self, "outputs", _frozen(self.outputs))
        n = len(self.names)
        if self.inputs.shape[0] != n or self.outputs.shape[0] != n:
            raise DatasetError(
                f"row count mismatch: {n} names, {self.inputs.shape[0]} input rows, "
                f"{self.outputs.shape[0]} output rows"
            )
        if not self.input_labels:
            object.__setattr__(
                self, "input_labels", tuple(f"x{j + 1}" for j in range(self.m))
            )
        if not self.output_labels:
            object.__setattr__(
                self, "output_labels", tuple(f"y{r + 1}" for r in range(self.s))
            )
        object.__setattr__(self, "input_labels", tuple(self.input_labels))
        object.__setattr__(self, "output_labels", tuple(self.output_labels))
        if len(self.input_labels) != self.m or len(self.output_labels) != self.s:
            raise DatasetError("label count does not match matrix width")

    @property
    def n(self) -> int:
        return len(self.names)

    @property
    def m(self) -> int:
        return self.inputs.shape[1]

    @property
    def s(self) -> int:
        return self.outputs.shape[1]

    @property
    def column_labels(self) -> tuple[str, ...]:
        return self.input_labels + self.output_labels

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no entity named {name!r}") from None

    def take(self, rows: Iterable[int]) -> "Dataset":
        rows = list(rows)
        return Dataset(
            [self.names[i] for i in rows],
            self.inputs[rows],
            self.outputs[rows],
            self.input_labels,
            self.output_labels,
        )

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.names == other.names
            and self.input_labels == other.input_labels
            and self.output_labels == other.output_labels
            and np.array_equal(self.inputs, other.inputs)
            and np.array_equal(self.outputs, other.outputs)
        )

    __hash__ = None


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def validate(d: Dataset) -> ValidationReport:
    report = ValidationReport()
    if d.n < 1:
        report.errors.append("dataset has no entities")
    if d.m < 1:
        report.errors.append("dataset has no input columns")
    if d.s < 1:
        report.errors.append("dataset has no output columns")
    seen: dict[str, int] = {}
    for i, name in enumerate(d.names):
        if name in seen:
            report.errors.append(
                f"duplicate entity name {name!r} (rows {seen[name] + 1} and {i + 1})"
            )
        else:
            seen[name] = i
    for label, block, positive in (
        ("input", d.inputs, True),
        ("output", d.outputs, False),
    ):
        labels = d.input_labels if label == "input" else d.output_labels
        for i, j in zip(*np.nonzero(~np.isfinite(block))):
            report.errors.append(
                f"non-finite {label} {labels[j]!r} for {d.names[i]!r}"
            )
        bad = block <= 0 if positive else block < 0
        for i, j in zip(*np.nonzero(bad & np.isfinite(block))):
            need = "> 0" if positive else ">= 0"
            report.errors.append(
                f"{label} {labels[j]!r} for {d.names[i]!r} is {block[i, j]:g}; must be {need}"
            )
    if d.s >= 1:
        for i in np.nonzero(~(d.outputs > 0).any(axis=1))[0]:
            report.errors.append(f"entity {d.names[i]!r} has no positive output")
        for r in np.nonzero(~(d.outputs > 0).any(axis=0))[0]:
            report.warnings.append(
                f"output {d.output_labels[r]!r} is zero for every entity; "
                "its weight cannot be identified"
            )
    if d.n < d.m + d.s + 1:
        report.warnings.append(
            f"only {d.n} entities for {d.m} inputs and {d.s} outputs; "
            "DEA discrimination will be poor"
        )
    return report


def ensure_valid(d: Dataset) -> Dataset:
    report = validate(d)
    if report.errors:
        raise DatasetError(report.errors)
    return d


def parse_csv(text: str | TextIO) -> Dataset:
    """Read a dataset from CSV text or an open text stream.

    Every problem found is collected and raised together as a
    :class:`DatasetError`, each message carrying the row and column.
    """
    if isinstance(text, str):
        text = io.StringIO(text)
    rows = [row for row in csv.reader(text) if any(cell.strip() for cell in row)]
    if not rows:
        raise DatasetError("empty CSV: a header row is required")
    header = [h.strip() for h in rows[0]]
    problems = []
    if not header or header[0].lower() != "dmu":
        problems.append(f"row 1, column 1: first header must be 'dmu', got {header[0]!r}")
    in_cols, out_cols = [], []
    for c, h in enumerate(header[1:], start=1):
        if h.startswith(INPUT_PREFIX) and h[len(INPUT_PREFIX):]:
            in_cols.append(c)
        elif h.startswith(OUTPUT_PREFIX) and h[len(OUTPUT_PREFIX):]:
            out_cols.append(c)
        else:
            problems.append(
                f"row 1, column {c + 1}: header {h!r} must be 'input:<label>' or 'output:<label>'"
            )
    if not in_cols:
        problems.append("row 1: at least one input column is required")
    if not out_cols:
        problems.append("row 1: at least one output column is required")
    if problems:
        raise DatasetError(problems)

    names, values = [], []
    first_seen: dict[str, int] = {}
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            problems.append(f"row {r}: expected {len(header)} cells, got {len(row)}")
            continue
        name = row[0].strip()
        if not name:
            problems.append(f"row {r}, column 1: empty entity name")
        elif name in first_seen:
            problems.append(
                f"row {r}, column 1: duplicate name {name!r} (first at row {first_seen[name]})"
            )
        else:
            first_seen[name] = r
        parsed = []
        for c in range(1, len(header)):
            cell = row[c].strip()
            try:
                v = float(cell)
                if not math.isfinite(v):
                    raise ValueError
            except ValueError:
                problems.append(
                    f"row {r}, column {c + 1} ({header[c]}): {cell!r} is not a finite number"
                )
                v = math.nan
            else:
                if c in in_cols and v <= 0:
                    problems.append(
                        f"row {r}, column {c + 1} ({header[c]}): input must be > 0, got {cell}"
                    )
                elif c in out_cols and v < 0:
                    problems.append(
                        f"row {r}, column {c + 1} ({header[c]}): output must be >= 0, got {cell}"
                    )
            parsed.append(v)
        names.append(name)
        values.append(parsed)
    if not values and not problems:
        problems.append("no data rows")
    if problems:
        raise DatasetError(problems)

    body = np.array(values, dtype=float)
    d = Dataset(
        names,
        body[:, [c - 1 for c in in_cols]],
        body[:, [c - 1 for c in out_cols]],
        tuple(header[c][len(INPUT_PREFIX):] for c in in_cols),
        tuple(header[c][len(OUTPUT_PREFIX):] for c in out_cols),
    )
    return ensure_valid(d)


def format_number(x: float) -> str:
    """Shortest text that parses back to exactly ``x``."""
    text = repr(float(x))
    return text[:-2] if text.endswith(".0") else text


def to_csv(d: Dataset) -> str:
    """Inverse of :func:`parse_csv`; floats round-trip exactly."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(
        ["dmu"]
        + [INPUT_PREFIX + lab for lab in d.input_labels]
        + [OUTPUT_PREFIX + lab for lab in d.output_labels]
    )
    for i, name in enumerate(d.names):
        w.writerow(
            [name]
            + [format_number(v) for v in d.inputs[i]]
            + [format_number(v) for v in d.outputs[i]]
        )
    return buf.getvalue()


# Cooper, Seiford & Tone (2006) general hospitals.
_HOSPITAL14 = """\
dmu,input:Doctors,input:Nurses,output:Outpatients,output:Inpatients
A,3008,20980,97775,101225
B,3985,25643,135871,130580
C,4324,26978,133655,168473
D,3534,25361,46243,100407
E,8836,40796,176661,215616
F,5376,37562,182576,217615
G,4982,33088,98880,167278
H,4775,39122,136701,193393
I,8046,42958,225138,256575
J,8554,48955,257370,312877
K,6147,45514,165274,227099
L,8366,55140,203989,321623
M,13479,68037,174270,341743
N,21808,78302,322990,487539
"""

# Bowlin et al. (1985) synthetic hospitals; cost in $'000.
# H4/H8 and H12/H14 share output levels by construction.
_BOWLIN15 = """\
dmu,input:Cost,output:TU,output:RP,output:SP
H1,775.5,50,3000,2000
H2,816.6,50,2000,3000
H3,841.6,100,2000,3000
H4,800.5,100,3000,2000
H5,950.3,50,3000,3000
H6,1191.05,100,2000,5000
H7,1711.3,50,10000,2000
H8,884.75,100,3000,2000
H9,841.6,50,2000,3000
H10,2036.3,100,10000,2000
H11,1362.6,50,5000,3000
H12,1070,100,3000,3000
H13,1491.1,50,4000,5000
H14,1070,100,3000,3000
H15,898.7,50,3000,2000
"""

BUILTINS = {"hospital14": _HOSPITAL14, "bowlin15": _BOWLIN15}


def builtin(name: str) -> Dataset:
    try:
        text = BUILTINS[name]
    except KeyError:
        raise DatasetError(
            f"unknown built-in dataset {name!r}; choose from {sorted(BUILTINS)}"
        ) from None
    return parse_csv(text)
