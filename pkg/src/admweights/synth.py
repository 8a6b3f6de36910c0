"""Known-truth datasets: costs generated from a true weight formula and efficiencies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cwfit import Formula, canonicalize, predict
from .dataset import Dataset

# Efficient cost of a Bowlin-style hospital per teaching unit, regular and severe patient.
BOWLIN_TRUE = Formula([0.5, 0.13368, 0.17474], [1.0])


@dataclass(frozen=True, eq=False)
class SynthSpec:
    """Output levels, true efficiencies and the formula that links them to cost.

    With a single input the generated cost is (u . y) / efficiency. For
    several inputs ``input_mix`` gives each entity's input proportions, which
    are scaled so that v . x = (u . y) / efficiency.
    """

    true_formula: Formula
    output_levels: np.ndarray
    efficiencies: np.ndarray
    names: tuple[str, ...] = ()
    output_labels: tuple[str, ...] = ()
    input_labels: tuple[str, ...] = ()
    input_mix: np.ndarray | None = None

    def __post_init__(self):
        y = np.array(self.output_levels, dtype=float)
        e = np.array(self.efficiencies, dtype=float).ravel()
        if y.ndim != 2 or y.shape[0] != e.size:
            raise ValueError("output_levels must be n x s with one efficiency per row")
        if not ((e > 0) & (e <= 1)).all():
            raise ValueError("efficiencies must lie in (0, 1]")
        if y.shape[1] != self.true_formula.output_weights.size:
            raise ValueError("true formula does not match the number of outputs")
        if (y < 0).any():
            raise ValueError("output levels must be non-negative")
        m = self.true_formula.input_weights.size
        if m > 1 and self.input_mix is None:
            raise ValueError("input_mix is required when the true formula has several inputs")
        object.__setattr__(self, "output_levels", y)
        object.__setattr__(self, "efficiencies", e)
        if not self.names:
            object.__setattr__(self, "names", tuple(f"U{i + 1}" for i in range(e.size)))
        if not self.input_labels:
            labels = ("Cost",) if m == 1 else tuple(f"x{j + 1}" for j in range(m))
            object.__setattr__(self, "input_labels", labels)


@dataclass(frozen=True)
class RecoveryMetrics:
    coefficient_errors: tuple[float, ...]  # relative, outputs then inputs
    max_score_error: float
    mean_score_error: float

    @property
    def max_coefficient_error(self) -> float:
        return max(self.coefficient_errors)


def generate(spec: SynthSpec) -> Dataset:
    f = spec.true_formula
    efficient = spec.output_levels @ f.output_weights
    if not (efficient > 0).all():
        bad = [spec.names[i] for i in np.nonzero(~(efficient > 0))[0]]
        raise ValueError(f"efficient cost is zero for {bad}")
    composite = efficient / spec.efficiencies
    if spec.input_mix is None:
        inputs = (composite / f.input_weights[0])[:, None]
    else:
        mix = np.array(spec.input_mix, dtype=float)
        inputs = mix * (composite / (mix @ f.input_weights))[:, None]
    return Dataset(spec.names, inputs, spec.output_levels, spec.input_labels, spec.output_labels)


def true_scores(d: Dataset, f: Formula) -> np.ndarray:
    """Efficient cost over actual cost, i.e. ``predict`` with the true weights."""
    if f.intercept is not None:
        raise ValueError("a true-score formula has no intercept")
    return predict(f, d)


def recovery_error(true_f: Formula, fitted_f: Formula, d: Dataset) -> RecoveryMetrics:
    """Compare a fitted formula with the truth after scaling both to v = (1)."""
    if (
        true_f.output_weights.size != fitted_f.output_weights.size
        or true_f.input_weights.size != fitted_f.input_weights.size
    ):
        raise ValueError("formulas have different dimensions")
    if true_f.input_weights.size != 1:
        raise ValueError("recovery_error compares single-input formulas")
    a = canonicalize(true_f, normalize_input=True)
    b = canonicalize(fitted_f, normalize_input=True)
    ta = np.concatenate([a.output_weights, a.input_weights])
    tb = np.concatenate([b.output_weights, b.input_weights])
    denom = np.where(ta != 0, np.abs(ta), 1.0)
    coef = np.abs(tb - ta) / denom
    diff = np.abs(predict(b, d) - predict(a, d))
    return RecoveryMetrics(tuple(coef.tolist()), float(diff.max()), float(diff.mean()))


def random_spec(
    seed: int,
    n: int = 15,
    s: int = 3,
    n_efficient: int = 5,
    efficiency_range: tuple[float, float] = (0.7, 1.0),
    corner_ratio: float | None = 10.0,
) -> SynthSpec:
    """Random single-input spec with ``n_efficient`` units on the frontier.

    Output levels are drawn so that each output contributes a comparable share
    of efficient cost. With ``corner_ratio`` set, the first ``s`` efficient
    units each lean on one output (that output ``corner_ratio`` times the
    others), as in the Bowlin design; without such units the efficient set
    may not span the other units' output mixes and DEA overstates their
    scores. ``None`` draws every unit uniformly.
    """
    if not 0 <= n_efficient <= n:
        raise ValueError("n_efficient must be between 0 and n")
    rng = np.random.default_rng(seed)
    weights = rng.uniform(0.1, 1.0, size=s)
    levels = rng.uniform(1.0, 10.0, size=(n, s))
    if corner_ratio is not None:
        for r in range(min(s, n_efficient)):
            levels[r] = 10.0 / corner_ratio
            levels[r, r] = 10.0
    eff = rng.uniform(*efficiency_range, size=n)
    eff[:n_efficient] = 1.0
    return SynthSpec(Formula(weights, [1.0]), levels / weights, eff)
