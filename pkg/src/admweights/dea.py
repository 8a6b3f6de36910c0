"""CCR efficiency scores in multiplier form.

For entity ``o`` the fractional problem max (u.y_o)/(v.x_o) subject to every
entity's ratio being at most 1 is linearized by fixing v.x_o = 1, which gives

    maximize    u . y_o
    subject to  v . x_o = 1
                u . y_i - v . x_i <= 0   for every i
                u, v >= 0

Scores are unique; multiplier vectors in general are not, and the one
returned is whichever vertex the simplex reaches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, ensure_valid
from .errors import LpNumericalError
from .linprog import EQ, LE, LinearProgram, solve_lp

DEFAULT_ZERO_TOL = 1e-7
_CLAMP = 1e-9


@dataclass(frozen=True, eq=False)
class DeaResult:
    dataset: Dataset
    scores: np.ndarray
    output_weights: np.ndarray  # n x s, one optimal u per entity
    input_weights: np.ndarray  # n x m
    zero_flags: np.ndarray  # n x (m + s), inputs first

    @property
    def names(self):
        return self.dataset.names

    def multipliers(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        return self.output_weights[i], self.input_weights[i]


def ccr_multiplier_lp(d: Dataset, o: int) -> LinearProgram:
    """Multiplier LP for entity ``o``; variables ordered (u_1..u_s, v_1..v_m)."""
    if not 0 <= o < d.n:
        raise IndexError(f"entity index {o} out of range for {d.n} entities")
    s, m = d.s, d.m
    objective = np.concatenate([d.outputs[o], np.zeros(m)])
    normalization = np.concatenate([np.zeros(s), d.inputs[o]])
    ratio_rows = np.hstack([d.outputs, -d.inputs])
    A = np.vstack([normalization, ratio_rows])
    senses = (EQ,) + (LE,) * d.n
    b = np.concatenate([[1.0], np.zeros(d.n)])
    return LinearProgram(objective, A, senses, b, maximize=True)


def zero_weight_diagnostics(r: DeaResult, tol: float = DEFAULT_ZERO_TOL):
    """Flag multipliers that are zero or negligible.

    A factor is flagged for an entity when its multiplier is at most ``tol``
    times that entity's largest multiplier. Returns the n x (m+s) flag table
    (inputs first, matching ``Dataset.column_labels``) and per-factor counts.
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    weights = np.hstack([r.input_weights, r.output_weights])
    scale = weights.max(axis=1, keepdims=True)
    flags = weights <= tol * scale
    counts = dict(zip(r.dataset.column_labels, flags.sum(axis=0).tolist()))
    return flags, counts


def ccr_scores(d: Dataset, zero_tol: float = DEFAULT_ZERO_TOL) -> DeaResult:
    ensure_valid(d)
    scores = np.empty(d.n)
    u = np.empty((d.n, d.s))
    v = np.empty((d.n, d.m))
    for o in range(d.n):
        try:
            sol = solve_lp(ccr_multiplier_lp(d, o))
        except LpNumericalError as exc:
            raise LpNumericalError(f"DEA solve failed for entity {d.names[o]!r}: {exc}") from exc
        if not sol.optimal:
            # The multiplier LP is always feasible and bounded for valid data.
            raise LpNumericalError(f"DEA solve for entity {d.names[o]!r} returned {sol.status}")
        u[o], v[o] = sol.x[: d.s], sol.x[d.s:]
        score = sol.objective_value
        if abs(score - 1.0) <= _CLAMP:
            score = 1.0
        scores[o] = score
    for a in (scores, u, v):
        a.setflags(write=False)
    partial = DeaResult(d, scores, u, v, np.zeros((d.n, d.m + d.s), bool))
    flags, _ = zero_weight_diagnostics(partial, zero_tol)
    flags.setflags(write=False)
    return DeaResult(d, scores, u, v, flags)
