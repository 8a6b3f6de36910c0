"""Dense two-phase simplex for the small LPs produced by the DEA module.

Bland's rule is used for both entering and leaving choices, so the solver
cannot cycle and identical inputs always give identical output bits. Optimal
points are basic (vertex) solutions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import LpNumericalError

LE, EQ, GE = "<=", "=", ">="
_SENSES = {LE: LE, "≤": LE, "=": EQ, "==": EQ, GE: GE, "≥": GE}

TOL = 1e-9
_PIVOT_TOL = 1e-11


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """``maximize`` or minimize ``objective @ x`` subject to ``A x (sense) b``.

    ``lower`` defaults to zero for every variable; use ``-inf`` for a free
    variable. ``upper`` defaults to ``+inf``.
    """

    objective: np.ndarray
    A: np.ndarray
    senses: tuple[str, ...]
    b: np.ndarray
    maximize: bool = False
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).ravel()
        nvar = c.size
        A = np.asarray(self.A, dtype=float).reshape(-1, nvar)
        b = np.asarray(self.b, dtype=float).ravel()
        senses = tuple(_SENSES.get(s) for s in self.senses)
        if None in senses:
            raise ValueError(f"unknown constraint sense in {self.senses!r}")
        if len(senses) != A.shape[0] or b.size != A.shape[0]:
            raise ValueError("A, senses and b disagree on the number of constraints")
        lower = np.zeros(nvar) if self.lower is None else np.asarray(self.lower, float).ravel()
        upper = np.full(nvar, np.inf) if self.upper is None else np.asarray(self.upper, float).ravel()
        if lower.size != nvar or upper.size != nvar:
            raise ValueError("bounds must match the number of variables")
        if not (np.isfinite(c).all() and np.isfinite(A).all() and np.isfinite(b).all()):
            raise ValueError("LP coefficients must be finite")
        if np.isnan(lower).any() or np.isnan(upper).any() or (lower == np.inf).any() or (upper == -np.inf).any():
            raise ValueError("invalid variable bounds")
        for name, val in (("objective", c), ("A", A), ("b", b), ("lower", lower), ("upper", upper)):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "senses", senses)

    @classmethod
    def from_rows(
        cls,
        objective: Sequence[float],
        rows: Sequence[tuple[Sequence[float], str, float]],
        maximize: bool = False,
        lower=None,
        upper=None,
    ) -> "LinearProgram":
        c = np.asarray(objective, dtype=float)
        A = np.array([r[0] for r in rows], dtype=float).reshape(len(rows), c.size)
        return cls(c, A, tuple(r[1] for r in rows), [r[2] for r in rows], maximize, lower, upper)

    @property
    def n_variables(self) -> int:
        return self.objective.size

    @property
    def n_constraints(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    objective_value: float | None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _standardize(lp: LinearProgram):
    """Rewrite bounds so every variable is >= 0: x = offset + T @ z."""
    nvar = lp.n_variables
    cols, offset, extra_rows = [], np.zeros(nvar), []
    for j in range(nvar):
        lo, hi = lp.lower[j], lp.upper[j]
        e = np.zeros(nvar)
        e[j] = 1.0
        if np.isfinite(lo):
            offset[j] = lo
            cols.append(e)
            if np.isfinite(hi):
                extra_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            cols.append(-e)
        else:
            cols.append(e)
            cols.append(-e)
    T = np.array(cols).T
    A = lp.A @ T
    b = lp.b - lp.A @ offset
    senses = list(lp.senses)
    if extra_rows:
        bound_rows = np.zeros((len(extra_rows), T.shape[1]))
        for r, (k, width) in enumerate(extra_rows):
            bound_rows[r, k] = 1.0
        A = np.vstack([A, bound_rows])
        b = np.concatenate([b, [w for _, w in extra_rows]])
        senses += [LE] * len(extra_rows)
    return A, b, senses, T, offset


def _pivot(T: np.ndarray, basis: list[int], row: int, col: int) -> None:
    T[row] /= T[row, col]
    others = np.arange(T.shape[0]) != row
    T[others] -= np.outer(T[others, col], T[row])
    T[others, col] = 0.0
    T[row, col] = 1.0
    basis[row] = col


def _run(T, basis, cost, allowed, max_iter, counter):
    """Bland-rule primal simplex on tableau T (last column is the rhs)."""
    ncols = T.shape[1] - 1
    while True:
        if counter[0] >= max_iter:
            raise LpNumericalError(
                f"simplex exceeded {max_iter} iterations (cycling guard)"
            )
        reduced = cost - cost[basis] @ T[:, :ncols]
        entering = next((j for j in allowed if reduced[j] < -TOL), None)
        if entering is None:
            return "optimal"
        column = T[:, entering]
        candidates = np.nonzero(column > _PIVOT_TOL)[0]
        if candidates.size == 0:
            return "unbounded"
        ratios = T[candidates, -1] / column[candidates]
        best = ratios.min()
        tied = candidates[ratios <= best + TOL * max(1.0, abs(best))]
        leaving = min(tied, key=lambda i: basis[i])
        _pivot(T, basis, leaving, entering)
        counter[0] += 1


def solve_lp(lp: LinearProgram, max_iterations: int | None = None) -> LpSolution:
    A, b, senses, Tmap, offset = _standardize(lp)
    k, nz = A.shape
    c = Tmap.T @ lp.objective
    if lp.maximize:
        c = -c

    # Equilibrate rows, then columns, then the rhs, so that TOL is meaningful
    # for data measured in arbitrary units.
    row_scale = np.abs(A).max(axis=1) if nz else np.zeros(k)
    zero_rows = row_scale == 0
    for i in np.nonzero(zero_rows)[0]:
        ok = {LE: b[i] >= -TOL, GE: b[i] <= TOL, EQ: abs(b[i]) <= TOL}[senses[i]]
        if not ok:
            return LpSolution("infeasible", None, None)
    keep = ~zero_rows
    A, b = A[keep] / row_scale[keep, None], b[keep] / row_scale[keep]
    senses = [s for s, kp in zip(senses, keep) if kp]
    k = A.shape[0]
    col_scale = np.abs(A).max(axis=0) if k else np.ones(nz)
    col_scale[col_scale == 0] = 1.0
    A = A / col_scale
    c_scaled = c / col_scale
    b_scale = np.abs(b).max() if k else 0.0
    b_scale = b_scale if b_scale > 0 else 1.0
    b = b / b_scale
    c_norm = np.abs(c_scaled).max() if nz else 0.0
    c_scaled = c_scaled / c_norm if c_norm > 0 else c_scaled

    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1
    senses = [
        {LE: GE, GE: LE, EQ: EQ}[s] if f else s for s, f in zip(senses, flip)
    ]

    n_slack = sum(s != EQ for s in senses)
    n_art = sum(s != LE for s in senses)
    ncols = nz + n_slack + n_art
    T = np.zeros((k, ncols + 1))
    T[:, :nz] = A
    T[:, -1] = b
    basis = [0] * k
    slack_j, art_j = nz, nz + n_slack
    for i, s in enumerate(senses):
        if s == LE:
            T[i, slack_j] = 1.0
            basis[i] = slack_j
            slack_j += 1
        else:
            if s == GE:
                T[i, slack_j] = -1.0
                slack_j += 1
            T[i, art_j] = 1.0
            basis[i] = art_j
            art_j += 1
    artificial = set(range(nz + n_slack, ncols))

    max_iter = max_iterations or 50 * (k + ncols + 10)
    counter = [0]

    if n_art:
        phase1_cost = np.zeros(ncols)
        phase1_cost[nz + n_slack:] = 1.0
        _run(T, basis, phase1_cost, range(ncols), max_iter, counter)
        if phase1_cost[basis] @ T[:, -1] > TOL:
            return LpSolution("infeasible", None, None, counter[0])
        # Drive degenerate artificials out of the basis; drop redundant rows.
        i = 0
        while i < T.shape[0]:
            if basis[i] in artificial:
                row = T[i, :nz + n_slack]
                j = next((j for j in range(nz + n_slack) if abs(row[j]) > _PIVOT_TOL), None)
                if j is None:
                    T = np.delete(T, i, axis=0)
                    del basis[i]
                    continue
                _pivot(T, basis, i, j)
            i += 1

    phase2_cost = np.zeros(ncols)
    phase2_cost[:nz] = c_scaled
    status = _run(T, basis, phase2_cost, range(nz + n_slack), max_iter, counter)
    if status == "unbounded":
        return LpSolution("unbounded", None, None, counter[0])

    z = np.zeros(ncols)
    z[basis] = T[:, -1]
    z = np.maximum(z[:nz], 0.0) * b_scale / col_scale
    x = offset + Tmap @ z
    x = np.minimum(np.maximum(x, lp.lower), lp.upper)
    return LpSolution("optimal", x, float(lp.objective @ x), counter[0])
