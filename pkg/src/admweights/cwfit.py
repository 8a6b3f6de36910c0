"""Common-weights ratio formula fitted to DEA scores by least squares.

The fitted model is score_i = (u . y_i) / (v . x_i) + c, with u, v >= 0 and an
optional intercept c. Two ways of keeping the formula below the DEA scores are
offered: ``fit_constrained`` (one-sided residuals enforced during the fit) and
``fit_ols`` followed by ``rescale``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from ._lsq import projected_lm
from .dataset import Dataset, ensure_valid
from .errors import DatasetError, FitError

_CANON_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Formula:
    output_weights: np.ndarray
    input_weights: np.ndarray
    intercept: float | None = None

    def __post_init__(self):
        u = np.array(self.output_weights, dtype=float).ravel()
        v = np.array(self.input_weights, dtype=float).ravel()
        u.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "output_weights", u)
        object.__setattr__(self, "input_weights", v)
        if self.intercept is not None:
            object.__setattr__(self, "intercept", float(self.intercept))

    @property
    def c(self) -> float:
        return 0.0 if self.intercept is None else self.intercept

    def scaled(self, k: float) -> "Formula":
        """Multiply every weight by ``k``; the intercept is left alone."""
        return Formula(self.output_weights * k, self.input_weights * k, self.intercept)


@dataclass(frozen=True)
class FitOptions:
    intercept: bool = False
    n_starts: int = 50
    seed: int = 42
    max_iterations: int = 500
    gradient_tolerance: float = 1e-10
    penalty_initial: float = 10.0
    penalty_growth: float = 10.0
    penalty_max: float = 1e14
    feasibility_tolerance: float = 1e-8

    def __post_init__(self):
        if self.n_starts < 0 or self.max_iterations < 1:
            raise ValueError("n_starts must be >= 0 and max_iterations >= 1")
        if min(self.gradient_tolerance, self.penalty_initial, self.feasibility_tolerance) <= 0:
            raise ValueError("tolerances and penalty weights must be positive")
        if self.penalty_growth <= 1:
            raise ValueError("penalty_growth must exceed 1")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")


@dataclass(frozen=True)
class Stats:
    mean_abs_dev: float
    max_abs_dev: float
    sse: float


@dataclass(frozen=True, eq=False)
class FitResult:
    method: str  # "ols", "ols_rescaled" or "constrained"
    dataset: Dataset
    target: np.ndarray
    formula: Formula
    predicted: np.ndarray
    residuals: np.ndarray  # target - predicted
    sse: float
    mean_abs_dev: float
    max_abs_dev: float
    feasible: bool
    n_starts: int
    seed: int
    converged_starts: int
    best_start: int = 0
    warnings: tuple[str, ...] = ()
    rescale_factor: float | None = None

    @property
    def label(self) -> str:
        return self.method + ("_intercept" if self.formula.intercept is not None else "")

    @property
    def max_violation(self) -> float:
        return float(max(0.0, -self.residuals.min()))


def predict(f: Formula, d: Dataset) -> np.ndarray:
    if f.output_weights.size != d.s or f.input_weights.size != d.m:
        raise ValueError(
            f"formula has {f.output_weights.size} outputs / {f.input_weights.size} inputs, "
            f"dataset has {d.s} / {d.m}"
        )
    denom = d.inputs @ f.input_weights
    if not (denom > 0).all():
        bad = [d.names[i] for i in np.nonzero(~(denom > 0))[0]]
        raise ValueError(f"non-positive weighted input for {bad}")
    return d.outputs @ f.output_weights / denom + f.c


def canonicalize(f: Formula, normalize_input: bool = False) -> Formula:
    """Present weights with the first non-negligible output weight equal to 1.

    With ``normalize_input`` and a single input, divide by the input weight
    instead (the "... / Cost" presentation). The intercept is unchanged.
    Weights count as negligible below 1e-9 of the largest weight, so the
    threshold does not depend on the units the data happen to be in.
    """
    weights = np.concatenate([f.output_weights, f.input_weights])
    top = np.abs(weights).max(initial=0.0)
    if not top > 0:
        raise ValueError("cannot canonicalize a formula whose weights are all zero")
    if normalize_input and f.input_weights.size == 1:
        pivot = f.input_weights[0]
        if not pivot > _CANON_TOL * top:
            raise ValueError("input weight is zero; cannot normalize by it")
    else:
        big = np.nonzero(weights > _CANON_TOL * top)[0]
        pivot = weights[big[0]]
    return f.scaled(1.0 / pivot)


def residual_stats(predicted, target) -> Stats:
    predicted = np.asarray(predicted, dtype=float)
    target = np.asarray(target, dtype=float)
    if predicted.shape != target.shape:
        raise ValueError(f"length mismatch: {predicted.shape} vs {target.shape}")
    dev = target - predicted
    return Stats(float(np.abs(dev).mean()), float(np.abs(dev).max()), float(dev @ dev))


def rescale(formula_scores, dea_scores) -> tuple[np.ndarray, float]:
    """Divide formula scores by max(formula/DEA) so none exceeds its DEA score.

    Score ratios are preserved and at least one entity lands exactly on its
    DEA score.
    """
    f = np.asarray(formula_scores, dtype=float)
    e = np.asarray(dea_scores, dtype=float)
    if f.shape != e.shape:
        raise ValueError(f"length mismatch: {f.shape} vs {e.shape}")
    if not ((f > 0).all() and (e > 0).all()):
        raise ValueError("rescale needs strictly positive formula and DEA scores")
    factor = float((f / e).max())
    return f / factor, factor


# -- objective -------------------------------------------------------------


def sse_objective(d: Dataset, target, f: Formula) -> float:
    r = predict(f, d) - np.asarray(target, dtype=float)
    return float(r @ r)


def sse_gradient(d: Dataset, target, f: Formula):
    """Analytic gradient of the sum of squared residuals.

    Returns ``(d/du, d/dv, d/dc)``; the last is None without an intercept.
    """
    num = d.outputs @ f.output_weights
    den = d.inputs @ f.input_weights
    r = num / den + f.c - np.asarray(target, dtype=float)
    gu = 2.0 * d.outputs.T @ (r / den)
    gv = -2.0 * d.inputs.T @ (r * num / den**2)
    gc = 2.0 * r.sum() if f.intercept is not None else None
    return gu, gv, gc


class _Problem:
    """The fit in column-mean-scaled coordinates with gauge sum(v) = 1.

    Scaling every attribute by its mean makes the parameters comparable in
    size; sum(v) = 1 in these units is v . mean(x) = 1 in the original ones.
    """

    def __init__(self, d: Dataset, target: np.ndarray, intercept: bool):
        self.d = d
        self.target = target
        self.intercept = intercept
        self.s, self.m = d.s, d.m
        self.yscale = d.outputs.mean(axis=0)
        self.yscale[self.yscale == 0] = 1.0
        self.xscale = d.inputs.mean(axis=0)
        self.Y = d.outputs / self.yscale
        self.X = d.inputs / self.xscale
        self.size = self.s + self.m + int(intercept)
        self.bounded = np.zeros(self.size, bool)
        self.bounded[: self.s + self.m] = True

    def split(self, p):
        s, m = self.s, self.m
        return p[:s], p[s:s + m], (p[s + m] if self.intercept else 0.0)

    def normalize(self, p):
        v_sum = p[self.s:self.s + self.m].sum()
        if not v_sum > 1e-12:
            return None
        p = p.copy()
        p[: self.s + self.m] /= v_sum
        return p

    def residuals(self, p):
        u, v, c = self.split(p)
        num = self.Y @ u
        den = self.X @ v
        r = num / den + c - self.target
        J = np.empty((self.d.n, self.size))
        J[:, : self.s] = self.Y / den[:, None]
        J[:, self.s:self.s + self.m] = -(num / den**2)[:, None] * self.X
        if self.intercept:
            J[:, -1] = 1.0
        return r, J

    def penalized(self, mu):
        root = np.sqrt(mu)

        def fn(p):
            r, J = self.residuals(p)
            active = r > 0
            return (
                np.concatenate([r, root * np.where(active, r, 0.0)]),
                np.vstack([J, root * np.where(active[:, None], J, 0.0)]),
            )

        return fn

    def to_params(self, f: Formula) -> np.ndarray:
        p = np.concatenate([f.output_weights * self.yscale, f.input_weights * self.xscale])
        if self.intercept:
            p = np.append(p, f.c)
        return self.normalize(p)

    def to_formula(self, p) -> Formula:
        u, v, c = self.split(p)
        return Formula(u / self.yscale, v / self.xscale, c if self.intercept else None)

    def cost(self, p) -> float:
        r, _ = self.residuals(p)
        return float(r @ r)

    def max_violation(self, p) -> float:
        r, _ = self.residuals(p)
        return float(r.max())


def _check_inputs(d: Dataset, target) -> tuple[np.ndarray, list[str]]:
    ensure_valid(d)
    t = np.asarray(target, dtype=float).ravel()
    if t.size != d.n:
        raise ValueError(f"target has {t.size} values for {d.n} entities")
    if not ((t > 0).all() and (t <= 1 + 1e-9).all()):
        raise ValueError("target scores must lie in (0, 1]")
    notes = []
    for r in np.nonzero(~(d.outputs > 0).any(axis=0))[0]:
        msg = f"output {d.output_labels[r]!r} is identically zero; its weight is unidentifiable"
        warnings.warn(msg, RuntimeWarning, stacklevel=3)
        notes.append(msg)
    return t, notes


def _random_starts(prob: _Problem, opts: FitOptions) -> list[np.ndarray]:
    rng = np.random.default_rng(opts.seed)
    level = prob.target.mean()
    starts = []
    for _ in range(opts.n_starts):
        u = rng.dirichlet(np.ones(prob.s)) * level
        v = rng.dirichlet(np.ones(prob.m))
        p = np.concatenate([u, v, [0.0] if prob.intercept else []])
        starts.append(p)
    return starts


def _mean_multiplier_start(prob: _Problem, dea) -> np.ndarray:
    if dea is not None:
        u = np.asarray(dea.output_weights).mean(axis=0)
        v = np.asarray(dea.input_weights).mean(axis=0)
        f = Formula(u, v, 0.0 if prob.intercept else None)
        p = prob.to_params(f)
        if p is not None and (p[: prob.s] > 0).any():
            return p
    u = np.full(prob.s, prob.target.mean() / prob.s)
    v = np.full(prob.m, 1.0 / prob.m)
    return np.concatenate([u, v, [0.0] if prob.intercept else []])


def _build_result(method, d, target, formula, opts, n_starts, converged, best, notes, factor=None):
    formula = canonicalize(formula)
    predicted = predict(formula, d)
    residuals = target - predicted
    stats = residual_stats(predicted, target)
    if formula.intercept is not None and (predicted <= 0).any():
        notes = list(notes) + ["some predicted scores are <= 0"]
    for a in (predicted, residuals):
        a.setflags(write=False)
    return FitResult(
        method=method,
        dataset=d,
        target=target,
        formula=formula,
        predicted=predicted,
        residuals=residuals,
        sse=stats.sse,
        mean_abs_dev=stats.mean_abs_dev,
        max_abs_dev=stats.max_abs_dev,
        feasible=bool((residuals >= -opts.feasibility_tolerance).all()),
        n_starts=n_starts,
        seed=opts.seed,
        converged_starts=converged,
        best_start=best,
        warnings=tuple(notes),
        rescale_factor=factor,
    )


def _pick(candidates):
    """Lowest cost wins; ties go to the earliest start."""
    return min(candidates, key=lambda c: (c[0], c[1]))


def fit_ols(d: Dataset, target, opts: FitOptions = FitOptions(), dea=None) -> FitResult:
    """Unconstrained least-squares fit of the ratio formula to ``target``.

    ``dea`` (a DeaResult) supplies the averaged-multiplier starting point when
    given. With an intercept, the no-intercept optimum is also used as a
    start, so adding the intercept never makes the fit worse.
    """
    target, notes = _check_inputs(d, target)
    prob = _Problem(d, target, opts.intercept)
    starts = [_mean_multiplier_start(prob, dea)]
    base = None
    if opts.intercept:
        base = fit_ols(d, target, replace(opts, intercept=False), dea)
        starts.append(prob.to_params(_with_zero_intercept(base.formula)))
    starts += _random_starts(prob, opts)

    candidates, converged = [], 0
    for k, p0 in enumerate(starts):
        out = projected_lm(
            prob.residuals, p0, prob.bounded, prob.normalize,
            opts.max_iterations, opts.gradient_tolerance,
        )
        converged += out.converged
        if out.converged:
            candidates.append((out.cost, k, out.params))
    if not candidates:
        raise FitError(f"none of the {len(starts)} optimizer starts converged")
    _, best, p = _pick(candidates)
    result = _build_result("ols", d, target, prob.to_formula(p), opts, len(starts), converged, best, notes)
    if base is not None and base.sse <= result.sse:
        result = _build_result(
            "ols", d, target, _with_zero_intercept(base.formula), opts, len(starts), converged, 1, notes
        )
    return result


def _with_zero_intercept(f: Formula) -> Formula:
    return Formula(f.output_weights, f.input_weights, 0.0)


def rescale_fit(fit: FitResult) -> FitResult:
    """Apply :func:`rescale` to a fit, returning the adjusted formula's result.

    Dividing every score by the factor is the same as dividing the output
    weights and the intercept by it.
    """
    _, factor = rescale(fit.predicted, fit.target)
    f = fit.formula
    scaled = Formula(
        f.output_weights / factor,
        f.input_weights,
        None if f.intercept is None else f.intercept / factor,
    )
    opts = FitOptions(seed=fit.seed, intercept=f.intercept is not None)
    return _build_result(
        "ols_rescaled", fit.dataset, fit.target, scaled, opts,
        fit.n_starts, fit.converged_starts, fit.best_start, fit.warnings, factor,
    )


def _make_feasible(prob: _Problem, p: np.ndarray) -> np.ndarray:
    """Remove any residual constraint violation left by the penalty method."""
    r, _ = prob.residuals(p)
    if r.max() <= 0:
        return p
    p = p.copy()
    if prob.intercept:
        p[-1] -= r.max()
    else:
        u, v, _ = prob.split(p)
        pred = prob.Y @ u / (prob.X @ v)
        p[: prob.s] /= (pred / prob.target).max()
    return p


def fit_constrained(d: Dataset, target, opts: FitOptions = FitOptions(), dea=None) -> FitResult:
    """Least-squares fit subject to predicted_i <= target_i for every entity.

    Constraints are handled with an increasing quadratic penalty on
    violations, after which any remaining violation is removed by shrinking
    the output weights (or the intercept). The rescaled OLS solution is always
    among the candidates, so the result is never worse than OLS + rescale.
    """
    target, notes = _check_inputs(d, target)
    prob = _Problem(d, target, opts.intercept)
    # Known feasible points: rescaled OLS, and for the intercept model the
    # no-intercept optimum with c = 0.
    references = []
    try:
        references.append(rescale_fit(fit_ols(d, target, opts, dea)).formula)
    except (FitError, ValueError) as exc:
        notes.append(f"rescaled OLS start unavailable: {exc}")
    if opts.intercept:
        base = fit_constrained(d, target, replace(opts, intercept=False), dea)
        references.append(_with_zero_intercept(base.formula))
    feasible_starts = [prob.to_params(f) for f in references]
    starts = feasible_starts + [_mean_multiplier_start(prob, dea)] + _random_starts(prob, opts)

    candidates, converged = [], 0
    for k, p in enumerate(starts):
        if k < len(feasible_starts):
            p = _make_feasible(prob, p)
            candidates.append((prob.cost(p), k, p))
        mu, ok = opts.penalty_initial, True
        while True:
            out = projected_lm(
                prob.penalized(mu), p, prob.bounded, prob.normalize,
                opts.max_iterations, opts.gradient_tolerance,
            )
            ok = out.converged
            p = out.params
            if prob.max_violation(p) < opts.feasibility_tolerance or mu >= opts.penalty_max:
                break
            mu *= opts.penalty_growth
        converged += ok
        if not ok:
            continue
        p = _make_feasible(prob, p)
        candidates.append((prob.cost(p), k, p))
    if not candidates:
        raise FitError(f"none of the {len(starts)} optimizer starts converged")
    _, best, p = _pick(candidates)
    result = _build_result(
        "constrained", d, target, prob.to_formula(p), opts, len(starts), converged, best, notes
    )
    # Round-off in the coordinate change must not let a reference point win
    # in exact arithmetic but lose in the reported numbers.
    for k, f in enumerate(references):
        ref = _build_result("constrained", d, target, f, opts, len(starts), converged, k, notes)
        if ref.feasible and (ref.sse <= result.sse or not result.feasible):
            result = ref
    if not result.feasible:
        raise FitError(
            f"constrained fit violates the DEA bound by {result.max_violation:.3g} "
            f"(tolerance {opts.feasibility_tolerance:g})"
        )
    return result


def direct_regression(d: Dataset) -> Formula:
    """Regress the single input on the outputs (no intercept) via the normal equations.

    The returned formula has v = (1), so its predictions are fitted-cost
    over actual-cost ratios.
    """
    if d.m != 1:
        raise DatasetError(f"direct regression needs exactly one input column, got {d.m}")
    Y, x = d.outputs, d.inputs[:, 0]
    gram = Y.T @ Y
    if np.linalg.matrix_rank(Y) < d.s:
        raise FitError("normal equations are singular: output columns are linearly dependent")
    u = np.linalg.solve(gram, Y.T @ x)
    return Formula(u, [1.0])
