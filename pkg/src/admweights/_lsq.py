"""Projected Levenberg-Marquardt for bound-constrained nonlinear least squares."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

_LAMBDA_MIN = 1e-15
_LAMBDA_MAX = 1e12


@dataclass
class LmOutcome:
    params: np.ndarray
    cost: float  # sum of squared residuals
    converged: bool
    iterations: int


def projected_lm(
    residual_and_jacobian: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
    p0: np.ndarray,
    bounded: np.ndarray,
    normalize: Callable[[np.ndarray], np.ndarray | None],
    max_iterations: int = 500,
    gradient_tolerance: float = 1e-10,
) -> LmOutcome:
    """Minimize ||r(p)||^2 subject to p[bounded] >= 0.

    ``normalize`` maps an iterate onto the gauge surface (or returns None when
    the point is unusable); the objective must be invariant under it.
    Convergence means the squared norm of the projected gradient fell below
    ``gradient_tolerance``, or no descent step exists at working precision.
    """
    p = normalize(np.asarray(p0, dtype=float).copy())
    if p is None:
        raise ValueError("starting point is not usable")
    r, J = residual_and_jacobian(p)
    cost = float(r @ r)
    lam = 1e-3
    for it in range(max_iterations):
        grad = 2.0 * (J.T @ r)
        pg = grad.copy()
        pg[bounded] = p[bounded] - np.maximum(p[bounded] - grad[bounded], 0.0)
        if pg @ pg <= gradient_tolerance:
            return LmOutcome(p, cost, True, it)

        free = ~(bounded & (p <= 0.0) & (grad > 0.0))
        Jf = J[:, free]
        H = Jf.T @ Jf
        rhs = -(Jf.T @ r)
        diag = np.diag(H).copy()
        floor = 1e-12 * max(diag.max(initial=0.0), 1e-300)
        while True:
            A = H + lam * np.diag(np.maximum(diag, floor))
            try:
                step = np.linalg.solve(A, rhs)
            except np.linalg.LinAlgError:
                step = None
            trial = None
            if step is not None and np.isfinite(step).all():
                trial = p.copy()
                trial[free] += step
                trial[bounded] = np.maximum(trial[bounded], 0.0)
                trial = normalize(trial)
            if trial is not None:
                r_new, J_new = residual_and_jacobian(trial)
                cost_new = float(r_new @ r_new)
                if np.isfinite(cost_new) and cost_new < cost:
                    break
            lam *= 4.0
            if lam > _LAMBDA_MAX:
                return LmOutcome(p, cost, True, it)
        improvement = cost - cost_new
        p, r, J, cost = trial, r_new, J_new, cost_new
        lam = max(lam / 5.0, _LAMBDA_MIN)
        if improvement <= 1e-15 * cost + 1e-300:
            return LmOutcome(p, cost, True, it + 1)
    return LmOutcome(p, cost, False, max_iterations)
