"""Objective common weights for scoring: DEA upper bounds, then a least-squares ratio formula."""

from .cwfit import (
    FitOptions,
    FitResult,
    Formula,
    Stats,
    canonicalize,
    direct_regression,
    fit_constrained,
    fit_ols,
    predict,
    rescale,
    rescale_fit,
    residual_stats,
)
from .dataset import Dataset, ValidationReport, builtin, parse_csv, to_csv, validate
from .dea import DeaResult, ccr_multiplier_lp, ccr_scores, zero_weight_diagnostics
from .errors import AdmError, DatasetError, FitError, LpNumericalError, NumericalError
from .linprog import LinearProgram, LpSolution, solve_lp
from .report import ComparisonTable, Ranks, compare, emit, rank, render
from .synth import BOWLIN_TRUE, RecoveryMetrics, SynthSpec, generate, random_spec, recovery_error, true_scores

__version__ = "0.1.0"
