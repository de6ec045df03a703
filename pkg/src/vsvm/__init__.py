"""Conditional-probability estimation by V-matrix weighted least squares,
with spectral and feasibility diagnostics for rank-deficient kernel
constraint matrices."""

from .datasets import Dataset, MixtureConfig, gaussian_mixture, load_csv, save_csv, xor_dataset
from .estimator import EvalMetrics, FitFailure, Model, evaluate, fit
from .feasibility import (
    FeasibilityReport,
    OracleOutcome,
    RangeViolation,
    Verdict,
    analyze,
    brute_force_oracle,
    recover_alpha,
    reduce_constraints,
)
from .kernels import GramMatrix, KernelKind, KernelSpec, gram, ink_spline0, rbf
from .numerics import SingularMatrix, SpectralReport, spectral_report, sym_eigen
from .qp import QpProblem, VMatrix, assemble, constraint_residuals, objective_value
from .solver import (
    KktResiduals,
    Multipliers,
    QpSolution,
    SolveStatus,
    SolverConfig,
    kkt_residuals,
    solve,
    verify_against_oracle,
)

__all__ = [
    "Dataset", "MixtureConfig", "gaussian_mixture", "load_csv", "save_csv", "xor_dataset",
    "EvalMetrics", "FitFailure", "Model", "evaluate", "fit",
    "FeasibilityReport", "OracleOutcome", "RangeViolation", "Verdict",
    "analyze", "brute_force_oracle", "recover_alpha", "reduce_constraints",
    "GramMatrix", "KernelKind", "KernelSpec", "gram", "ink_spline0", "rbf",
    "SingularMatrix", "SpectralReport", "spectral_report", "sym_eigen",
    "QpProblem", "VMatrix", "assemble", "constraint_residuals", "objective_value",
    "KktResiduals", "Multipliers", "QpSolution", "SolveStatus", "SolverConfig",
    "kkt_residuals", "solve", "verify_against_oracle",
]

__version__ = "0.1.0"
