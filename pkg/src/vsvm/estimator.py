"""End-to-end conditional-probability pipeline: fit, predict, evaluate.

``fit`` never raises on solver failure: it returns a ``FitFailure`` carrying
the Gram spectral report, the solver outcome, and an independent feasibility
verdict, so every failure is classified as degenerate-but-feasible or truly
infeasible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import Dataset
from .feasibility import FeasibilityReport, analyze
from .kernels import GramMatrix, KernelSpec, gram
from .numerics import SpectralReport
from .qp import QpProblem, VMatrix, assemble, constraint_residuals
from .solver import QpSolution, SolveStatus, SolverConfig, solve

TRAINING_RESIDUAL_LIMIT = 1e-6


@dataclass(frozen=True)
class FitDiagnostics:
    solution: QpSolution
    feasibility: FeasibilityReport


@dataclass(frozen=True)
class Model:
    """Fitted conditional-probability model f(x) = sum_i alpha_i K(x_i, x).

    Only constructed from Optimal solves; training constraint residuals are
    below 1e-6 by construction.
    """

    alpha: np.ndarray
    training_points: np.ndarray
    spec: KernelSpec
    gamma: float
    gram_report: SpectralReport
    diagnostics: FitDiagnostics

    @property
    def size(self) -> int:
        return int(self.alpha.size)

    def predict_raw(self, x) -> float:
        """Unclipped decision value at a single point."""
        point = np.asarray(x, dtype=np.float64)
        if point.shape != (self.training_points.shape[1],):
            raise ValueError(
                f"point has shape {point.shape}, expected ({self.training_points.shape[1]},)"
            )
        return float(sum(
            a * self.spec.evaluate(xi, point)
            for a, xi in zip(self.alpha, self.training_points)
        ))

    def predict(self, x) -> float:
        """Estimated p(y=1 | x), clipped to [0, 1]."""
        return min(1.0, max(0.0, self.predict_raw(x)))


@dataclass(frozen=True)
class FitFailure:
    """Solver did not reach an optimum; bundles the full diagnostic story."""

    gram_report: SpectralReport
    diagnostics: FitDiagnostics

    @property
    def status(self) -> SolveStatus:
        return self.diagnostics.solution.status

    @property
    def gram_rank(self) -> int:
        return self.gram_report.rank


@dataclass(frozen=True)
class EvalMetrics:
    mean_abs_residual: float
    max_constraint_violation: float
    mean_predicted_probability: float


def fit(
    data: Dataset,
    spec: KernelSpec,
    v: VMatrix | None = None,
    gamma: float = 1.0,
    solver_config: SolverConfig | None = None,
) -> Model | FitFailure:
    """Full pipeline: Gram -> assemble -> feasibility analysis -> solve."""
    if data.size < 2 or not 0.0 < data.p1 < 1.0:
        raise ValueError("fit requires at least two points with both classes present")
    if gamma < 0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    g = gram(data, spec)
    if v is None:
        v = VMatrix.identity(data.size)
    problem = assemble(g, v, data.labels, gamma)
    feasibility = analyze(g, problem.b_eq)
    solution = solve(problem, solver_config)
    diagnostics = FitDiagnostics(solution=solution, feasibility=feasibility)
    if solution.status is not SolveStatus.OPTIMAL:
        return FitFailure(gram_report=g.report, diagnostics=diagnostics)
    ineq, eq = constraint_residuals(problem, solution.alpha)
    if max(ineq, eq) > TRAINING_RESIDUAL_LIMIT:
        raise RuntimeError(
            f"optimal solve violates training constraints (ineq {ineq:.3e}, eq {eq:.3e})"
        )
    return Model(
        alpha=solution.alpha,
        training_points=data.points,
        spec=spec,
        gamma=float(gamma),
        gram_report=g.report,
        diagnostics=diagnostics,
    )


def evaluate(model: Model, data: Dataset) -> EvalMetrics:
    """Mean |f - y|, worst box violation of the raw values, mean prediction."""
    if data.dimension != model.training_points.shape[1]:
        raise ValueError("evaluation data dimension does not match the model")
    raw = np.array([model.predict_raw(x) for x in data.points])
    clipped = np.clip(raw, 0.0, 1.0)
    violations = np.maximum(np.maximum(raw - 1.0, -raw), 0.0)
    return EvalMetrics(
        mean_abs_residual=float(np.abs(clipped - data.labels).mean()),
        max_constraint_violation=float(violations.max(initial=0.0)),
        mean_predicted_probability=float(clipped.mean()),
    )
