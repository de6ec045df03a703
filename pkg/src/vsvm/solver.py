"""Primal-dual interior-point solver for the canonical QP, with explicit
detection of rank-deficient KKT systems.

The method is infeasible-start path following with a Mehrotra-style
predictor-corrector. Each iteration eliminates the slack/multiplier blocks and
solves the reduced, bordered KKT system

    [ H + G^T W G   a_eq ] [dx]   [rhs]        W = diag(z / s), H = 2 P
    [ a_eq^T        0    ] [dy] = [...]

by pivoted LU. When the Gram matrix behind the problem is rank deficient the
reduced matrix is singular (its null space contains the Gram's), the LU pivot
check fires, and the solve returns status ``SINGULAR_KKT`` instead of crashing:
that observable outcome is the point of this module. No regularization is
applied unless ``regularization_floor`` is set explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .numerics import SingularMatrix, SpectralReport, lu_factor, lu_solve, sym_eigen
from .qp import QpProblem, objective_value

_MIN_STEP = 1e-13


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    SINGULAR_KKT = "singular_kkt"
    MAX_ITERATIONS = "max_iterations"
    NUMERICAL_BREAKDOWN = "numerical_breakdown"


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 100
    kkt_tolerance: float = 1e-8
    step_fraction: float = 0.99
    regularization_floor: float = 0.0

    def __post_init__(self):
        if self.kkt_tolerance <= 0:
            raise ValueError("kkt_tolerance must be positive")
        if not 0.0 < self.step_fraction < 1.0:
            raise ValueError("step_fraction must lie in (0, 1)")
        if self.regularization_floor < 0:
            raise ValueError("regularization_floor must be nonnegative")


@dataclass(frozen=True)
class KktResiduals:
    primal_ineq: float
    primal_eq: float
    dual: float
    complementarity: float

    @property
    def max_residual(self) -> float:
        return max(self.primal_ineq, self.primal_eq, self.dual, self.complementarity)


@dataclass(frozen=True)
class Multipliers:
    ineq: np.ndarray
    eq: float = 0.0


@dataclass(frozen=True)
class IterationRecord:
    index: int
    mu: float
    step_length: float
    sigma: float
    max_residual: float


@dataclass(frozen=True)
class SolverDiagnostics:
    detail: str
    dimension: int
    gram_rank: int | None = None
    gram_report: SpectralReport | None = None


@dataclass(frozen=True)
class QpSolution:
    status: SolveStatus
    alpha: np.ndarray | None
    kkt: KktResiduals
    iterations: int
    trace: tuple[IterationRecord, ...]
    multipliers: Multipliers
    last_iterate: np.ndarray
    objective: float | None = None
    diagnostics: SolverDiagnostics | None = None


def kkt_residuals(problem: QpProblem, alpha, multipliers: Multipliers) -> KktResiduals:
    """Max-norm KKT residuals at (alpha, multipliers); slacks implied as h - G a."""
    x = np.asarray(alpha, dtype=np.float64)
    z = np.asarray(multipliers.ineq, dtype=np.float64)
    if x.shape != (problem.size,):
        raise ValueError(f"alpha has shape {x.shape}, expected ({problem.size},)")
    if z.shape != (problem.h.size,):
        raise ValueError(f"ineq multipliers have shape {z.shape}, expected ({problem.h.size},)")
    if z.min(initial=0.0) < 0:
        raise ValueError("inequality multipliers must be nonnegative")
    grad = 2.0 * (problem.p @ x + problem.q)
    dual = grad + problem.g.T @ z
    if problem.a_eq is not None:
        dual = dual + problem.a_eq * multipliers.eq
    slack = problem.h - problem.g @ x
    primal_ineq = float(np.maximum(-slack, 0.0).max(initial=0.0))
    primal_eq = abs(float(problem.a_eq @ x - problem.b_eq)) if problem.a_eq is not None else 0.0
    return KktResiduals(
        primal_ineq=primal_ineq,
        primal_eq=primal_eq,
        dual=float(np.abs(dual).max(initial=0.0)),
        complementarity=float(np.abs(z * slack).max(initial=0.0)),
    )


def _boundary_step(s, ds, z, dz) -> float:
    """Largest step keeping s and z strictly positive (before the fraction)."""
    steps = []
    for vec, dvec in ((s, ds), (z, dz)):
        neg = dvec < 0
        if neg.any():
            steps.append(float((-vec[neg] / dvec[neg]).min()))
    return min(steps) if steps else float("inf")


def _gram_diagnostics(problem: QpProblem, detail: str) -> SolverDiagnostics:
    gram = problem.source_gram
    return SolverDiagnostics(
        detail=detail,
        dimension=problem.size,
        gram_rank=None if gram is None else gram.report.rank,
        gram_report=None if gram is None else gram.report,
    )


def solve(problem: QpProblem, config: SolverConfig | None = None) -> QpSolution:
    """Solve the QP; returns a status, never raises on singular KKT systems.

    Starting point (fixed, for determinism): alpha = 0, slacks = h - G alpha
    clamped to >= 1, inequality multipliers = 1, equality multiplier = 0.
    """
    cfg = config or SolverConfig()
    n = problem.size
    g, h = problem.g, problem.h
    m = int(h.size)
    if m < 1:
        raise ValueError("solver requires at least one inequality row")
    has_eq = problem.a_eq is not None
    a_eq = problem.a_eq if has_eq else np.zeros(n)
    b_eq = problem.b_eq if has_eq else 0.0

    hess = 2.0 * problem.p
    if cfg.regularization_floor > 0:
        hess = hess + 2.0 * cfg.regularization_floor * np.eye(n)
    c = 2.0 * problem.q

    x = np.zeros(n)
    s = np.maximum(h - g @ x, 1.0)
    z = np.ones(m)
    y = 0.0

    trace: list[IterationRecord] = []
    status = SolveStatus.MAX_ITERATIONS
    detail = ""
    iterations = 0

    for it in range(cfg.max_iterations + 1):
        r_dual = hess @ x + c + g.T @ z + (a_eq * y if has_eq else 0.0)
        r_pri = g @ x + s - h
        r_eq = float(a_eq @ x - b_eq) if has_eq else 0.0
        comp = s * z
        mu = float(comp.mean())
        max_residual = max(
            float(np.abs(r_dual).max()),
            float(np.abs(r_pri).max()),
            abs(r_eq),
            float(comp.max()),
        )
        iterations = it
        if max_residual <= cfg.kkt_tolerance:
            status = SolveStatus.OPTIMAL
            break
        if it == cfg.max_iterations:
            status = SolveStatus.MAX_ITERATIONS
            detail = f"residual {max_residual:.3e} after {it} iterations"
            break

        w = z / s
        reduced = hess + g.T @ (w[:, None] * g)
        if has_eq:
            kkt_matrix = np.zeros((n + 1, n + 1))
            kkt_matrix[:n, :n] = reduced
            kkt_matrix[:n, n] = a_eq
            kkt_matrix[n, :n] = a_eq
        else:
            kkt_matrix = reduced
        try:
            factorization = lu_factor(kkt_matrix)
        except SingularMatrix as exc:
            status = SolveStatus.SINGULAR_KKT
            detail = f"KKT factorization at iteration {it}: {exc}"
            break

        def newton_direction(r_comp):
            coupled = (z * r_pri - r_comp) / s
            rhs_top = -r_dual - g.T @ coupled
            if has_eq:
                rhs = np.concatenate([rhs_top, [-r_eq]])
            else:
                rhs = rhs_top
            sol = lu_solve(factorization, rhs)
            dx = sol[:n]
            dy = float(sol[n]) if has_eq else 0.0
            dz = w * (g @ dx) + coupled
            ds = -r_pri - g @ dx
            return dx, dy, dz, ds

        # predictor (affine scaling, sigma = 0)
        dx_a, dy_a, dz_a, ds_a = newton_direction(comp)
        alpha_aff = min(1.0, _boundary_step(s, ds_a, z, dz_a))
        mu_aff = float((s + alpha_aff * ds_a) @ (z + alpha_aff * dz_a)) / m
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3))

        # corrector with centering
        r_comp = comp - sigma * mu + ds_a * dz_a
        dx, dy, dz, ds = newton_direction(r_comp)
        alpha = min(1.0, cfg.step_fraction * _boundary_step(s, ds, z, dz))

        # enforce a non-increasing complementarity gap
        while alpha > _MIN_STEP:
            mu_new = float((s + alpha * ds) @ (z + alpha * dz)) / m
            if mu_new <= mu * (1.0 + 1e-12):
                break
            alpha *= 0.5
        if alpha <= _MIN_STEP:
            status = SolveStatus.NUMERICAL_BREAKDOWN
            detail = f"step length collapsed below {_MIN_STEP:.1e} at iteration {it}"
            break

        x = x + alpha * dx
        s = s + alpha * ds
        z = z + alpha * dz
        y = y + alpha * dy
        trace.append(IterationRecord(index=it, mu=mu_new, step_length=alpha,
                                     sigma=sigma, max_residual=max_residual))

    slack = problem.h - problem.g @ x
    kkt = KktResiduals(
        primal_ineq=float(np.maximum(-slack, 0.0).max(initial=0.0)),
        primal_eq=abs(float(problem.a_eq @ x - problem.b_eq)) if has_eq else 0.0,
        dual=float(np.abs(2.0 * (problem.p @ x + problem.q) + problem.g.T @ z
                          + (problem.a_eq * y if has_eq else 0.0)).max(initial=0.0)),
        complementarity=float(np.abs(z * slack).max(initial=0.0)),
    )
    optimal = status is SolveStatus.OPTIMAL
    if optimal and cfg.regularization_floor == 0.0 and kkt.max_residual > 10 * cfg.kkt_tolerance:
        # safety net: never report Optimal with garbage residuals
        status = SolveStatus.NUMERICAL_BREAKDOWN
        detail = f"converged iterate failed the final residual check ({kkt.max_residual:.3e})"
        optimal = False
    diagnostics = None
    if status is not SolveStatus.OPTIMAL:
        diagnostics = _gram_diagnostics(problem, detail)
    return QpSolution(
        status=status,
        alpha=x.copy() if optimal else None,
        kkt=kkt,
        iterations=iterations,
        trace=tuple(trace),
        multipliers=Multipliers(ineq=z.copy(), eq=float(y)),
        last_iterate=x.copy(),
        objective=objective_value(problem, x) if optimal else None,
        diagnostics=diagnostics,
    )


@dataclass(frozen=True)
class OracleComparison:
    solver_objective: float
    oracle_objective: float
    objective_gap: float  # oracle - solver; near-zero when both find the optimum
    feasible_points: int
    evaluated_points: int
    final_spacing: float


def _axis_bounds_from_box_rows(problem: QpProblem) -> tuple[np.ndarray, np.ndarray]:
    """Per-axis bounds implied by +/- unit rows of G; raises if a variable is unbounded."""
    n = problem.size
    lo = np.full(n, -np.inf)
    hi = np.full(n, np.inf)
    for row, bound in zip(problem.g, problem.h):
        nonzero = np.nonzero(row)[0]
        if nonzero.size != 1:
            continue
        j = int(nonzero[0])
        coef = row[j]
        if coef > 0:
            hi[j] = min(hi[j], bound / coef)
        else:
            lo[j] = max(lo[j], bound / coef)
    if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
        raise ValueError("grid oracle needs box rows in G or a source Gram to bound the search")
    return lo, hi


def verify_against_oracle(
    problem: QpProblem,
    solution: QpSolution,
    oracle_resolution: int,
    refine_levels: int = 0,
) -> OracleComparison:
    """Compare a solved QP against exhaustive grid search over the feasible set.

    For Gram-backed problems the grid lives in range-space coordinates w with
    z = U w (every feasible point has ||w||_inf <= sqrt(l)); otherwise it lives
    directly on the variables, bounded by the box rows of G. The equality
    constraint, when present, is eliminated by parameterizing its hyperplane,
    so grid points satisfy it exactly. ``refine_levels`` re-grids around the
    incumbent to tighten the objective gap; the search never looks at the
    solver's iterates.
    """
    if problem.size > 6:
        raise ValueError("grid oracle is limited to problems with at most 6 variables")
    if solution.status is not SolveStatus.OPTIMAL:
        raise ValueError("oracle comparison requires an Optimal solution")
    if oracle_resolution < 2:
        raise ValueError("oracle_resolution must be at least 2")

    n = problem.size
    if problem.source_gram is not None:
        lam, vecs = sym_eigen(problem.source_gram.k)
        rank = problem.source_gram.report.rank
        basis = vecs[:, :rank]
        # a(w) = U diag(1/lambda) w so that K a = U w ranges over the box
        coord_map = basis / lam[:rank]
        radius = np.sqrt(n)
        center = np.zeros(rank)
        half_widths = np.full(rank, radius)
    else:
        lo, hi = _axis_bounds_from_box_rows(problem)
        coord_map = np.eye(n)
        center = (lo + hi) / 2.0
        half_widths = (hi - lo) / 2.0

    if problem.a_eq is not None:
        c_free = coord_map.T @ problem.a_eq
        norm_sq = float(c_free @ c_free)
        if norm_sq <= 0:
            raise ValueError("equality row vanishes on the search space")
        w0 = c_free * (problem.b_eq / norm_sq)
        _, _, vt = np.linalg.svd(c_free[None, :])
        null_basis = vt[1:].T  # (dim, dim-1), orthonormal
        offset = w0
        span = null_basis
        reach = float(np.linalg.norm(half_widths) + np.linalg.norm(w0 - center))
        center = np.zeros(span.shape[1])
        half_widths = np.full(span.shape[1], reach)
    else:
        offset = np.zeros(coord_map.shape[1])
        span = np.eye(coord_map.shape[1])

    dims = span.shape[1]
    best_value = np.inf
    best_u = None
    feasible_total = 0
    evaluated_total = 0
    spacing = float(half_widths.max())

    for level in range(refine_levels + 1):
        axes = [np.linspace(center[d] - half_widths[d], center[d] + half_widths[d],
                            oracle_resolution) for d in range(dims)]
        spacing = max(float(ax[1] - ax[0]) for ax in axes)
        mesh = np.meshgrid(*axes, indexing="ij") if dims else []
        if dims:
            u_grid = np.stack([m.ravel() for m in mesh])
        else:
            u_grid = np.zeros((0, 1))
        w_grid = offset[:, None] + span @ u_grid
        a_grid = coord_map @ w_grid
        evaluated_total += a_grid.shape[1]
        slackness = problem.h[:, None] - problem.g @ a_grid
        feasible = (slackness >= -1e-9).all(axis=0)
        feasible_total += int(feasible.sum())
        if feasible.any():
            a_feas = a_grid[:, feasible]
            values = np.einsum("ij,ij->j", a_feas, problem.p @ a_feas) + 2.0 * (problem.q @ a_feas)
            pick = int(values.argmin())
            if float(values[pick]) < best_value:
                best_value = float(values[pick])
                best_u = u_grid[:, feasible][:, pick]
        if best_u is None:
            break
        center = best_u
        half_widths = np.full(dims, 1.5 * spacing)

    solver_obj = float(solution.objective)
    return OracleComparison(
        solver_objective=solver_obj,
        oracle_objective=best_value,
        objective_gap=best_value - solver_obj,
        feasible_points=feasible_total,
        evaluated_points=evaluated_total,
        final_spacing=spacing,
    )
