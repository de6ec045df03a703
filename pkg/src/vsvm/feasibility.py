"""Constraint-system consistency, decided independently of any QP solve.

The constraints 0 <= K a <= 1, (K 1) . a = b depend on a only through z = K a,
so consistency is a property of range(K) intersected with the unit box and the
budget hyperplane 1 . z = b. This module reduces to orthonormal range
coordinates z = U w, decides feasibility by a phase-1 violation-minimizing
solve, and returns either a polished witness (z, alpha) or a Farkas-style
infeasibility certificate.

Certificates use the budget-interval form: z = 0 always lies in the box/range
polytope, so the budget functional's image over it is an interval [s_min,
s_max] and the system is infeasible exactly when b falls outside it. The
certificate functional is phi(z) = c . z + d (1 . z) with c = 0 and d = +/-1;
phi exceeds ``bound`` everywhere on the polytope while the budget would force
phi = bound.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .kernels import GramMatrix
from .numerics import least_squares_range, rank_threshold, sym_eigen
from .qp import QpProblem
from .solver import SolveStatus, SolverConfig, solve

DEFAULT_TOLERANCE = 1e-8
PHASE1_THRESHOLD = 1e-7
_ZERO_ROW_TOLERANCE = 1e-12
_ACTIVE_BOUND_TOLERANCE = 1e-5

_PHASE1_CONFIG = SolverConfig(max_iterations=200, kkt_tolerance=1e-9)


class RangeViolation(Exception):
    """Target vector is not in the range of the Gram matrix."""


class Verdict(Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class ReducedSystem:
    """Orthonormal range basis U (l x r) and right-hand side for the system
    {w : 0 <= U w <= 1, (U^T 1) . w = b_eq}."""

    basis: np.ndarray
    b_eq: float

    @property
    def rank(self) -> int:
        return int(self.basis.shape[1])

    @property
    def size(self) -> int:
        return int(self.basis.shape[0])


@dataclass(frozen=True)
class Certificate:
    functional: np.ndarray  # c, acting on z
    budget_coefficient: float  # d, acting on 1 . z
    bound: float
    margin: float
    verified: bool


@dataclass(frozen=True)
class FeasibilityReport:
    verdict: Verdict
    gram_rank: int
    reduced_dimension: int
    phase1_violation: float
    witness_z: np.ndarray | None = None
    witness_alpha: np.ndarray | None = None
    witness_box_violation: float | None = None
    witness_budget_residual: float | None = None
    witness_range_residual: float | None = None
    certificate: Certificate | None = None


def reduce_constraints(gram: GramMatrix, b_eq: float, tolerance: float | None = None) -> ReducedSystem:
    """Orthonormal basis of range(K): eigenvectors whose eigenvalue magnitude
    exceeds the cutoff (``tolerance`` overrides; default is the spectral rank
    threshold). For PSD Grams the basis has gram.report.rank columns; an
    indefinite Gram contributes its negative directions too, since they are
    part of the range.
    """
    lam, vecs = sym_eigen(gram.k)
    cutoff = rank_threshold(lam) if tolerance is None else tolerance
    keep = np.abs(lam) > cutoff
    return ReducedSystem(basis=np.ascontiguousarray(vecs[:, keep]), b_eq=float(b_eq))


def recover_alpha(gram: GramMatrix, z, tolerance: float = DEFAULT_TOLERANCE) -> np.ndarray:
    """Minimum-norm alpha with K alpha = z, for z in range(K)."""
    target = np.asarray(z, dtype=np.float64)
    alpha = least_squares_range(gram.k, target)
    residual = float(np.abs(gram.k @ alpha - target).max(initial=0.0))
    if residual > tolerance:
        raise RangeViolation(
            f"target is off range(K): residual {residual:.3e} exceeds tolerance {tolerance:.3e}"
        )
    return alpha


def _witness_residuals(z: np.ndarray, b_eq: float) -> tuple[float, float]:
    box = float(np.maximum(np.maximum(z - 1.0, -z), 0.0).max(initial=0.0))
    budget = abs(float(z.sum() - b_eq))
    return box, budget


def _phase1_problem(basis_kept: np.ndarray, budget_vec: np.ndarray, b_eq: float) -> QpProblem:
    """Minimize total hinge violation of the box over (w, t): one violation
    variable per kept row, t_i >= max((U w)_i - 1, -(U w)_i, 0), budget hard."""
    rows, r = basis_kept.shape
    dim = r + rows
    eye_t = np.eye(rows)
    g = np.vstack([
        np.hstack([basis_kept, -eye_t]),
        np.hstack([-basis_kept, -eye_t]),
        np.hstack([np.zeros((rows, r)), -eye_t]),
    ])
    h = np.concatenate([np.ones(rows), np.zeros(rows), np.zeros(rows)])
    p = 1e-10 * np.eye(dim)
    q = np.concatenate([np.zeros(r), 0.5 * np.ones(rows)])
    a_eq = np.concatenate([budget_vec, np.zeros(rows)])
    return QpProblem(p=p, q=q, g=g, h=h, a_eq=a_eq, b_eq=b_eq)


def _budget_extremum(basis_kept: np.ndarray, budget_vec: np.ndarray, maximize: bool) -> float:
    """Extremum of 1 . z over {0 <= U w <= 1} via the interior-point machinery
    (tiny proximal term keeps the LP strictly convex)."""
    rows, r = basis_kept.shape
    sign = -1.0 if maximize else 1.0
    problem = QpProblem(
        p=1e-10 * np.eye(r),
        q=0.5 * sign * budget_vec,
        g=np.vstack([basis_kept, -basis_kept]),
        h=np.concatenate([np.ones(rows), np.zeros(rows)]),
        a_eq=None,
        b_eq=0.0,
    )
    solution = solve(problem, _PHASE1_CONFIG)
    w = solution.alpha if solution.alpha is not None else solution.last_iterate
    return float(budget_vec @ w)


def _polytope_vertices(basis_kept: np.ndarray) -> np.ndarray:
    """Vertices of {w in R^r : 0 <= U w <= 1} by basic-solution enumeration
    (desk scale, r <= 3)."""
    rows, r = basis_kept.shape
    stacked = np.vstack([basis_kept, -basis_kept])
    rhs_all = np.concatenate([np.ones(rows), np.zeros(rows)])
    vertices = []
    for subset in itertools.combinations(range(stacked.shape[0]), r):
        sub = stacked[list(subset)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        w = np.linalg.solve(sub, rhs_all[list(subset)])
        violation = float(np.maximum(stacked @ w - rhs_all, 0.0).max(initial=0.0))
        if violation <= 1e-9:
            vertices.append(w)
    if not vertices:
        return np.zeros((0, r))
    unique = []
    for w in vertices:
        if not any(np.abs(w - u).max() <= 1e-9 for u in unique):
            unique.append(w)
    return np.array(unique)


def _verify_certificate(cert: Certificate, basis: np.ndarray, kept: np.ndarray) -> bool:
    vertices_w = _polytope_vertices(basis[kept])
    combined = cert.functional + cert.budget_coefficient
    for w in vertices_w:
        z = np.zeros(basis.shape[0])
        z[kept] = basis[kept] @ w
        if not float(combined @ z) > cert.bound:
            return False
    return True


def _certificate(basis: np.ndarray, kept: np.ndarray, budget_vec: np.ndarray,
                 b_eq: float, reachable: float, direction: float) -> Certificate:
    """Budget-interval certificate: direction -1 proves b_eq above the reachable
    maximum, +1 proves it below the reachable minimum."""
    size = basis.shape[0]
    cert = Certificate(
        functional=np.zeros(size),
        budget_coefficient=direction,
        bound=direction * b_eq,
        margin=direction * b_eq - direction * reachable,
        verified=False,
    )
    rank = basis.shape[1]
    if rank <= 3:
        cert = Certificate(
            functional=cert.functional,
            budget_coefficient=cert.budget_coefficient,
            bound=cert.bound,
            margin=cert.margin,
            verified=_verify_certificate(cert, basis, kept),
        )
    return cert


def _feasible_report(gram: GramMatrix, reduced: ReducedSystem, z: np.ndarray,
                     phase1_violation: float, tolerance: float) -> FeasibilityReport:
    box, budget = _witness_residuals(z, reduced.b_eq)
    alpha = recover_alpha(gram, z, max(tolerance, 1e-6))
    range_residual = float(np.abs(gram.k @ alpha - z).max(initial=0.0))
    return FeasibilityReport(
        verdict=Verdict.FEASIBLE,
        gram_rank=gram.report.rank,
        reduced_dimension=reduced.rank,
        phase1_violation=phase1_violation,
        witness_z=z,
        witness_alpha=alpha,
        witness_box_violation=box,
        witness_budget_residual=budget,
        witness_range_residual=range_residual,
    )


def analyze(gram: GramMatrix, b_eq: float, tolerance: float = DEFAULT_TOLERANCE) -> FeasibilityReport:
    """Feasibility verdict for {0 <= z <= 1, 1 . z = b_eq, z in range(K)}.

    Phase 1 minimizes the total hinge violation of the box over the reduced
    coordinates (budget held as a hard equality); the system is declared
    feasible when the achieved violation is below the phase-1 threshold.
    Feasible verdicts carry a witness polished to the active bounds; infeasible
    ones carry a budget-interval certificate, vertex-verified when rank <= 3.
    """
    reduced = reduce_constraints(gram, b_eq)
    basis = reduced.basis
    size, rank = basis.shape
    threshold = max(tolerance, PHASE1_THRESHOLD)

    if rank == 0:
        if abs(b_eq) <= threshold:
            return _feasible_report(gram, reduced, np.zeros(size), abs(b_eq), tolerance)
        direction = -1.0 if b_eq > 0 else 1.0
        cert = _certificate(basis, np.zeros(size, dtype=bool), np.zeros(0), b_eq, 0.0, direction)
        return FeasibilityReport(
            verdict=Verdict.INFEASIBLE,
            gram_rank=gram.report.rank,
            reduced_dimension=0,
            phase1_violation=abs(b_eq),
            certificate=cert,
        )

    # box rows whose reduced range is identically zero are always satisfied;
    # dropping them gives the phase-1 polytope a strict interior
    row_norms = np.linalg.norm(basis, axis=1)
    kept = row_norms > _ZERO_ROW_TOLERANCE
    budget_vec = basis.T @ np.ones(size)

    if float(np.linalg.norm(budget_vec)) <= _ZERO_ROW_TOLERANCE:
        # the budget functional vanishes on range(K): feasible iff b_eq = 0
        if abs(b_eq) <= threshold:
            return _feasible_report(gram, reduced, np.zeros(size), abs(b_eq), tolerance)
        direction = -1.0 if b_eq > 0 else 1.0
        cert = _certificate(basis, kept, budget_vec, b_eq, 0.0, direction)
        return FeasibilityReport(
            verdict=Verdict.INFEASIBLE,
            gram_rank=gram.report.rank,
            reduced_dimension=rank,
            phase1_violation=abs(b_eq),
            certificate=cert,
        )

    phase1 = solve(_phase1_problem(basis[kept], budget_vec, b_eq), _PHASE1_CONFIG)
    iterate = phase1.alpha if phase1.alpha is not None else phase1.last_iterate
    w = iterate[:rank]
    z_raw = basis @ w
    box, budget = _witness_residuals(z_raw, b_eq)
    violation = box + budget

    if violation <= threshold:
        z = _polish_witness(basis, budget_vec, b_eq, z_raw)
        box_p, budget_p = _witness_residuals(z, b_eq)
        if max(box_p, budget_p) > max(box, budget):
            z = z_raw
        return _feasible_report(gram, reduced, z, violation, tolerance)

    s_max = _budget_extremum(basis[kept], budget_vec, maximize=True)
    s_min = _budget_extremum(basis[kept], budget_vec, maximize=False)
    if b_eq > s_max:
        cert = _certificate(basis, kept, budget_vec, b_eq, s_max, direction=-1.0)
    else:
        cert = _certificate(basis, kept, budget_vec, b_eq, s_min, direction=1.0)
    return FeasibilityReport(
        verdict=Verdict.INFEASIBLE,
        gram_rank=gram.report.rank,
        reduced_dimension=rank,
        phase1_violation=violation,
        certificate=cert,
    )


def _polish_witness(basis: np.ndarray, budget_vec: np.ndarray, b_eq: float,
                    z_approx: np.ndarray) -> np.ndarray:
    """Minimum-norm refit on the detected active bounds plus the budget row;
    lands exactly on the bounds the phase-1 iterate only approached."""
    lower = z_approx <= _ACTIVE_BOUND_TOLERANCE
    upper = z_approx >= 1.0 - _ACTIVE_BOUND_TOLERANCE
    system = [budget_vec[None, :]]
    rhs = [b_eq]
    if lower.any():
        system.append(basis[lower])
        rhs.extend([0.0] * int(lower.sum()))
    if upper.any():
        system.append(basis[upper])
        rhs.extend([1.0] * int(upper.sum()))
    coeffs = np.vstack(system)
    w, *_ = np.linalg.lstsq(coeffs, np.array(rhs), rcond=None)
    return basis @ w


class OracleOutcome(Enum):
    FEASIBLE = "feasible"
    NOT_FOUND_AT_RESOLUTION = "not_found_at_resolution"


@dataclass(frozen=True)
class OracleResult:
    outcome: OracleOutcome
    witness_z: np.ndarray | None
    grid_steps: int
    box_tolerance: float
    budget_tolerance: float


def brute_force_oracle(gram: GramMatrix, b_eq: float, grid_steps: int) -> OracleResult:
    """Exhaustive grid over the reduced coordinates w in [-sqrt(l), sqrt(l)]^r.

    Any feasible z has w = U^T z with ||w||_inf <= ||z||_2 <= sqrt(l), so the
    window is guaranteed to cover the feasible set. Accepts a grid point when
    the box holds within h * sqrt(r) and the budget within h * sqrt(r * l)
    (h = spacing): the nearest grid node to a true feasible point passes both.
    Ties break to the lexicographically smallest grid index.
    """
    if grid_steps < 2:
        raise ValueError("grid_steps must be at least 2")
    reduced = reduce_constraints(gram, b_eq)
    basis = reduced.basis
    size, rank = basis.shape
    if rank > 3:
        raise ValueError(f"brute-force oracle supports rank <= 3, got rank {rank}")
    if rank == 0:
        if abs(b_eq) <= DEFAULT_TOLERANCE:
            return OracleResult(OracleOutcome.FEASIBLE, np.zeros(size), grid_steps, 0.0, DEFAULT_TOLERANCE)
        return OracleResult(OracleOutcome.NOT_FOUND_AT_RESOLUTION, None, grid_steps, 0.0, DEFAULT_TOLERANCE)

    window = float(np.sqrt(size))
    axis = np.linspace(-window, window, grid_steps)
    spacing = float(axis[1] - axis[0])
    box_tol = spacing * np.sqrt(rank)
    budget_tol = spacing * np.sqrt(rank * size)

    tail_axes = [axis] * (rank - 1)
    tail = np.stack([m.ravel() for m in np.meshgrid(*tail_axes, indexing="ij")]) \
        if rank > 1 else np.zeros((0, 1))
    for first in axis:  # chunked by the leading coordinate, lexicographic order
        w_chunk = np.vstack([np.full(tail.shape[1], first), tail])
        z_chunk = basis @ w_chunk
        ok = (
            (z_chunk >= -box_tol).all(axis=0)
            & (z_chunk <= 1.0 + box_tol).all(axis=0)
            & (np.abs(z_chunk.sum(axis=0) - b_eq) <= budget_tol)
        )
        if ok.any():
            pick = int(ok.argmax())
            return OracleResult(OracleOutcome.FEASIBLE, z_chunk[:, pick].copy(),
                                grid_steps, box_tol, budget_tol)
    return OracleResult(OracleOutcome.NOT_FOUND_AT_RESOLUTION, None, grid_steps, box_tol, budget_tol)
