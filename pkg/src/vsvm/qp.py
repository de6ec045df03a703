"""Canonicalize the V-matrix conditional-probability fit into QP data.

The minimized objective is ``a^T P a + 2 q^T a`` with

    P = K V K + gamma K        q = -(K V) y

subject to ``0 <= K a <= 1`` rowwise (stored as G a <= h with G = [K; -K]) and
the class-frequency equality ``(K 1) . a = sum(y)``. The equality is stored
unscaled (right-hand side sum(y) rather than the frequency sum(y)/l): the
feasible set is identical and the row is better conditioned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import GramMatrix
from .numerics import require_symmetric, symmetrize

VMATRIX_PSD_TOLERANCE = 1e-9


@dataclass(frozen=True)
class VMatrix:
    """Symmetric PSD weighting matrix for the residual term; PSD is checked on
    construction (min eigenvalue >= -1e-9)."""

    v: np.ndarray

    def __post_init__(self):
        a = require_symmetric(self.v)
        min_eig = float(np.linalg.eigvalsh(a)[0])
        if min_eig < -VMATRIX_PSD_TOLERANCE:
            raise ValueError(f"V matrix is not PSD (min eigenvalue {min_eig:.3e})")
        object.__setattr__(self, "v", a)

    @classmethod
    def identity(cls, size: int) -> "VMatrix":
        return cls(np.eye(size))

    @property
    def size(self) -> int:
        return int(self.v.shape[0])


@dataclass(frozen=True)
class QpProblem:
    """Canonical QP data: minimize a^T P a + 2 q^T a, G a <= h, a_eq . a = b_eq."""

    p: np.ndarray
    q: np.ndarray
    g: np.ndarray
    h: np.ndarray
    a_eq: np.ndarray | None
    b_eq: float
    gamma: float = 0.0
    source_gram: GramMatrix | None = None

    @property
    def size(self) -> int:
        return int(self.q.size)


def assemble(gram: GramMatrix, v: VMatrix, labels, gamma: float) -> QpProblem:
    if gamma < 0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    k = gram.k
    n = gram.size
    if v.size != n:
        raise ValueError(f"V matrix size {v.size} does not match Gram size {n}")
    y = np.asarray(labels, dtype=np.float64)
    if y.shape != (n,):
        raise ValueError(f"labels shape {y.shape} does not match Gram size {n}")
    kv = k @ v.v
    p = symmetrize(kv @ k + gamma * k)
    q = -(kv @ y)
    g = np.vstack([k, -k])
    h = np.concatenate([np.ones(n), np.zeros(n)])
    a_eq = k @ np.ones(n)
    return QpProblem(
        p=p, q=q, g=g, h=h, a_eq=a_eq, b_eq=float(y.sum()), gamma=float(gamma),
        source_gram=gram,
    )


def objective_value(problem: QpProblem, a) -> float:
    x = np.asarray(a, dtype=np.float64)
    if x.shape != (problem.size,):
        raise ValueError(f"coefficient vector has shape {x.shape}, expected ({problem.size},)")
    return float(x @ problem.p @ x + 2.0 * problem.q @ x)


def constraint_residuals(problem: QpProblem, a) -> tuple[float, float]:
    """(max inequality violation, |equality residual|); both zero iff feasible."""
    x = np.asarray(a, dtype=np.float64)
    if x.shape != (problem.size,):
        raise ValueError(f"coefficient vector has shape {x.shape}, expected ({problem.size},)")
    ineq = float(np.maximum(problem.g @ x - problem.h, 0.0).max(initial=0.0))
    eq = abs(float(problem.a_eq @ x - problem.b_eq)) if problem.a_eq is not None else 0.0
    return ineq, eq
