"""Dense symmetric linear algebra with explicit rank and conditioning reports.

Matrices are 2-D float64 numpy arrays. A matrix counts as symmetric only when
it equals its transpose exactly; constructors elsewhere in the package
guarantee this by computing the upper triangle once and mirroring it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# rank threshold = RANK_TOLERANCE_PER_DIM * dimension * max(largest eigenvalue, 1)
RANK_TOLERANCE_PER_DIM = 1e-10
# psd threshold = PSD_TOLERANCE_SCALE * max(largest eigenvalue, 1)
PSD_TOLERANCE_SCALE = 1e-9
# pivot threshold = PIVOT_TOLERANCE_SCALE * max|M|
PIVOT_TOLERANCE_SCALE = 1e-12


class SingularMatrix(Exception):
    """LU elimination met a pivot below the singularity threshold."""


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got ndim={a.ndim}")
    return a


def require_square(m) -> np.ndarray:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] < 1:
        raise ValueError("matrix dimension must be >= 1")
    return a


def require_symmetric(m) -> np.ndarray:
    a = require_square(m)
    if not np.array_equal(a, a.T):
        worst = float(np.abs(a - a.T).max())
        raise ValueError(f"matrix is not exactly symmetric (max asymmetry {worst:.3e})")
    return a


def symmetrize(m) -> np.ndarray:
    """Exactly symmetric average (M + M^T) / 2; addition is commutative, so the
    result equals its transpose bit for bit."""
    a = require_square(m)
    return (a + a.T) * 0.5


@dataclass(frozen=True)
class SpectralReport:
    """Eigenvalue summary of a symmetric matrix.

    ``condition_number`` is +inf whenever rank < dimension; the ratio of the
    largest eigenvalue to the smallest above-threshold one is always available
    as ``restricted_condition_number``.
    """

    eigenvalues: np.ndarray  # descending
    rank: int
    condition_number: float
    restricted_condition_number: float
    min_eigenvalue: float
    psd: bool

    @property
    def dimension(self) -> int:
        return int(self.eigenvalues.size)


def sym_eigen(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of an exactly symmetric matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues descending and
    eigenvectors as columns, so ``m == Q @ diag(w) @ Q.T`` to round-off.
    """
    a = require_symmetric(m)
    w, q = np.linalg.eigh(a)
    return np.ascontiguousarray(w[::-1]), np.ascontiguousarray(q[:, ::-1])


def rank_threshold(eigenvalues: np.ndarray, rank_tolerance: float | None = None) -> float:
    lam1 = float(eigenvalues[0])
    scale = max(lam1, 1.0)
    if rank_tolerance is None:
        rank_tolerance = RANK_TOLERANCE_PER_DIM * eigenvalues.size
    return rank_tolerance * scale


def spectral_report(
    m,
    rank_tolerance: float | None = None,
    psd_tolerance: float | None = None,
) -> SpectralReport:
    w, _ = sym_eigen(m)
    lam1 = float(w[0])
    scale = max(lam1, 1.0)
    threshold = rank_threshold(w, rank_tolerance)
    rank = int(np.sum(w > threshold))
    if psd_tolerance is None:
        psd_tolerance = PSD_TOLERANCE_SCALE * scale
    min_eig = float(w[-1])
    restricted = float(lam1 / w[rank - 1]) if rank > 0 else float("inf")
    condition = restricted if rank == w.size else float("inf")
    return SpectralReport(
        eigenvalues=w,
        rank=rank,
        condition_number=condition,
        restricted_condition_number=restricted,
        min_eigenvalue=min_eig,
        psd=bool(min_eig >= -psd_tolerance),
    )


def lu_factor(m, pivot_tolerance: float | None = None):
    """Partial-pivoting LU. Raises SingularMatrix when the best available pivot
    falls below ``pivot_tolerance`` (default 1e-12 * max|M|) — this is the
    detection point for rank-deficient KKT systems downstream."""
    a = require_square(m).copy()
    n = a.shape[0]
    if pivot_tolerance is None:
        pivot_tolerance = PIVOT_TOLERANCE_SCALE * float(np.abs(a).max())
    perm = np.arange(n)
    for k in range(n):
        col = np.abs(a[k:, k])
        p = k + int(col.argmax())
        pivot = a[p, k]
        if abs(pivot) <= pivot_tolerance:
            raise SingularMatrix(
                f"pivot {abs(pivot):.3e} at elimination step {k} of {n} "
                f"is below tolerance {pivot_tolerance:.3e}"
            )
        if p != k:
            a[[k, p]] = a[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        a[k + 1 :, k] /= pivot
        a[k + 1 :, k + 1 :] -= np.outer(a[k + 1 :, k], a[k, k + 1 :])
    return a, perm


def lu_solve(factorization, rhs) -> np.ndarray:
    lu, perm = factorization
    n = lu.shape[0]
    b = np.asarray(rhs, dtype=np.float64)
    if b.shape != (n,):
        raise ValueError(f"rhs has shape {b.shape}, expected ({n},)")
    x = b[perm].copy()
    for i in range(1, n):
        x[i] -= lu[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):
        if i + 1 < n:
            x[i] -= lu[i, i + 1 :] @ x[i + 1 :]
        x[i] /= lu[i, i]
    return x


def solve_linear(m, rhs, pivot_tolerance: float | None = None) -> np.ndarray:
    """Solve M x = rhs by pivoted LU; raises SingularMatrix on pivot breakdown."""
    return lu_solve(lu_factor(m, pivot_tolerance), rhs)


def least_squares_range(m, target, tolerance: float | None = None) -> np.ndarray:
    """Minimum-norm least-squares solution of M x ~= target for symmetric M,
    via the eigendecomposition pseudo-inverse restricted to eigenvalues whose
    magnitude exceeds ``tolerance`` (default: the spectral rank threshold).
    For PSD input the magnitude cut coincides with the signed one."""
    w, q = sym_eigen(m)
    t = np.asarray(target, dtype=np.float64)
    if t.shape != (w.size,):
        raise ValueError(f"target has shape {t.shape}, expected ({w.size},)")
    if tolerance is None:
        tolerance = rank_threshold(w)
    keep = np.abs(w) > tolerance
    if not keep.any():
        return np.zeros_like(t)
    qk = q[:, keep]
    return qk @ ((qk.T @ t) / w[keep])
