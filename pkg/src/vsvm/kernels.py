"""Kernel functions and Gram-matrix construction with spectral diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .datasets import Dataset
from .numerics import SpectralReport, spectral_report


class KernelKind(Enum):
    RBF = "rbf"
    INK_SPLINE_0 = "ink0"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice plus the RBF width parameter (ignored for the INK-spline)."""

    kind: KernelKind
    param: float = 1.0

    def __post_init__(self):
        if self.kind is KernelKind.RBF and not self.param > 0:
            raise ValueError(f"RBF param must be positive, got {self.param}")

    def evaluate(self, x1, x2) -> float:
        if self.kind is KernelKind.RBF:
            return rbf(x1, x2, self.param)
        return ink_spline0(x1, x2)


def _pair(x1, x2) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(x1, dtype=np.float64)
    b = np.asarray(x2, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"kernel inputs must be same-length vectors, got {a.shape} and {b.shape}")
    return a, b


def rbf(x1, x2, param: float = 1.0) -> float:
    """Gaussian kernel exp(-||x1 - x2||^2 * param / 2); equals 1 iff x1 == x2."""
    if not param > 0:
        raise ValueError(f"RBF param must be positive, got {param}")
    a, b = _pair(x1, x2)
    d = a - b
    return math.exp(-float(d @ d) * param * 0.5)


def ink_spline0(x1, x2) -> float:
    """Order-zero INK-spline kernel: sum of coordinatewise minima."""
    a, b = _pair(x1, x2)
    return float(np.minimum(a, b).sum())


@dataclass(frozen=True)
class GramMatrix:
    """Pairwise kernel matrix over a dataset. Exactly symmetric by construction
    (upper triangle computed once, mirrored)."""

    k: np.ndarray
    spec: KernelSpec
    report: SpectralReport

    @property
    def size(self) -> int:
        return int(self.k.shape[0])


def gram(data: Dataset, spec: KernelSpec) -> GramMatrix:
    pts = data.points
    n = data.size
    k = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            k[i, j] = spec.evaluate(pts[i], pts[j])
    k = k + np.triu(k, 1).T
    return GramMatrix(k=k, spec=spec, report=spectral_report(k))
