"""Labeled datasets: the fixed XOR instance, a seeded Gaussian mixture, CSV I/O.

Random generation goes through a self-contained splitmix64 + Box-Muller pipeline
so identical seeds give identical datasets regardless of platform RNG details.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


class ParseError(ValueError):
    """CSV content error, with the offending 1-based line number in the message."""


@dataclass(frozen=True)
class Dataset:
    points: np.ndarray  # (l, n) float64
    labels: np.ndarray  # (l,) ints in {0, 1}

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        labs = np.asarray(self.labels, dtype=np.int64)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError(f"points must be a non-empty (l, n) array, got shape {pts.shape}")
        if labs.shape != (pts.shape[0],):
            raise ValueError(
                f"labels shape {labs.shape} does not match {pts.shape[0]} points"
            )
        if not np.isin(labs, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labs)

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    @property
    def dimension(self) -> int:
        return int(self.points.shape[1])

    @property
    def label_sum(self) -> int:
        return int(self.labels.sum())

    @property
    def p1(self) -> float:
        return self.label_sum / self.size


def xor_dataset() -> Dataset:
    return Dataset(
        points=np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]]),
        labels=np.array([0, 0, 1, 1]),
    )


@dataclass(frozen=True)
class MixtureConfig:
    """Two 1-D Gaussian classes: class 0 ~ N(mu1, sigma1^2), class 1 ~ N(mu2, sigma2^2)."""

    n1: int = 100
    n2: int = 100
    mu1: float = 1.0
    mu2: float = 10.0
    sigma1: float = 2.0
    sigma2: float = 3.0
    seed: int = 42

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("class sizes must be >= 1")
        if not (self.sigma1 > 0 and self.sigma2 > 0):
            raise ValueError("sigmas must be positive")


class SplitMix64:
    """Reference splitmix64 generator plus Box-Muller normal deviates."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64
        self._spare: float | None = None

    def next_uint64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_unit_open(self) -> float:
        # in (0, 1]; strictly positive so it is safe under log
        return ((self.next_uint64() >> 11) + 1) * 2.0**-53

    def next_normal(self) -> float:
        if self._spare is not None:
            value, self._spare = self._spare, None
            return value
        u1 = self.next_unit_open()
        u2 = self.next_unit_open()
        radius = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        self._spare = radius * math.sin(theta)
        return radius * math.cos(theta)


def gaussian_mixture(config: MixtureConfig) -> Dataset:
    rng = SplitMix64(config.seed)
    xs = [config.mu1 + config.sigma1 * rng.next_normal() for _ in range(config.n1)]
    xs += [config.mu2 + config.sigma2 * rng.next_normal() for _ in range(config.n2)]
    labels = np.concatenate([np.zeros(config.n1, dtype=np.int64), np.ones(config.n2, dtype=np.int64)])
    return Dataset(points=np.array(xs).reshape(-1, 1), labels=labels)


def save_csv(data: Dataset, path) -> None:
    """Header ``x1,...,xn,y``; floats in shortest round-trip decimal form."""
    header = ",".join(f"x{i + 1}" for i in range(data.dimension)) + ",y"
    lines = [header]
    for point, label in zip(data.points, data.labels):
        lines.append(",".join(repr(float(v)) for v in point) + f",{int(label)}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_csv(path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        raw_lines = fh.read().splitlines()
    lines = [(i + 1, line) for i, line in enumerate(raw_lines) if line.strip()]
    if not lines:
        raise ParseError(f"{path}: empty file")
    header_no, header = lines[0]
    columns = header.split(",")
    if len(columns) < 2 or columns[-1].strip() != "y":
        raise ParseError(f"{path}:{header_no}: header must be x1,...,xn,y")
    width = len(columns)
    points, labels = [], []
    for line_no, line in lines[1:]:
        fields = line.split(",")
        if len(fields) != width:
            raise ParseError(f"{path}:{line_no}: expected {width} fields, got {len(fields)}")
        try:
            values = [float(f) for f in fields]
        except ValueError as exc:
            raise ParseError(f"{path}:{line_no}: {exc}") from exc
        label = values[-1]
        if label not in (0.0, 1.0):
            raise ParseError(f"{path}:{line_no}: label must be 0 or 1, got {fields[-1]}")
        points.append(values[:-1])
        labels.append(int(label))
    if not points:
        raise ParseError(f"{path}: no data rows")
    return Dataset(points=np.array(points), labels=np.array(labels))
