"""Experiment pipeline: config -> dataset -> Gram -> feasibility -> solve -> report.

Reports are JSON documents with fixed field order and 17-significant-digit
floats so that identical configs reproduce identical bytes (the wall-time
field is the one exception and always comes last).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import jsonio
from .datasets import Dataset, MixtureConfig, ParseError, gaussian_mixture, load_csv, xor_dataset
from .estimator import FitFailure, Model, evaluate, fit
from .kernels import KernelKind, KernelSpec
from .qp import VMatrix
from .solver import SolverConfig

KERNEL_NAMES = {"rbf": KernelKind.RBF, "ink0": KernelKind.INK_SPLINE_0}
DEFAULT_COMPARE_CELLS = (("xor", "rbf"), ("xor", "ink0"), ("gauss", "rbf"), ("gauss", "ink0"))


class ConfigError(ValueError):
    """Invalid experiment configuration (usage error at the CLI)."""


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = "xor"  # xor | gauss | csv:<path>
    kernel: str = "rbf"  # rbf | ink0
    rbf_param: float = 1.0
    gamma: float = 1.0
    seed: int = 42  # gauss only
    v_matrix: str = "identity"  # identity | csv:<path>
    report_path: str | None = None
    regularization: float | None = None


def resolve_dataset(config: ExperimentConfig) -> Dataset:
    name = config.dataset
    if name == "xor":
        return xor_dataset()
    if name == "gauss":
        return gaussian_mixture(MixtureConfig(seed=config.seed))
    if name.startswith("csv:"):
        try:
            return load_csv(name[4:])
        except (OSError, ParseError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown dataset {name!r} (expected xor, gauss, or csv:<path>)")


def resolve_kernel(config: ExperimentConfig) -> KernelSpec:
    try:
        kind = KERNEL_NAMES[config.kernel]
    except KeyError:
        raise ConfigError(f"unknown kernel {config.kernel!r} (expected rbf or ink0)") from None
    if config.rbf_param <= 0:
        raise ConfigError(f"--rbf-param must be positive, got {config.rbf_param}")
    return KernelSpec(kind=kind, param=config.rbf_param)


def load_v_matrix_csv(path) -> VMatrix:
    """Square numeric CSV grid, no header; symmetry and PSD validated."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    rows = []
    for line_no, line in enumerate(lines, start=1):
        try:
            rows.append([float(f) for f in line.split(",")])
        except ValueError as exc:
            raise ParseError(f"{path}:{line_no}: {exc}") from exc
        if len(rows[-1]) != len(rows[0]):
            raise ParseError(
                f"{path}:{line_no}: expected {len(rows[0])} fields, got {len(rows[-1])}"
            )
    if not rows or len(rows) != len(rows[0]):
        raise ParseError(f"{path}: V matrix must be a square grid, got {len(rows)} rows")
    try:
        return VMatrix(np.array(rows))
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def resolve_v_matrix(config: ExperimentConfig, size: int) -> VMatrix:
    name = config.v_matrix
    if name == "identity":
        return VMatrix.identity(size)
    if name.startswith("csv:"):
        try:
            v = load_v_matrix_csv(name[4:])
        except (OSError, ParseError) as exc:
            raise ConfigError(str(exc)) from exc
        if v.size != size:
            raise ConfigError(f"V matrix size {v.size} does not match dataset size {size}")
        return v
    raise ConfigError(f"unknown V matrix {name!r} (expected identity or csv:<path>)")


def _config_echo(config: ExperimentConfig) -> dict:
    return {
        "dataset": config.dataset,
        "kernel": config.kernel,
        "rbf_param": float(config.rbf_param),
        "gamma": float(config.gamma),
        "seed": int(config.seed),
        "v_matrix": config.v_matrix,
        "regularization": None if config.regularization is None else float(config.regularization),
    }


def _gram_section(report) -> dict:
    return {
        "size": report.dimension,
        "rank": report.rank,
        "psd": bool(report.psd),
        "min_eigenvalue": float(report.min_eigenvalue),
        "condition_number": float(report.condition_number),
        "restricted_condition_number": float(report.restricted_condition_number),
        "eigenvalues": [float(v) for v in report.eigenvalues],
    }


def _feasibility_section(report) -> dict:
    witness = None
    certificate = None
    if report.witness_z is not None:
        witness = {
            "box_violation": float(report.witness_box_violation),
            "budget_residual": float(report.witness_budget_residual),
            "range_residual": float(report.witness_range_residual),
        }
    if report.certificate is not None:
        certificate = {
            "budget_coefficient": float(report.certificate.budget_coefficient),
            "bound": float(report.certificate.bound),
            "margin": float(report.certificate.margin),
            "verified": bool(report.certificate.verified),
        }
    return {
        "verdict": report.verdict.value,
        "gram_rank": report.gram_rank,
        "reduced_dimension": report.reduced_dimension,
        "phase1_violation": float(report.phase1_violation),
        "witness": witness,
        "certificate": certificate,
    }


def _solver_section(solution) -> dict:
    return {
        "status": solution.status.value,
        "iterations": int(solution.iterations),
        "kkt": {
            "primal_ineq": float(solution.kkt.primal_ineq),
            "primal_eq": float(solution.kkt.primal_eq),
            "dual": float(solution.kkt.dual),
            "complementarity": float(solution.kkt.complementarity),
        },
        "objective": None if solution.objective is None else float(solution.objective),
    }


def run_experiment(config: ExperimentConfig) -> dict:
    """Run the full pipeline and return the report document; a solver failure
    is a successful run whose report records the failure."""
    start = time.perf_counter()
    data = resolve_dataset(config)
    spec = resolve_kernel(config)
    v = resolve_v_matrix(config, data.size)
    solver_config = None
    if config.regularization is not None:
        if config.regularization < 0:
            raise ConfigError("--regularization must be nonnegative")
        solver_config = SolverConfig(regularization_floor=config.regularization)
    try:
        result = fit(data, spec, v, config.gamma, solver_config)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    model_section = None
    if isinstance(result, Model):
        metrics = evaluate(result, data)
        model_section = {
            "mean_abs_residual": float(metrics.mean_abs_residual),
            "max_constraint_violation": float(metrics.max_constraint_violation),
            "mean_predicted_probability": float(metrics.mean_predicted_probability),
        }
    report = {
        "config": _config_echo(config),
        "gram": _gram_section(result.gram_report),
        "feasibility": _feasibility_section(result.diagnostics.feasibility),
        "solver": _solver_section(result.diagnostics.solution),
        "model": model_section,
        "wall_time_ms": (time.perf_counter() - start) * 1000.0,
    }
    if config.report_path:
        with open(config.report_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(jsonio.dumps(report) + "\n")
    return report


def compare(configs) -> list[dict]:
    """One summary row per config; per-row errors annotate the row, never abort."""
    if not configs:
        raise ConfigError("compare requires at least one experiment")
    rows = []
    for config in configs:
        row = {
            "dataset": config.dataset,
            "kernel": config.kernel,
            "rank": None,
            "size": None,
            "condition_number": None,
            "restricted_condition_number": None,
            "solver_status": None,
            "feasibility_verdict": None,
            "error": None,
        }
        try:
            report = run_experiment(config)
        except ConfigError as exc:
            row["error"] = str(exc)
        else:
            row["rank"] = report["gram"]["rank"]
            row["size"] = report["gram"]["size"]
            row["condition_number"] = report["gram"]["condition_number"]
            row["restricted_condition_number"] = report["gram"]["restricted_condition_number"]
            row["solver_status"] = report["solver"]["status"]
            row["feasibility_verdict"] = report["feasibility"]["verdict"]
        rows.append(row)
    return rows


def render_report_text(report: dict) -> str:
    gram = report["gram"]
    feas = report["feasibility"]
    solver = report["solver"]
    lines = [
        "dataset: {dataset}   kernel: {kernel}   gamma: {gamma:g}".format(**report["config"]),
        f"gram: size {gram['size']}, rank {gram['rank']}, psd {gram['psd']}, "
        f"condition {gram['condition_number']:g} (restricted {gram['restricted_condition_number']:g})",
        f"feasibility: {feas['verdict']} (rank {feas['gram_rank']}, "
        f"phase-1 violation {feas['phase1_violation']:.3e})",
        f"solver: {solver['status']} after {solver['iterations']} iterations, "
        f"max KKT residual {max(solver['kkt'].values()):.3e}",
    ]
    if feas["witness"] is not None:
        w = feas["witness"]
        lines.append(
            "witness: box {box_violation:.3e}, budget {budget_residual:.3e}, "
            "range {range_residual:.3e}".format(**w)
        )
    if feas["certificate"] is not None:
        c = feas["certificate"]
        lines.append(
            "certificate: d={budget_coefficient:g}, bound={bound:g}, "
            "margin={margin:g}, verified={verified}".format(**c)
        )
    if report["model"] is not None:
        lines.append(
            "model: mean |f-y| {mean_abs_residual:.6f}, worst box violation "
            "{max_constraint_violation:.3e}, mean prediction "
            "{mean_predicted_probability:.6f}".format(**report["model"])
        )
    lines.append(f"wall time: {report['wall_time_ms']:.1f} ms")
    return "\n".join(lines)


def render_compare_text(rows: list[dict]) -> str:
    header = f"{'dataset':<10} {'kernel':<7} {'rank':<7} {'condition':<12} {'solver':<20} {'feasibility':<12} error"
    lines = [header, "-" * len(header)]
    for row in rows:
        if row["error"] is not None:
            lines.append(
                f"{row['dataset']:<10} {row['kernel']:<7} {'-':<7} {'-':<12} {'-':<20} {'-':<12} {row['error']}"
            )
            continue
        rank = f"{row['rank']}/{row['size']}"
        cond = f"{row['condition_number']:.3g}"
        lines.append(
            f"{row['dataset']:<10} {row['kernel']:<7} {rank:<7} {cond:<12} "
            f"{row['solver_status']:<20} {row['feasibility_verdict']:<12}"
        )
    return "\n".join(lines)
