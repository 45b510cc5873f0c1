"""Sparse regression over a fixed basis library.

Two solvers produce the weight vector: sequentially thresholded least
squares and coordinate-descent LASSO on (1/2N)||Aw - b||^2 + lambda*||w||_1.
The nonzero weights are assembled back into a single expression tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .expressions import Binary, Const, Expr, evaluate_batch, parse_expr
from .ga import CandidateSolution, make_candidate
from .integrate import RegressionDataset

_RIDGE_EPS = 1e-10


@dataclass(frozen=True)
class BasisFunction:
    name: str
    expr: Expr


@dataclass(frozen=True)
class BasisSet:
    functions: tuple[BasisFunction, ...]

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))
        if not self.functions:
            raise ValueError("basis must contain at least one function")
        names = [f.name for f in self.functions]
        if len(set(names)) != len(names):
            raise ValueError("basis function names must be unique")

    def __len__(self) -> int:
        return len(self.functions)


@dataclass
class STLSQConfig:
    threshold: float = 0.05
    max_iterations: int = 50

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class LassoConfig:
    lam: float | None = None  # None selects lambda by logarithmic sweep
    max_iterations: int = 10_000
    tolerance: float = 1e-8

    def __post_init__(self):
        if self.lam is not None and self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


SparseConfig = STLSQConfig | LassoConfig


@dataclass
class SparseResult:
    weights: np.ndarray
    warnings: tuple[str, ...] = ()
    converged: bool = True


@dataclass
class SindyResult:
    candidate: CandidateSolution
    weights: np.ndarray
    warnings: tuple[str, ...]


def basis_from_strings(
    strings: Sequence[str],
    variable_names: Sequence[str],
    names: Sequence[str] | None = None,
) -> BasisSet:
    if names is None:
        names = [f"f{i}" for i in range(1, len(strings) + 1)]
    return BasisSet(
        tuple(
            BasisFunction(name, parse_expr(s, variable_names))
            for name, s in zip(names, strings)
        )
    )


_PRESETS: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {
    "pendulum": (
        ("theta1", "theta2"),
        (
            "theta1",
            "theta2",
            "sin(theta1)",
            "cos(theta2)",
            "cos(theta1)",
            "sin(theta2)",
            "cos(theta1) * sin(theta2)",
            "1.0",
        ),
    ),
    "lotka_volterra": (
        ("x", "y"),
        (
            "x",
            "y",
            "x * y",
            "sin(x)",
            "sin(y)",
            "cos(x)",
            "cos(y)",
            "1.0",
            "1.5*x + -1.0 * x * y",
        ),
    ),
    "cartpole": (
        ("w", "x", "y", "z"),
        (
            "1.0",
            "w",
            "x",
            "y",
            "z",
            "y^2",
            "z^2",
            "y^3",
            "z^3",
            "y^4",
            "z^4",
            "sin(w)",
            "cos(w)",
            "sin(w) * y",
            "sin(w) * z",
            "sin(w) * y^2",
            "sin(w) * z^2",
            "cos(w)^2",
            "cos(w) * sin(w)",
            "cos(w) * sin(w) * y",
            "cos(w) * sin(w) * z",
            "cos(w) * sin(w) * y^2",
            "cos(w) * sin(w) * z^2",
            "-0.2 + 0.5 * sin(6.0*t)",
            "cos(w) * (-0.2 + 0.5 * sin(6.0*t))",
            "sin(w) * (-0.2 + 0.5 * sin(6.0*t))",
            "-1.0 * (cos(w) * (-0.2 + 0.5 * sin(6.0*t)) + 19.62 * sin(w)"
            " + cos(w) * sin(w) * y^2) * (1.0 / (2.0 + -1.0 * cos(w)^2))^1.0",
        ),
    ),
}


def preset_basis(name: str) -> BasisSet:
    if name not in _PRESETS:
        raise KeyError(
            f"unknown basis preset {name!r}; expected one of {', '.join(_PRESETS)}"
        )
    variable_names, strings = _PRESETS[name]
    return basis_from_strings(strings, variable_names)


def build_design_matrix(basis: BasisSet, data: RegressionDataset) -> np.ndarray:
    """Columns are basis functions evaluated at every sample."""
    columns = []
    for f in basis.functions:
        col = evaluate_batch(f.expr, data.times, data.states)
        bad = np.flatnonzero(~np.isfinite(col))
        if bad.size:
            raise ValueError(
                f"basis function {f.name} is not finite at sample {bad[0]} "
                f"(t={data.times[bad[0]]:.6g})"
            )
        columns.append(col)
    return np.column_stack(columns)


def _lstsq_or_ridge(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, bool]:
    n, k = a.shape
    if n >= k:
        sol, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
        if rank == k:
            return sol, False
    sol = np.linalg.solve(a.T @ a + _RIDGE_EPS * np.eye(k), a.T @ b)
    return sol, True


def stlsq(
    a: np.ndarray, b: np.ndarray, threshold: float = 0.05, max_iterations: int = 50
) -> SparseResult:
    """Alternate least squares on the active set with hard thresholding."""
    p = a.shape[1]
    warnings: list[str] = []
    active = np.ones(p, dtype=bool)
    w = np.zeros(p)
    for _ in range(max_iterations):
        if not active.any():
            break
        sol, used_ridge = _lstsq_or_ridge(a[:, active], b)
        if used_ridge and "ridge_fallback" not in warnings:
            warnings.append("ridge_fallback")
        w = np.zeros(p)
        w[active] = sol
        keep = np.abs(w) >= threshold
        w[~keep] = 0.0
        if np.array_equal(keep, active):
            break
        active = keep
    return SparseResult(w, tuple(warnings))


def _soft(x: float, t: float) -> float:
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


def lasso_cd(
    a: np.ndarray,
    b: np.ndarray,
    lam: float,
    max_iterations: int = 10_000,
    tolerance: float = 1e-8,
) -> SparseResult:
    """Cyclic coordinate descent for (1/2N)||Aw-b||^2 + lam*||w||_1.

    Columns are scaled to unit l2 norm internally; the penalty stays in
    original coordinates, so lam >= max|A^T b|/N zeroes every weight.
    Convergence is max original-coordinate change per sweep < tolerance.
    """
    n, p = a.shape
    norms = np.sqrt(np.einsum("ij,ij->j", a, a))
    ok = norms > 0
    scaled = np.where(ok, norms, 1.0)
    a_unit = a / scaled
    wt = np.zeros(p)  # scaled-space weights, w = wt / norms
    r = b.astype(float).copy()
    converged = False
    for _ in range(max_iterations):
        max_delta = 0.0
        for j in range(p):
            if not ok[j]:
                continue
            old = wt[j]
            rho = float(a_unit[:, j] @ r) + old
            new = _soft(rho, n * lam / scaled[j])
            if new != old:
                r -= a_unit[:, j] * (new - old)
                wt[j] = new
                max_delta = max(max_delta, abs(new - old) / scaled[j])
        if max_delta < tolerance:
            converged = True
            break
    w = np.where(ok, wt / scaled, 0.0)
    warnings = () if converged else ("lasso_no_convergence",)
    return SparseResult(w, warnings, converged)


def _lambda_sweep(
    a: np.ndarray, b: np.ndarray, config: LassoConfig
) -> SparseResult:
    """10-point logarithmic sweep from lambda_max down; pick the lambda
    with the best training RMSE, ties toward fewer nonzeros."""
    lam_max = float(np.max(np.abs(a.T @ b))) / a.shape[0]
    if lam_max == 0.0:
        return lasso_cd(a, b, 0.0, config.max_iterations, config.tolerance)
    best_key, best = None, None
    for lam in lam_max * np.logspace(0.0, -5.0, 10):
        res = lasso_cd(a, b, float(lam), config.max_iterations, config.tolerance)
        rmse = float(np.sqrt(np.mean((a @ res.weights - b) ** 2)))
        key = (rmse, int(np.count_nonzero(res.weights)))
        if best_key is None or key < best_key:
            best_key, best = key, res
    return best


def _assemble(weights: np.ndarray, basis: BasisSet) -> Expr:
    expr: Expr | None = None
    for w, f in zip(weights, basis.functions):
        if w == 0.0:
            continue
        term = Binary("mul", Const(float(w)), f.expr)
        expr = term if expr is None else Binary("add", expr, term)
    return expr if expr is not None else Const(0.0)


def fit(
    basis: BasisSet, data: RegressionDataset, config: SparseConfig | None = None
) -> SindyResult:
    """Design matrix, sparse solve, and expression assembly in one call."""
    if config is None:
        config = STLSQConfig()
    a = build_design_matrix(basis, data)
    b = data.targets
    if isinstance(config, STLSQConfig):
        res = stlsq(a, b, config.threshold, config.max_iterations)
    elif config.lam is None:
        res = _lambda_sweep(a, b, config)
    else:
        res = lasso_cd(a, b, config.lam, config.max_iterations, config.tolerance)
    candidate = make_candidate(_assemble(res.weights, basis), data)
    return SindyResult(candidate=candidate, weights=res.weights, warnings=res.warnings)
