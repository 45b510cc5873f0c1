"""Pareto search over candidate right-hand sides: polynomial fits,
exhaustive enumeration of small expression skeletons with a fitted scalar
multiplier, and an additive separability test on a polynomial surrogate."""

from __future__ import annotations

import csv
import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .expressions import (
    BINARY_OPS,
    Binary,
    Const,
    Expr,
    Unary,
    Var,
    complexity,
    print_expr,
)
from .ga import CandidateSolution, make_candidate
from .integrate import RegressionDataset

_BRUTE_UNARY = ("sin", "cos", "log", "exp")
_BRUTE_BINARY = ("add", "sub", "mul", "div")

_UNARY_FN = {"sin": np.sin, "cos": np.cos, "log": np.log, "exp": np.exp}
_BINARY_FN = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
    "div": np.true_divide,
}


@dataclass
class FeynmanConfig:
    max_poly_degree: int = 4
    max_brute_nodes: int = 7
    unary_set: tuple[str, ...] = _BRUTE_UNARY
    binary_set: tuple[str, ...] = _BRUTE_BINARY
    time_budget: float | None = None

    def __post_init__(self):
        self.unary_set = tuple(self.unary_set)
        self.binary_set = tuple(self.binary_set)
        if self.max_poly_degree < 1:
            raise ValueError("max_poly_degree must be >= 1")
        if self.max_brute_nodes < 1:
            raise ValueError("max_brute_nodes must be >= 1")
        unknown = set(self.unary_set) - set(_BRUTE_UNARY)
        if unknown:
            raise ValueError(f"unsupported unary ops: {sorted(unknown)}")
        unknown = set(self.binary_set) - set(BINARY_OPS)
        if unknown:
            raise ValueError(f"unsupported binary ops: {sorted(unknown)}")
        if self.time_budget is not None and self.time_budget < 0:
            raise ValueError("time_budget must be non-negative")


@dataclass(frozen=True)
class ParetoFront:
    """Candidates sorted by complexity with strictly decreasing RMSE."""

    candidates: tuple[CandidateSolution, ...]

    def __post_init__(self):
        comps = [c.complexity for c in self.candidates]
        if comps != sorted(set(comps)):
            raise ValueError("front complexities must be strictly increasing")
        rmses = [c.train_rmse for c in self.candidates]
        if any(b >= a for a, b in zip(rmses, rmses[1:])):
            raise ValueError("front RMSE must be strictly decreasing")


def monomial_exponents(n_vars: int, degree: int) -> list[tuple[int, ...]]:
    """Exponent tuples of all monomials in n_vars variables up to the given
    total degree, in lexicographic order."""
    exps = set()
    for total in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(n_vars), total):
            e = [0] * n_vars
            for v in combo:
                e[v] += 1
            exps.add(tuple(e))
    return sorted(exps)


def _design_columns(states, variables, exponents):
    block = states[:, list(variables)].astype(float)
    cols = [np.prod(block ** np.asarray(e), axis=1) for e in exponents]
    return np.column_stack(cols)


def _poly_expr(coeffs, exponents, variables) -> Expr:
    scale = float(np.max(np.abs(coeffs))) if len(coeffs) else 0.0
    terms = []
    for c, e in zip(coeffs, exponents):
        if scale == 0.0 or abs(c) <= 1e-12 * scale:
            continue
        factors = []
        for v, p in zip(variables, e):
            if p == 0:
                continue
            factors.append(Var(v) if p == 1 else Binary("pow", Var(v), Const(p)))
        if not factors:
            term: Expr = Const(float(c))
        else:
            mono = factors[0]
            for f in factors[1:]:
                mono = Binary("mul", mono, f)
            term = Binary("mul", Const(float(c)), mono)
        terms.append(term)
    if not terms:
        return Const(0.0)
    expr = terms[0]
    for term in terms[1:]:
        expr = Binary("add", expr, term)
    return expr


def polyfit(
    data: RegressionDataset,
    degree: int,
    variables: tuple[int, ...] | None = None,
    return_coefficients: bool = False,
):
    """Least-squares polynomial fit of the targets. The returned candidate
    drops coefficients below 1e-12 of the largest one."""
    states = data.states
    targets = np.asarray(data.targets, dtype=float)
    k = states.shape[1]
    vars_ = tuple(range(k)) if variables is None else tuple(variables)
    exps = monomial_exponents(len(vars_), degree)
    if len(targets) <= len(exps):
        raise ValueError(
            f"degree-{degree} fit in {len(vars_)} variables needs more than "
            f"{len(exps)} samples, got {len(targets)}"
        )
    cols = _design_columns(states, vars_, exps)
    coeffs, *_ = np.linalg.lstsq(cols, targets, rcond=None)
    cand = make_candidate(_poly_expr(coeffs, exps, vars_), data)
    if return_coefficients:
        return cand, coeffs
    return cand


def brute_force(
    data: RegressionDataset,
    config: FeynmanConfig | None = None,
    variables: tuple[int, ...] | None = None,
) -> list[CandidateSolution]:
    """Enumerate every expression skeleton up to max_brute_nodes nodes and
    fit a single scalar multiplier per skeleton in closed form.

    Skeletons are built size by size from smaller ones; commutative
    arguments are kept in printed order so each shape appears once, and
    skeletons that evaluate outside the reals anywhere on the data are
    dropped along with everything they would compose into.
    """
    cfg = config if config is not None else FeynmanConfig()
    states = data.states
    targets = np.asarray(data.targets, dtype=float)
    n = len(targets)
    k = states.shape[1]
    vars_ = tuple(range(k)) if variables is None else tuple(variables)
    deadline = None
    if cfg.time_budget is not None:
        deadline = time.monotonic() + cfg.time_budget
    candidates: list[CandidateSolution] = []

    def emit(expr, values):
        gg = float(values @ values)
        if not math.isfinite(gg) or gg <= 0.0:
            return
        c = float(targets @ values) / gg
        if not math.isfinite(c):
            return
        resid = c * values - targets
        rmse = math.sqrt(float(resid @ resid) / n)
        if not math.isfinite(rmse):
            return
        full = Binary("mul", Const(c), expr)
        candidates.append(CandidateSolution(full, rmse, complexity(full)))

    table: dict[int, list] = {1: []}
    with np.errstate(all="ignore"):
        for v in vars_:
            expr = Var(v)
            values = states[:, v].astype(float)
            table[1].append((expr, print_expr(expr), values))
            emit(expr, values)
        for size in range(2, cfg.max_brute_nodes + 1):
            keep = size < cfg.max_brute_nodes
            entries = []
            for op in cfg.unary_set:
                if deadline is not None and time.monotonic() > deadline:
                    return candidates
                fn = _UNARY_FN[op]
                for child, _, child_values in table[size - 1]:
                    values = fn(child_values)
                    if not np.isfinite(values).all():
                        continue
                    expr = Unary(op, child)
                    if keep:
                        entries.append((expr, print_expr(expr), values))
                    emit(expr, values)
            for op in cfg.binary_set:
                fn = _BINARY_FN[op]
                commutative = op in ("add", "mul")
                for left_size in range(1, size - 1):
                    if deadline is not None and time.monotonic() > deadline:
                        return candidates
                    for left, left_str, left_values in table[left_size]:
                        for right, right_str, right_values in table[size - 1 - left_size]:
                            if commutative and left_str > right_str:
                                continue
                            values = fn(left_values, right_values)
                            if not np.isfinite(values).all():
                                continue
                            expr = Binary(op, left, right)
                            if keep:
                                entries.append((expr, print_expr(expr), values))
                            emit(expr, values)
            table[size] = entries
    return candidates


def separability_split(data: RegressionDataset, tolerance: float = 1e-2):
    """Look for an additive split of the variables using a degree-4
    polynomial surrogate: a bipartition is accepted when the mixed-monomial
    coefficients carry less than `tolerance` of the total coefficient norm.

    Returns (vars_a, vars_b, data_a, data_b) for the cleanest split, or
    None. The surrogate's constant stays with the second block, so the
    first block's targets are centred accordingly.
    """
    states = data.states
    targets = np.asarray(data.targets, dtype=float)
    k = states.shape[1]
    if k < 2:
        return None
    exps = monomial_exponents(k, 4)
    if len(targets) <= len(exps):
        return None
    cols = _design_columns(states, tuple(range(k)), exps)
    w, *_ = np.linalg.lstsq(cols, targets, rcond=None)
    total = float(np.linalg.norm(w))
    if total == 0.0:
        return None
    best = None
    for mask in range(1, 2**k - 1):
        if not mask & 1:
            continue
        vars_a = tuple(i for i in range(k) if mask >> i & 1)
        vars_b = tuple(i for i in range(k) if not mask >> i & 1)
        mixed = [
            i
            for i, e in enumerate(exps)
            if any(e[j] for j in vars_a) and any(e[j] for j in vars_b)
        ]
        ratio = float(np.linalg.norm(w[mixed])) / total
        if best is None or ratio < best[0]:
            best = (ratio, vars_a, vars_b)
    ratio, vars_a, vars_b = best
    if ratio >= tolerance:
        return None
    const_idx = exps.index((0,) * k)
    pure_a = [
        i
        for i, e in enumerate(exps)
        if i != const_idx and all(e[j] == 0 for j in vars_b)
    ]
    pure_b = [
        i
        for i, e in enumerate(exps)
        if i != const_idx and all(e[j] == 0 for j in vars_a)
    ]
    part_a = cols[:, pure_a] @ w[pure_a]
    part_b = cols[:, pure_b] @ w[pure_b]
    data_a = RegressionDataset(
        data.times, states, targets - part_b - w[const_idx], data.dt, data.target_dim
    )
    data_b = RegressionDataset(
        data.times, states, targets - part_a, data.dt, data.target_dim
    )
    return vars_a, vars_b, data_a, data_b


def pareto_front(candidates) -> ParetoFront:
    """Non-dominated candidates under (complexity, train RMSE); ties at the
    same point resolve to the lexicographically smallest printed form."""
    best_at: dict[int, CandidateSolution] = {}
    for cand in candidates:
        cur = best_at.get(cand.complexity)
        if (
            cur is None
            or cand.train_rmse < cur.train_rmse
            or (
                cand.train_rmse == cur.train_rmse
                and print_expr(cand.expr) < print_expr(cur.expr)
            )
        ):
            best_at[cand.complexity] = cand
    kept = []
    last = math.inf
    for comp in sorted(best_at):
        cand = best_at[comp]
        if cand.train_rmse < last:
            kept.append(cand)
            last = cand.train_rmse
    return ParetoFront(tuple(kept))


def _best(candidates) -> CandidateSolution:
    def key(cand):
        return (cand.train_rmse, cand.complexity)

    top = min(candidates, key=key)
    ties = [c for c in candidates if key(c) == key(top)]
    if len(ties) == 1:
        return top
    return min(ties, key=lambda c: print_expr(c.expr))


def run_pipeline(data: RegressionDataset, config: FeynmanConfig | None = None):
    """Polynomial fits at every degree, the brute-force sweep, and one round
    of separability splitting with both blocks searched independently and
    summed. Returns (best candidate, pareto front over everything tried)."""
    cfg = config if config is not None else FeynmanConfig()
    candidates = []
    for degree in range(1, cfg.max_poly_degree + 1):
        candidates.append(polyfit(data, degree))
    candidates.extend(brute_force(data, cfg))
    split = separability_split(data)
    if split is not None:
        vars_a, vars_b, data_a, data_b = split
        parts = []
        for vars_x, data_x in ((vars_a, data_a), (vars_b, data_b)):
            block = [
                polyfit(data_x, degree, variables=vars_x)
                for degree in range(1, cfg.max_poly_degree + 1)
            ]
            block.extend(brute_force(data_x, cfg, variables=vars_x))
            parts.append(_best(block))
        combined = Binary("add", parts[0].expr, parts[1].expr)
        candidates.append(make_candidate(combined, data))
    return _best(candidates), pareto_front(candidates)


def write_pareto_csv(front: ParetoFront, path, variable_names=None) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["complexity", "train_rmse", "expression"])
        for cand in front.candidates:
            writer.writerow(
                [
                    cand.complexity,
                    repr(cand.train_rmse),
                    print_expr(cand.expr, variable_names),
                ]
            )
