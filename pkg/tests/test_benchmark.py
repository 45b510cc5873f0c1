import json
import math

import numpy as np
import pytest

from odesr.benchmark import (
    GROUND_TRUTH_EXPRESSIONS,
    BenchmarkResult,
    rollout_with_estimate,
    run_benchmark,
    run_fit,
    write_rollout_csv,
)
from odesr.benchmark import test_error as held_out_error
from odesr.expressions import Const, Unary, parse_expr, print_expr
from odesr.feynman import FeynmanConfig
from odesr.ga import GAConfig
from odesr.integrate import make_trajectory
from odesr.systems import get_system, lotka_volterra, simple_pendulum

FAST_GA = GAConfig(population_size=10, iterations=5, bitstring_length=20)


def truth_expr(system):
    return parse_expr(GROUND_TRUTH_EXPRESSIONS[system.name], system.variable_names)


# ---------------------------------------------------------------- test error


@pytest.mark.parametrize("name", ["lotka_volterra", "simple_pendulum", "cart_pole"])
def test_ground_truth_self_error(name):
    system = get_system(name)
    assert held_out_error(truth_expr(system), system) < 1e-8


def test_error_grid_is_the_training_anchors():
    system = lotka_volterra()
    traj = make_trajectory(system, "test", 0.1)
    times, states = traj.times[:-1], traj.states[:-1]
    assert len(times) == 50
    truth = np.array([system.rhs(t, s)[1] for t, s in zip(times, states)])
    expected = float(np.sqrt(np.mean(truth**2)))
    assert held_out_error(Const(0.0), system) == pytest.approx(expected, rel=1e-12)


def test_error_nonfinite_prediction_is_inf():
    system = lotka_volterra()
    assert held_out_error(Unary("log", Const(-1.0)), system) == math.inf


def test_error_invariant_under_reparse():
    system = simple_pendulum()
    expr = truth_expr(system)
    text = print_expr(expr, system.variable_names)
    again = parse_expr(text, system.variable_names)
    assert held_out_error(again, system) == held_out_error(expr, system)


# ------------------------------------------------------------------ rollout


def test_rollout_ground_truth_matches():
    system = lotka_volterra()
    result = rollout_with_estimate(truth_expr(system), system)
    assert result.divergence_time is None
    assert result.hybrid.times.shape == result.truth.times.shape
    assert np.max(np.abs(result.hybrid.states - result.truth.states)) < 1e-6


def test_rollout_zero_estimate_freezes_dimension():
    system = lotka_volterra()
    result = rollout_with_estimate(Const(0.0), system, span=(0.0, 5.0))
    assert result.divergence_time is None
    assert np.all(result.hybrid.states[:, 1] == 1.0)


def test_rollout_divergent_estimate_truncates():
    system = lotka_volterra()
    blowup = parse_expr("1000.0 * y ^ 2.0", system.variable_names)
    result = rollout_with_estimate(blowup, system, span=(0.0, 5.0))
    assert result.divergence_time is not None
    assert result.hybrid.times[-1] < 1.0
    assert len(result.hybrid.times) < len(result.truth.times)


def test_rollout_csv(tmp_path):
    system = lotka_volterra()
    result = rollout_with_estimate(truth_expr(system), system, span=(0.0, 2.0))
    path = tmp_path / "rollout.csv"
    write_rollout_csv(result, system.variable_names, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x,y,x_est,y_est"
    assert len(lines) == len(result.truth.times) + 1


# ------------------------------------------------------------------ run_fit


def test_run_fit_sindy_record():
    system = lotka_volterra()
    record = run_fit("sindy", system)
    assert list(record) == [
        "method",
        "system",
        "seed",
        "expression",
        "train_rmse",
        "test_error",
        "complexity",
        "warnings",
    ]
    reparsed = parse_expr(record["expression"], system.variable_names)
    assert print_expr(reparsed, system.variable_names) == record["expression"]
    assert record["test_error"] < 1.0


def test_run_fit_feynman_has_pareto():
    system = lotka_volterra()
    record = run_fit("feynman", system, feynman=FeynmanConfig(max_brute_nodes=3))
    assert "pareto" in record
    front = record["pareto"]
    assert all(
        a["complexity"] < b["complexity"] for a, b in zip(front, front[1:])
    )
    assert "DynAIFeynman-lite" in record["warnings"]


def test_run_fit_ga_seed_overrides_config():
    system = lotka_volterra()
    a = run_fit("ga", system, seed=3, ga_config=FAST_GA)
    b = run_fit("ga", system, seed=3, ga_config=FAST_GA)
    assert a == b
    assert a["seed"] == 3


def test_run_fit_unknown_method():
    with pytest.raises(ValueError, match="unknown method"):
        run_fit("annealing", lotka_volterra())


# ---------------------------------------------------------------- benchmark


def test_benchmark_deterministic_method_runs_once():
    results = run_benchmark(["sindy"], ["lotka_volterra"], repetitions=5)
    assert len(results) == 1
    res = results[0]
    assert len(res.runs) == 1
    assert res.std_test_error == 0.0
    assert res.mean_test_error == res.runs[0]["test_error"]
    assert "wall_time" in res.runs[0]


def test_benchmark_seeded_method_repeats():
    overrides = {("ga", "lotka_volterra"): {"ga_config": FAST_GA}}
    results = run_benchmark(
        ["ga"], ["lotka_volterra"], repetitions=3, base_seed=7, overrides=overrides
    )
    runs = results[0].runs
    assert [r["seed"] for r in runs] == [7, 8, 9]
    errors = [r["test_error"] for r in runs]
    assert results[0].mean_test_error == pytest.approx(np.mean(errors), abs=1e-12)
    assert results[0].std_test_error == pytest.approx(np.std(errors), abs=1e-12)


def test_benchmark_rejects_bad_arguments():
    with pytest.raises(ValueError):
        run_benchmark(["sindy"], ["lotka_volterra"], repetitions=0)
    with pytest.raises(ValueError, match="unknown method"):
        run_benchmark(["gradient"], ["lotka_volterra"])


def test_benchmark_contains_run_failures():
    overrides = {("sindy", "lotka_volterra"): {"basis": object()}}
    results = run_benchmark(["sindy"], ["lotka_volterra"], overrides=overrides)
    run = results[0].runs[0]
    assert run["expression"] == ""
    assert run["test_error"] == math.inf
    assert any("run failed" in w for w in run["warnings"])


def test_benchmark_files_reproducible(tmp_path):
    overrides = {("ga", "lotka_volterra"): {"ga_config": FAST_GA}}
    kwargs = dict(
        methods=["ga", "sindy"],
        systems=["lotka_volterra"],
        repetitions=2,
        overrides=overrides,
    )
    run_benchmark(out_dir=tmp_path / "a", **kwargs)
    run_benchmark(out_dir=tmp_path / "b", **kwargs)
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    assert names == [
        "ga_lotka_volterra_0.json",
        "ga_lotka_volterra_1.json",
        "sindy_lotka_volterra_0.json",
        "table.csv",
    ]
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (
            tmp_path / "b" / name
        ).read_bytes()
    record = json.loads((tmp_path / "a" / "sindy_lotka_volterra_0.json").read_text())
    assert "wall_time" not in record
    table = (tmp_path / "a" / "table.csv").read_text().splitlines()
    assert table[0] == "method,system,mean,std"
    assert len(table) == 3


def test_benchmark_stats_match_stored_runs():
    results = run_benchmark(["sindy"], ["lotka_volterra", "simple_pendulum"])
    for res in results:
        errs = [r["test_error"] for r in res.runs]
        assert abs(res.mean_test_error - np.mean(errs)) < 1e-12
        assert abs(res.std_test_error - np.std(errs)) < 1e-12
        assert isinstance(res, BenchmarkResult)
