import math

import numpy as np
import pytest

from odesr.expressions import Binary, Const, Unary, Var, print_expr
from odesr.ga import (
    CandidateSolution,
    GAConfig,
    default_ga_config,
    fitness,
    make_candidate,
    run_ga,
    step,
)
from odesr.genomes import decode, grammar_for_system, random_genome
from odesr.integrate import RegressionDataset, finite_differences, make_trajectory
from odesr.systems import lotka_volterra, simple_pendulum


@pytest.fixture(scope="module")
def lv_planted():
    # targets generated exactly by 1.5 * x, no discretization noise
    traj = make_trajectory(lotka_volterra(), "train", 0.1)
    states = traj.states[:-1]
    times = traj.times[:-1]
    return RegressionDataset(times, states, 1.5 * states[:, 0], 0.1, 0)


@pytest.fixture(scope="module")
def zero_dataset():
    times = np.linspace(0.0, 1.0, 11)
    states = np.ones((11, 2))
    return RegressionDataset(times, states, np.zeros(11), 0.1, 0)


def test_fitness_exact_fit_is_zero(zero_dataset):
    assert fitness(Const(0.0), zero_dataset) == 0.0


def test_fitness_identity_on_first_order_coordinate():
    # theta1' = theta2 exactly, so the residual is pure discretization
    # error: rms((dt/2) * theta2') ~ 0.31 at dt = 0.1 on this orbit
    traj = make_trajectory(simple_pendulum(), "train", 0.1)
    ds = finite_differences(traj, 0)
    value = fitness(Var(1), ds)
    assert value == pytest.approx(0.313, abs=0.02)


def test_fitness_nonfinite_is_inf(zero_dataset):
    e = Unary("log", Binary("mul", Const(-1.0), Var(0)))
    assert fitness(e, zero_dataset) == math.inf


def test_config_invariants():
    with pytest.raises(ValueError):
        GAConfig(population_size=7)
    with pytest.raises(ValueError):
        GAConfig(iterations=0)
    with pytest.raises(ValueError):
        GAConfig(selection_fraction=1.0)
    with pytest.raises(ValueError):
        GAConfig(mutation_rate=1.5)


def test_default_configs_match_benchmark_settings():
    lv = default_ga_config("lotka_volterra")
    assert (lv.population_size, lv.bitstring_length, lv.iterations) == (70, 20, 100)
    pend = default_ga_config("simple_pendulum")
    assert (pend.population_size, pend.bitstring_length, pend.iterations) == (70, 20, 40)
    cp = default_ga_config("cart_pole")
    assert (cp.population_size, cp.bitstring_length, cp.iterations) == (100, 60, 100)
    assert lv.mutation_rate == 0.1 and lv.selection_fraction == 0.5


def _seeded_population(n, data, grammar, seed):
    rng = np.random.default_rng(seed)
    pop = []
    for _ in range(n):
        g = random_genome(20, grammar, rng)
        pop.append(make_candidate(decode(g, grammar), data, g))
    return pop


def test_step_selection_semantics(zero_dataset):
    grammar = grammar_for_system("lotka_volterra")
    pop = _seeded_population(4, zero_dataset, grammar, 0)
    for cand, rmse in zip(pop, [3.0, 1.0, 2.0, math.inf]):
        cand.train_rmse = rmse
    config = GAConfig(population_size=4, iterations=1)
    new = step(pop, config, zero_dataset, grammar, np.random.default_rng(0))
    assert len(new) == 4
    assert new[0] is pop[1] and new[1] is pop[2]
    for mutant in new[2:]:
        assert decode(mutant.genome, grammar) == mutant.expr


def test_step_preserves_zero_fitness_candidate(zero_dataset):
    grammar = grammar_for_system("lotka_volterra")
    pop = _seeded_population(4, zero_dataset, grammar, 1)
    hero = make_candidate(Const(0.0), zero_dataset, pop[0].genome)
    assert hero.train_rmse == 0.0
    pop[2] = hero
    config = GAConfig(population_size=4, iterations=1)
    rng = np.random.default_rng(0)
    for _ in range(3):
        pop = step(pop, config, zero_dataset, grammar, rng)
        assert pop[0] is hero


def test_step_is_deterministic(zero_dataset):
    grammar = grammar_for_system("lotka_volterra")
    config = GAConfig(population_size=6, iterations=1)
    pop = _seeded_population(6, zero_dataset, grammar, 2)
    a = step(list(pop), config, zero_dataset, grammar, np.random.default_rng(11))
    b = step(list(pop), config, zero_dataset, grammar, np.random.default_rng(11))
    assert [c.genome for c in a] == [c.genome for c in b]


def test_step_rejects_wrong_population_size(zero_dataset):
    grammar = grammar_for_system("lotka_volterra")
    pop = _seeded_population(4, zero_dataset, grammar, 0)
    with pytest.raises(ValueError):
        step(pop, GAConfig(population_size=6), zero_dataset, grammar,
             np.random.default_rng(0))


def test_run_history_length_matches_iterations(lv_planted):
    grammar = grammar_for_system("lotka_volterra")
    config = GAConfig(population_size=10, iterations=1, seed=0)
    best, history = run_ga(config, lv_planted, grammar)
    assert len(history) == 1
    assert best.train_rmse == history[0] or best.train_rmse <= history[0]


def test_run_recovers_planted_expression(lv_planted):
    grammar = grammar_for_system("lotka_volterra")
    best, _ = run_ga(GAConfig(seed=1), lv_planted, grammar)
    assert best.train_rmse <= 0.05


def test_run_history_non_increasing_and_reproducible(lv_planted):
    grammar = grammar_for_system("lotka_volterra")
    config = GAConfig(population_size=20, iterations=15, seed=5)
    best_a, hist_a = run_ga(config, lv_planted, grammar)
    best_b, hist_b = run_ga(config, lv_planted, grammar)
    assert hist_a == hist_b
    assert print_expr(best_a.expr) == print_expr(best_b.expr)
    assert all(x >= y for x, y in zip(hist_a, hist_a[1:]))
    assert best_a.train_rmse == min(hist_a)
