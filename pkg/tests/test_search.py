import io
import json
import math

import numpy as np
import pytest

from lognnet.chaos import MapKind, search_box
from lognnet.head import TrainConfig
from lognnet.search import FitnessEvaluator, SwarmConfig, fitness_of, optimize, search_map

from .conftest import separable_dataset


def neg_sphere(center):
    def f(p):
        return -sum((v - c) ** 2 for v, c in zip(p.values(), center))
    return f


class TestOptimize:
    def test_sphere_on_logistic_box_boundary_optimum(self):
        # centred at the origin: the box maximizer is (x0, r) = (0, 1), r on its lower wall
        res = optimize(neg_sphere((0.0, 0.0)), "logistic", SwarmConfig())
        assert abs(res.best_params["x0"]) < 1e-3
        assert abs(res.best_params["r"] - 1.0) < 1e-3

    def test_sphere_interior_optimum_henon2_box(self):
        center = (0.7, 3.0, 0.4, 1.1, 0.2, 0.9)
        res = optimize(neg_sphere(center), "henon2", SwarmConfig(particles=30, iterations=200))
        for name, c in zip(search_box("henon2")[0], center):
            assert abs(res.best_params[name] - c) < 1e-3

    def test_deterministic_under_seed(self):
        a = optimize(neg_sphere((0.5, 2.0)), "sine", SwarmConfig(rng_seed=3))
        b = optimize(neg_sphere((0.5, 2.0)), "sine", SwarmConfig(rng_seed=3))
        assert a.best_params == b.best_params and a.best_fitness == b.best_fitness
        assert [r.params for r in a.history] == [r.params for r in b.history]

    def test_constant_objective_single_iteration(self):
        res = optimize(lambda p: 0.5, "logistic", SwarmConfig(particles=2, iterations=1))
        assert res.best_fitness == 0.5
        initial = [r.params for r in res.history if r.iteration == 0]
        assert res.best_params in initial
        # earliest discovery wins ties
        assert res.best_params == initial[0]

    def test_positions_stay_in_box(self):
        res = optimize(lambda p: p["r"], "plank", SwarmConfig(particles=6, iterations=25))
        names, lo, hi = search_box("plank")
        for rec in res.history:
            for n, l, h in zip(names, lo, hi):
                assert l <= rec.params[n] <= h
        assert res.best_params["r"] == pytest.approx(7.0, abs=1e-2)

    def test_failures_are_worst_fitness(self):
        def f(p):
            if p["x0"] < 0:
                raise ArithmeticError("boom")
            return p["x0"]
        res = optimize(f, "logistic", SwarmConfig(particles=8, iterations=5))
        assert res.best_params["x0"] >= 0
        assert any(math.isinf(r.fitness) for r in res.history)

    def test_nan_is_worst(self):
        res = optimize(lambda p: math.nan if p["r"] > 2 else 1.0, "logistic",
                       SwarmConfig(particles=5, iterations=3))
        assert res.best_fitness == 1.0

    def test_best_per_iteration_monotone(self):
        res = optimize(neg_sphere((0.1, 2.5)), "logistic", SwarmConfig(particles=5, iterations=12))
        assert all(b >= a for a, b in zip(res.best_per_iteration, res.best_per_iteration[1:]))

    def test_target_metric_stops_early(self):
        res = optimize(lambda p: 1.0, "sine", SwarmConfig(particles=3, iterations=10, target_metric=1.0))
        assert len(res.best_per_iteration) == 1

    def test_trace_lines(self):
        buf = io.StringIO()
        optimize(lambda p: 0.0, "gauss", SwarmConfig(particles=3, iterations=2), trace=buf)
        lines = buf.getvalue().splitlines()
        assert len(lines) == 6
        rec = json.loads(lines[0])
        assert set(rec) == {"iteration", "particle", "params", "fitness"}
        assert set(rec["params"]) == {"x0", "r1", "r2"}

    @pytest.mark.parametrize("kwargs", [{"particles": 1}, {"iterations": 0}, {"inertia": 0}])
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            SwarmConfig(**kwargs)


class TestFitness:
    def test_separable_toy_any_map(self):
        toy = separable_dataset()
        cfg = TrainConfig(epochs=50, learning_rate=0.2)
        for kind, params in [("sine", [0.3, 1.9]), ("henon1", [0.2, 0.2, 1.4, 0.3]),
                             ("lognnet", [0.5, 3.0, 1.5])]:
            assert fitness_of(toy, "3:8:4:2", kind, params, cfg) == 1.0

    def test_divergent_params_score_zero(self):
        toy = separable_dataset()
        assert fitness_of(toy, "3:40:4:2", "henon2", [1.5, 10, 1.5, 1.5, 1.5, 1.5]) == 0.0

    def test_out_of_range_scores_zero(self):
        assert fitness_of(separable_dataset(), "3:4:2:2", "logistic", [0.3, 9.0]) == 0.0

    def test_duplicate_evaluation_identical(self):
        ev = FitnessEvaluator(separable_dataset(seed=4), "3:6:3:2", "gauss", TrainConfig(epochs=3))
        p = {"x0": 0.1, "r1": -0.3, "r2": 4.0}
        assert ev(p) == ev(p)

    def test_search_map_end_to_end(self):
        toy = separable_dataset()
        res = search_map(toy, "3:6:3:2", MapKind.SINE, TrainConfig(epochs=20, learning_rate=0.2),
                         SwarmConfig(particles=4, iterations=2), fitness_epochs=10)
        assert res.best_fitness == 1.0
        assert res.spec.kind is MapKind.SINE
        assert len(res.history) == 8
        assert np.isfinite(res.best_per_iteration).all()
