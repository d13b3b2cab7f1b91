import math

import numpy as np
import pytest

from oracles import random_feasible_flow, sample_paths
from nzddopt.core import depth
from nzddopt.data import Sample, random_sample
from nzddopt.erlpboost import (
    default_eta, format_record, iteration_bound, run, solve_subproblem, subproblem_objective,
)
from nzddopt.softmargin import (
    build_sample_nzdd, flow_residual, is_feasible_flow, relative_entropy, solve_primal, solve_restricted_dual,
)


def sample_nzdd(seed, n=5, m=30):
    return build_sample_nzdd(random_sample(np.random.default_rng(seed), n, m))


class TestSubproblem:
    def test_uncovered_feature_gives_initial_flow(self):
        X = np.array([[1, 0, 1], [0, 0, 1], [1, 0, 0], [0, 0, 1]])
        sn = build_sample_nzdd(Sample(X, [1, -1, -1, 1]))
        res = solve_subproblem(sn, [1], eta=5.0, tol=1e-8, nu=0.5)
        np.testing.assert_allclose(res.d, sn.initial_flow(), atol=1e-10)

    @pytest.mark.parametrize("seed", range(3))
    def test_large_eta_matches_lp(self, seed):
        sn = sample_nzdd(seed)
        for j in (0, sn.n):
            res = solve_subproblem(sn, [j], eta=1e5, tol=1e-9, nu=0.4)
            lp = solve_restricted_dual(sn, 0.4, [j]).gamma
            assert abs(res.objective - lp) <= 1e-4

    @pytest.mark.parametrize("seed", range(3))
    def test_beats_random_flows(self, seed):
        sn = sample_nzdd(10 + seed, n=4, m=25)
        J, eta, nu = [0, 2, sn.n], 8.0, 0.3
        res = solve_subproblem(sn, J, eta, 1e-8, nu)
        assert is_feasible_flow(sn, res.d, nu)
        rng = np.random.default_rng(seed)
        paths = sample_paths(sn)
        for _ in range(1000):
            d, _ = random_feasible_flow(rng, sn, nu, paths)
            assert res.objective <= subproblem_objective(sn, d, J, eta) + 1e-8

    def test_gap_and_residual(self):
        sn = sample_nzdd(21, n=6, m=50)
        res = solve_subproblem(sn, [0, 1, 3], eta=20.0, tol=1e-7, nu=0.2)
        assert res.residual <= 1e-12
        assert -1e-9 <= res.gap <= 1e-7

    def test_nu_one_returns_initial_flow(self):
        sn = sample_nzdd(2)
        res = solve_subproblem(sn, [0], eta=3.0, tol=1e-6, nu=1.0)
        np.testing.assert_array_equal(res.d, sn.initial_flow())

    def test_input_checks(self):
        sn = sample_nzdd(2)
        with pytest.raises(ValueError):
            solve_subproblem(sn, [], 1.0, 1e-6)
        with pytest.raises(ValueError):
            solve_subproblem(sn, [0], 1.0, 0.0)


class TestRun:
    def test_separable_toy(self):
        sn = build_sample_nzdd(Sample([[1, 0], [0, 1], [1, 1], [0, 0]], [1, -1, 1, -1]))
        sol, T = run(sn, 1.0, 0.1)
        ref, _ = solve_primal(sn, 1.0)
        assert sol.objective >= ref.objective - 0.1
        assert T <= iteration_bound(sn, 1.0, 0.1)

    def test_default_eta(self):
        sn = sample_nzdd(3)
        assert default_eta(sn, 0.2, 0.05) == pytest.approx(4 / 0.05 * depth(sn.g) * math.log(5))
        assert default_eta(sn, 0.9, 0.05) == pytest.approx(4 / 0.05 * depth(sn.g))

    @pytest.mark.parametrize("seed", range(6))
    def test_iterates(self, seed):
        nu = [0.2, 0.5, 1.0][seed % 3]
        sn = sample_nzdd(40 + seed, n=int(3 + seed % 4), m=20 + 10 * seed)
        history = []
        sol, T = run(sn, nu, 0.05, history=history, keep_iterates=True)
        ref, _ = solve_primal(sn, nu)
        assert sol.objective >= ref.objective - 0.05
        assert T <= iteration_bound(sn, nu, 0.05)
        assert len(history) == T
        dep = depth(sn.g)
        for rec in history:
            assert is_feasible_flow(sn, rec.d, nu)
            assert flow_residual(sn, rec.d) <= 1e-8
            assert rec.d.sum() <= dep + 1e-9
            if nu < 1:
                assert relative_entropy(rec.d, sn.initial_flow()) <= dep * math.log(1 / nu) + 1e-9
        bests = [r.best for r in history]
        assert all(a >= b - 1e-12 for a, b in zip(bests, bests[1:]))
        objs = [r.objective for r in history]
        assert all(a <= b + 1e-6 for a, b in zip(objs, objs[1:]))

    def test_callback_and_log_format(self):
        sn = sample_nzdd(7)
        seen = []
        run(sn, 0.3, 0.1, callback=seen.append)
        assert seen and all(len(format_record(r).split("\t")) == 5 for r in seen)

    def test_input_checks(self):
        sn = sample_nzdd(7)
        with pytest.raises(ValueError):
            run(sn, 0.3, 1.5)
        with pytest.raises(ValueError):
            run(sn, 0.0, 0.1)
