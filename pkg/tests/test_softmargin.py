import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import enumerate_paths, path_family, random_feasible_flow, sample_paths, scipy_lp
from nzddopt.core import depth, edge_multiplicities, validate
from nzddopt.data import Sample, random_sample
from nzddopt.lp import solve_original_softmargin
from nzddopt.softmargin import (
    build_primal, build_sample_nzdd, column_generation, dual_system, edge_score, edge_scores, full_dual_value,
    is_feasible_flow, solve_primal, solve_restricted_dual,
)

samples = st.tuples(st.integers(1, 5), st.integers(2, 25), st.integers(0, 2**31)).map(
    lambda t: random_sample(np.random.default_rng(t[2]), t[0], t[1]))


class TestSampleNzdd:
    def test_two_points(self):
        sn = build_sample_nzdd(Sample([[1, 0], [0, 1]], [1, -1]))
        paths = enumerate_paths(sn.g)
        assert len(paths) == 2
        got = {(frozenset(a for i in p for a in sn.g.edges[i].labels), sn.path_sign(p)) for p in paths}
        assert got == {(frozenset({0, 2}), 1), (frozenset({1, 2}), -1)}
        root_edges = sn.g.out_edges[0]
        assert len(root_edges) == 2 and all(not sn.g.edges[i].labels for i in root_edges)

    def test_duplicate_positives(self):
        m = 5
        sn = build_sample_nzdd(Sample(np.tile([1, 0, 1], (m, 1)), np.ones(m)))
        assert len(enumerate_paths(sn.g)) == 1
        assert np.all(sn.mult == m)
        assert sn.has_duplicates

    def test_cross_branch_duplicate(self):
        sn = build_sample_nzdd(Sample([[1, 1], [1, 1], [0, 1]], [1, -1, 1]))
        assert sum(sn.mult[i] for i in sn.g.in_edges[1]) == 3
        assert sn.path_sign(sn.path_of(0)) == 1 and sn.path_sign(sn.path_of(1)) == -1

    @given(samples)
    def test_invariants(self, sample):
        sn = build_sample_nzdd(sample)
        assert sum(sn.mult[i] for i in sn.g.in_edges[1]) == sample.m
        for i in range(sample.m):
            p = sn.path_of(i)
            assert sorted(a for e in p for a in sn.g.edges[e].labels) == list(sn.instance_set(i))
            assert sn.path_sign(p) == sample.y[i]
            assert sn.sign[p[0]] == 1 and all(sn.sign[e] == sample.y[i] for e in p[1:])
        if not sn.has_duplicates:
            np.testing.assert_array_equal(sn.mult, edge_multiplicities(sn.g))
            assert validate(sn.g).ok or "condition2" in validate(sn.g).kinds()
        assert is_feasible_flow(sn, sn.initial_flow(), 1.0)

    def test_branch_languages(self):
        rng = np.random.default_rng(1)
        s = random_sample(rng, 6, 40)
        sn = build_sample_nzdd(s)
        sets = {frozenset(sn.instance_set(i)) for i in range(s.m)}
        assert set(path_family(sn.g)) == sets


class TestEdgeScore:
    def test_symmetric_zero(self):
        sn = build_sample_nzdd(Sample([[1, 0], [1, 1], [1, 0], [1, 1]], [1, 1, -1, -1]))
        assert edge_score(sn, sn.initial_flow(), 0) == pytest.approx(0.0, abs=1e-15)

    def test_all_positive_full_feature(self):
        sn = build_sample_nzdd(Sample([[1, 0], [1, 1]], [1, 1]))
        assert edge_score(sn, sn.initial_flow(), 0) == pytest.approx(1.0)

    @given(samples, st.integers(0, 2**31))
    def test_path_expansion(self, sample, seed):
        sn = build_sample_nzdd(sample)
        rng = np.random.default_rng(seed)
        d, q = random_feasible_flow(rng, sn, 0.5)
        xp = np.hstack([sample.X, np.ones((sample.m, 1))])
        expect = (q * sample.y) @ xp * sn.feature_sign
        np.testing.assert_allclose(edge_scores(sn, d), expect, atol=1e-12)


class TestFlows:
    @given(samples, st.integers(0, 2**31), st.sampled_from([0.2, 0.5, 1.0]))
    def test_random_flows_feasible_and_bounded(self, sample, seed, nu):
        sn = build_sample_nzdd(sample)
        d, _ = random_feasible_flow(np.random.default_rng(seed), sn, nu)
        assert is_feasible_flow(sn, d, nu)
        assert d.sum() <= depth(sn.g) + 1e-12


class TestPrimal:
    def test_layout(self):
        sn = build_sample_nzdd(random_sample(np.random.default_rng(0), 4, 20))
        system, lay = build_primal(sn, 0.5)
        assert system.num_vars == 1 + (sn.n + 1) + sn.num_edges + sn.g.node_count - 2
        assert system.num_rows == sn.num_edges + 1

    def test_bad_nu(self):
        sn = build_sample_nzdd(Sample([[1]], [1]))
        with pytest.raises(ValueError):
            build_primal(sn, 1.5)

    @pytest.mark.parametrize("seed", range(6))
    def test_mapping_and_ordering(self, seed):
        rng = np.random.default_rng(seed)
        s = random_sample(rng, int(rng.integers(2, 7)), int(rng.integers(5, 40)))
        nu = [0.2, 0.5, 1.0][seed % 3]
        sn = build_sample_nzdd(s)
        sol, _ = solve_primal(sn, nu)
        rho, w, b, xi = sol.to_original(sn)
        assert np.all(w >= -1e-9) and b >= -1e-9 and np.all(xi >= -1e-9)
        assert abs(w.sum() + b - 1) <= 1e-7
        assert np.all(s.y * (s.X @ w - b) >= rho - xi - 1e-7)
        orig = solve_original_softmargin(s.X, s.y, nu)
        assert sol.objective <= orig.value + 1e-7
        assert sol.objective == pytest.approx(scipy_lp(build_primal(sn, nu)[0])[1], abs=1e-7)

    @pytest.mark.parametrize("seed", range(6))
    def test_dual_equivalence(self, seed):
        rng = np.random.default_rng(100 + seed)
        sn = build_sample_nzdd(random_sample(rng, 4, 30))
        for nu in (0.2, 0.6):
            sol, _ = solve_primal(sn, nu)
            dual = full_dual_value(sn, nu)
            assert sol.objective == pytest.approx(dual.gamma, abs=1e-7)
            assert dual.gamma == pytest.approx(scipy_lp(dual_system(sn, nu, range(sn.n + 1)))[1], abs=1e-7)


class TestColumnGeneration:
    def test_separable_pair(self):
        sn = build_sample_nzdd(Sample([[1, 0], [0, 1]], [1, -1]))
        sol, _ = column_generation(sn, 1.0, 1e-4)
        ref, _ = solve_primal(sn, 1.0)
        assert abs(sol.objective - ref.objective) <= 1e-4

    @pytest.mark.parametrize("seed", range(8))
    def test_eps_guarantee(self, seed):
        rng = np.random.default_rng(200 + seed)
        s = random_sample(rng, int(rng.integers(2, 9)), int(rng.integers(5, 60)))
        sn = build_sample_nzdd(s)
        for nu in (0.2, 1.0):
            sol, t = column_generation(sn, nu, 1e-4)
            ref, _ = solve_primal(sn, nu)
            assert abs(sol.objective - ref.objective) <= 1e-4
            assert 1 <= t <= sn.n + 1

    def test_restricted_dual_monotone(self):
        sn = build_sample_nzdd(random_sample(np.random.default_rng(9), 6, 40))
        vals = [solve_restricted_dual(sn, 0.3, range(k)).gamma for k in range(1, sn.n + 2)]
        assert all(a <= b + 1e-9 for a, b in zip(vals, vals[1:]))

    def test_bad_eps(self):
        sn = build_sample_nzdd(Sample([[1]], [1]))
        with pytest.raises(ValueError):
            column_generation(sn, 0.5, 0.0)

    def test_paths_cover_flow(self):
        sn = build_sample_nzdd(random_sample(np.random.default_rng(3), 3, 10))
        d = np.zeros(sn.num_edges)
        for p in sample_paths(sn):
            d[p] += 1 / sn.m
        np.testing.assert_allclose(d, sn.initial_flow())
