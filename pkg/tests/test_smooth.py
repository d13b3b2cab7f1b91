import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import enumerate_paths, theta_by_paths
from nzddopt.data import Sample
from nzddopt.smooth import (
    DuplicateInstanceError, edge_marginals, eta_for_accuracy, grad_theta, theta, true_objective,
)
from nzddopt.softmargin import build_sample_nzdd


def distinct_sample(seed, n, m):
    rng = np.random.default_rng(seed)
    codes = rng.choice(2**n, size=min(m, 2**n), replace=False)
    X = (codes[:, None] >> np.arange(n)) & 1
    y = np.where(rng.random(len(codes)) < 0.5, 1, -1)
    return Sample(X, y)


def random_point(rng, sn, scale=1.0):
    w = rng.random(sn.n + 1)
    w[-1] = -w[-1]
    w /= w[:-1].sum() - w[-1]
    beta = scale * rng.random(sn.num_edges) * (rng.random(sn.num_edges) < 0.5)
    return w, beta


small = st.tuples(st.integers(0, 2**31), st.integers(1, 4), st.integers(2, 12))


class TestTheta:
    @given(small, st.sampled_from([0.5, 3.0, 40.0]))
    def test_matches_enumeration(self, case, eta):
        seed, n, m = case
        sn = build_sample_nzdd(distinct_sample(seed, n, m))
        assert len(enumerate_paths(sn.g)) <= 16
        w, beta = random_point(np.random.default_rng(seed), sn)
        ref, _, _ = theta_by_paths(sn, w, beta, eta, 0.4)
        assert theta(sn, w, beta, eta, 0.4) == pytest.approx(ref, rel=1e-10, abs=1e-12)

    def test_zero_point(self):
        sn = build_sample_nzdd(distinct_sample(1, 3, 6))
        w, beta = np.zeros(sn.n + 1), np.zeros(sn.num_edges)
        assert theta(sn, w, beta, 2.0, 0.5) == pytest.approx(0.0, abs=1e-14)

    def test_sandwich(self):
        rng = np.random.default_rng(0)
        sn = build_sample_nzdd(distinct_sample(0, 7, 80))
        for _ in range(500):
            w, beta = random_point(rng, sn, scale=rng.random())
            eta = float(np.exp(rng.uniform(-2, 6)))
            f = true_objective(sn, w, beta, 0.3)
            th = theta(sn, w, beta, eta, 0.3)
            assert f - 1e-12 <= th <= f + math.log(sn.m) / eta + 1e-12

    def test_eta_for_accuracy(self):
        eta = eta_for_accuracy(0.1, 1000)
        assert math.log(1000) / eta == pytest.approx(0.05)

    def test_duplicates_rejected(self):
        sn = build_sample_nzdd(Sample([[1, 0], [1, 0]], [1, 1]))
        with pytest.raises(DuplicateInstanceError):
            theta(sn, np.zeros(3), np.zeros(sn.num_edges), 1.0, 0.5)

    def test_large_eta_stable(self):
        sn = build_sample_nzdd(distinct_sample(3, 5, 20))
        w, beta = random_point(np.random.default_rng(3), sn)
        th = theta(sn, w, beta, 1e8, 0.5)
        assert math.isfinite(th)
        assert th == pytest.approx(true_objective(sn, w, beta, 0.5), abs=1e-6)


class TestGradient:
    def test_symmetric_feature(self):
        sn = build_sample_nzdd(Sample([[1, 0], [1, 1], [1, 0], [1, 1]], [1, 1, -1, -1]))
        gw, _ = grad_theta(sn, np.zeros(3), np.zeros(sn.num_edges), 1.0, 0.5)
        assert gw[0] == pytest.approx(0.0, abs=1e-14)

    @pytest.mark.parametrize("seed", range(10))
    def test_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        sn = build_sample_nzdd(distinct_sample(seed, 5, 25))
        w, beta = random_point(rng, sn)
        eta, nu, h = 2.0, 0.3, 1e-6
        gw, gb = grad_theta(sn, w, beta, eta, nu)
        for j in range(sn.n + 1):
            e = np.zeros_like(w); e[j] = h
            fd = (theta(sn, w + e, beta, eta, nu) - theta(sn, w - e, beta, eta, nu)) / (2 * h)
            assert abs(fd - gw[j]) <= 1e-5 * max(1.0, abs(gw[j]))
        for i in range(sn.num_edges):
            e = np.zeros_like(beta); e[i] = h
            fd = (theta(sn, w, beta + e, eta, nu) - theta(sn, w, beta - e, eta, nu)) / (2 * h)
            assert abs(fd - gb[i]) <= 1e-5 * max(1.0, abs(gb[i]))

    @given(small)
    def test_marginals_match_enumeration(self, case):
        seed, n, m = case
        sn = build_sample_nzdd(distinct_sample(seed, n, m))
        w, beta = random_point(np.random.default_rng(seed), sn)
        _, q, _ = theta_by_paths(sn, w, beta, 1.5, 0.5)
        assert abs(q.sum() - 1) <= 1e-10
        mu = np.zeros(sn.num_edges)
        for qp, p in zip(q, enumerate_paths(sn.g)):
            mu[p] += qp
        np.testing.assert_allclose(edge_marginals(sn, w, beta, 1.5), mu, atol=1e-12)
        into_leaf = edge_marginals(sn, w, beta, 1.5)[list(sn.g.in_edges[1])].sum()
        assert abs(into_leaf - 1) <= 1e-10

    def test_smoothness_certificate(self):
        rng = np.random.default_rng(5)
        sn = build_sample_nzdd(distinct_sample(5, 6, 40))
        eta, nu = 3.0, 0.4
        for _ in range(200):
            u, v = random_point(rng, sn), random_point(rng, sn)
            gw, gb = grad_theta(sn, *u, eta, nu)
            dw, db = v[0] - u[0], v[1] - u[1]
            lin = theta(sn, *u, eta, nu) + gw @ dw + gb @ db
            l1 = np.abs(dw).sum() + np.abs(db).sum()
            assert theta(sn, *v, eta, nu) >= lin - 4 * eta * l1**2 - 1e-12
