"""1-norm soft-margin optimization over a compressed labeled sample.

The positive and negative instances are compressed separately (each
instance x becomes the set of its nonzero features plus the constant
element ``n``) and the two diagrams are joined under a fresh root by two
empty-labeled edges, sharing the leaf.  Edges of the negative branch carry
sign -1.

Primal (extended):
    max rho - sum_e m_e beta_e / (nu m)
    s.t. s_u - s_v + sign(e) sum_{j in labels(e)} w_j + beta_e >= 0   per edge
         s_root = 0, s_leaf = rho
         sum_{j<n} w_j - w_n = 1,  w_j >= 0 (j < n),  w_n <= 0,  beta >= 0

Dual: min gamma over unit root->leaf flows d with 0 <= d_e <= m_e / (nu m)
and score_j(d) <= gamma for every j, where
score_j(d) = sign(j) sum_{e: j in labels(e)} sign(e) d_e, sign(n) = -1.
"""
from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .build import compress
from .core import LEAF, ROOT, Edge, Nzdd, NzddError, SubsetFamily, edge_multiplicities
from .data import Sample
from .lp import LPResult, solve_lp
from .system import ConstraintSystem, Row, Variable

log = logging.getLogger(__name__)


class SubproblemError(RuntimeError):
    """A restricted LP did not solve to optimality."""


@dataclass(frozen=True, eq=False)
class SampleNzdd:
    g: Nzdd
    sign: np.ndarray
    mult: np.ndarray
    n: int
    m: int
    sample: Sample
    has_duplicates: bool = False
    branch_roots: dict = field(default_factory=dict)

    @property
    def num_edges(self) -> int:
        return self.g.num_edges

    @property
    def feature_sign(self) -> np.ndarray:
        s = np.ones(self.n + 1)
        s[self.n] = -1.0
        return s

    def capacities(self, nu: float) -> np.ndarray:
        return self.mult / (nu * self.m)

    def initial_flow(self) -> np.ndarray:
        return self.mult / self.m

    def instance_set(self, i: int) -> tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.sample.X[i])) + (self.n,)

    def path_of(self, i: int) -> tuple[int, ...]:
        """Edges of the path representing instance i (within its label's branch)."""
        start = self.branch_roots[int(self.sample.y[i])]
        return find_path(self.g, start, self.instance_set(i))

    def path_sign(self, path) -> int:
        # the join edge out of the root is +1 on both branches; the last edge is not
        return int(self.sign[path[-1]]) if path else 1


def find_path(g: Nzdd, start_edge: int, target) -> tuple[int, ...]:
    """Root->leaf path whose label union equals ``target``, forced through ``start_edge``."""
    target = frozenset(target)
    first = g.edges[start_edge]
    if not set(first.labels) <= target:
        raise NzddError("set is not represented")
    dead: set[tuple[int, frozenset]] = set()
    stack = [(first.v, target - set(first.labels), 0)]
    path = [start_edge]
    while stack:
        node, rest, k = stack[-1]
        if node == LEAF:
            if not rest:
                return tuple(path)
            dead.add((node, rest))
            stack.pop()
            path.pop()
            continue
        outs = g.out_edges[node]
        while k < len(outs):
            e = g.edges[outs[k]]
            k += 1
            if set(e.labels) <= rest and (e.v, rest - set(e.labels)) not in dead:
                stack[-1] = (node, rest, k)
                stack.append((e.v, rest - set(e.labels), 0))
                path.append(outs[k - 1])
                break
        else:
            dead.add((node, rest))
            stack.pop()
            path.pop()
    raise NzddError("set is not represented")


def build_sample_nzdd(sample: Sample, order="frequency") -> SampleNzdd:
    """Compress each class and join the two diagrams in parallel."""
    n, m = sample.n, sample.m
    if m == 0:
        raise ValueError("empty sample")
    edges: list[Edge] = []
    signs: list[int] = []
    weights: list[Counter] = []
    node_count = 2
    branch_roots = {}
    has_dup = False
    for label in (1, -1):
        rows = sample.X[sample.y == label]
        if rows.shape[0] == 0:
            log.warning("sample has no instances labeled %+d", label)
            continue
        counts = Counter(tuple(int(j) for j in np.flatnonzero(x)) + (n,) for x in rows)
        has_dup |= any(c > 1 for c in counts.values())
        sub, _ = compress(SubsetFamily(counts, ground_size=n + 1), order)
        # sub's root/leaf become a fresh node / the shared leaf
        remap = {}
        for v in range(sub.node_count):
            if v == LEAF:
                remap[v] = LEAF
            else:
                remap[v] = node_count
                node_count += 1
        branch_roots[label] = len(edges)
        edges.append(Edge(ROOT, remap[ROOT], ()))
        signs.append(1)
        for e in sub.edges:
            edges.append(Edge(remap[e.u], remap[e.v], e.labels))
            signs.append(label)
        weights.append(counts)
    g = Nzdd(node_count, tuple(edges), n + 1)
    sn = SampleNzdd(g, np.array(signs, dtype=np.int8), edge_multiplicities(g).astype(float), n, m,
                    sample, has_dup, branch_roots)
    if has_dup:
        mult = np.zeros(g.num_edges)
        for label, counts in zip([l for l in (1, -1) if l in branch_roots], weights):
            for s, c in counts.items():
                mult[list(find_path(g, branch_roots[label], s))] += c
        object.__setattr__(sn, "mult", mult)
    return sn


# ---------------------------------------------------------------------------
# scores


def edge_scores(sn: SampleNzdd, d) -> np.ndarray:
    """score_j(d) for every j in [n+1]."""
    ei, el = sn.g.label_incidence
    d = np.asarray(d, dtype=float)
    raw = np.bincount(el, weights=sn.sign[ei] * d[ei], minlength=sn.n + 1)
    return sn.feature_sign * raw


def edge_score(sn: SampleNzdd, d, j: int) -> float:
    return float(edge_scores(sn, d)[j])


def flow_residual(sn: SampleNzdd, d) -> float:
    """Largest violation of conservation, unit outflow at the root and unit inflow at the leaf."""
    g = sn.g
    d = np.asarray(d, dtype=float)
    net = np.zeros(g.node_count)
    np.add.at(net, g.tails, d)
    np.subtract.at(net, g.heads, d)
    net[ROOT] -= 1.0
    net[LEAF] += 1.0
    return float(np.abs(net).max())


def is_feasible_flow(sn: SampleNzdd, d, nu: float, tol: float = 1e-8) -> bool:
    d = np.asarray(d, dtype=float)
    cap = sn.capacities(nu)
    return flow_residual(sn, d) <= tol and bool(np.all(d >= -tol)) and bool(np.all(d <= cap + tol))


def relative_entropy(d, d0) -> float:
    """Unnormalized KL: sum d ln(d/d0) - d + d0 (0 ln 0 = 0)."""
    d = np.asarray(d, dtype=float)
    d0 = np.asarray(d0, dtype=float)
    pos = d > 0
    return float(np.sum(d[pos] * np.log(d[pos] / d0[pos])) - d.sum() + d0.sum())


# ---------------------------------------------------------------------------
# solutions


@dataclass
class MarginSolution:
    rho: float
    w: np.ndarray
    beta: np.ndarray
    objective: float
    nu: float
    gamma: float = math.nan

    @property
    def bias(self) -> float:
        return float(-self.w[-1])

    def to_original(self, sn: SampleNzdd):
        """(rho, w, b, xi) with xi_i = sum of beta over instance i's path."""
        xi = np.array([self.beta[list(sn.path_of(i))].sum() for i in range(sn.m)])
        return self.rho, self.w[:-1].copy(), self.bias, xi


def path_weights(sn: SampleNzdd, w, beta) -> np.ndarray:
    """Per-edge sign(e) * sum_{j in labels(e)} w_j + beta_e."""
    ei, el = sn.g.label_incidence
    lab = np.bincount(ei, weights=np.asarray(w, dtype=float)[el], minlength=sn.num_edges)
    return sn.sign * lab + np.asarray(beta, dtype=float)


def shortest_path_value(g: Nzdd, weights) -> float:
    dist = np.full(g.node_count, math.inf)
    dist[ROOT] = 0.0
    for u in g.topological_order:
        if dist[u] == math.inf:
            continue
        for i in g.out_edges[u]:
            v = g.edges[i].v
            c = dist[u] + weights[i]
            if c < dist[v]:
                dist[v] = c
    return float(dist[LEAF])


def primal_value(sn: SampleNzdd, w, beta, nu: float) -> tuple[float, float]:
    """(rho, objective) of the best primal point for fixed (w, beta)."""
    rho = shortest_path_value(sn.g, path_weights(sn, w, beta))
    return rho, rho - float(np.dot(sn.mult, beta)) / (nu * sn.m)


def make_solution(sn: SampleNzdd, w, beta, nu: float, gamma: float = math.nan) -> MarginSolution:
    w = np.asarray(w, dtype=float)
    beta = np.asarray(beta, dtype=float)
    rho, obj = primal_value(sn, w, beta, nu)
    return MarginSolution(rho, w, beta, obj, nu, gamma)


# ---------------------------------------------------------------------------
# extended primal LP


@dataclass(frozen=True)
class PrimalLayout:
    rho: int
    w: slice
    beta: slice
    s: dict


def build_primal(sn: SampleNzdd, nu: float) -> tuple[ConstraintSystem, PrimalLayout]:
    if not 0 < nu <= 1:
        raise ValueError("nu must lie in (0, 1]")
    g, n = sn.g, sn.n
    E = g.num_edges
    variables = [Variable("rho", "real", -math.inf, math.inf)]
    variables += [Variable(f"w{j}") for j in range(n)]
    variables.append(Variable(f"w{n}", "real", -math.inf, 0.0))
    variables += [Variable(f"beta{i}") for i in range(E)]
    s_idx = {}
    for v in range(g.node_count):
        if v not in (ROOT, LEAF):
            s_idx[v] = len(variables)
            variables.append(Variable(f"s{v}", "real", -math.inf, math.inf))
    w0, b0 = 1, n + 2
    rows = []
    names = []
    for i, e in enumerate(g.edges):
        coefs: dict[int, float] = {b0 + i: 1.0}
        for j in e.labels:
            coefs[w0 + j] = coefs.get(w0 + j, 0.0) + float(sn.sign[i])
        if e.u in s_idx:
            coefs[s_idx[e.u]] = coefs.get(s_idx[e.u], 0.0) + 1.0
        if e.v in s_idx:
            coefs[s_idx[e.v]] = coefs.get(s_idx[e.v], 0.0) - 1.0
        elif e.v == LEAF:
            coefs[0] = coefs.get(0, 0.0) - 1.0
        rows.append(Row(tuple(sorted((k, c) for k, c in coefs.items() if c != 0)), 0.0, ">="))
        names.append(f"e{i}")
    rows.append(Row(tuple((w0 + j, 1.0) for j in range(n)) + ((w0 + n, -1.0),), 1.0, "="))
    names.append("norm")
    obj = [(0, 1.0)] + [(b0 + i, -float(sn.mult[i]) / (nu * sn.m)) for i in range(E)]
    system = ConstraintSystem(tuple(variables), tuple(rows), tuple(obj), "max", tuple(names))
    return system, PrimalLayout(0, slice(w0, w0 + n + 1), slice(b0, b0 + E), s_idx)


def solve_primal(sn: SampleNzdd, nu: float) -> tuple[MarginSolution, LPResult]:
    system, lay = build_primal(sn, nu)
    res = solve_lp(system)
    if not res.ok:
        raise SubproblemError(f"extended primal LP: {res.status}")
    x = res.x
    sol = MarginSolution(float(x[lay.rho]), x[lay.w].copy(), x[lay.beta].copy(), res.value, nu)
    return sol, res


# ---------------------------------------------------------------------------
# dual flow LP


@dataclass
class DualSolution:
    gamma: float
    d: np.ndarray
    w: np.ndarray
    beta: np.ndarray
    lp: LPResult


def dual_system(sn: SampleNzdd, nu: float, J) -> ConstraintSystem:
    """min gamma over the capped flow polytope with score_j(d) <= gamma for j in J.

    Variable 0 is gamma, variable 1 + e is d_e.  Rows: one per j in J (in
    the given order), then conservation per internal node, then unit
    outflow at the root.
    """
    g = sn.g
    E = g.num_edges
    cap = sn.capacities(nu)
    variables = [Variable("gamma", "real", -math.inf, math.inf)]
    variables += [Variable(f"d{i}", "real", 0.0, float(cap[i])) for i in range(E)]
    coef_by_j: dict[int, dict[int, float]] = {}
    for i, e in enumerate(g.edges):
        for j in e.labels:
            coef_by_j.setdefault(j, {})
            coef_by_j[j][1 + i] = coef_by_j[j].get(1 + i, 0.0) + float(sn.sign[i])
    fs = sn.feature_sign
    rows = []
    for j in J:
        terms = [(0, 1.0)] + [(k, -fs[j] * c) for k, c in sorted(coef_by_j.get(j, {}).items())]
        rows.append(Row(tuple(terms), 0.0, ">="))
    for v in range(g.node_count):
        if v in (ROOT, LEAF):
            continue
        terms = [(1 + i, 1.0) for i in g.in_edges[v]] + [(1 + i, -1.0) for i in g.out_edges[v]]
        rows.append(Row(tuple(terms), 0.0, "="))
    rows.append(Row(tuple((1 + i, 1.0) for i in g.out_edges[ROOT]), 1.0, "="))
    return ConstraintSystem(tuple(variables), tuple(rows), ((0, 1.0),), "min")


def solve_restricted_dual(sn: SampleNzdd, nu: float, J) -> DualSolution:
    J = list(J)
    res = solve_lp(dual_system(sn, nu, J))
    if not res.ok:
        raise SubproblemError(f"restricted dual LP: {res.status}")
    d = np.clip(res.x[1:], 0.0, sn.capacities(nu))
    w = np.zeros(sn.n + 1)
    fs = sn.feature_sign
    for k, j in enumerate(J):
        w[j] = fs[j] * max(res.duals[k], 0.0)
    beta = np.maximum(-res.reduced_costs[1:], 0.0)
    return DualSolution(float(res.x[0]), d, w, beta, res)


def full_dual_value(sn: SampleNzdd, nu: float) -> DualSolution:
    return solve_restricted_dual(sn, nu, range(sn.n + 1))


# ---------------------------------------------------------------------------
# column generation


@dataclass
class CGRound:
    t: int
    j: int
    score: float
    gamma: float


def column_generation(sn: SampleNzdd, nu: float, eps: float, max_iter: int | None = None,
                      callback: Callable[[CGRound], None] | None = None) -> tuple[MarginSolution, int]:
    """Add the feature with the largest edge score until it beats gamma by at most eps."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not 0 < nu <= 1:
        raise ValueError("nu must lie in (0, 1]")
    d = sn.initial_flow()
    gamma = -math.inf
    J: list[int] = []
    sol = None
    limit = max_iter if max_iter is not None else sn.n + 1
    t = 0
    while True:
        scores = edge_scores(sn, d)
        j = int(np.argmax(scores))
        hgamma = float(scores[j])
        if callback:
            callback(CGRound(t + 1, j, hgamma, gamma))
        if hgamma <= gamma + eps or j in J or t >= limit:
            break
        J.append(j)
        sol = solve_restricted_dual(sn, nu, J)
        d, gamma = sol.d, sol.gamma
        t += 1
    return make_solution(sn, sol.w, sol.beta, nu, gamma), t
