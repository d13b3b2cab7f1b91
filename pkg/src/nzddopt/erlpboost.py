"""ERLPBoost over a compressed sample.

Each round solves the entropy-regularized flow problem

    min_{d in P}  max_{j in J} score_j(d) + (1/eta) KL(d, d0)

where P is the capped unit-flow polytope and KL the unnormalized relative
entropy.  The solver works on the concave dual in (w, s): w ranges over the
simplex on J and s over node potentials.  For fixed (w, s) the optimal flow
is explicit, d_e = min(d0_e exp(-eta c_e), cap_e) with
c_e = a_e(w) - s_u + s_v and a_e(w) = sign(e) sum_{j in J, j in labels(e)} sign(j) w_j.
A damped Newton method with a log barrier on w (driven to zero) finds the
dual optimum; the recovered flow is then made exactly feasible by cyclic
KL (Bregman) projections onto node conservation and the capacity box.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import LEAF, ROOT, depth
from .softmargin import (
    MarginSolution, SampleNzdd, edge_scores, flow_residual, make_solution, relative_entropy,
    solve_restricted_dual,
)


class SubproblemNotConverged(RuntimeError):
    pass


@dataclass
class SubproblemResult:
    d: np.ndarray
    w: np.ndarray
    s: np.ndarray
    objective: float
    dual_bound: float
    residual: float
    newton_iters: int = 0
    sweeps: int = 0

    @property
    def gap(self) -> float:
        return self.objective - self.dual_bound


@dataclass
class ErlpState:
    d: np.ndarray
    d0: np.ndarray
    J: list
    eta: float
    t: int = 0
    gap: float = math.inf
    history: list = field(default_factory=list)


@dataclass
class ErlpRecord:
    t: int
    j: int
    delta: float
    entropy: float
    objective: float
    best: float
    flow_sum: float
    residual: float
    d: np.ndarray | None = None


def default_eta(sn: SampleNzdd, nu: float, eps: float) -> float:
    return 4.0 / eps * depth(sn.g) * max(1.0, math.log(1.0 / nu))


def iteration_bound(sn: SampleNzdd, nu: float, eps: float) -> float:
    return 144.0 / eps**2 * depth(sn.g) ** 2 * max(1.0, math.log(1.0 / nu))


def subproblem_objective(sn: SampleNzdd, d, J, eta: float) -> float:
    d0 = sn.initial_flow()
    worst = max(edge_scores(sn, d)[list(J)]) if len(J) else 0.0
    return float(worst + relative_entropy(d, d0) / eta)


# ---------------------------------------------------------------------------
# Newton on the dual


class _Dual:
    def __init__(self, sn: SampleNzdd, J, eta: float, nu: float):
        g = sn.g
        self.sn, self.J, self.eta = sn, list(J), eta
        self.p = len(self.J)
        self.node_idx = {}
        for v in range(g.node_count):
            if v != ROOT:
                self.node_idx[v] = self.p + len(self.node_idx)
        self.size = self.p + len(self.node_idx)
        self.leaf = self.node_idx[LEAF]
        self.d0 = sn.initial_flow()
        self.cap = sn.capacities(nu)
        self.log_d0 = np.log(self.d0)
        self.log_cap = np.log(self.cap)
        fs = sn.feature_sign
        pos = {j: k for k, j in enumerate(self.J)}
        ent_e, ent_i, ent_v = [], [], []
        for e_id, e in enumerate(g.edges):
            items = []
            for j in e.labels:
                if j in pos:
                    items.append((pos[j], float(sn.sign[e_id] * fs[j])))
            if e.u != ROOT:
                items.append((self.node_idx[e.u], -1.0))
            items.append((self.node_idx[e.v], 1.0))
            for i, v in items:
                ent_e.append(e_id)
                ent_i.append(i)
                ent_v.append(v)
        self.ent_e = np.array(ent_e, dtype=np.int64)
        self.ent_i = np.array(ent_i, dtype=np.int64)
        self.ent_v = np.array(ent_v)
        # pairs (a, b) of entries on the same edge for the Hessian
        order = np.argsort(self.ent_e, kind="stable")
        starts = np.searchsorted(self.ent_e[order], np.arange(g.num_edges + 1))
        pe, pa, pb, pv = [], [], [], []
        for e_id in range(g.num_edges):
            idx = order[starts[e_id]:starts[e_id + 1]]
            for x in idx:
                for y in idx:
                    pe.append(e_id)
                    pa.append(self.ent_i[x])
                    pb.append(self.ent_i[y])
                    pv.append(self.ent_v[x] * self.ent_v[y])
        self.pe = np.array(pe, dtype=np.int64)
        self.pa = np.array(pa, dtype=np.int64)
        self.pb = np.array(pb, dtype=np.int64)
        self.pv = np.array(pv)
        self.E = g.num_edges

    def cvec(self, z):
        c = np.zeros(self.E)
        np.add.at(c, self.ent_e, self.ent_v * z[self.ent_i])
        return c

    def flow(self, c):
        logd = self.log_d0 - self.eta * c
        clipped = logd >= self.log_cap
        d = np.exp(np.minimum(logd, self.log_cap))
        return d, clipped

    def value(self, z, mu):
        """Dual objective (plus barrier), flow and clip mask."""
        w = z[:self.p]
        if np.any(w <= 0):
            return -math.inf, None, None
        c = self.cvec(z)
        d, clipped = self.flow(c)
        h = np.where(
            clipped,
            self.cap * c + (self.cap * (self.log_cap - self.log_d0) - self.cap + self.d0) / self.eta,
            (self.d0 - d) / self.eta,
        )
        val = h.sum() - z[self.leaf]
        if mu:
            val += mu * np.log(w).sum()
        return val, d, clipped

    def grad_hess(self, z, d, clipped, mu):
        grad = np.zeros(self.size)
        np.add.at(grad, self.ent_i, d[self.ent_e] * self.ent_v)
        grad[self.leaf] -= 1.0
        k = np.where(clipped, 0.0, self.eta * d)
        H = np.zeros((self.size, self.size))
        np.add.at(H, (self.pa, self.pb), -k[self.pe] * self.pv)
        w = z[:self.p]
        if mu:
            grad[:self.p] += mu / w
            H[np.arange(self.p), np.arange(self.p)] -= mu / w**2
        return grad, H

    def newton(self, z, mu, max_iter=200, tol=1e-15):
        val, d, clipped = self.value(z, mu)
        iters = 0
        a = np.zeros(self.size + 1)
        for iters in range(1, max_iter + 1):
            grad, H = self.grad_hess(z, d, clipped, mu)
            # KKT system for the ascent direction with sum(dw) = 0
            K = np.zeros((self.size + 1, self.size + 1))
            scale = max(1.0, float(np.abs(np.diag(H)).max()))
            tau = 1e-12 * scale
            K[:self.size, :self.size] = -H + tau * np.eye(self.size)
            a[:] = 0.0
            a[:self.p] = 1.0
            K[:self.size, -1] = a[:self.size]
            K[-1, :self.size] = a[:self.size]
            rhs = np.concatenate([grad, [0.0]])
            try:
                step = np.linalg.solve(K, rhs)[:self.size]
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(K, rhs, rcond=None)[0][:self.size]
            dec = float(grad @ step)
            if not np.isfinite(dec) or dec < 0:
                # fall back to the projected gradient
                step = grad.copy()
                step[:self.p] -= step[:self.p].mean()
                dec = float(grad @ step)
            if dec <= tol:
                break
            dw = step[:self.p]
            w = z[:self.p]
            neg = dw < 0
            alpha = 1.0
            if np.any(neg):
                alpha = min(1.0, 0.99 * float(np.min(-w[neg] / dw[neg])))
            while alpha > 1e-16:
                znew = z + alpha * step
                vnew, dnew, cnew = self.value(znew, mu)
                if vnew >= val + 1e-4 * alpha * dec:
                    break
                alpha *= 0.5
            else:
                break
            z, val, d, clipped = znew, vnew, dnew, cnew
        return z, iters


def _polish(d: np.ndarray, sn: SampleNzdd, cap: np.ndarray, max_sweeps: int, target: float):
    """Cyclic KL projections onto conservation constraints and the capacity box."""
    g = sn.g
    order = [v for v in g.topological_order if v not in (ROOT, LEAF)]
    ins = [np.array(g.in_edges[v], dtype=np.int64) for v in range(g.node_count)]
    outs = [np.array(g.out_edges[v], dtype=np.int64) for v in range(g.node_count)]
    d = d.copy()
    sweeps = 0
    res = flow_residual(sn, d)
    while res > target and sweeps < max_sweeps:
        sweeps += 1
        o = d[outs[ROOT]].sum()
        if o > 0:
            d[outs[ROOT]] /= o
        for v in order:
            i_sum = d[ins[v]].sum()
            o_sum = d[outs[v]].sum()
            if i_sum > 0 and o_sum > 0:
                a = math.sqrt(i_sum / o_sum)
                d[outs[v]] *= a
                d[ins[v]] /= a
            elif i_sum > 0:
                d[outs[v]] = i_sum / len(outs[v])
            elif o_sum > 0:
                d[outs[v]] = 0.0
        i = d[ins[LEAF]].sum()
        if i > 0:
            d[ins[LEAF]] /= i
        np.minimum(d, cap, out=d)
        res = flow_residual(sn, d)
    return d, res, sweeps


def solve_subproblem(sn: SampleNzdd, J, eta: float, tol: float, nu: float = 1.0,
                     start: tuple[np.ndarray, np.ndarray] | None = None,
                     max_sweeps: int = 10**5) -> SubproblemResult:
    """Entropy-regularized flow subproblem; accuracy ``tol`` on the objective."""
    J = list(dict.fromkeys(J))
    if not J:
        raise ValueError("J must be non-empty")
    if tol <= 0:
        raise ValueError("tol must be positive")
    d0 = sn.initial_flow()
    cap = sn.capacities(nu)
    if nu >= 1.0:
        # the capped polytope is the single point d0
        obj = subproblem_objective(sn, d0, J, eta)
        return SubproblemResult(d0.copy(), np.full(len(J), 1.0 / len(J)), np.zeros(0), obj, obj, 0.0)

    dual = _Dual(sn, J, eta, nu)
    z = np.zeros(dual.size)
    z[:dual.p] = 1.0 / dual.p
    if start is not None:
        w0, s0 = start
        if len(w0) == dual.p and len(s0) == dual.size - dual.p:
            z[:dual.p] = np.maximum(w0, 1e-3 / dual.p)
            z[:dual.p] /= z[:dual.p].sum()
            z[dual.p:] = s0
    total = 0
    mu = 1.0
    mu_min = tol * 1e-3 / dual.p
    while True:
        z, it = dual.newton(z, mu)
        total += it
        if mu <= mu_min:
            break
        mu = max(mu * 0.1, mu_min)
    _, d, _ = dual.value(z, 0.0)
    c = dual.cvec(z)
    d, _ = dual.flow(c)
    bound, _, _ = dual.value(z, 0.0)
    residual = flow_residual(sn, d)
    sweeps = 0
    if residual > 1e-14:
        d, residual, sweeps = _polish(d, sn, cap, max_sweeps, 1e-13)
    obj = subproblem_objective(sn, d, J, eta)
    return SubproblemResult(d, z[:dual.p].copy(), z[dual.p:].copy(), obj, float(bound), residual, total, sweeps)


# ---------------------------------------------------------------------------
# boosting loop


def run(sn: SampleNzdd, nu: float, eps: float, eta: float | None = None, max_iter: int | None = None,
        history: list | None = None, keep_iterates: bool = False,
        callback: Callable[[ErlpRecord], None] | None = None) -> tuple[MarginSolution, int]:
    """ERLPBoost; returns the restricted-LP solution over the chosen features and T.

    P^t(d) = max_{j in J_t} score_j(d) + KL(d, d0)/eta.  At round t the
    feature j_t maximizes the score under d^{t-1}; the gap
    delta^t = min_{q<=t} P^q(d^{q-1}) - P^{t-1}(d^{t-1}) (with P^0(d^0) = 0)
    is tested against eps/2 from round 2 on.
    """
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    if not 0 < nu <= 1:
        raise ValueError("nu must lie in (0, 1]")
    eta = default_eta(sn, nu, eps) if eta is None else eta
    tol = min(1e-6, eps / 100)
    limit = max_iter if max_iter is not None else math.ceil(iteration_bound(sn, nu, eps))
    d0 = sn.initial_flow()
    state = ErlpState(d0.copy(), d0, [], eta)
    best = math.inf
    prev_value = 0.0
    warm = None
    t = 0
    while True:
        t += 1
        scores = edge_scores(sn, state.d)
        j = int(np.argmax(scores))
        p_prev = float(scores[j]) + relative_entropy(state.d, d0) / eta
        best = min(best, p_prev)
        delta = best - prev_value
        state.gap = delta
        if j not in state.J:
            state.J.append(j)
        if t >= 2 and delta <= eps / 2:
            break
        if t > limit:
            break
        if warm is not None and len(warm[0]) < len(state.J):
            warm = (np.append(warm[0], 1e-3), warm[1])
        sub = solve_subproblem(sn, state.J, eta, tol, nu, start=warm)
        warm = (sub.w, sub.s)
        state.d = sub.d
        state.t = t
        prev_value = sub.objective
        rec = ErlpRecord(t, j, delta, relative_entropy(sub.d, d0), sub.objective, best,
                         float(sub.d.sum()), sub.residual, sub.d.copy() if keep_iterates else None)
        state.history.append(rec)
        if history is not None:
            history.append(rec)
        if callback:
            callback(rec)
    final = solve_restricted_dual(sn, nu, state.J)
    return make_solution(sn, final.w, final.beta, nu, final.gamma), state.t


def format_record(rec: ErlpRecord) -> str:
    return f"{rec.t}\t{rec.j}\t{rec.delta:.10g}\t{rec.entropy:.10g}\t{rec.objective:.10g}"
