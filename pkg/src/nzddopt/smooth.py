"""Smoothed soft-margin objective and its gradient by weight pushing.

With edge weights a_e = sign(e) sum_{j in labels(e)} w_j + beta_e and path
weight W(P) = sum_{e in P} a_e,

    Theta(w, beta) = -(1/eta) ln( (1/m) sum_P exp(-eta W(P)) ) - sum_e m_e beta_e / (nu m)

is a soft minimum of the margin objective
F(w, beta) = min_P W(P) - sum_e m_e beta_e / (nu m).  The path sum is a
forward log-sum-exp DP; the gradient uses forward and backward potentials
to get the path distribution q(P) marginalized onto edges.
"""
from __future__ import annotations

import numpy as np

from .core import LEAF, ROOT
from .softmargin import SampleNzdd, path_weights, shortest_path_value


class DuplicateInstanceError(ValueError):
    pass


def _check(sn: SampleNzdd, eta: float):
    if sn.has_duplicates:
        raise DuplicateInstanceError("the smoothed objective needs one path per instance (sample has duplicates)")
    if eta <= 0:
        raise ValueError("eta must be positive")


def _forward(sn: SampleNzdd, x: np.ndarray) -> np.ndarray:
    """log sum over root->v paths of exp(-sum x_e)."""
    g = sn.g
    alpha = np.full(g.node_count, -np.inf)
    alpha[ROOT] = 0.0
    for v in g.topological_order:
        ins = g.in_edges[v]
        if not ins:
            continue
        vals = np.array([alpha[g.edges[i].u] - x[i] for i in ins])
        top = vals.max()
        alpha[v] = top + np.log(np.exp(vals - top).sum()) if np.isfinite(top) else -np.inf
    return alpha


def _backward(sn: SampleNzdd, x: np.ndarray) -> np.ndarray:
    g = sn.g
    back = np.full(g.node_count, -np.inf)
    back[LEAF] = 0.0
    for u in reversed(g.topological_order):
        outs = g.out_edges[u]
        if not outs:
            continue
        vals = np.array([back[g.edges[i].v] - x[i] for i in outs])
        top = vals.max()
        back[u] = top + np.log(np.exp(vals - top).sum()) if np.isfinite(top) else -np.inf
    return back


def log_partition(sn: SampleNzdd, w, beta, eta: float) -> float:
    """ln sum_P exp(-eta W(P))."""
    return float(_forward(sn, eta * path_weights(sn, w, beta))[LEAF])


def theta(sn: SampleNzdd, w, beta, eta: float, nu: float) -> float:
    _check(sn, eta)
    beta = np.asarray(beta, dtype=float)
    logz = log_partition(sn, w, beta, eta)
    return float(-(logz - np.log(sn.m)) / eta - np.dot(sn.mult, beta) / (nu * sn.m))


def edge_marginals(sn: SampleNzdd, w, beta, eta: float) -> np.ndarray:
    """Sum of q(P) over paths through each edge, q(P) proportional to exp(-eta W(P))."""
    x = eta * path_weights(sn, w, beta)
    alpha = _forward(sn, x)
    back = _backward(sn, x)
    return np.exp(alpha[sn.g.tails] - x + back[sn.g.heads] - alpha[LEAF])


def grad_theta(sn: SampleNzdd, w, beta, eta: float, nu: float) -> tuple[np.ndarray, np.ndarray]:
    """(dTheta/dw over [n+1], dTheta/dbeta per edge)."""
    _check(sn, eta)
    mu = edge_marginals(sn, w, beta, eta)
    ei, el = sn.g.label_incidence
    gw = np.bincount(el, weights=sn.sign[ei] * mu[ei], minlength=sn.n + 1)
    gb = mu - sn.mult / (nu * sn.m)
    return gw, gb


def true_objective(sn: SampleNzdd, w, beta, nu: float) -> float:
    """F(w, beta): minimum path weight minus the slack penalty."""
    beta = np.asarray(beta, dtype=float)
    return shortest_path_value(sn.g, path_weights(sn, w, beta)) - float(np.dot(sn.mult, beta)) / (nu * sn.m)


def eta_for_accuracy(eps: float, m: int) -> float:
    """Smallest eta making the sandwich width ln(m)/eta equal eps/2."""
    return 2.0 / eps * np.log(m)
