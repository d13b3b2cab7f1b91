"""Extended formulations of linear constraint systems over an NZDD.

Each root->leaf path of the diagram encodes one constraint row; with one
free potential ``s_v`` per internal node the row set collapses to one
inequality per edge::

    s_{e.u} + sum_{a in labels(e)} value_a(x) >= s_{e.v}

where ``value_a`` is the (signed, possibly scaled) variable or constant that
ground element ``a`` stands for.  ``s_root`` and ``s_leaf`` are fixed to 0
and eliminated.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .build import compress
from .core import LEAF, ROOT, Nzdd, NzddError, SubsetFamily, iter_paths, language, num_paths, path_set
from .system import ConstraintSystem, Row, Variable

log = logging.getLogger(__name__)


class NonBinaryCoefficientError(ValueError):
    pass


class NonIntegerCoefficientError(ValueError):
    pass


class LanguageMismatchError(ValueError):
    pass


Terms = tuple[tuple[int, float], ...]


@dataclass(frozen=True, eq=False)
class ExtendedSystem:
    """Extended formulation plus the bookkeeping needed to evaluate it.

    ``element_value[a]`` is ``(terms, const)`` so that ground element ``a``
    evaluates to ``sum(c * x[j] for j, c in terms) + const`` on the original
    variables ``x``.  The first ``num_edge_rows`` rows of ``base`` are the
    per-edge inequalities in edge order; any further rows tie auxiliary
    variables to the original ones.
    """

    base: ConstraintSystem
    origin: Nzdd
    node_var: dict[int, int]
    n_original: int
    element_value: tuple[tuple[Terms, float], ...]
    aux_var: dict[int, int]
    num_edge_rows: int
    duplicates_removed: int = 0
    mode: str = "binary"

    @property
    def added_node_vars(self) -> int:
        return len(self.node_var)

    def edge_weights(self, x) -> np.ndarray:
        val = np.array([sum(c * x[j] for j, c in t) + k for t, k in self.element_value], dtype=float)
        return np.array([val[list(e.labels)].sum() if e.labels else 0.0 for e in self.origin.edges])

    def full_point(self, x) -> np.ndarray:
        """Extend x with the shortest-path potentials and tied auxiliaries."""
        s = shortest_distances(self.origin, self.edge_weights(x))
        z = np.zeros(self.base.num_vars)
        z[: self.n_original] = x[: self.n_original]
        for v, idx in self.node_var.items():
            z[idx] = s[v]
        for a, idx in self.aux_var.items():
            terms, const = self.element_value[a]
            z[idx] = sum(c * x[j] for j, c in terms)
        return z


def shortest_distances(g: Nzdd, weights) -> np.ndarray:
    dist = np.full(g.node_count, math.inf)
    dist[ROOT] = 0.0
    for u in g.topological_order:
        du = dist[u]
        if du == math.inf:
            continue
        for i in g.out_edges[u]:
            v = g.edges[i].v
            cand = du + weights[i]
            if cand < dist[v]:
                dist[v] = cand
    return dist


# ---------------------------------------------------------------------------
# binary systems


def _ge_rows(sys_: ConstraintSystem) -> list[tuple[dict[int, float], float]]:
    rows = []
    for r, row in enumerate(sys_.rows):
        coefs: dict[int, float] = {}
        for j, c in row.terms:
            coefs[j] = coefs.get(j, 0.0) + c
        coefs = {j: c for j, c in coefs.items() if c != 0}
        if row.sense == ">=":
            rows.append((coefs, row.rhs))
        elif row.sense == "<=":
            rows.append(({j: -c for j, c in coefs.items()}, -row.rhs))
        else:
            rows.append((coefs, row.rhs))
            rows.append(({j: -c for j, c in coefs.items()}, -row.rhs))
    return rows


def encode_rows(sys_: ConstraintSystem) -> tuple[SubsetFamily, int]:
    """Row i -> idx((a_i, b_i)); element n stands for b_i = 1.  Returns (family, duplicates)."""
    n = sys_.num_vars
    sets = []
    seen = set()
    dups = 0
    for r, row in enumerate(sys_.rows):
        if row.sense != ">=":
            raise NonBinaryCoefficientError(f"row {r}: only >= rows have a 0/1 encoding")
        coefs: dict[int, float] = {}
        for j, c in row.terms:
            coefs[j] = coefs.get(j, 0.0) + c
        if any(c not in (0.0, 1.0) for c in coefs.values()) or row.rhs not in (0.0, 1.0):
            raise NonBinaryCoefficientError(f"row {r} has a coefficient or rhs outside {{0, 1}}")
        s = tuple(sorted(j for j, c in coefs.items() if c == 1.0)) + ((n,) if row.rhs == 1.0 else ())
        if s in seen:
            dups += 1
            continue
        seen.add(s)
        sets.append(s)
    return SubsetFamily(sets, ground_size=n + 1), dups


def matrix_to_family(sys_: ConstraintSystem) -> SubsetFamily:
    family, dups = encode_rows(sys_)
    if dups:
        log.warning("collapsed %d duplicate constraint rows", dups)
    return family


def _check_language(g: Nzdd, family: SubsetFamily, path_cap: int) -> None:
    if g.ground_size != family.ground_size:
        raise LanguageMismatchError("diagram and constraint family use different ground sets")
    total = num_paths(g)
    if total != len(family):
        raise LanguageMismatchError(f"diagram has {total} paths, family has {len(family)} sets")
    if total <= path_cap and language(g, path_cap) != family:
        raise LanguageMismatchError("diagram language differs from the constraint family")


def _assemble(sys_: ConstraintSystem, g: Nzdd, element_value, aux_elements: Sequence[int],
              duplicates: int, mode: str) -> ExtendedSystem:
    n = sys_.num_vars
    variables = list(sys_.variables)
    node_var = {}
    for v in range(g.node_count):
        if v not in (ROOT, LEAF):
            node_var[v] = len(variables)
            variables.append(Variable(f"s{v}", "real", -math.inf, math.inf))
    aux_var = {}
    for a in aux_elements:
        aux_var[a] = len(variables)
        variables.append(Variable(f"y{a}", "real", -math.inf, math.inf))

    rows, names = [], []
    for i, e in enumerate(g.edges):
        coefs: dict[int, float] = {}
        const = 0.0
        for a in e.labels:
            terms, k = element_value[a]
            const += k
            if a in aux_var:
                coefs[aux_var[a]] = coefs.get(aux_var[a], 0.0) + 1.0
            else:
                for j, c in terms:
                    coefs[j] = coefs.get(j, 0.0) + c
        if e.u in node_var:
            coefs[node_var[e.u]] = coefs.get(node_var[e.u], 0.0) + 1.0
        if e.v in node_var:
            coefs[node_var[e.v]] = coefs.get(node_var[e.v], 0.0) - 1.0
        terms = tuple(sorted((j, c) for j, c in coefs.items() if c != 0))
        rows.append(Row(terms, -const, ">="))
        names.append(f"e{i}")
    for a, idx in aux_var.items():
        terms, _ = element_value[a]
        rows.append(Row(((idx, 1.0),) + tuple((j, -c) for j, c in terms), 0.0, "="))
        names.append(f"t{a}")
    base = ConstraintSystem(tuple(variables), tuple(rows), sys_.objective, sys_.direction, tuple(names))
    return ExtendedSystem(base, g, node_var, n, tuple(element_value), aux_var, g.num_edges, duplicates, mode)


def extend_binary(sys_: ConstraintSystem, g: Nzdd | None = None, path_cap: int = 10**5) -> ExtendedSystem:
    """Extended formulation of a 0/1 system; compresses it first when ``g`` is None."""
    family, dups = encode_rows(sys_)
    if dups:
        log.info("collapsed %d duplicate constraint rows", dups)
    if g is None:
        g, _ = compress(family)
    else:
        _check_language(g, family, path_cap)
    n = sys_.num_vars
    element_value = [(((j, 1.0),), 0.0) for j in range(n)] + [((), -1.0)]
    return _assemble(sys_, g, element_value, (), dups, "binary")


def feasible_extended(ext: ExtendedSystem, x, tol: float = 1e-9) -> bool:
    """True iff some potentials s satisfy every edge row for this x."""
    dist = shortest_distances(ext.origin, ext.edge_weights(np.asarray(x, dtype=float)))
    return bool(dist[LEAF] >= -tol)


# ---------------------------------------------------------------------------
# integer coefficients


def _integer_rows(sys_: ConstraintSystem):
    rows = _ge_rows(sys_)
    out = []
    for r, (coefs, b) in enumerate(rows):
        for c in list(coefs.values()) + [b]:
            if not float(c).is_integer():
                raise NonIntegerCoefficientError(f"row {r}: {c} is not an integer")
        out.append(({j: int(c) for j, c in coefs.items()}, int(b)))
    return out


def extend_integer(sys_: ConstraintSystem, mode: str = "sigma",
                   coef_set: Sequence[int] | None = None) -> ExtendedSystem:
    """Extended formulation for integer coefficients.

    mode "sigma": one ground element per (coefficient, variable) pair.
    mode "binary": one ground element per (variable, bit, sign); a
    coefficient c contributes sign(c) * 2^t * x_j for every set bit t of |c|.
    The right-hand side is encoded the same way against the constant -1.
    Every element that multiplies a variable gets an auxiliary variable tied
    to it by an equality row.
    """
    if mode not in ("sigma", "binary"):
        raise ValueError("mode must be 'sigma' or 'binary'")
    rows = _integer_rows(sys_)
    used = {c for coefs, _ in rows for c in coefs.values()} | {0}
    if coef_set is None:
        coef_set = sorted(used)
    else:
        coef_set = sorted(set(int(c) for c in coef_set))
        bad = used - set(coef_set)
        if bad:
            raise ValueError(f"coefficients {sorted(bad)} are not in the declared set")
    n = sys_.num_vars
    rhs_values = sorted({b for _, b in rows if b != 0})

    keys: list[tuple] = []
    element_value: list[tuple[Terms, float]] = []
    if mode == "sigma":
        nonzero = [c for c in coef_set if c != 0]
        for j in range(n):
            for c in nonzero:
                keys.append(("x", j, c))
                element_value.append((((j, float(c)),), 0.0))
        for b in rhs_values:
            keys.append(("b", b))
            element_value.append(((), -float(b)))
    else:
        bits = max((abs(c) for c in coef_set), default=0).bit_length()
        signs = [s for s in (1, -1) if any(s * c > 0 for c in coef_set)]
        for j in range(n):
            for t in range(bits):
                for s in signs:
                    keys.append(("x", j, t, s))
                    element_value.append((((j, float(s * 2**t)),), 0.0))
        rbits = max((abs(b) for b in rhs_values), default=0).bit_length()
        rsigns = [s for s in (1, -1) if any(s * b > 0 for b in rhs_values)]
        for t in range(rbits):
            for s in rsigns:
                keys.append(("b", t, s))
                element_value.append(((), -float(s * 2**t)))
    index = {k: a for a, k in enumerate(keys)}

    def encode(coefs, b):
        if mode == "sigma":
            s = [index[("x", j, c)] for j, c in coefs.items() if c != 0]
            if b != 0:
                s.append(index[("b", b)])
        else:
            s = []
            for j, c in coefs.items():
                for t in range(abs(c).bit_length()):
                    if abs(c) >> t & 1:
                        s.append(index[("x", j, t, 1 if c > 0 else -1)])
            for t in range(abs(b).bit_length()):
                if abs(b) >> t & 1:
                    s.append(index[("b", t, 1 if b > 0 else -1)])
        return tuple(sorted(s))

    sets, seen, dups = [], set(), 0
    for coefs, b in rows:
        s = encode(coefs, b)
        if s in seen:
            dups += 1
            continue
        seen.add(s)
        sets.append(s)
    if not sets:
        raise NzddError("system has no rows")
    family = SubsetFamily(sets, ground_size=len(keys))
    g, _ = compress(family)
    on_edges = sorted({a for e in g.edges for a in e.labels if element_value[a][0]})
    return _assemble(sys_, g, element_value, on_edges, dups, mode)


def integer_row_feasible(sys_: ConstraintSystem, x) -> bool:
    """Direct row check A x >= b (after normalising <= and = rows)."""
    return all(sum(c * x[j] for j, c in coefs.items()) >= b for coefs, b in _ge_rows(sys_))


def family_of_paths(g: Nzdd) -> list[tuple[int, ...]]:
    return [path_set(g, p) for p in iter_paths(g)]
