"""Subset family -> ZDD construction and the two-phase NZDD reduction."""
from __future__ import annotations

import sys
from collections import Counter
from typing import Sequence

from .core import LEAF, ROOT, Nzdd, NzddError, NzddStats, SubsetFamily, compute_stats, renumber


def frequency_order(family: SubsetFamily) -> list[int]:
    """Elements by descending document frequency, ties by element id."""
    freq = Counter(a for s in family.sets for a in s)
    return sorted(range(family.ground_size), key=lambda a: (-freq[a], a))


def build_zdd(family: SubsetFamily, order: Sequence[int] | str = "frequency") -> Nzdd:
    """Build the reduced ZDD of ``family`` for a fixed element order.

    Sets are rewritten as increasing rank tuples and sorted; a node for the
    suffix family of a sorted range is created by splitting on the smallest
    next rank (hi child) and the remaining sets (lo child), bottom-up, with a
    unique table so equal suffix families share one node.
    """
    if len(family) == 0:
        raise NzddError("cannot build a diagram for an empty family")
    if isinstance(order, str):
        if order == "frequency":
            order = frequency_order(family)
        elif order == "natural":
            order = list(range(family.ground_size))
        else:
            raise ValueError(f"unknown order keyword {order!r}")
    order = list(order)
    if sorted(order) != list(range(family.ground_size)):
        raise ValueError("order must be a permutation of the ground set")
    rank = {a: r for r, a in enumerate(order)}
    seqs = sorted(tuple(sorted(rank[a] for a in s)) for s in family.sets)

    unique: dict[tuple[int, int, int | None], int] = {}
    nodes: list[tuple[int, int, int | None]] = []

    def mk(a, hi, lo):
        key = (a, hi, lo)
        node = unique.get(key)
        if node is None:
            node = len(nodes) + 2
            unique[key] = node
            nodes.append(key)
        return node

    def build(i, j, k):
        start = i
        has_empty = len(seqs[i]) == k
        if has_empty:
            start += 1
        groups = []
        p = start
        while p < j:
            a = seqs[p][k]
            q = p + 1
            while q < j and seqs[q][k] == a:
                q += 1
            groups.append((a, p, q))
            p = q
        lo = LEAF if has_empty else None
        for a, gi, gj in reversed(groups):
            lo = mk(a, build(gi, gj, k + 1), lo)
        return lo

    limit = sys.getrecursionlimit()
    need = max(len(s) for s in seqs) + 100
    if need > limit:
        sys.setrecursionlimit(need)
    try:
        top = build(0, len(seqs), 0)
    finally:
        sys.setrecursionlimit(limit)

    edges = []
    for idx, (a, hi, lo) in enumerate(nodes):
        node = idx + 2
        edges.append((node, hi, (order[a],)))
        if lo is not None:
            edges.append((node, lo, ()))
    if top == LEAF:
        # family == {{}}: a lone empty-labeled edge
        top = len(nodes) + 2
        edges.append((top, LEAF, ()))
    return renumber(len(nodes) + 3, top, LEAF, edges, family.ground_size)


def reduce(g: Nzdd) -> Nzdd:
    """Contract internal nodes of indegree one, then internal nodes of outdegree one.

    Phase one walks nodes leaf-to-root and merges each indegree-one child
    into its parent; phase two walks root-to-leaf and merges each
    outdegree-one parent into its child.  Merged edges carry the union of
    both label sets.  Edges are visited in ascending edge-id order; new
    edges get fresh ids.
    """
    labels: dict[int, tuple[int, ...]] = {}
    tail: dict[int, int] = {}
    head: dict[int, int] = {}
    out: list[dict[int, None]] = [dict() for _ in range(g.node_count)]
    inn: list[dict[int, None]] = [dict() for _ in range(g.node_count)]
    for i, e in enumerate(g.edges):
        labels[i], tail[i], head[i] = e.labels, e.u, e.v
        out[e.u][i] = None
        inn[e.v][i] = None
    next_id = g.num_edges

    def add(u, v, lab):
        nonlocal next_id
        i = next_id
        next_id += 1
        labels[i], tail[i], head[i] = lab, u, v
        out[u][i] = None
        inn[v][i] = None

    def remove(i):
        del out[tail[i]][i]
        del inn[head[i]][i]
        del labels[i], tail[i], head[i]

    def merged(a, b):
        # labels on one path are disjoint, so plain merge keeps them sorted-unique
        return tuple(sorted(a + b))

    order = g.topological_order
    for u in reversed(order):
        for i in sorted(out[u]):
            if i not in labels:
                continue
            v = head[i]
            if v == LEAF or len(inn[v]) != 1:
                continue
            lab = labels[i]
            for k in sorted(out[v]):
                add(u, head[k], merged(lab, labels[k]))
            for k in sorted(out[v]):
                remove(k)
            remove(i)

    for v in order:
        for i in sorted(inn[v]):
            if i not in labels:
                continue
            u = tail[i]
            if u == ROOT or len(out[u]) != 1:
                continue
            lab = labels[i]
            for k in sorted(inn[u]):
                add(tail[k], v, merged(labels[k], lab))
            for k in sorted(inn[u]):
                remove(k)
            remove(i)

    edges = [(tail[i], head[i], labels[i]) for i in sorted(labels)]
    return renumber(g.node_count, ROOT, LEAF, edges, g.ground_size)


def compress(family: SubsetFamily, order: Sequence[int] | str = "frequency") -> tuple[Nzdd, NzddStats]:
    g = reduce(build_zdd(family, order))
    return g, compute_stats(g)


def reducible_nodes(g: Nzdd) -> list[int]:
    """Internal nodes with exactly one incoming or exactly one outgoing edge."""
    return [
        v for v in range(g.node_count)
        if v not in (ROOT, LEAF) and (len(g.in_edges[v]) == 1 or len(g.out_edges[v]) == 1)
    ]
