"""NZDD data structure, structural validation and path dynamic programs.

Node ids are dense integers with the root fixed at 0 and the leaf at 1.
Edge label sets are stored as sorted tuples of ground-set element ids.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

ROOT = 0
LEAF = 1


class NzddError(ValueError):
    pass


class PathCapExceeded(NzddError):
    pass


class DuplicateSetError(NzddError):
    pass


class FormatError(NzddError):
    """Malformed text input; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    labels: tuple[int, ...] = ()


@dataclass(frozen=True, eq=False)
class Nzdd:
    node_count: int
    edges: tuple[Edge, ...]
    ground_size: int

    def __post_init__(self):
        if self.node_count < 2:
            raise NzddError("an NZDD needs distinct root and leaf nodes (node_count >= 2)")
        edges = tuple(
            e if isinstance(e, Edge) else Edge(int(e[0]), int(e[1]), tuple(e[2]))
            for e in self.edges
        )
        for i, e in enumerate(edges):
            if not (0 <= e.u < self.node_count and 0 <= e.v < self.node_count):
                raise NzddError(f"edge {i} references a node outside 0..{self.node_count - 1}")
            labels = tuple(sorted(set(int(a) for a in e.labels)))
            if len(labels) != len(e.labels):
                raise NzddError(f"edge {i} repeats a label")
            if labels and (labels[0] < 0 or labels[-1] >= self.ground_size):
                raise NzddError(f"edge {i} has a label outside 0..{self.ground_size - 1}")
            if labels != e.labels:
                edges = edges[:i] + (Edge(e.u, e.v, labels),) + edges[i + 1:]
        object.__setattr__(self, "edges", edges)

    root = ROOT
    leaf = LEAF

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def tails(self) -> np.ndarray:
        return np.array([e.u for e in self.edges], dtype=np.int64)

    @cached_property
    def heads(self) -> np.ndarray:
        return np.array([e.v for e in self.edges], dtype=np.int64)

    @cached_property
    def out_edges(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.node_count)]
        for i, e in enumerate(self.edges):
            out[e.u].append(i)
        return tuple(tuple(x) for x in out)

    @cached_property
    def in_edges(self) -> tuple[tuple[int, ...], ...]:
        inn: list[list[int]] = [[] for _ in range(self.node_count)]
        for i, e in enumerate(self.edges):
            inn[e.v].append(i)
        return tuple(tuple(x) for x in inn)

    @cached_property
    def topological_order(self) -> tuple[int, ...]:
        """Kahn order over all nodes; raises NzddError on a cycle."""
        indeg = [len(x) for x in self.in_edges]
        queue = deque(v for v in range(self.node_count) if indeg[v] == 0)
        order = []
        while queue:
            u = queue.popleft()
            order.append(u)
            for i in self.out_edges[u]:
                v = self.edges[i].v
                indeg[v] -= 1
                if indeg[v] == 0:
                    queue.append(v)
        if len(order) != self.node_count:
            raise NzddError("graph contains a directed cycle")
        return tuple(order)

    @cached_property
    def label_incidence(self) -> tuple[np.ndarray, np.ndarray]:
        """Parallel arrays (edge index, element) over every label occurrence."""
        ei = [i for i, e in enumerate(self.edges) for _ in e.labels]
        el = [a for e in self.edges for a in e.labels]
        return np.array(ei, dtype=np.int64), np.array(el, dtype=np.int64)

    def same_structure(self, other: Nzdd) -> bool:
        return (
            self.node_count == other.node_count
            and self.ground_size == other.ground_size
            and self.edges == other.edges
        )

    def __eq__(self, other):
        if not isinstance(other, Nzdd):
            return NotImplemented
        return self.same_structure(other)

    def __hash__(self):
        return hash((self.node_count, self.ground_size, self.edges))

    def __repr__(self):
        return f"Nzdd(nodes={self.node_count}, edges={self.num_edges}, ground={self.ground_size})"


class SubsetFamily:
    """A finite family of distinct subsets of ``range(ground_size)``.

    Equality ignores the order of the sets.
    """

    __slots__ = ("ground_size", "sets")

    def __init__(self, sets: Iterable[Iterable[int]], ground_size: int | None = None):
        normalized = []
        seen = set()
        for s in sets:
            t = tuple(sorted(int(a) for a in s))
            if len(set(t)) != len(t):
                raise NzddError(f"set {t} repeats an element")
            if t in seen:
                raise DuplicateSetError(f"duplicate set {list(t)}")
            seen.add(t)
            normalized.append(t)
        top = max((t[-1] for t in normalized if t), default=-1)
        if ground_size is None:
            ground_size = top + 1
        if any(t and t[0] < 0 for t in normalized):
            raise NzddError("negative element id")
        if top >= ground_size:
            raise NzddError(f"element {top} outside ground set of size {ground_size}")
        self.ground_size = int(ground_size)
        self.sets: tuple[tuple[int, ...], ...] = tuple(normalized)

    def __len__(self):
        return len(self.sets)

    def __iter__(self):
        return iter(self.sets)

    def as_frozensets(self) -> frozenset[frozenset[int]]:
        return frozenset(frozenset(s) for s in self.sets)

    def total_size(self) -> int:
        return sum(len(s) for s in self.sets)

    def __eq__(self, other):
        if not isinstance(other, SubsetFamily):
            return NotImplemented
        return self.ground_size == other.ground_size and set(self.sets) == set(other.sets)

    def __repr__(self):
        return f"SubsetFamily(ground_size={self.ground_size}, sets={len(self.sets)})"


@dataclass(frozen=True)
class NzddStats:
    num_nodes: int
    num_edges: int
    total_label_size: int
    depth: int
    num_paths: int
    edge_multiplicity: np.ndarray = field(repr=False)

    def as_rows(self) -> list[tuple[str, int]]:
        return [
            ("nodes", self.num_nodes),
            ("edges", self.num_edges),
            ("total_label_size", self.total_label_size),
            ("depth", self.depth),
            ("paths", self.num_paths),
        ]


@dataclass
class Violation:
    kind: str  # shape | condition1 | condition2
    detail: str
    edges: tuple = ()


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    unverified: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def __bool__(self):
        return self.ok


# ---------------------------------------------------------------------------
# path DPs


def path_counts(g: Nzdd) -> tuple[list[int], list[int]]:
    """Number of root->v paths and v->leaf paths for every node (exact ints)."""
    order = g.topological_order
    fwd = [0] * g.node_count
    bwd = [0] * g.node_count
    fwd[ROOT] = 1
    for u in order:
        if fwd[u]:
            for i in g.out_edges[u]:
                fwd[g.edges[i].v] += fwd[u]
    bwd[LEAF] = 1
    for v in reversed(order):
        for i in g.out_edges[v]:
            bwd[v] += bwd[g.edges[i].v]
    return fwd, bwd


def num_paths(g: Nzdd) -> int:
    return path_counts(g)[0][LEAF]


def edge_multiplicities(g: Nzdd) -> np.ndarray:
    """m_e = (#root->e.u paths) * (#e.v->leaf paths)."""
    fwd, bwd = path_counts(g)
    return np.array([fwd[e.u] * bwd[e.v] for e in g.edges], dtype=np.int64)


def depth(g: Nzdd) -> int:
    """Longest root->leaf path, counted in edges."""
    dist = [-1] * g.node_count
    dist[ROOT] = 0
    for u in g.topological_order:
        if dist[u] < 0:
            continue
        for i in g.out_edges[u]:
            v = g.edges[i].v
            if dist[u] + 1 > dist[v]:
                dist[v] = dist[u] + 1
    return max(dist[LEAF], 0)


def iter_paths(g: Nzdd) -> Iterator[tuple[int, ...]]:
    """Yield every root->leaf path as a tuple of edge indices (DFS order)."""
    stack: list[tuple[int, int]] = [(ROOT, 0)]
    path: list[int] = []
    out = g.out_edges
    while stack:
        node, k = stack[-1]
        if node == LEAF:
            yield tuple(path)
            stack.pop()
            if path:
                path.pop()
            continue
        if k < len(out[node]):
            stack[-1] = (node, k + 1)
            i = out[node][k]
            path.append(i)
            stack.append((g.edges[i].v, 0))
        else:
            stack.pop()
            if path:
                path.pop()


def path_set(g: Nzdd, path: Sequence[int]) -> tuple[int, ...]:
    return tuple(sorted(a for i in path for a in g.edges[i].labels))


def language(g: Nzdd, path_cap: int = 10**5) -> SubsetFamily:
    total = num_paths(g)
    if total > path_cap:
        raise PathCapExceeded(f"{total} paths exceed the cap of {path_cap}")
    return SubsetFamily((path_set(g, p) for p in iter_paths(g)), ground_size=g.ground_size)


def compute_stats(g: Nzdd) -> NzddStats:
    mult = edge_multiplicities(g)
    return NzddStats(
        num_nodes=g.node_count,
        num_edges=g.num_edges,
        total_label_size=sum(len(e.labels) for e in g.edges),
        depth=depth(g),
        num_paths=num_paths(g),
        edge_multiplicity=mult,
    )


# ---------------------------------------------------------------------------
# validation


def _reachable(g: Nzdd, start: int, forward: bool) -> list[bool]:
    seen = [False] * g.node_count
    seen[start] = True
    stack = [start]
    adj = g.out_edges if forward else g.in_edges
    while stack:
        x = stack.pop()
        for i in adj[x]:
            y = g.edges[i].v if forward else g.edges[i].u
            if not seen[y]:
                seen[y] = True
                stack.append(y)
    return seen


def _earlier_edge_with(g: Nzdd, node: int, element: int) -> int | None:
    """Some edge labeled with ``element`` on a root->node path."""
    seen = {node}
    stack = [node]
    while stack:
        x = stack.pop()
        for i in g.in_edges[x]:
            e = g.edges[i]
            if element in e.labels:
                return i
            if e.u not in seen:
                seen.add(e.u)
                stack.append(e.u)
    return None


def validate(g: Nzdd, path_cap: int = 10**5) -> ValidationReport:
    """Check the DAG shape and both NZDD conditions.

    Condition 1 is checked exactly by propagating, for every node, the
    union of labels seen on some root->node path.  Condition 2 needs path
    enumeration and is reported as unverified above ``path_cap`` paths.
    """
    report = ValidationReport()
    if g.in_edges[ROOT]:
        report.violations.append(Violation("shape", "root has incoming edges", g.in_edges[ROOT]))
    if g.out_edges[LEAF]:
        report.violations.append(Violation("shape", "leaf has outgoing edges", g.out_edges[LEAF]))
    try:
        order = g.topological_order
    except NzddError as exc:
        report.violations.append(Violation("shape", str(exc)))
        return report
    from_root = _reachable(g, ROOT, True)
    to_leaf = _reachable(g, LEAF, False)
    for v in range(g.node_count):
        if not (from_root[v] and to_leaf[v]):
            report.violations.append(Violation("shape", f"node {v} is not on a root-leaf path"))
    if report.violations:
        return report

    before: list[set[int]] = [set() for _ in range(g.node_count)]
    for u in order:
        for i in g.out_edges[u]:
            e = g.edges[i]
            clash = before[u].intersection(e.labels)
            if clash:
                a = min(clash)
                j = _earlier_edge_with(g, u, a)
                report.violations.append(
                    Violation("condition1", f"element {a} repeats on a path", (j, i))
                )
            before[e.v] |= before[u]
            before[e.v].update(e.labels)
    if any(v.kind == "condition1" for v in report.violations):
        return report

    if num_paths(g) > path_cap:
        report.unverified.append("condition2")
        return report
    first: dict[tuple[int, ...], tuple[int, ...]] = {}
    for p in iter_paths(g):
        key = path_set(g, p)
        if key in first:
            report.violations.append(
                Violation("condition2", f"two paths represent {list(key)}", (first[key], p))
            )
        else:
            first[key] = p
    return report


# ---------------------------------------------------------------------------
# structural transforms


def renumber(node_count: int, root: int, leaf: int, edges: Iterable[tuple[int, int, tuple]],
             ground_size: int) -> Nzdd:
    """Build an Nzdd from arbitrary node ids: root->0, leaf->1, others in topological order.

    Nodes with no incident edges are dropped.  Edges are sorted by
    (new tail, new head, labels) so equal diagrams compare equal.
    """
    edges = [(u, v, tuple(sorted(lab))) for u, v, lab in edges]
    used = {root, leaf}
    succ: dict[int, list[int]] = {}
    indeg: dict[int, int] = {}
    for u, v, _ in edges:
        used.add(u)
        used.add(v)
        succ.setdefault(u, []).append(v)
        indeg[v] = indeg.get(v, 0) + 1
    queue = deque(sorted(x for x in used if indeg.get(x, 0) == 0 and x != root))
    queue.appendleft(root)
    order = []
    while queue:
        x = queue.popleft()
        order.append(x)
        for y in succ.get(x, ()):
            indeg[y] -= 1
            if indeg[y] == 0:
                queue.append(y)
    if len(order) != len(used):
        raise NzddError("graph contains a directed cycle")
    new_id = {root: ROOT, leaf: LEAF}
    nxt = 2
    for x in order:
        if x not in new_id:
            new_id[x] = nxt
            nxt += 1
    out = sorted((new_id[u], new_id[v], lab) for u, v, lab in edges)
    return Nzdd(max(nxt, 2), tuple(Edge(u, v, lab) for u, v, lab in out), ground_size)


def make_layered(g: Nzdd) -> Nzdd:
    """Pad edges with empty-labeled dummy chains so every path has length depth(g)."""
    level = [-1] * g.node_count
    level[ROOT] = 0
    for u in g.topological_order:
        for i in g.out_edges[u]:
            v = g.edges[i].v
            level[v] = max(level[v], level[u] + 1)
    nxt = g.node_count
    edges = []
    for e in g.edges:
        gap = level[e.v] - level[e.u]
        prev, lab = e.u, e.labels
        for _ in range(gap - 1):
            edges.append((prev, nxt, lab))
            prev, lab = nxt, ()
            nxt += 1
        edges.append((prev, e.v, lab))
    return renumber(nxt, ROOT, LEAF, edges, g.ground_size)


# ---------------------------------------------------------------------------
# text format


def format_nzdd(g: Nzdd) -> str:
    lines = [f"nzdd {g.node_count} {g.num_edges} {g.ground_size}"]
    for e in g.edges:
        lines.append(" ".join(str(x) for x in (e.u, e.v, *e.labels)))
    return "\n".join(lines) + "\n"


def parse_nzdd(text: str) -> Nzdd:
    header = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if header is None:
            if parts[0] != "nzdd" or len(parts) != 4:
                raise FormatError("expected header 'nzdd <nodes> <edges> <ground>'", lineno)
            try:
                header = tuple(int(x) for x in parts[1:])
            except ValueError:
                raise FormatError("non-integer header field", lineno) from None
            continue
        try:
            nums = [int(x) for x in parts]
        except ValueError:
            raise FormatError(f"non-integer token in edge line {line!r}", lineno) from None
        if len(nums) < 2:
            raise FormatError("edge line needs '<u> <v> [labels...]'", lineno)
        edges.append(Edge(nums[0], nums[1], tuple(nums[2:])))
    if header is None:
        raise FormatError("missing 'nzdd' header")
    nodes, n_edges, ground = header
    if n_edges != len(edges):
        raise FormatError(f"header declares {n_edges} edges, found {len(edges)}")
    return Nzdd(nodes, tuple(edges), ground)


def read_nzdd(path) -> Nzdd:
    with open(path) as fh:
        return parse_nzdd(fh.read())


def write_nzdd(g: Nzdd, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_nzdd(g))


def format_family(family: SubsetFamily) -> str:
    return "".join(" ".join(map(str, s)) + "\n" for s in family.sets)


def parse_family(text: str, ground_size: int | None = None) -> SubsetFamily:
    sets = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            s = [int(x) for x in line.split()]
        except ValueError:
            raise FormatError(f"non-integer element in {line!r}", lineno) from None
        if any(a < 0 for a in s):
            raise FormatError("negative element id", lineno)
        sets.append(s)
    try:
        return SubsetFamily(sets, ground_size)
    except DuplicateSetError as exc:
        raise FormatError(str(exc)) from None


def read_family(path, ground_size: int | None = None) -> SubsetFamily:
    with open(path) as fh:
        return parse_family(fh.read(), ground_size)
