"""Sparse linear constraint systems and their plain-text format.

Text format::

    vars 3
    var 0 binary 0 1
    var 2 real -inf inf
    row 1 0:1 2:1          # 1 <= x0 + x2   (default sense >=)
    row <= 4 1:2 2:-1
    obj min 0:3 1:1

Variables not declared with a ``var`` line are real with bounds [0, inf).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import FormatError

SENSES = (">=", "<=", "=")
KINDS = ("real", "binary", "integer")


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str = "real"
    lb: float = 0.0
    ub: float = math.inf

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.lb > self.ub:
            raise ValueError(f"variable {self.name}: lower bound above upper bound")


@dataclass(frozen=True)
class Row:
    terms: tuple[tuple[int, float], ...]
    rhs: float
    sense: str = ">="

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ValueError(f"unknown row sense {self.sense!r}")

    def activity(self, x) -> float:
        return float(sum(c * x[j] for j, c in self.terms))

    def satisfied(self, x, tol: float = 1e-9) -> bool:
        a = self.activity(x)
        if self.sense == ">=":
            return a >= self.rhs - tol
        if self.sense == "<=":
            return a <= self.rhs + tol
        return abs(a - self.rhs) <= tol


@dataclass(frozen=True)
class ConstraintSystem:
    variables: tuple[Variable, ...]
    rows: tuple[Row, ...]
    objective: tuple[tuple[int, float], ...] = ()
    direction: str = "min"
    row_names: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.direction not in ("min", "max"):
            raise ValueError("direction must be 'min' or 'max'")
        n = len(self.variables)
        for r, row in enumerate(self.rows):
            for j, _ in row.terms:
                if not 0 <= j < n:
                    raise ValueError(f"row {r} references variable {j} outside 0..{n - 1}")
        for j, _ in self.objective:
            if not 0 <= j < n:
                raise ValueError(f"objective references variable {j} outside 0..{n - 1}")

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    def dense(self):
        """(c, A, senses, b, lb, ub) as numpy arrays / lists."""
        n, m = self.num_vars, self.num_rows
        c = np.zeros(n)
        for j, v in self.objective:
            c[j] += v
        A = np.zeros((m, n))
        for r, row in enumerate(self.rows):
            for j, v in row.terms:
                A[r, j] += v
        b = np.array([row.rhs for row in self.rows], dtype=float)
        senses = [row.sense for row in self.rows]
        lb = np.array([v.lb for v in self.variables], dtype=float)
        ub = np.array([v.ub for v in self.variables], dtype=float)
        return c, A, senses, b, lb, ub

    def objective_value(self, x) -> float:
        return float(sum(c * x[j] for j, c in self.objective))

    def is_feasible(self, x, tol: float = 1e-9) -> bool:
        for j, var in enumerate(self.variables):
            if x[j] < var.lb - tol or x[j] > var.ub + tol:
                return False
            if var.kind != "real" and abs(x[j] - round(x[j])) > tol:
                return False
        return all(row.satisfied(x, tol) for row in self.rows)

    def with_kinds(self, kind: str) -> ConstraintSystem:
        """Copy with every variable's kind replaced (bounds kept)."""
        vs = tuple(Variable(v.name, kind, v.lb, v.ub) for v in self.variables)
        return ConstraintSystem(vs, self.rows, self.objective, self.direction, self.row_names)


def default_variables(n: int, prefix: str = "x") -> list[Variable]:
    return [Variable(f"{prefix}{j}") for j in range(n)]


def make_system(n: int, rows: Iterable[tuple[Sequence[tuple[int, float]], float]],
                objective: Sequence[tuple[int, float]] = (), direction: str = "min",
                kind: str = "real", lb: float = 0.0, ub: float = math.inf) -> ConstraintSystem:
    """Convenience builder for >= rows over ``n`` uniform variables x0..x{n-1}."""
    vs = tuple(Variable(f"x{j}", kind, lb, ub) for j in range(n))
    rs = tuple(Row(tuple((int(j), float(c)) for j, c in terms if c != 0), float(b)) for terms, b in rows)
    return ConstraintSystem(vs, rs, tuple((int(j), float(c)) for j, c in objective), direction)


# ---------------------------------------------------------------------------
# text format


def _fmt(v: float) -> str:
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    if float(v).is_integer():
        return str(int(v))
    return format(v, ".17g")


def _terms(terms) -> str:
    return " ".join(f"{j}:{_fmt(c)}" for j, c in terms)


def format_system(sys_: ConstraintSystem) -> str:
    lines = [f"vars {sys_.num_vars}"]
    for j, v in enumerate(sys_.variables):
        if (v.kind, v.lb, v.ub) != ("real", 0.0, math.inf):
            lines.append(f"var {j} {v.kind} {_fmt(v.lb)} {_fmt(v.ub)}")
    for row in sys_.rows:
        sense = "" if row.sense == ">=" else f"{row.sense} "
        lines.append(f"row {sense}{_fmt(row.rhs)} {_terms(row.terms)}".rstrip())
    if sys_.objective or sys_.direction != "min":
        lines.append(f"obj {sys_.direction} {_terms(sys_.objective)}".rstrip())
    return "\n".join(lines) + "\n"


def _num(tok: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise FormatError(f"expected a number, got {tok!r}", lineno) from None


def _parse_terms(tokens, n, lineno):
    out = []
    for tok in tokens:
        idx, sep, coef = tok.partition(":")
        if not sep:
            raise FormatError(f"expected <idx>:<coef>, got {tok!r}", lineno)
        try:
            j = int(idx)
        except ValueError:
            raise FormatError(f"bad variable index {idx!r}", lineno) from None
        if not 0 <= j < n:
            raise FormatError(f"variable index {j} outside 0..{n - 1}", lineno)
        out.append((j, _num(coef, lineno)))
    return tuple(out)


def parse_system(text: str) -> ConstraintSystem:
    n = None
    var_lines: dict[int, Variable] = {}
    rows: list[Row] = []
    objective: tuple = ()
    direction = "min"
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        key = tok[0]
        if key == "vars":
            if len(tok) != 2:
                raise FormatError("expected 'vars <n>'", lineno)
            try:
                n = int(tok[1])
            except ValueError:
                raise FormatError(f"bad variable count {tok[1]!r}", lineno) from None
            continue
        if n is None:
            raise FormatError("'vars <n>' must come first", lineno)
        if key == "var":
            if len(tok) != 5:
                raise FormatError("expected 'var <idx> <kind> <lb> <ub>'", lineno)
            try:
                j = int(tok[1])
            except ValueError:
                raise FormatError(f"bad variable index {tok[1]!r}", lineno) from None
            if not 0 <= j < n:
                raise FormatError(f"variable index {j} outside 0..{n - 1}", lineno)
            if tok[2] not in KINDS:
                raise FormatError(f"unknown kind {tok[2]!r}", lineno)
            var_lines[j] = Variable(f"x{j}", tok[2], _num(tok[3], lineno), _num(tok[4], lineno))
        elif key == "row":
            rest = tok[1:]
            sense = ">="
            if rest and rest[0] in SENSES:
                sense, rest = rest[0], rest[1:]
            if not rest:
                raise FormatError("row needs a right-hand side", lineno)
            rows.append(Row(_parse_terms(rest[1:], n, lineno), _num(rest[0], lineno), sense))
        elif key == "obj":
            if len(tok) < 2 or tok[1] not in ("min", "max"):
                raise FormatError("expected 'obj min|max ...'", lineno)
            direction = tok[1]
            objective = _parse_terms(tok[2:], n, lineno)
        else:
            raise FormatError(f"unknown directive {key!r}", lineno)
    if n is None:
        raise FormatError("missing 'vars <n>' line")
    variables = tuple(var_lines.get(j, Variable(f"x{j}")) for j in range(n))
    return ConstraintSystem(variables, tuple(rows), objective, direction)


def read_system(path) -> ConstraintSystem:
    with open(path) as fh:
        return parse_system(fh.read())


def write_system(sys_: ConstraintSystem, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_system(sys_))
