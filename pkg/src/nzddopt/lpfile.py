"""CPLEX-LP style writer and a reader for the subset of the grammar it emits."""
from __future__ import annotations

import math
import re

from .core import FormatError
from .system import ConstraintSystem, Row, Variable

TERMS_PER_LINE = 8


def _num(v: float) -> str:
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    if float(v).is_integer() and abs(v) < 1e17:
        return str(int(v))
    return format(v, ".17g")


def _linear(terms, names) -> str:
    parts = []
    for k, (j, c) in enumerate(terms):
        if k and k % TERMS_PER_LINE == 0:
            parts.append("\n  ")
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        coef = "" if mag == 1 else f"{_num(mag)} "
        if k == 0:
            parts.append(f"{'- ' if sign == '-' else ''}{coef}{names[j]}")
        else:
            parts.append(f" {sign} {coef}{names[j]}")
    return "".join(parts)


def _bound_line(name: str, v: Variable) -> str:
    lb, ub = v.lb, v.ub
    if lb == ub:
        return f" {name} = {_num(lb)}"
    if lb == -math.inf and ub == math.inf:
        return f" {name} free"
    if ub == math.inf:
        return f" {name} >= {_num(lb)}"
    return f" {_num(lb)} <= {name} <= {_num(ub)}"


def format_lp(system) -> str:
    """Deterministic LP text for a ConstraintSystem (or anything with a ``.base`` system)."""
    sys_ = getattr(system, "base", system)
    names = sys_.names()
    if len(set(names)) != len(names):
        raise ValueError("variable names must be unique")
    obj = [(j, c) for j, c in sys_.objective if c != 0]
    if not obj:
        if not names:
            raise ValueError("cannot write an LP without variables")
        obj = [(0, 0.0)]
        body = f"0 {names[0]}"
    else:
        body = _linear(obj, names)
    lines = ["Minimize" if sys_.direction == "min" else "Maximize", f" obj: {body}", "Subject To"]
    rnames = sys_.row_names or tuple(f"c{i}" for i in range(sys_.num_rows))
    for name, row in zip(rnames, sys_.rows):
        terms = [(j, c) for j, c in row.terms if c != 0]
        lhs = _linear(terms, names) if terms else f"0 {names[0]}"
        lines.append(f" {name}: {lhs} {row.sense} {_num(row.rhs)}")
    lines.append("Bounds")
    for name, v in zip(names, sys_.variables):
        lines.append(_bound_line(name, v))
    ints = [name for name, v in zip(names, sys_.variables) if v.kind != "real"]
    if ints:
        lines.append("Generals")
        for k in range(0, len(ints), TERMS_PER_LINE):
            lines.append(" " + " ".join(ints[k:k + TERMS_PER_LINE]))
    lines.append("End")
    return "\n".join(lines) + "\n"


def emit_lp(system, path=None) -> str:
    text = format_lp(system)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


# ---------------------------------------------------------------------------
# reader

_TOKEN = re.compile(r"\s*(<=|>=|=<|=>|[<>=+\-:]|[-+]?inf(?:inity)?\b|[0-9.]+(?:[eE][-+]?[0-9]+)?|[A-Za-z_][\w.\[\]]*)", re.I)
_SECTIONS = {
    "minimize": "min", "minimise": "min", "minimum": "min", "min": "min",
    "maximize": "max", "maximise": "max", "maximum": "max", "max": "max",
    "subject to": "st", "such that": "st", "st": "st", "s.t.": "st",
    "bounds": "bounds", "bound": "bounds",
    "generals": "gen", "general": "gen", "gen": "gen", "integers": "gen",
    "binaries": "bin", "binary": "bin", "bin": "bin",
    "end": "end",
}


def _tokens(text: str, lineno: int) -> list[str]:
    out, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormatError(f"cannot tokenize {text[pos:]!r}", lineno)
        out.append(m.group(1))
        pos = m.end()
    return out


def _is_num(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def _parse_linear(toks: list[str], var, lineno) -> list[tuple[int, float]]:
    terms: dict[int, float] = {}
    order: list[int] = []
    sign, coef = 1.0, None
    for tok in toks:
        if tok in ("+", "-"):
            if tok == "-":
                sign = -sign
        elif _is_num(tok):
            coef = float(tok) if coef is None else coef * float(tok)
        else:
            j = var(tok)
            if j not in terms:
                order.append(j)
                terms[j] = 0.0
            terms[j] += sign * (1.0 if coef is None else coef)
            sign, coef = 1.0, None
    if coef is not None:
        raise FormatError("dangling constant in linear expression", lineno)
    return [(j, terms[j]) for j in order if terms[j] != 0]


def parse_lp(text: str) -> ConstraintSystem:
    """Read LP text produced by :func:`format_lp` (and simple hand-written variants)."""
    sections: list[tuple[str, list[tuple[int, str]]]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        key = _SECTIONS.get(line.lower())
        if key is not None:
            sections.append((key, []))
            continue
        if not sections:
            raise FormatError("content before the objective section", lineno)
        sections[-1][1].append((lineno, line))

    index: dict[str, int] = {}
    order: list[str] = []

    def var(name):
        if name not in index:
            index[name] = len(order)
            order.append(name)
        return index[name]

    direction, objective = "min", []
    raw_rows: list[tuple[str, list, str, float]] = []
    bounds: dict[int, tuple[float, float]] = {}
    ints: set[int] = set()
    binaries: set[int] = set()
    seen_end = False

    # bounds list every variable in index order; read them first so indices survive a round trip
    for key, lines in sorted(sections, key=lambda kv: kv[0] != "bounds"):
        if key in ("min", "max"):
            direction = key
            toks = [t for ln, l in lines for t in _tokens(l, ln)]
            if len(toks) >= 2 and toks[1] == ":":
                toks = toks[2:]
            objective = _parse_linear(toks, var, lines[0][0] if lines else 0)
        elif key == "st":
            toks: list[tuple[int, str]] = [(ln, t) for ln, l in lines for t in _tokens(l, ln)]
            k = 0
            count = 0
            while k < len(toks):
                ln = toks[k][0]
                if k + 1 < len(toks) and toks[k + 1][1] == ":":
                    name = toks[k][1]
                    k += 2
                else:
                    name = f"c{count}"
                start = k
                while k < len(toks) and toks[k][1] not in ("<=", ">=", "=<", "=>", "=", "<", ">"):
                    k += 1
                if k + 1 >= len(toks):
                    raise FormatError("constraint without sense and right-hand side", ln)
                sense = {"=<": "<=", "<": "<=", "=>": ">=", ">": ">="}.get(toks[k][1], toks[k][1])
                lhs = [t for _, t in toks[start:k]]
                k += 1
                rsign = 1.0
                while k < len(toks) and toks[k][1] in ("+", "-"):
                    rsign = -rsign if toks[k][1] == "-" else rsign
                    k += 1
                if k >= len(toks) or not _is_num(toks[k][1]):
                    raise FormatError("expected a numeric right-hand side", ln)
                rhs = rsign * float(toks[k][1])
                k += 1
                raw_rows.append((name, _parse_linear(lhs, var, ln), sense, rhs))
                count += 1
        elif key == "bounds":
            for ln, l in lines:
                toks = _tokens(l, ln)
                toks = _merge_signs(toks)
                if len(toks) == 2 and toks[1].lower() == "free":
                    bounds[var(toks[0])] = (-math.inf, math.inf)
                elif len(toks) == 5 and toks[1] == "<=" and toks[3] == "<=":
                    bounds[var(toks[2])] = (_f(toks[0], ln), _f(toks[4], ln))
                elif len(toks) == 3 and not _is_num(toks[0]):
                    j = var(toks[0])
                    lb, ub = bounds.get(j, (0.0, math.inf))
                    v = _f(toks[2], ln)
                    if toks[1] in (">=", "=>"):
                        lb = v
                    elif toks[1] in ("<=", "=<"):
                        ub = v
                    elif toks[1] == "=":
                        lb = ub = v
                    else:
                        raise FormatError(f"bad bound {l!r}", ln)
                    bounds[j] = (lb, ub)
                else:
                    raise FormatError(f"bad bound {l!r}", ln)
        elif key in ("gen", "bin"):
            target = ints if key == "gen" else binaries
            for ln, l in lines:
                for name in l.split():
                    target.add(var(name))
        else:
            seen_end = True
    if not seen_end:
        raise FormatError("missing End")

    variables = []
    for j, name in enumerate(order):
        lb, ub = bounds.get(j, (0.0, math.inf))
        if j in binaries:
            kind, lb, ub = "binary", max(lb, 0.0), min(ub, 1.0)
        elif j in ints:
            kind = "binary" if (lb, ub) == (0.0, 1.0) else "integer"
        else:
            kind = "real"
        variables.append(Variable(name, kind, lb, ub))
    rows = tuple(Row(tuple(t), rhs, sense) for _, t, sense, rhs in raw_rows)
    return ConstraintSystem(tuple(variables), rows, tuple(objective), direction,
                            tuple(name for name, *_ in raw_rows))


def _merge_signs(toks: list[str]) -> list[str]:
    out: list[str] = []
    k = 0
    while k < len(toks):
        if toks[k] in ("+", "-") and k + 1 < len(toks) and (_is_num(toks[k + 1])):
            out.append(("-" if toks[k] == "-" else "") + toks[k + 1].lstrip("+"))
            k += 2
        else:
            out.append(toks[k])
            k += 1
    return out


def _f(tok: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise FormatError(f"expected a number, got {tok!r}", lineno) from None


def read_lp(path) -> ConstraintSystem:
    with open(path) as fh:
        return parse_lp(fh.read())
