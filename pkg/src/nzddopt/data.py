"""Labeled binary samples, libsvm ingestion and the synthetic generators.

Randomness: every generator draws from one ``numpy.random.default_rng(seed)``
stream in a fixed order, documented per function, so output is identical
for identical arguments.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FormatError
from .system import ConstraintSystem, Row, Variable


@dataclass(frozen=True, eq=False)
class Sample:
    """m binary instances (rows of X) with labels y in {-1, +1}."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.uint8)
        y = np.asarray(self.y, dtype=np.int8)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ValueError("X must be (m, n) and y must have length m")
        if np.any(X > 1):
            raise ValueError("instances must be 0/1 vectors")
        if not np.all(np.abs(y) == 1):
            raise ValueError("labels must be -1 or +1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        return np.array_equal(self.X, other.X) and np.array_equal(self.y, other.y)

    def total_size(self) -> int:
        """Sum of instance sizes, counting the appended constant feature."""
        return int(self.X.sum()) + self.m


def parse_libsvm_text(text: str, threshold: float = 0.5, n: int | None = None) -> Sample:
    """``label idx:val ...`` lines; feature idx (1-based) is 1 iff val > threshold."""
    labels, rows = [], []
    top = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        try:
            lab = float(tok[0])
        except ValueError:
            raise FormatError(f"bad label {tok[0]!r}", lineno) from None
        feats = []
        for t in tok[1:]:
            idx, sep, val = t.partition(":")
            if not sep:
                raise FormatError(f"expected <index>:<value>, got {t!r}", lineno)
            try:
                j, v = int(idx), float(val)
            except ValueError:
                raise FormatError(f"bad feature {t!r}", lineno) from None
            if j < 1:
                raise FormatError(f"feature index {j} must be >= 1", lineno)
            top = max(top, j)
            if v > threshold:
                feats.append(j - 1)
        labels.append(1 if lab > 0 else -1)
        rows.append(feats)
    if not labels:
        raise FormatError("no instances")
    if n is None:
        n = top
    elif n < top:
        raise FormatError(f"feature index {top} exceeds n={n}")
    X = np.zeros((len(rows), n), dtype=np.uint8)
    for i, feats in enumerate(rows):
        X[i, feats] = 1
    return Sample(X, np.array(labels))


def parse_libsvm(path, threshold: float = 0.5, n: int | None = None) -> Sample:
    with open(path) as fh:
        return parse_libsvm_text(fh.read(), threshold, n)


def format_libsvm(sample: Sample) -> str:
    lines = []
    for x, y in zip(sample.X, sample.y):
        feats = " ".join(f"{j + 1}:1" for j in np.flatnonzero(x))
        lines.append(f"{'+1' if y > 0 else '-1'} {feats}".rstrip())
    return "\n".join(lines) + "\n"


def write_libsvm(sample: Sample, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_libsvm(sample))


def gen_mip(n: int = 25, k: int = 10, l: int = 12, m: int = 100, seed: int = 0) -> ConstraintSystem:
    """Covering MIP ``min c.x s.t. A x >= 1`` with k random ones per row.

    Stream order: the n objective coefficients (integers 1..100) first, then
    for each row in turn the k distinct column indices.  Variables 0..l-1 are
    binary, the rest real in [0, 1].
    """
    if not (1 <= k <= n and 0 <= l <= n):
        raise ValueError("need 1 <= k <= n and 0 <= l <= n")
    rng = np.random.default_rng(seed)
    c = rng.integers(1, 101, size=n)
    rows = []
    for _ in range(m):
        cols = np.sort(rng.choice(n, size=k, replace=False))
        rows.append(Row(tuple((int(j), 1.0) for j in cols), 1.0, ">="))
    variables = tuple(Variable(f"x{j}", "binary" if j < l else "real", 0.0, 1.0) for j in range(n))
    return ConstraintSystem(variables, tuple(rows), tuple((j, float(c[j])) for j in range(n)), "min")


def rofk_label(X: np.ndarray, k: int, r: int) -> np.ndarray:
    return np.where(X[:, :k].sum(axis=1) >= r, 1, -1).astype(np.int8)


def gen_rofk(n: int = 20, k: int = 10, r: int = 5, m: int = 1000, seed: int = 0) -> Sample:
    """m distinct uniform instances of {0,1}^n labeled +1 iff >= r of the first k bits are set.

    Stream order: instance codes in [0, 2^n) are drawn without replacement
    (one ``choice`` call when 2^n <= 2^24, else repeated batches of
    ``integers`` with first-occurrence deduplication); bit j of a code is
    feature j.
    """
    if not (1 <= r <= k <= n):
        raise ValueError("need 1 <= r <= k <= n")
    if n > 62:
        raise ValueError("n > 62 is not supported")
    space = 1 << n
    if m > space:
        raise ValueError(f"cannot draw {m} distinct instances from 2^{n}")
    rng = np.random.default_rng(seed)
    if space <= 1 << 24:
        codes = rng.choice(space, size=m, replace=False)
    else:
        seen: dict[int, None] = {}
        while len(seen) < m:
            for v in rng.integers(0, space, size=m - len(seen), dtype=np.int64):
                seen.setdefault(int(v), None)
        codes = np.fromiter(seen, dtype=np.int64, count=m)
    codes = np.asarray(codes, dtype=np.int64)
    X = ((codes[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(np.uint8)
    return Sample(X, rofk_label(X, k, r))


def random_sample(rng: np.random.Generator, n: int, m: int, density: float = 0.4,
                  flip: float = 0.1) -> Sample:
    """Noisy linearly labeled sample used by tests and benchmarks."""
    X = (rng.random((m, n)) < density).astype(np.uint8)
    w = rng.normal(size=n)
    score = X @ w - np.median(X @ w)
    y = np.where(score >= 0, 1, -1)
    noise = rng.random(m) < flip
    y[noise] = -y[noise]
    return Sample(X, y)


def nu_grid() -> list[float]:
    return [round(0.1 * i, 1) for i in range(1, 6)]

