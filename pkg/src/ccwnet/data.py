"""Core dataset and sample types, deterministic stratified splitting, CSV I/O.

A :class:`Dataset` is a label vector plus a covariate matrix; a
:class:`CaseControlSample` wraps one together with its case/control counts.
Both are immutable after construction (arrays are copied in and marked
read-only), so values are safely shareable across threads.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SchemaError, StratumUnderflowError

__all__ = [
    "Dataset",
    "CaseControlSample",
    "SummarySpec",
    "SplitSpec",
    "split_dataset",
    "read_dataset_csv",
    "write_dataset_csv",
]


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dataset:
    """Labeled covariate rows: ``y`` in {0,1}, ``X`` an (n, p) float matrix."""

    y: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        y = _frozen_array(self.y, np.int8)
        X = _frozen_array(self.X, np.float64)
        if X.ndim != 2:
            raise DomainError(f"covariates must be a 2-d matrix, got {X.ndim}-d")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DomainError("label vector length must match covariate rows")
        if not np.all((y == 0) | (y == 1)):
            raise DomainError("labels must be exactly 0 or 1")
        if not np.all(np.isfinite(X)):
            raise DomainError("all covariate entries must be finite")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def take(self, indices: np.ndarray) -> "Dataset":
        """Row subset, in the order given."""
        return Dataset(self.y[indices], self.X[indices])


@dataclass(frozen=True)
class CaseControlSample:
    """A dataset drawn as n1 cases plus n0 controls."""

    data: Dataset
    n1: int
    n0: int
    n: int

    def __post_init__(self):
        actual1 = int(np.sum(self.data.y == 1))
        actual0 = self.data.n - actual1
        if self.n1 < 1 or self.n0 < 1:
            raise DomainError("a case-control sample needs at least one case and one control")
        if self.n != self.n1 + self.n0:
            raise DomainError(f"n={self.n} != n1+n0={self.n1 + self.n0}")
        if self.n1 != actual1 or self.n0 != actual0:
            raise DomainError(
                f"declared counts ({self.n1}, {self.n0}) do not match data ({actual1}, {actual0})"
            )

    @classmethod
    def from_dataset(cls, data: Dataset) -> "CaseControlSample":
        n1 = int(np.sum(data.y == 1))
        return cls(data=data, n1=n1, n0=data.n - n1, n=data.n)


@dataclass(frozen=True)
class SummarySpec:
    """The known moment function h: either a coordinate or an affine map of one.

    ``coordinate(j)`` is h(x) = x_j; ``affine(j, a, b)`` is h(x) = a*x_j + b
    with a != 0 (used to exercise affine invariance of the estimator).
    """

    kind: str
    j: int
    a: float = 1.0
    b: float = 0.0

    def __post_init__(self):
        if self.kind not in ("coordinate", "affine"):
            raise DomainError(f"unknown summary kind {self.kind!r}")
        if self.j < 0:
            raise DomainError("summary coordinate index must be nonnegative")
        if self.kind == "coordinate" and (self.a != 1.0 or self.b != 0.0):
            raise DomainError("coordinate summaries fix a=1, b=0")
        if self.kind == "affine" and self.a == 0.0:
            raise DomainError("affine summaries require a != 0")

    @classmethod
    def coordinate(cls, j: int) -> "SummarySpec":
        return cls(kind="coordinate", j=j)

    @classmethod
    def affine(cls, j: int, a: float, b: float) -> "SummarySpec":
        return cls(kind="affine", j=j, a=float(a), b=float(b))

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.j >= X.shape[1]:
            raise DomainError(f"summary index {self.j} out of range for p={X.shape[1]}")
        return self.a * X[:, self.j] + self.b

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "j": self.j}
        if self.kind == "affine":
            d["a"] = self.a
            d["b"] = self.b
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SummarySpec":
        return cls(
            kind=d["kind"],
            j=int(d["j"]),
            a=float(d.get("a", 1.0)),
            b=float(d.get("b", 0.0)),
        )


@dataclass(frozen=True)
class SplitSpec:
    """Train/validation/test fractions plus the shuffle seed."""

    fractions: tuple[float, float, float]
    seed: int = 0

    def __post_init__(self):
        f = tuple(float(x) for x in self.fractions)
        object.__setattr__(self, "fractions", f)
        if any(x < 0 or x > 1 for x in f):
            raise DomainError("split fractions must lie in [0, 1]")
        if f[0] <= 0:
            raise DomainError("train fraction must be positive")
        if abs(sum(f) - 1.0) > 1e-12:
            raise DomainError(f"split fractions must sum to 1, got {sum(f)}")


def _part_sizes(n_s: int, fractions: tuple[float, float, float]) -> tuple[int, int, int]:
    # floor for train, then validation; the remainder goes to the last part
    # with a nonzero fraction (test when present), so zero-fraction parts
    # stay exactly empty
    last_nz = max(i for i, f in enumerate(fractions) if f > 0)
    sizes = [0, 0, 0]
    taken = 0
    for i, f in enumerate(fractions):
        if i == last_nz:
            sizes[i] = n_s - taken
            break
        sizes[i] = int(np.floor(f * n_s))
        taken += sizes[i]
    return sizes[0], sizes[1], sizes[2]


def split_dataset(
    sample: CaseControlSample, spec: SplitSpec
) -> tuple[CaseControlSample, CaseControlSample | None, CaseControlSample | None]:
    """Stratified, deterministic 3-way split.

    Each part's case fraction matches the input's to within one row per
    stratum.  Row order within a part follows the global shuffle, so the
    train part is already shuffled.  Parts with a zero fraction come back
    as None.
    """
    rng = np.random.default_rng(spec.seed)
    y = sample.data.y
    fractions = spec.fractions

    quotas: dict[int, list[int]] = {}
    for label, n_s in ((1, sample.n1), (0, sample.n0)):
        sizes = _part_sizes(n_s, fractions)
        for frac, size in zip(fractions, sizes):
            if frac > 0 and size < 1:
                raise StratumUnderflowError(
                    f"stratum underflow: label-{label} stratum of size {n_s} cannot "
                    f"give every nonzero part at least 1 row under fractions {fractions}"
                )
        quotas[label] = list(sizes)

    perm = rng.permutation(sample.n)
    assignment = [[], [], []]  # row indices per part, in shuffled order
    for idx in perm:
        remaining = quotas[int(y[idx])]
        for part in range(3):
            if remaining[part] > 0:
                remaining[part] -= 1
                assignment[part].append(int(idx))
                break

    parts: list[CaseControlSample | None] = []
    for part, frac in enumerate(fractions):
        if frac == 0.0 or not assignment[part]:
            parts.append(None)
            continue
        subset = sample.data.take(np.array(assignment[part], dtype=np.intp))
        parts.append(CaseControlSample.from_dataset(subset))
    train, validation, test = parts
    assert train is not None  # train fraction is positive by SplitSpec invariant
    return train, validation, test


def write_dataset_csv(dataset: Dataset, path) -> None:
    """Write the ``y,x1,...,xp`` CSV format (LF endings, full float precision)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        header = "y," + ",".join(f"x{j + 1}" for j in range(dataset.p))
        fh.write(header + "\n")
        for label, row in zip(dataset.y, dataset.X):
            fh.write(f"{int(label)}," + ",".join(repr(float(v)) for v in row) + "\n")


def read_dataset_csv(path) -> Dataset:
    """Read the ``y,x1,...,xp`` CSV format back into a Dataset."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if not header or header[0] != "y":
            raise SchemaError(f"{path}: first column must be 'y', got {header[:1]}")
        p = len(header) - 1
        expected = [f"x{j + 1}" for j in range(p)]
        if header[1:] != expected:
            raise SchemaError(f"{path}: covariate columns must be x1..x{p}")
        ys, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != p + 1:
                raise SchemaError(f"{path}: line {lineno}: expected {p + 1} fields, got {len(row)}")
            try:
                label = float(row[0])
                values = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise SchemaError(f"{path}: line {lineno}: {exc}") from None
            if label not in (0.0, 1.0):
                raise SchemaError(f"{path}: line {lineno}: label must be 0 or 1, got {row[0]}")
            ys.append(int(label))
            rows.append(values)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return Dataset(np.array(ys), np.array(rows))
