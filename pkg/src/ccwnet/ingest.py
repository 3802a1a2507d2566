"""CSV ingestion and the census-income preprocessing recipe.

The schema drives everything: which columns to drop, which categories to
consolidate, how the label binarizes.  Preprocessing drops rows with
remaining missing cells (no imputation), one-hot encodes categoricals with
the alphabetically first category as the omitted reference, and standardizes
continuous columns to mean 0, sd 1 (sample sd, parameters recorded so a raw-
scale external summary like the mean of "age" can be mapped either way).

The cleaned output uses the package-wide ``y,x1,...,xp`` CSV format; the
report carries the human-readable column names and an output schema under
which re-running the pipeline is a no-op.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .data import CaseControlSample, Dataset
from .errors import ConstantColumnError, DomainError, SchemaError

__all__ = [
    "ColumnSchema",
    "RawTable",
    "PreprocessReport",
    "load_csv",
    "preprocess",
    "case_control_subsample",
    "adult_schema",
    "schema_to_dict",
    "schema_from_dict",
]

KINDS = ("continuous", "categorical", "indicator", "label", "drop")


@dataclass(frozen=True)
class ColumnSchema:
    """One column's role; ``consolidate`` maps raw categories onto a target."""

    name: str
    kind: str
    categories: tuple[str, ...] | None = None
    consolidate: dict[str, str] | None = None
    positive: tuple[str, ...] | None = None  # label values coded as 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.categories is not None:
            object.__setattr__(self, "categories", tuple(self.categories))
        if self.positive is not None:
            object.__setattr__(self, "positive", tuple(self.positive))


@dataclass
class RawTable:
    """Typed columns in file order; missing cells are None."""

    names: list[str]
    columns: dict[str, list]
    n_rows: int


@dataclass(frozen=True)
class PreprocessReport:
    rows_in: int
    rows_out: int
    rows_dropped_missing: int
    case_count: int
    control_count: int
    columns: tuple[str, ...]  # final covariate columns, in order
    standardization: dict[str, tuple[float, float]]  # column -> (mean, sd)
    output_schema: tuple[ColumnSchema, ...] = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "rows_in": self.rows_in,
            "rows_out": self.rows_out,
            "rows_dropped_missing": self.rows_dropped_missing,
            "case_count": self.case_count,
            "control_count": self.control_count,
            "columns": list(self.columns),
            "standardization": {k: list(v) for k, v in self.standardization.items()},
        }


def _single_label(schema: list[ColumnSchema]) -> ColumnSchema:
    labels = [c for c in schema if c.kind == "label"]
    if len(labels) != 1:
        raise SchemaError(f"schema must declare exactly one label column, found {len(labels)}")
    return labels[0]


def load_csv(path, schema: list[ColumnSchema], missing_token: str = "?") -> RawTable:
    """Read and type a CSV whose header matches the schema names up to order."""
    _single_label(schema)
    by_name = {c.name: c for c in schema}
    if len(by_name) != len(schema):
        raise SchemaError("schema column names must be unique")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, skipinitialspace=True)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        extra = [h for h in header if h not in by_name]
        missing = [c.name for c in schema if c.name not in header]
        if extra or missing:
            raise SchemaError(
                f"{path}: header mismatch; unknown columns {extra}, absent columns {missing}"
            )
        columns: dict[str, list] = {name: [] for name in header}
        n_rows = 0
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(
                    f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}"
                )
            for name, cell in zip(header, row):
                cell = cell.strip()
                col = by_name[name]
                if cell == missing_token or cell == "":
                    columns[name].append(None)
                elif col.kind in ("continuous", "indicator"):
                    try:
                        columns[name].append(float(cell))
                    except ValueError:
                        columns[name].append(None)  # unparseable numeric -> missing
                else:
                    columns[name].append(cell)
            n_rows += 1
    return RawTable(names=header, columns=columns, n_rows=n_rows)


def _binarize_label(values: list, col: ColumnSchema) -> np.ndarray:
    y = np.empty(len(values), dtype=np.int8)
    for i, v in enumerate(values):
        if col.positive is not None:
            if col.categories is not None and v not in col.categories:
                raise SchemaError(f"label column {col.name!r}: unknown value {v!r}")
            y[i] = 1 if v in col.positive else 0
        else:
            try:
                numeric = float(v)
            except (TypeError, ValueError):
                raise SchemaError(
                    f"label column {col.name!r}: value {v!r} is not 0/1 and no "
                    "positive set is declared"
                ) from None
            if numeric not in (0.0, 1.0):
                raise SchemaError(f"label column {col.name!r}: value {v!r} is not 0/1")
            y[i] = int(numeric)
    return y


def preprocess(raw: RawTable, schema: list[ColumnSchema]) -> tuple[Dataset, PreprocessReport]:
    """Apply drops, row filtering, consolidation, one-hot encoding, standardization."""
    label_col = _single_label(schema)
    by_name = {c.name: c for c in schema}
    kept = [n for n in raw.names if by_name[n].kind != "drop"]
    if label_col.name not in raw.names:
        raise SchemaError(f"label column {label_col.name!r} not present in data")

    # drop rows with missing cells in any kept column
    keep_mask = np.ones(raw.n_rows, dtype=bool)
    for name in kept:
        keep_mask &= np.array([v is not None for v in raw.columns[name]])
    rows_dropped = int(raw.n_rows - keep_mask.sum())
    kept_idx = np.flatnonzero(keep_mask)

    y = _binarize_label([raw.columns[label_col.name][i] for i in kept_idx], label_col)

    out_cols: list[np.ndarray] = []
    out_names: list[str] = []
    out_kinds: list[str] = []
    standardization: dict[str, tuple[float, float]] = {}
    for name in kept:
        col = by_name[name]
        if col.kind == "label":
            continue
        values = [raw.columns[name][i] for i in kept_idx]
        if col.kind == "continuous":
            arr = np.array(values, dtype=float)
            mean = float(np.mean(arr))
            sd = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
            if sd == 0.0:
                raise ConstantColumnError(f"constant column: {name!r} has zero variance")
            out_cols.append((arr - mean) / sd)
            out_names.append(name)
            out_kinds.append("continuous")
            standardization[name] = (mean, sd)
        elif col.kind == "indicator":
            arr = np.array(values, dtype=float)
            if not np.all((arr == 0.0) | (arr == 1.0)):
                raise SchemaError(f"indicator column {name!r} has values outside {{0, 1}}")
            out_cols.append(arr)
            out_names.append(name)
            out_kinds.append("indicator")
        elif col.kind == "categorical":
            consolidate = col.consolidate or {}
            if col.categories is not None:
                unknown = sorted({v for v in values if v not in col.categories})
                if unknown:
                    raise SchemaError(
                        f"categorical column {name!r}: values outside the declared "
                        f"category set: {unknown}"
                    )
                final = sorted({consolidate.get(c, c) for c in col.categories})
            else:
                final = sorted({consolidate.get(v, v) for v in values})
            mapped = [consolidate.get(v, v) for v in values]
            # alphabetically first category is the omitted reference
            for cat in final[1:]:
                out_cols.append(np.array([1.0 if v == cat else 0.0 for v in mapped]))
                out_names.append(f"{name}={cat}")
                out_kinds.append("indicator")

    if not out_cols:
        raise SchemaError("no covariate columns left after drops")
    X = np.column_stack(out_cols)
    dataset = Dataset(y, X)

    # schema under which re-running this pipeline on the written output is a no-op
    output_schema = [ColumnSchema(name="y", kind="label", positive=("1",))]
    for j, kind in enumerate(out_kinds):
        output_schema.append(ColumnSchema(name=f"x{j + 1}", kind=kind))

    case_count = int(np.sum(y == 1))
    report = PreprocessReport(
        rows_in=raw.n_rows,
        rows_out=int(keep_mask.sum()),
        rows_dropped_missing=rows_dropped,
        case_count=case_count,
        control_count=int(keep_mask.sum()) - case_count,
        columns=tuple(out_names),
        standardization=standardization,
        output_schema=tuple(output_schema),
    )
    return dataset, report


def case_control_subsample(dataset: Dataset, n1: int, n0: int, seed: int) -> CaseControlSample:
    """Uniform without-replacement draw of n1 cases and n0 controls."""
    cases = np.flatnonzero(dataset.y == 1)
    controls = np.flatnonzero(dataset.y == 0)
    if cases.size < n1 or controls.size < n0:
        raise DomainError(
            f"insufficient stratum size: requested ({n1}, {n0}) but only "
            f"({cases.size}, {controls.size}) available"
        )
    rng = np.random.default_rng(seed)
    take1 = rng.choice(cases, size=n1, replace=False)
    take0 = rng.choice(controls, size=n0, replace=False)
    subset = dataset.take(np.concatenate([take1, take0]))
    return CaseControlSample.from_dataset(subset)


def adult_schema() -> list[ColumnSchema]:
    """The shipped census-income recipe: 7 final covariates.

    Drops the three missing-value columns (workclass, occupation,
    native-country), the multicollinear relationship/education, the
    insignificant marital-status/fnlwgt; consolidates the four non-white
    race categories; binarizes income at strictly greater than 50K (the
    trailing-period label variants cover the UCI test split).
    """
    non_white = {
        "Black": "non-white",
        "Asian-Pac-Islander": "non-white",
        "Amer-Indian-Eskimo": "non-white",
        "Other": "non-white",
    }
    return [
        ColumnSchema("age", "continuous"),
        ColumnSchema("workclass", "drop"),
        ColumnSchema("fnlwgt", "drop"),
        ColumnSchema("education", "drop"),
        ColumnSchema("education-num", "continuous"),
        ColumnSchema("marital-status", "drop"),
        ColumnSchema("occupation", "drop"),
        ColumnSchema("relationship", "drop"),
        ColumnSchema(
            "race",
            "categorical",
            categories=("White", "Black", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other"),
            consolidate=non_white,
        ),
        ColumnSchema("sex", "categorical", categories=("Female", "Male")),
        ColumnSchema("capital-gain", "continuous"),
        ColumnSchema("capital-loss", "continuous"),
        ColumnSchema("hours-per-week", "continuous"),
        ColumnSchema("native-country", "drop"),
        ColumnSchema(
            "income",
            "label",
            categories=("<=50K", ">50K", "<=50K.", ">50K."),
            positive=(">50K", ">50K."),
        ),
    ]


def schema_to_dict(schema: list[ColumnSchema]) -> list[dict]:
    out = []
    for col in schema:
        d: dict = {"name": col.name, "kind": col.kind}
        if col.categories is not None:
            d["categories"] = list(col.categories)
        if col.consolidate:
            targets = sorted(set(col.consolidate.values()))
            d["consolidate"] = [
                {"from": sorted(k for k, v in col.consolidate.items() if v == t), "to": t}
                for t in targets
            ]
        if col.positive is not None:
            d["positive"] = list(col.positive)
        out.append(d)
    return out


def schema_from_dict(entries: list[dict]) -> list[ColumnSchema]:
    schema = []
    for d in entries:
        consolidate = None
        if "consolidate" in d:
            consolidate = {}
            for rule in d["consolidate"]:
                for frm in rule["from"]:
                    consolidate[frm] = rule["to"]
        schema.append(
            ColumnSchema(
                name=d["name"],
                kind=d["kind"],
                categories=tuple(d["categories"]) if "categories" in d else None,
                consolidate=consolidate,
                positive=tuple(d["positive"]) if "positive" in d else None,
            )
        )
    return schema
