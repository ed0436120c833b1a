"""Tabular ingestion and preprocessing for score-level classification.

A :class:`Dataset` is an immutable bundle of a float matrix, a schema
describing each column, stable row ids, and (once computed) score labels.
Every transform returns a new value; missing cells are NaN until
:func:`prune_missing` removes their rows.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DataError

KIND_SCALAR = "normalized-scalar"
KIND_BINARY = "binary"
KIND_CATEGORICAL = "categorical"
KIND_PLAUSIBLE = "plausible-value"
KIND_NOISE = "noise-control"

VALID_KINDS = (KIND_SCALAR, KIND_BINARY, KIND_CATEGORICAL, KIND_PLAUSIBLE, KIND_NOISE)

CATEGORY_LOW = "Low"
CATEGORY_MEDIUM = "Medium"
CATEGORY_HIGH = "High"
CATEGORIES = (CATEGORY_LOW, CATEGORY_MEDIUM, CATEGORY_HIGH)

# Upper bounds of levels 0..5; anything above the last bound is level 6.
LEVEL_BOUNDS = np.array([358.0, 420.0, 482.0, 545.0, 607.0, 669.0])
CATEGORY_OF_LEVEL = (CATEGORY_LOW, CATEGORY_LOW, CATEGORY_LOW,
                     CATEGORY_MEDIUM, CATEGORY_MEDIUM,
                     CATEGORY_HIGH, CATEGORY_HIGH)

PLAUSIBLE_VALUE_COUNT = 10


@dataclass(frozen=True)
class VariableSpec:
    """Declaration of one column: its name, kind, and admissible values."""

    name: str
    kind: str
    categories: tuple[str, ...] | None = None
    valid_range: tuple[float, float] | None = None
    source: str | None = None  # original column for one-hot indicators

    def __post_init__(self):
        if self.kind not in VALID_KINDS:
            raise DataError(f"unknown variable kind {self.kind!r} for {self.name!r}")
        if self.kind == KIND_CATEGORICAL and not self.categories:
            raise DataError(f"categorical column {self.name!r} needs a category set")

    def to_dict(self):
        d = {"name": self.name, "kind": self.kind}
        if self.categories is not None:
            d["categories"] = list(self.categories)
        if self.valid_range is not None:
            d["valid_range"] = list(self.valid_range)
        if self.source is not None:
            d["source"] = self.source
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            name=d["name"],
            kind=d["kind"],
            categories=tuple(d["categories"]) if "categories" in d else None,
            valid_range=tuple(d["valid_range"]) if "valid_range" in d else None,
            source=d.get("source"),
        )


@dataclass(frozen=True)
class LevelLabel:
    """A score mapped to its proficiency level and coarse category."""

    raw_score: float
    level: int
    category: str


@dataclass(frozen=True)
class Labels:
    """Per-row label arrays (parallel to Dataset rows)."""

    raw_score: np.ndarray
    level: np.ndarray
    category: np.ndarray  # indices into CATEGORIES

    def take(self, positions):
        return Labels(self.raw_score[positions], self.level[positions],
                      self.category[positions])

    def category_names(self):
        return np.array(CATEGORIES, dtype=object)[self.category]


@dataclass(frozen=True)
class Dataset:
    schema: tuple[VariableSpec, ...]
    rows: np.ndarray            # (n, width) float64, NaN = missing
    row_ids: np.ndarray         # (n,) int64, stable across filtering
    labels: Labels | None = None
    target: np.ndarray | None = None  # binary 0/1 once an experiment pair is fixed

    def __post_init__(self):
        if self.rows.ndim != 2 or self.rows.shape[1] != len(self.schema):
            raise DataError(
                f"matrix width {self.rows.shape} does not match schema "
                f"width {len(self.schema)}")
        if len(np.unique(self.row_ids)) != len(self.row_ids):
            raise DataError("row ids must be unique")

    @property
    def n_rows(self):
        return self.rows.shape[0]

    @property
    def names(self):
        return tuple(s.name for s in self.schema)

    def column(self, name):
        try:
            j = self.names.index(name)
        except ValueError:
            raise DataError(f"no column named {name!r}") from None
        return self.rows[:, j]

    def take(self, positions):
        """Row subset (positions, not row ids); preserves given order."""
        positions = np.asarray(positions, dtype=np.intp)
        return Dataset(
            schema=self.schema,
            rows=self.rows[positions],
            row_ids=self.row_ids[positions],
            labels=self.labels.take(positions) if self.labels else None,
            target=self.target[positions] if self.target is not None else None,
        )

    def stratify_key(self):
        """Class key used by stratified operations."""
        if self.target is not None:
            return self.target
        if self.labels is not None:
            return self.labels.category
        raise DataError("dataset has no labels to stratify on")


def load_csv(path, schema, missing_tokens=("",)):
    """Read a header-bearing CSV into a Dataset, marking missing cells NaN.

    Cells must parse as numbers, match a declared category token, or be one
    of ``missing_tokens``. Row ids are assigned 0..n-1 in file order.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"cannot read {path}: no such file")
    schema = tuple(schema)
    missing = {t.strip() for t in missing_tokens}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        header = [h.strip() for h in header]
        positions = {}
        for spec in schema:
            if spec.name not in header:
                raise DataError(f"{path} is missing schema column {spec.name!r}")
            positions[spec.name] = header.index(spec.name)
        data = []
        for r, record in enumerate(reader):
            if len(record) < len(header):
                raise DataError(
                    f"row {r}: {len(record)} cells for {len(header)} "
                    "header columns")
            out = np.empty(len(schema))
            for j, spec in enumerate(schema):
                token = record[positions[spec.name]].strip()
                out[j] = _parse_cell(token, spec, missing, r)
            data.append(out)
    if not data:
        raise DataError(f"{path} has a header but no data rows")
    rows = np.vstack(data)
    return Dataset(schema=schema, rows=rows,
                   row_ids=np.arange(len(data), dtype=np.int64))


def _parse_cell(token, spec, missing, row):
    if token in missing:
        return np.nan
    if spec.kind == KIND_CATEGORICAL:
        code = _category_code(token, spec.categories)
        if code is None:
            raise DataError(
                f"row {row}, column {spec.name!r}: value {token!r} is not in "
                f"the declared category set {spec.categories}")
        return float(code)
    try:
        value = float(token)
    except ValueError:
        raise DataError(
            f"row {row}, column {spec.name!r}: cannot parse {token!r} as a "
            "number") from None
    if token.strip() and not math.isfinite(value):
        raise DataError(
            f"row {row}, column {spec.name!r}: non-finite value {token!r}")
    if spec.kind == KIND_BINARY and value not in (0.0, 1.0):
        raise DataError(
            f"row {row}, column {spec.name!r}: binary column holds {token!r}")
    return value


def _category_code(token, categories):
    for i, cat in enumerate(categories):
        if token == cat:
            return i
    try:
        value = float(token)
    except ValueError:
        return None
    for i, cat in enumerate(categories):
        try:
            if float(cat) == value:
                return i
        except ValueError:
            continue
    return None


def missing_histogram(ds):
    """Map missing-cell count per row -> number of such rows."""
    counts = np.isnan(ds.rows).sum(axis=1)
    values, freq = np.unique(counts, return_counts=True)
    return {int(v): int(f) for v, f in zip(values, freq)}


def prune_missing(ds):
    """Drop every row holding at least one missing cell."""
    keep = ~np.isnan(ds.rows).any(axis=1)
    if not keep.any():
        raise DataError("pruning removed every row")
    if keep.all():
        return ds
    return ds.take(np.flatnonzero(keep))


def average_plausible_values(ds, group):
    """Arithmetic mean of the ten plausible-value columns, per row."""
    group = tuple(group)
    if len(group) != PLAUSIBLE_VALUE_COUNT:
        raise DataError(
            f"plausible-value group must have exactly "
            f"{PLAUSIBLE_VALUE_COUNT} columns, got {len(group)}")
    cols = np.column_stack([ds.column(name) for name in group])
    if np.isnan(cols).any():
        raise DataError("plausible-value columns contain missing cells; prune first")
    return cols.mean(axis=1)


def bin_levels(raw_score):
    """Map one score to its proficiency level and category."""
    if not math.isfinite(raw_score):
        raise DataError(f"cannot bin non-finite score {raw_score!r}")
    level = int(np.searchsorted(LEVEL_BOUNDS, raw_score, side="left"))
    return LevelLabel(raw_score=float(raw_score), level=level,
                      category=CATEGORY_OF_LEVEL[level])


def bin_levels_array(raw_scores):
    raw_scores = np.asarray(raw_scores, dtype=np.float64)
    if not np.isfinite(raw_scores).all():
        raise DataError("cannot bin non-finite scores")
    levels = np.searchsorted(LEVEL_BOUNDS, raw_scores, side="left")
    category = np.array([CATEGORIES.index(CATEGORY_OF_LEVEL[lv]) for lv in levels],
                        dtype=np.int64)
    return Labels(raw_score=raw_scores, level=levels.astype(np.int64),
                  category=category)


def label_by_plausible_values(ds, group):
    """Attach level labels from the plausible-value mean and drop the group."""
    labels = bin_levels_array(average_plausible_values(ds, group))
    keep = [j for j, s in enumerate(ds.schema) if s.name not in set(group)]
    return Dataset(
        schema=tuple(ds.schema[j] for j in keep),
        rows=ds.rows[:, keep],
        row_ids=ds.row_ids,
        labels=labels,
        target=ds.target,
    )


def one_hot_encode(ds, columns):
    """Replace each named categorical column with one indicator per category."""
    columns = set(columns)
    for name in columns:
        spec = ds.schema[ds.names.index(name)] if name in ds.names else None
        if spec is None:
            raise DataError(f"no column named {name!r}")
        if spec.kind != KIND_CATEGORICAL:
            raise DataError(f"column {name!r} is {spec.kind}, not categorical")
    new_schema = []
    new_cols = []
    for j, spec in enumerate(ds.schema):
        col = ds.rows[:, j]
        if spec.name not in columns:
            new_schema.append(spec)
            new_cols.append(col)
            continue
        codes = col
        bad = np.isnan(codes) | (codes < 0) | (codes >= len(spec.categories))
        if bad.any():
            r = int(np.flatnonzero(bad)[0])
            raise DataError(
                f"row id {int(ds.row_ids[r])}, column {spec.name!r}: value "
                f"{codes[r]!r} is outside the declared category set")
        for c, cat in enumerate(spec.categories):
            new_schema.append(VariableSpec(
                name=f"{spec.name}={cat}", kind=KIND_BINARY, source=spec.name))
            new_cols.append((codes == c).astype(np.float64))
    return Dataset(schema=tuple(new_schema), rows=np.column_stack(new_cols),
                   row_ids=ds.row_ids, labels=ds.labels, target=ds.target)


def fit_normalization(ds):
    """Observed (min, max) per normalized-scalar column."""
    stats = {}
    for j, spec in enumerate(ds.schema):
        if spec.kind == KIND_SCALAR:
            col = ds.rows[:, j]
            stats[spec.name] = (float(np.nanmin(col)), float(np.nanmax(col)))
    return stats


def normalize_scalars(ds, stats=None):
    """Min-max map scalar columns to [0, 1].

    When ``stats`` is None the transform is fitted on this dataset (the
    training split); pass the returned stats to transform held-out data,
    whose out-of-range values clip to the interval. Constant columns map
    to 0. Returns ``(dataset, stats)``.
    """
    if stats is None:
        stats = fit_normalization(ds)
    cols = []
    schema = []
    for j, spec in enumerate(ds.schema):
        col = ds.rows[:, j]
        if spec.kind == KIND_SCALAR:
            if spec.name not in stats:
                raise DataError(f"no normalization stats for column {spec.name!r}")
            lo, hi = stats[spec.name]
            if hi > lo:
                col = np.clip((col - lo) / (hi - lo), 0.0, 1.0)
            else:
                col = np.zeros_like(col)
            spec = replace(spec, valid_range=(0.0, 1.0))
        cols.append(col)
        schema.append(spec)
    out = Dataset(schema=tuple(schema), rows=np.column_stack(cols),
                  row_ids=ds.row_ids, labels=ds.labels, target=ds.target)
    return out, stats


def add_noise_control(ds, seed, name="NOISE"):
    """Append a standard-normal control column, deterministic in seed."""
    if name in ds.names:
        raise DataError(f"column {name!r} already exists")
    rng = np.random.Generator(np.random.PCG64(seed))
    noise = rng.standard_normal(ds.n_rows)
    schema = ds.schema + (VariableSpec(name=name, kind=KIND_NOISE),)
    return Dataset(schema=schema, rows=np.column_stack([ds.rows, noise]),
                   row_ids=ds.row_ids, labels=ds.labels, target=ds.target)


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def split_train_test(ds, fraction, seed):
    """Stratified train/test split; per-class train count is
    round(fraction * class count), row choice seeded."""
    if not 0.0 < fraction < 1.0:
        raise DataError(f"fraction must be in (0, 1), got {fraction}")
    key = ds.stratify_key()
    classes = np.unique(key)
    if len(classes) < 2:
        raise DataError("both classes must be present to split")
    rng = np.random.Generator(np.random.PCG64(seed))
    train_pos = []
    test_pos = []
    for cls in classes:
        members = np.flatnonzero(key == cls)
        if len(members) < 2:
            raise DataError(f"class {cls!r} has fewer than 2 members")
        n_train = _round_half_up(fraction * len(members))
        n_train = min(max(n_train, 1), len(members) - 1)
        perm = rng.permutation(members)
        train_pos.append(perm[:n_train])
        test_pos.append(perm[n_train:])
    train_pos = np.sort(np.concatenate(train_pos))
    test_pos = np.sort(np.concatenate(test_pos))
    return ds.take(train_pos), ds.take(test_pos)


def undersample(ds, seed):
    """Randomly shrink the majority class to the minority count."""
    key = ds.stratify_key()
    classes, counts = np.unique(key, return_counts=True)
    if len(classes) != 2:
        raise DataError(f"undersampling expects 2 classes, found {len(classes)}")
    if counts[0] == counts[1]:
        return ds
    minority = classes[np.argmin(counts)]
    majority = classes[np.argmax(counts)]
    rng = np.random.Generator(np.random.PCG64(seed))
    majority_pos = np.flatnonzero(key == majority)
    kept = rng.choice(majority_pos, size=int(counts.min()), replace=False)
    keep = np.sort(np.concatenate([np.flatnonzero(key == minority), kept]))
    return ds.take(keep)


def select_categories(ds, positive, negative):
    """Filter to two level categories and set the binary target."""
    if ds.labels is None:
        raise DataError("dataset has no level labels")
    if positive == negative:
        raise DataError("positive and negative categories must differ")
    for cat in (positive, negative):
        if cat not in CATEGORIES:
            raise DataError(f"unknown category {cat!r}")
    names = ds.labels.category_names()
    keep = np.flatnonzero((names == positive) | (names == negative))
    if keep.size == 0:
        raise DataError(f"no rows in categories {positive!r}/{negative!r}")
    sub = ds.take(keep)
    target = (sub.labels.category_names() == positive).astype(np.float64)
    return replace(sub, target=target)


# --- persistence ----------------------------------------------------------

_RESERVED = ("_row_id", "_raw_score", "_level", "_category", "_target")


def write_csv(ds, path):
    """Serialize to CSV with 17 significant digits (lossless round trip)."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = ["_row_id"]
        if ds.labels is not None:
            header += ["_raw_score", "_level", "_category"]
        if ds.target is not None:
            header += ["_target"]
        header += list(ds.names)
        writer.writerow(header)
        for i in range(ds.n_rows):
            record = [str(int(ds.row_ids[i]))]
            if ds.labels is not None:
                record += [_fmt(ds.labels.raw_score[i]),
                           str(int(ds.labels.level[i])),
                           str(int(ds.labels.category[i]))]
            if ds.target is not None:
                record += [_fmt(ds.target[i])]
            record += [_fmt(v) for v in ds.rows[i]]
            writer.writerow(record)


def _fmt(value):
    if np.isnan(value):
        return ""
    return format(float(value), ".17g")


def save_dataset(ds, path):
    """Persist a Dataset as CSV plus a schema sidecar (<path>.schema.json)."""
    path = Path(path)
    write_csv(ds, path)
    sidecar = {
        "schema": [s.to_dict() for s in ds.schema],
        "has_labels": ds.labels is not None,
        "has_target": ds.target is not None,
    }
    with open(str(path) + ".schema.json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)


def load_dataset(path):
    """Reload a Dataset written by :func:`save_dataset`."""
    path = Path(path)
    sidecar_path = Path(str(path) + ".schema.json")
    if not sidecar_path.exists():
        raise DataError(f"missing schema sidecar {sidecar_path}")
    with open(sidecar_path, encoding="utf-8") as fh:
        sidecar = json.load(fh)
    schema = tuple(VariableSpec.from_dict(d) for d in sidecar["schema"])
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        records = list(reader)
    index = {name: j for j, name in enumerate(header)}
    for spec in schema:
        if spec.name not in index:
            raise DataError(f"{path} is missing column {spec.name!r}")
    n = len(records)
    rows = np.empty((n, len(schema)))
    for i, record in enumerate(records):
        for j, spec in enumerate(schema):
            token = record[index[spec.name]]
            rows[i, j] = np.nan if token == "" else float(token)
    row_ids = np.array([int(r[index["_row_id"]]) for r in records], dtype=np.int64)
    labels = None
    if sidecar["has_labels"]:
        labels = Labels(
            raw_score=np.array([float(r[index["_raw_score"]]) for r in records]),
            level=np.array([int(r[index["_level"]]) for r in records], dtype=np.int64),
            category=np.array([int(r[index["_category"]]) for r in records],
                              dtype=np.int64),
        )
    target = None
    if sidecar["has_target"]:
        target = np.array([float(r[index["_target"]]) for r in records])
    return Dataset(schema=schema, rows=rows, row_ids=row_ids,
                   labels=labels, target=target)
