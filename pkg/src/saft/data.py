"""Dataset ingestion, schema checks and synthetic data generation."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import BadPredictionValue, EmptyFile, MissingColumn, ValidationError

BINARY = {"0": 0, "1": 1}


@dataclass(frozen=True)
class DatasetSchema:
    prediction_column: str
    protected_columns: tuple[str, ...]
    label_column: str | None = None
    value_domains: Mapping[str, tuple[str, ...]] | None = None

    def __post_init__(self):
        object.__setattr__(self, "protected_columns", tuple(self.protected_columns))
        if not self.protected_columns:
            raise ValidationError("schema needs at least one protected column")
        if len(set(self.protected_columns)) != len(self.protected_columns):
            raise ValidationError(f"protected column listed twice: {self.protected_columns}")
        if self.value_domains is not None:
            object.__setattr__(
                self, "value_domains",
                {k: tuple(str(v) for v in vs) for k, vs in self.value_domains.items()},
            )


@dataclass(frozen=True)
class Dataset:
    """Column arrays for one audit.

    Protected values are kept as strings; rows with a missing protected value
    never reach this object (they are dropped at load time and counted in
    ``dropped_missing``).
    """

    predictions: np.ndarray
    protected: dict[str, np.ndarray]
    labels: np.ndarray | None = None
    dropped_missing: int = 0
    prediction_column: str = "prediction"
    label_column: str | None = None

    def __post_init__(self):
        n = len(self.predictions)
        for name, col in self.protected.items():
            if len(col) != n:
                raise ValidationError(f"column {name} has {len(col)} rows, expected {n}")
        if self.labels is not None and len(self.labels) != n:
            raise ValidationError("label column length differs from predictions")

    @property
    def n_rows(self) -> int:
        return int(len(self.predictions))

    @property
    def attribute_names(self) -> tuple[str, ...]:
        return tuple(self.protected)

    def subset(self, mask) -> "Dataset":
        mask = np.asarray(mask, dtype=bool)
        return Dataset(
            predictions=self.predictions[mask],
            protected={k: v[mask] for k, v in self.protected.items()},
            labels=None if self.labels is None else self.labels[mask],
            dropped_missing=self.dropped_missing,
            prediction_column=self.prediction_column,
            label_column=self.label_column,
        )

    def take(self, order) -> "Dataset":
        order = np.asarray(order)
        return Dataset(
            predictions=self.predictions[order],
            protected={k: v[order] for k, v in self.protected.items()},
            labels=None if self.labels is None else self.labels[order],
            dropped_missing=self.dropped_missing,
            prediction_column=self.prediction_column,
            label_column=self.label_column,
        )

    def value_domains(self) -> dict[str, tuple[str, ...]]:
        return {k: tuple(sorted(set(v.tolist()))) for k, v in self.protected.items()}

    def cardinalities(self) -> dict[str, int]:
        return {k: len(v) for k, v in self.value_domains().items()}

    def digest(self) -> dict:
        return {
            "rows": self.n_rows,
            "dropped_missing_protected": self.dropped_missing,
            "cardinalities": dict(sorted(self.cardinalities().items())),
            "positive_predictions": int(self.predictions.sum()),
        }


def _parse_binary(value: str, row: int, column: str) -> int:
    try:
        return BINARY[value.strip()]
    except KeyError:
        raise BadPredictionValue(row, value, column) from None


def load_csv(path, schema: DatasetSchema) -> Dataset:
    """Read a headered UTF-8 CSV into a :class:`Dataset`.

    Predictions (and labels, when configured) must be exactly ``0`` or ``1``;
    anything else raises with the 1-based data-row number (header excluded).
    Rows whose protected value is empty are dropped and counted.
    """
    text = Path(path).read_text(encoding="utf-8-sig")
    if not text.strip():
        raise EmptyFile(f"{path} is empty")
    reader = csv.DictReader(io.StringIO(text))
    header = reader.fieldnames or []
    needed = [schema.prediction_column, *schema.protected_columns]
    if schema.label_column:
        needed.append(schema.label_column)
    missing = [c for c in needed if c not in header]
    if missing:
        raise MissingColumn(f"{path}: missing column(s) {missing}")

    preds: list[int] = []
    labels: list[int] = []
    protected: dict[str, list[str]] = {c: [] for c in schema.protected_columns}
    dropped = 0
    for row_no, row in enumerate(reader, start=1):
        pred = _parse_binary(row[schema.prediction_column] or "", row_no, schema.prediction_column)
        label = None
        if schema.label_column:
            label = _parse_binary(row[schema.label_column] or "", row_no, schema.label_column)
        values = [(row[c] or "").strip() for c in schema.protected_columns]
        if any(v == "" for v in values):
            dropped += 1
            continue
        if schema.value_domains:
            for c, v in zip(schema.protected_columns, values):
                dom = schema.value_domains.get(c)
                if dom is not None and v not in dom:
                    raise ValidationError(f"row {row_no}: {c}={v!r} not in declared domain {dom}")
        preds.append(pred)
        if label is not None:
            labels.append(label)
        for c, v in zip(schema.protected_columns, values):
            protected[c].append(v)

    return Dataset(
        predictions=np.asarray(preds, dtype=np.int8),
        protected={c: np.asarray(v, dtype=object) for c, v in protected.items()},
        labels=np.asarray(labels, dtype=np.int8) if schema.label_column else None,
        dropped_missing=dropped,
        prediction_column=schema.prediction_column,
        label_column=schema.label_column,
    )


def write_csv(dataset: Dataset, path) -> None:
    cols = [*dataset.protected, dataset.prediction_column]
    if dataset.labels is not None:
        cols.append(dataset.label_column or "label")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for i in range(dataset.n_rows):
            row = [dataset.protected[c][i] for c in dataset.protected]
            row.append(int(dataset.predictions[i]))
            if dataset.labels is not None:
                row.append(int(dataset.labels[i]))
            w.writerow(row)


@dataclass(frozen=True)
class SyntheticGroup:
    attributes: Mapping[str, str]
    size: int
    positive_rate: float
    label_rate: float | None = None


@dataclass(frozen=True)
class SyntheticSpec:
    """Per-group sizes and positive rates.

    With ``exact=True`` each group gets exactly round(rate * size) positives
    (placed at random); otherwise every row is an independent Bernoulli draw.
    """

    groups: Sequence[SyntheticGroup]
    seed: int = 0
    exact: bool = False
    prediction_column: str = "prediction"
    label_column: str | None = None
    attribute_order: Sequence[str] = field(default=())

    def __post_init__(self):
        names = None
        for g in self.groups:
            if g.size < 0:
                raise ValidationError(f"negative group size {g.size}")
            if not 0 <= g.positive_rate <= 1:
                raise ValidationError(f"positive rate {g.positive_rate} outside [0, 1]")
            if g.label_rate is not None and not 0 <= g.label_rate <= 1:
                raise ValidationError(f"label rate {g.label_rate} outside [0, 1]")
            if names is None:
                names = set(g.attributes)
            elif set(g.attributes) != names:
                raise ValidationError("all synthetic groups must name the same attributes")
        if self.label_column is None and any(g.label_rate is not None for g in self.groups):
            object.__setattr__(self, "label_column", "label")

    @classmethod
    def from_dict(cls, doc: Mapping) -> "SyntheticSpec":
        allowed = {"groups", "seed", "exact", "prediction_column", "label_column"}
        unknown = set(doc) - allowed
        if unknown:
            raise ValidationError(f"unknown synthetic spec key(s): {sorted(unknown)}")
        groups = []
        for g in doc.get("groups", []):
            extra = set(g) - {"attributes", "size", "rate", "label_rate"}
            if extra:
                raise ValidationError(f"unknown group key(s): {sorted(extra)}")
            groups.append(SyntheticGroup(
                attributes={str(k): str(v) for k, v in g["attributes"].items()},
                size=int(g["size"]),
                positive_rate=float(g["rate"]),
                label_rate=None if g.get("label_rate") is None else float(g["label_rate"]),
            ))
        return cls(
            groups=groups,
            seed=int(doc.get("seed", 0)),
            exact=bool(doc.get("exact", False)),
            prediction_column=doc.get("prediction_column", "prediction"),
            label_column=doc.get("label_column"),
        )


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    attrs = list(spec.attribute_order) or (sorted(spec.groups[0].attributes) if spec.groups else [])
    preds, labels = [], []
    protected: dict[str, list[np.ndarray]] = {a: [] for a in attrs}
    for g in spec.groups:
        if spec.exact:
            y = np.zeros(g.size, dtype=np.int8)
            y[: int(round(g.positive_rate * g.size))] = 1
            rng.shuffle(y)
        else:
            y = (rng.random(g.size) < g.positive_rate).astype(np.int8)
        preds.append(y)
        if spec.label_column is not None:
            rate = 1.0 if g.label_rate is None else g.label_rate
            labels.append((rng.random(g.size) < rate).astype(np.int8))
        for a in attrs:
            protected[a].append(np.full(g.size, g.attributes[a], dtype=object))

    def cat(parts, dtype):
        return np.concatenate(parts) if parts else np.zeros(0, dtype=dtype)

    return Dataset(
        predictions=cat(preds, np.int8),
        protected={a: cat(v, object) for a, v in protected.items()},
        labels=cat(labels, np.int8) if spec.label_column is not None else None,
        prediction_column=spec.prediction_column,
        label_column=spec.label_column,
    )
