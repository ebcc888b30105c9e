"""Dataset schemas, delimited-file loaders and feature-vector validation.

Two built-in corpora are supported: cardiotocography records (25 numeric
features, classes N/S/P) and COVID-19 screening questionnaires (8 binary
features, Negative/Positive, split by test date).  Anything else can be
loaded with :func:`load_csv` and a schema sidecar file.

Rows with missing values are dropped at load time, never imputed.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import gzip
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
import yaml

__all__ = [
    "Domain",
    "Feature",
    "Schema",
    "Violation",
    "LoadReport",
    "Dataset",
    "CovidSplit",
    "DataError",
    "CTG_SCHEMA",
    "COVID_SCHEMA",
    "get_schema",
    "schema_from_mapping",
    "validate_vector",
    "load_ctg",
    "load_covid",
    "load_csv",
    "encode_answer",
    "decode_answer",
]

MISSING_TOKENS = frozenset({"", "none", "null", "nan", "na", "n/a", "?"})


class DataError(ValueError):
    """File-level problem: unreadable header, unknown columns, nothing loadable."""


class Domain(str, enum.Enum):
    REAL = "real"
    INTEGER = "integer"
    BINARY = "binary"
    TERNARY = "ternary"

    def admits(self, value: float) -> bool:
        if not math.isfinite(value):
            return False
        if self is Domain.REAL:
            return True
        if self is Domain.INTEGER:
            return float(value).is_integer()
        if self is Domain.BINARY:
            return value in (0.0, 1.0)
        return value in (-1.0, 0.0, 1.0)


@dataclass(frozen=True)
class Feature:
    name: str
    domain: Domain = Domain.REAL
    description: str = ""


@dataclass(frozen=True)
class Schema:
    id: str
    features: tuple[Feature, ...]
    label_column: str
    class_names: tuple[str, ...]
    # alternative spellings of each class, lower-cased -> class index
    label_aliases: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.class_names)) != len(self.class_names):
            raise ValueError("class names must be unique")

    @property
    def n_features(self) -> int:
        return len(self.features)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def feature_names(self) -> list[str]:
        return [f.name for f in self.features]

    def label_index(self, raw: str) -> int | None:
        key = str(raw).strip().lower()
        for i, name in enumerate(self.class_names):
            if key == name.lower():
                return i
        if key in self.label_aliases:
            return self.label_aliases[key]
        try:
            as_float = float(key)
        except ValueError:
            return None
        if as_float.is_integer():
            return self.label_aliases.get(str(int(as_float)))
        return None

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "features": [{"name": f.name, "domain": f.domain.value} for f in self.features],
            "label": {"column": self.label_column, "classes": list(self.class_names),
                      "aliases": dict(self.label_aliases)},
        }


_CTG_FEATURES = [
    ("b", "start instant"),
    ("e", "end instant"),
    ("LBE", "baseline value (medical expert)"),
    ("LB", "baseline value (SisPorto)"),
    ("AC", "accelerations"),
    ("FM", "foetal movement"),
    ("UC", "uterine contractions"),
    ("ASTV", "percentage of time with abnormal short term variability"),
    ("mSTV", "mean value of short term variability"),
    ("ALTV", "percentage of time with abnormal long term variability"),
    ("mLTV", "mean value of long term variability"),
    ("DL", "light decelerations"),
    ("DS", "severe decelerations"),
    ("DP", "prolonged decelerations"),
    ("DR", "repetitive decelerations"),
    ("Width", "histogram width"),
    ("Min", "low freq. of the histogram"),
    ("Max", "high freq. of the histogram"),
    ("Nmax", "number of histogram peaks"),
    ("Nzeros", "number of histogram zeros"),
    ("Mode", "histogram mode"),
    ("Mean", "histogram mean"),
    ("Median", "histogram median"),
    ("Variance", "histogram variance"),
    ("Tendency", "histogram tendency: -1 left asymmetric, 0 symmetric, 1 right asymmetric"),
]

CTG_SCHEMA = Schema(
    id="ctg",
    features=tuple(
        Feature(name, Domain.TERNARY if name == "Tendency" else Domain.REAL, desc)
        for name, desc in _CTG_FEATURES
    ),
    label_column="NSP",
    class_names=("N", "S", "P"),
    label_aliases={"1": 0, "2": 1, "3": 2, "normal": 0, "suspect": 1, "suspicious": 1,
                   "pathologic": 2, "pathology": 2},
)

COVID_SCHEMA = Schema(
    id="covid",
    features=(
        Feature("sex", Domain.BINARY, "Male/Female -> 1/0"),
        Feature("age_60_and_above", Domain.BINARY, "Yes/No -> 1/0"),
        Feature("cough", Domain.BINARY, "Yes/No -> 1/0"),
        Feature("fever", Domain.BINARY, "Yes/No -> 1/0"),
        Feature("sore_throat", Domain.BINARY, "Yes/No -> 1/0"),
        Feature("shortness_of_breath", Domain.BINARY, "Yes/No -> 1/0"),
        Feature("head_ache", Domain.BINARY, "Yes/No -> 1/0"),
        Feature("contact_with_confirmed", Domain.BINARY, "Yes/No -> 1/0"),
    ),
    label_column="corona_result",
    class_names=("Negative", "Positive"),
    label_aliases={"0": 0, "1": 1, "negative": 0, "positive": 1},
)

_BUILTIN = {CTG_SCHEMA.id: CTG_SCHEMA, COVID_SCHEMA.id: COVID_SCHEMA}


def get_schema(schema_id: str) -> Schema | None:
    return _BUILTIN.get(schema_id)


def schema_from_mapping(doc: Mapping[str, Any]) -> Schema:
    """Build a schema from a sidecar document (YAML or JSON, see README)."""
    try:
        feats = tuple(
            Feature(f["name"], Domain(f.get("domain", "real"))) if isinstance(f, Mapping)
            else Feature(str(f))
            for f in doc["features"]
        )
        label = doc["label"]
        classes = tuple(str(c) for c in label["classes"])
        aliases = {str(k).lower(): int(v) for k, v in label.get("aliases", {}).items()}
        return Schema(str(doc.get("id", "generic")), feats, str(label["column"]), classes, aliases)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed schema document: {exc}") from exc


@dataclass(frozen=True)
class Violation:
    field: str
    reason: str

    def __str__(self) -> str:
        return f"{self.field}: {self.reason}"


def _as_number(value: Any) -> float | None:
    """Parse a cell/vector entry; None when missing or not numeric."""
    if value is None:
        return None
    if isinstance(value, (int, float, np.integer, np.floating)) and not isinstance(value, bool):
        v = float(value)
        return None if math.isnan(v) else v
    if isinstance(value, bool):
        return float(value)
    text = str(value).strip()
    if text.lower() in MISSING_TOKENS:
        return None
    if text.count(",") == 1 and "." not in text:
        text = text.replace(",", ".")  # decimal comma from semicolon-delimited exports
    try:
        return float(text)
    except ValueError:
        return math.nan


def validate_vector(schema: Schema, v: Sequence[Any]) -> list[Violation]:
    """Check length, presence and per-feature domain; empty list means valid."""
    values = list(v)
    if len(values) != schema.n_features:
        return [Violation("length", f"expected {schema.n_features} values, got {len(values)}")]
    out = []
    for feat, raw in zip(schema.features, values):
        num = _as_number(raw)
        if num is None:
            out.append(Violation(feat.name, "missing"))
        elif math.isnan(num):
            out.append(Violation(feat.name, f"not a number: {raw!r}"))
        elif not feat.domain.admits(num):
            out.append(Violation(feat.name, f"{raw!r} outside {feat.domain.value} domain"))
    return out


@dataclass
class LoadReport:
    source: str
    source_rows: int = 0
    loaded: int = 0
    dropped: Counter = field(default_factory=Counter)
    class_counts: dict[str, int] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def dropped_total(self) -> int:
        return sum(self.dropped.values())

    def to_dict(self) -> dict[str, Any]:
        return {
            "source": self.source,
            "source_rows": self.source_rows,
            "loaded": self.loaded,
            "dropped": self.dropped_total,
            "dropped_by_reason": dict(self.dropped),
            "class_counts": self.class_counts,
            **self.extra,
        }

    def format(self) -> str:
        lines = [f"{self.source}: {self.loaded} records loaded, {self.dropped_total} dropped "
                 f"(of {self.source_rows} rows)"]
        for reason, n in sorted(self.dropped.items()):
            lines.append(f"  dropped {n:>7} {reason}")
        for name, n in self.class_counts.items():
            lines.append(f"  class {name:<10} {n:>7}")
        for key, value in self.extra.items():
            lines.append(f"  {key}: {value}")
        return "\n".join(lines)

    def write(self, path: "str | Path") -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix plus integer labels and source row ids."""

    X: np.ndarray
    y: np.ndarray
    schema: Schema
    ids: np.ndarray
    name: str = ""

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64)
        y = np.array(self.y, dtype=np.int64)
        ids = np.array(self.ids, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] != y.shape[0] or ids.shape != y.shape:
            raise ValueError("X, y and ids disagree in length")
        if X.shape[0] and X.shape[1] != self.schema.n_features:
            raise ValueError(f"X has {X.shape[1]} columns, schema {self.schema.id} has "
                             f"{self.schema.n_features}")
        for a in (X, y, ids):
            a.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "ids", ids)

    def __len__(self) -> int:
        return self.y.shape[0]

    def subset(self, indices, name: str | None = None) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.X[idx], self.y[idx], self.schema, self.ids[idx],
                       self.name if name is None else name)

    def class_counts(self) -> dict[str, int]:
        counts = np.bincount(self.y, minlength=self.schema.n_classes)
        return {name: int(c) for name, c in zip(self.schema.class_names, counts)}

    def summary(self) -> dict[str, Any]:
        return {"name": self.name, "schema": self.schema.id, "records": len(self),
                "features": self.schema.n_features, "class_counts": self.class_counts()}


@dataclass(frozen=True)
class CovidSplit:
    train: Dataset
    test: Dataset
    report: LoadReport


def _open_text(path: Path):
    if path.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8-sig", newline="")
    return open(path, encoding="utf-8-sig", newline="")


def _read_rows(path: "str | Path") -> tuple[list[str], list[list[str]]]:
    """Header and rows of a comma/semicolon/tab delimited file."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset file not found: {path}")
    with _open_text(path) as fh:
        text = fh.read()
    first = text.split("\n", 1)[0]
    delim = max([",", ";", "\t"], key=first.count)
    reader = csv.reader(io.StringIO(text), delimiter=delim)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError(f"{path} is empty") from None
    rows = [row for row in reader if any(cell.strip() for cell in row)]
    return header, rows


def _column_index(header: Sequence[str], candidates: Iterable[str]) -> int | None:
    lowered = [h.strip().lower() for h in header]
    for cand in candidates:
        key = cand.strip().lower()
        if key in lowered:
            return lowered.index(key)
    return None


def _table_load(path, schema: Schema, columns: Mapping[str, str] | None = None,
                name: str | None = None) -> tuple[Dataset, LoadReport]:
    header, rows = _read_rows(path)
    columns = dict(columns or {})
    feat_idx = []
    missing_cols = []
    for feat in schema.features:
        idx = _column_index(header, [columns.get(feat.name, feat.name)])
        if idx is None:
            missing_cols.append(feat.name)
        feat_idx.append(idx)
    label_idx = _column_index(header, [columns.get(schema.label_column, schema.label_column)])
    if label_idx is None:
        missing_cols.append(schema.label_column)
    if missing_cols:
        raise DataError(f"{path}: header lacks required columns {missing_cols}")

    report = LoadReport(str(path), source_rows=len(rows))
    X, y, ids = [], [], []
    for row_no, row in enumerate(rows, start=1):
        cells = [row[i] if i < len(row) else "" for i in feat_idx]
        raw_label = row[label_idx] if label_idx < len(row) else ""
        violations = validate_vector(schema, cells)
        if (any(v.reason == "missing" for v in violations)
                or raw_label.strip().lower() in MISSING_TOKENS):
            report.dropped["missing value"] += 1
            continue
        if violations:
            report.dropped["value outside domain"] += 1
            continue
        label = schema.label_index(raw_label)
        if label is None:
            report.dropped["unknown label"] += 1
            continue
        X.append([_as_number(c) for c in cells])
        y.append(label)
        ids.append(row_no)
    if not y:
        raise DataError(f"{path}: no usable records ({report.dropped_total} rows rejected)")
    ds = Dataset(np.asarray(X, dtype=np.float64), y, schema, ids, name or Path(path).name)
    report.loaded = len(ds)
    report.class_counts = ds.class_counts()
    return ds, report


def load_ctg(path: "str | Path") -> tuple[Dataset, LoadReport]:
    """Load a delimited cardiotocography export (25 features, NSP label).

    The workbook distributed by UCI must be exported to CSV first.  Column
    matching is case-insensitive; FileName, Date and any extra columns are
    ignored.
    """
    return _table_load(path, CTG_SCHEMA, name="ctg")


def load_csv(path: "str | Path", schema: "Schema | Mapping[str, Any] | str | Path") -> tuple[Dataset, LoadReport]:
    """Load a generic delimited file against a schema object or sidecar file."""
    if isinstance(schema, (str, Path)):
        schema = schema_from_mapping(yaml.safe_load(Path(schema).read_text()))
    elif not isinstance(schema, Schema):
        schema = schema_from_mapping(schema)
    return _table_load(path, schema)


# --- COVID questionnaire -----------------------------------------------------

# Header candidates per canonical field: the public ministry export first,
# then plain-language names.
COVID_COLUMN_CANDIDATES: dict[str, tuple[str, ...]] = {
    "sex": ("gender", "sex"),
    "age_60_and_above": ("age_60_and_above", "age_60", "age>=60", "age is >= 60"),
    "cough": ("cough",),
    "fever": ("fever", "fever, high temperature"),
    "sore_throat": ("sore_throat", "a sore throat", "sore throat"),
    "shortness_of_breath": ("shortness_of_breath", "dyspnea"),
    "head_ache": ("head_ache", "headache"),
    "contact_with_confirmed": ("test_indication", "contact_with_confirmed", "contact"),
    "corona_result": ("corona_result", "result", "pcr test result"),
    "test_date": ("test_date", "date"),
}

_YES_NO = {"yes": 1, "no": 0, "true": 1, "false": 0, "1": 1, "0": 0, "1.0": 1, "0.0": 0}
COVID_ANSWERS: dict[str, dict[str, int]] = {
    "sex": {"male": 1, "female": 0, "m": 1, "f": 0, "1": 1, "0": 0},
    "contact_with_confirmed": {**_YES_NO, "contact with confirmed": 1, "abroad": 0, "other": 0},
    "corona_result": {"negative": 0, "positive": 1, "0": 0, "1": 1},
}
_CANONICAL_ANSWERS = {
    "sex": ("Female", "Male"),
    "corona_result": ("Negative", "Positive"),
}

DEFAULT_TRAIN_WINDOW = (dt.date(2020, 3, 22), dt.date(2020, 3, 31))
DEFAULT_TEST_WINDOW = (dt.date(2020, 4, 1), dt.date(2020, 4, 7))
DEFAULT_DATE_FORMATS = ("%Y-%m-%d", "%d/%m/%Y", "%d.%m.%Y", "%d-%m-%Y")


def encode_answer(field_name: str, answer: Any) -> int | None:
    """Questionnaire answer to its binary code, or None if missing/indeterminate."""
    table = COVID_ANSWERS.get(field_name, _YES_NO)
    key = str(answer).strip().lower()
    return table.get(key)


def decode_answer(field_name: str, bit: int) -> str:
    names = _CANONICAL_ANSWERS.get(field_name, ("No", "Yes"))
    return names[int(bit)]


def _parse_date(text: str, formats: Sequence[str]) -> dt.date | None:
    text = text.strip()
    if not text:
        return None
    try:
        return dt.date.fromisoformat(text[:10])
    except ValueError:
        pass
    for fmt in formats:
        try:
            return dt.datetime.strptime(text, fmt).date()
        except ValueError:
            continue
    return None


def _window(value, default):
    if value is None:
        return default
    lo, hi = value
    return (dt.date.fromisoformat(str(lo)), dt.date.fromisoformat(str(hi)))


def load_covid(path: "str | Path", sidecar: "Mapping[str, Any] | str | Path | None" = None) -> CovidSplit:
    """Load COVID screening records and split them by test date.

    Default windows: train 22-31 March 2020, test 1-7 April 2020 (both
    inclusive).  The optional sidecar (mapping or YAML/JSON file) may set
    ``columns`` (canonical field -> header name), ``date_formats``,
    ``train_window`` and ``test_window``.
    """
    if isinstance(sidecar, (str, Path)):
        sidecar = yaml.safe_load(Path(sidecar).read_text()) or {}
    sidecar = dict(sidecar or {})
    overrides = dict(sidecar.get("columns", {}))
    formats = tuple(sidecar.get("date_formats", DEFAULT_DATE_FORMATS))
    train_window = _window(sidecar.get("train_window"), DEFAULT_TRAIN_WINDOW)
    test_window = _window(sidecar.get("test_window"), DEFAULT_TEST_WINDOW)

    header, rows = _read_rows(path)
    idx: dict[str, int] = {}
    missing = []
    for canonical, candidates in COVID_COLUMN_CANDIDATES.items():
        cands = (overrides[canonical],) if canonical in overrides else candidates
        i = _column_index(header, cands)
        if i is None:
            missing.append(canonical)
        else:
            idx[canonical] = i
    if missing:
        raise DataError(f"{path}: cannot locate columns for {missing}; "
                        "provide a column mapping in the sidecar config")

    report = LoadReport(str(path), source_rows=len(rows))
    feature_names = COVID_SCHEMA.feature_names
    parts: dict[str, tuple[list, list, list]] = {"train": ([], [], []), "test": ([], [], [])}
    for row_no, row in enumerate(rows, start=1):
        def cell(name):
            j = idx[name]
            return row[j] if j < len(row) else ""

        date = _parse_date(cell("test_date"), formats)
        if date is None:
            report.dropped["unparseable date"] += 1
            continue
        raw_result = cell("corona_result").strip().lower()
        if raw_result in MISSING_TOKENS:
            report.dropped["missing value"] += 1
            continue
        label = encode_answer("corona_result", raw_result)
        if label is None:
            report.dropped["indeterminate result"] += 1
            continue
        vec = []
        for name in feature_names:
            raw = cell(name)
            if raw.strip().lower() in MISSING_TOKENS:
                vec = None
                break
            code = encode_answer(name, raw)
            if code is None:
                vec = None
                break
            vec.append(code)
        if vec is None:
            report.dropped["missing value"] += 1
            continue
        if train_window[0] <= date <= train_window[1]:
            part = parts["train"]
        elif test_window[0] <= date <= test_window[1]:
            part = parts["test"]
        else:
            report.dropped["outside split windows"] += 1
            continue
        part[0].append(vec)
        part[1].append(label)
        part[2].append(row_no)

    if not parts["train"][1] and not parts["test"][1]:
        raise DataError(f"{path}: all {len(rows)} rows rejected")
    datasets = {}
    for key, (X, y, ids) in parts.items():
        X_arr = np.asarray(X, dtype=np.float64).reshape(len(y), COVID_SCHEMA.n_features)
        datasets[key] = Dataset(X_arr, y, COVID_SCHEMA, ids, f"covid-{key}")
    report.loaded = len(datasets["train"]) + len(datasets["test"])
    report.class_counts = {
        name: datasets["train"].class_counts()[name] + datasets["test"].class_counts()[name]
        for name in COVID_SCHEMA.class_names
    }
    report.extra = {
        "train": datasets["train"].summary(),
        "test": datasets["test"].summary(),
        "train_window": [d.isoformat() for d in train_window],
        "test_window": [d.isoformat() for d in test_window],
    }
    return CovidSplit(datasets["train"], datasets["test"], report)
