"""Training, testing and single-patient classification flows."""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from typing import Any, Hashable, Sequence, TypeVar

import numpy as np

from . import reservoir
from .chaos import MapSpec
from .data import Dataset, Violation, get_schema, validate_vector
from .head import HeadWeights, TrainConfig, fit, forward_batch
from .metrics import MetricsReport, confusion_matrix, metrics
from .reservoir import InputScaler, ReservoirScaler, ScalingMode, SchemaError

__all__ = [
    "Architecture",
    "Model",
    "Prediction",
    "PatientVectorError",
    "balance",
    "balance_indices",
    "prepare_features",
    "train_model",
    "test_model",
    "predict_patient",
]

T = TypeVar("T")


@dataclass(frozen=True)
class Architecture:
    """N:P:H:M -- inputs, reservoir outputs, hidden units, classes."""

    N: int
    P: int
    H: int
    M: int

    def __post_init__(self):
        for name in ("N", "P", "H", "M"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"architecture {name} must be a positive integer, got {value!r}")

    @classmethod
    def parse(cls, text: "str | Architecture") -> "Architecture":
        if isinstance(text, Architecture):
            return text
        parts = str(text).strip().split(":")
        if len(parts) != 4:
            raise ValueError(f"architecture must look like N:P:H:M, got {text!r}")
        try:
            return cls(*(int(p) for p in parts))
        except ValueError:
            raise ValueError(f"architecture must look like N:P:H:M, got {text!r}") from None

    def __str__(self) -> str:
        return f"{self.N}:{self.P}:{self.H}:{self.M}"


@dataclass(frozen=True)
class Model:
    arch: Architecture
    spec: MapSpec
    input_scaler: InputScaler
    reservoir_scaler: ReservoirScaler
    head: HeadWeights
    schema_id: str = ""
    class_names: tuple[str, ...] = ()
    seed: int = 0
    trained_at: str = ""

    def __post_init__(self):
        a = self.arch
        if self.input_scaler.n_features != a.N:
            raise ValueError("input scaler length does not match N")
        if self.reservoir_scaler.divisors.shape[0] != a.P:
            raise ValueError("reservoir scaler length does not match P")
        if self.head.W1.shape != (a.P + 1, a.H) or self.head.W2.shape != (a.H + 1, a.M):
            raise ValueError(f"head shapes {self.head.W1.shape}/{self.head.W2.shape} do not "
                             f"match architecture {a}")
        if self.class_names and len(self.class_names) != a.M:
            raise ValueError("class name count does not match M")
        if not self.class_names:
            object.__setattr__(self, "class_names", tuple(str(k) for k in range(a.M)))

    @property
    def name(self) -> str:
        return f"{self.spec.kind.display_name} {self.arch}"

    def matrix(self) -> np.ndarray:
        return reservoir.fill_matrix(self.spec, self.arch.N, self.arch.P)

    def reservoir_outputs(self, X) -> np.ndarray:
        Y = reservoir.normalize_batch(X, self.input_scaler)
        S = reservoir.project_batch(self.matrix(), Y)
        return reservoir.reservoir_output_batch(S, self.reservoir_scaler)

    def predict_proba(self, X) -> np.ndarray:
        return forward_batch(self.reservoir_outputs(X), self.head)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


def balance_indices(labels: Sequence[int]) -> np.ndarray:
    """Index order of the balanced training sequence.

    Each class group keeps first-appearance order and is extended to the
    size of the largest group by cycling from its start; groups are then
    interleaved one item at a time in ascending label order.
    """
    labels = list(labels)
    if not labels:
        raise ValueError("cannot balance an empty training set")
    groups: dict[Any, list[int]] = {}
    for i, label in enumerate(labels):
        groups.setdefault(label, []).append(i)
    classes = sorted(groups)
    longest = max(len(g) for g in groups.values())
    out = np.empty(longest * len(classes), dtype=np.int64)
    pos = 0
    for k in range(longest):
        for c in classes:
            g = groups[c]
            out[pos] = g[k % len(g)]
            pos += 1
    return out


def balance(train: Sequence[tuple[T, Hashable]]) -> list[tuple[T, Hashable]]:
    """Balanced sequence of (vector, label) pairs; see :func:`balance_indices`."""
    items = list(train)
    return [items[i] for i in balance_indices([label for _, label in items])]


def _check_schema(arch: Architecture, ds: Dataset, schema_id: str = "") -> None:
    if schema_id and ds.schema.id != schema_id:
        raise SchemaError(f"model was trained on schema {schema_id!r}, dataset is {ds.schema.id!r}")
    if ds.schema.n_features != arch.N:
        raise SchemaError(f"dataset {ds.schema.id!r} has {ds.schema.n_features} features, "
                          f"architecture {arch} expects {arch.N}")
    if ds.schema.n_classes != arch.M:
        raise SchemaError(f"dataset {ds.schema.id!r} has {ds.schema.n_classes} classes, "
                          f"architecture {arch} expects {arch.M}")


@dataclass
class PreparedFeatures:
    """Normalized reservoir inputs for one training set, reused across map candidates."""

    Y: np.ndarray
    labels: np.ndarray
    order: np.ndarray
    input_scaler: InputScaler


def prepare_features(train: Dataset, arch: Architecture,
                     input_mode: "ScalingMode | str" = ScalingMode.MAX_ABS) -> PreparedFeatures:
    _check_schema(arch, train)
    if len(train) == 0:
        raise ValueError("training set is empty")
    # Calibrated on the unbalanced set; duplicates cannot change a maximum.
    scaler = InputScaler.calibrate(train.X, input_mode)
    Y = reservoir.normalize_batch(train.X, scaler)
    return PreparedFeatures(Y, train.y.copy(), balance_indices(train.y), scaler)


def _fit_on_prepared(prep: PreparedFeatures, arch: Architecture, spec: MapSpec,
                     cfg: TrainConfig) -> tuple[ReservoirScaler, HeadWeights, np.ndarray]:
    W = reservoir.fill_matrix(spec, arch.N, arch.P)
    S = reservoir.project_batch(W, prep.Y)
    if not np.isfinite(S).all():
        raise reservoir.InfeasibleParamsError(spec, -1)
    res_scaler = ReservoirScaler.calibrate(S)
    S_h = reservoir.reservoir_output_batch(S, res_scaler)
    order = prep.order
    head = fit(S_h[order], prep.labels[order], arch.H, arch.M, cfg)
    return res_scaler, head, S_h


def train_model(train: Dataset, arch: "Architecture | str", spec: MapSpec,
                cfg: TrainConfig = TrainConfig(),
                input_mode: "ScalingMode | str" = ScalingMode.MAX_ABS,
                prepared: PreparedFeatures | None = None) -> tuple[Model, MetricsReport]:
    """Fit a model and report metrics on the (unbalanced) training set used as validation."""
    arch = Architecture.parse(arch)
    spec.validate()
    prep = prepared if prepared is not None else prepare_features(train, arch, input_mode)
    res_scaler, head, S_h = _fit_on_prepared(prep, arch, spec, cfg)
    model = Model(arch, spec, prep.input_scaler, res_scaler, head,
                  schema_id=train.schema.id, class_names=train.schema.class_names,
                  seed=cfg.rng_seed,
                  trained_at=dt.datetime.now(dt.timezone.utc).replace(microsecond=0).isoformat())
    pred = np.argmax(forward_batch(S_h, head), axis=1)
    report = metrics(confusion_matrix(train.y, pred, arch.M), train.schema.class_names, model.name)
    return model, report


def test_model(model: Model, test: Dataset) -> MetricsReport:
    """Classify every test record with the frozen model.  The test set is never balanced."""
    _check_schema(model.arch, test, model.schema_id)
    if len(test) == 0:
        raise ValueError("test set is empty")
    pred = model.predict(test.X)
    return metrics(confusion_matrix(test.y, pred, model.arch.M), model.class_names, model.name)


class PatientVectorError(SchemaError):
    def __init__(self, violations: Sequence[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


@dataclass(frozen=True)
class Prediction:
    class_index: int
    class_label: str
    scores: tuple[float, ...]

    def to_dict(self) -> dict[str, Any]:
        return {"class": self.class_index, "label": self.class_label, "scores": list(self.scores)}


def predict_patient(model: Model, v: Sequence[Any]) -> Prediction:
    """Validate one raw feature vector and classify it with the streaming reservoir.

    Vectors with missing or out-of-domain entries are rejected, never patched.
    """
    schema = get_schema(model.schema_id)
    if schema is not None and schema.n_features == model.arch.N:
        problems = validate_vector(schema, v)
    else:
        problems = _generic_violations(model.arch.N, v)
    if problems:
        raise PatientVectorError(problems)
    d = np.asarray([float(x) for x in v], dtype=np.float64)
    Y = reservoir.normalize_input(d, model.input_scaler)
    S = reservoir.project_streaming(model.spec, Y, model.arch.P)
    S_h = reservoir.reservoir_output(S, model.reservoir_scaler)
    probs = forward_batch(S_h[None, :], model.head)[0]
    k = int(np.argmax(probs))
    return Prediction(k, model.class_names[k], tuple(float(p) for p in probs))


def _generic_violations(n: int, v: Sequence[Any]) -> list[Violation]:
    values = list(v)
    if len(values) != n:
        return [Violation("length", f"expected {n} values, got {len(values)}")]
    out = []
    for i, raw in enumerate(values):
        try:
            num = float(raw)
        except (TypeError, ValueError):
            out.append(Violation(f"feature {i}", f"not a number: {raw!r}"))
            continue
        if not math.isfinite(num):
            out.append(Violation(f"feature {i}", "missing"))
    return out
