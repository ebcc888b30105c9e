"""Reservoir matrix construction, input normalization and projection.

The reservoir matrix ``W`` has shape ``(N+1, P)``.  For every map except the
sine/logistic pair it is filled column by column from a single orbit, so
entry ``(i, j)`` (0-based) holds orbit element ``j*(N+1) + i + 1``.  The
sine/logistic filler seeds column 0 from a sine profile and derives each
following column with ``w' = 1 - r*w**2``.

Projection always accumulates ``sum_i W[i, j] * Y[i]`` in ascending ``i``, so
the streaming path (which never stores ``W``) matches the materialized one
bit for bit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .chaos import MapSpec

__all__ = [
    "ScalingMode",
    "InputScaler",
    "ReservoirScaler",
    "InfeasibleParamsError",
    "SchemaError",
    "normalize_input",
    "normalize_batch",
    "fill_matrix",
    "project",
    "project_batch",
    "project_streaming",
    "reservoir_output",
    "reservoir_output_batch",
]


class InfeasibleParamsError(ArithmeticError):
    """Map parameters produce a non-finite reservoir entry."""

    def __init__(self, spec: MapSpec, index: int):
        self.spec = spec
        self.index = index
        super().__init__(f"{spec} diverges at fill position {index}")


class SchemaError(ValueError):
    """Input vector does not have the expected length or contents."""


class ScalingMode(str, enum.Enum):
    MAX_ABS = "max-abs"
    LITERAL_MAX = "literal-max"


def _safe_divisors(values: np.ndarray) -> np.ndarray:
    d = np.asarray(values, dtype=np.float64).copy()
    d[~(d > 0) | ~np.isfinite(d)] = 1.0
    return d


@dataclass(frozen=True)
class InputScaler:
    """Per-feature divisors mapping raw features onto roughly [-1, 1]."""

    divisors: np.ndarray
    mode: ScalingMode = ScalingMode.MAX_ABS

    def __post_init__(self):
        d = np.array(self.divisors, dtype=np.float64)
        if d.ndim != 1 or not np.all(d > 0) or not np.all(np.isfinite(d)):
            raise ValueError("input divisors must be a vector of positive finite numbers")
        d.flags.writeable = False
        object.__setattr__(self, "divisors", d)
        object.__setattr__(self, "mode", ScalingMode(self.mode))

    @classmethod
    def calibrate(cls, X, mode: "ScalingMode | str" = ScalingMode.MAX_ABS) -> "InputScaler":
        """Fit divisors on a training matrix.

        ``max-abs`` uses the largest magnitude per feature.  The literal mode
        takes the plain column maximum; either way a non-positive result is
        replaced by 1.
        """
        X = np.asarray(X, dtype=np.float64)
        mode = ScalingMode(mode)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("calibration needs a non-empty 2-D training matrix")
        raw = np.abs(X).max(axis=0) if mode is ScalingMode.MAX_ABS else X.max(axis=0)
        return cls(_safe_divisors(raw), mode)

    @property
    def n_features(self) -> int:
        return self.divisors.shape[0]


@dataclass(frozen=True)
class ReservoirScaler:
    """Per-coordinate divisors applied to the raw projection S'."""

    divisors: np.ndarray

    def __post_init__(self):
        d = np.array(self.divisors, dtype=np.float64)
        if d.ndim != 1 or not np.all(d > 0) or not np.all(np.isfinite(d)):
            raise ValueError("reservoir divisors must be a vector of positive finite numbers")
        d.flags.writeable = False
        object.__setattr__(self, "divisors", d)

    @classmethod
    def calibrate(cls, S) -> "ReservoirScaler":
        S = np.asarray(S, dtype=np.float64)
        if S.ndim != 2 or S.shape[0] == 0:
            raise ValueError("calibration needs a non-empty 2-D projection matrix")
        return cls(_safe_divisors(np.abs(S).max(axis=0)))


def normalize_input(d, scaler: InputScaler) -> np.ndarray:
    """Raw feature vector (length N) to Y (length N+1) with Y[0] = 1."""
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 1 or d.shape[0] != scaler.n_features:
        raise SchemaError(f"expected {scaler.n_features} features, got shape {d.shape}")
    Y = np.empty(d.shape[0] + 1)
    Y[0] = 1.0
    Y[1:] = d / scaler.divisors
    return Y


def normalize_batch(X, scaler: InputScaler) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != scaler.n_features:
        raise SchemaError(f"expected rows of {scaler.n_features} features, got shape {X.shape}")
    Y = np.empty((X.shape[0], X.shape[1] + 1))
    Y[:, 0] = 1.0
    Y[:, 1:] = X / scaler.divisors
    return Y


def fill_matrix(spec: MapSpec, n_features: int, n_outputs: int) -> np.ndarray:
    """Materialize W of shape (N+1, P)."""
    if n_features < 1 or n_outputs < 1:
        raise ValueError("N and P must be >= 1")
    spec.validate()
    W, fail = kernels.fill(spec.kind.code, spec.params, n_features + 1, n_outputs)
    if fail >= 0:
        raise InfeasibleParamsError(spec, fail)
    return W


def project(W, Y) -> np.ndarray:
    W = np.asarray(W, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if W.ndim != 2 or Y.shape != (W.shape[0],):
        raise ValueError(f"cannot project vector of shape {Y.shape} through W of shape {W.shape}")
    return kernels.project(W, Y)


def project_batch(W, Ys) -> np.ndarray:
    W = np.asarray(W, dtype=np.float64)
    Ys = np.asarray(Ys, dtype=np.float64)
    if W.ndim != 2 or Ys.ndim != 2 or Ys.shape[1] != W.shape[0]:
        raise ValueError(f"cannot project rows of shape {Ys.shape} through W of shape {W.shape}")
    return kernels.project_batch(W, Ys)


def project_streaming(spec: MapSpec, Y, n_outputs: int) -> np.ndarray:
    """``W^T Y`` without materializing W; entries are regenerated on the fly."""
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 1 or Y.shape[0] < 2 or n_outputs < 1:
        raise ValueError("Y must be a vector of length N+1 >= 2 and P >= 1")
    spec.validate()
    S, fail = kernels.project_streaming(spec.kind.code, spec.params, Y, n_outputs)
    if fail >= 0:
        raise InfeasibleParamsError(spec, fail)
    return S


def reservoir_output(S, scaler: ReservoirScaler) -> np.ndarray:
    """S' (length P) to S_h (length P+1) with S_h[0] = 1."""
    S = np.asarray(S, dtype=np.float64)
    if S.shape != scaler.divisors.shape:
        raise ValueError("projection length does not match the reservoir scaler")
    out = np.empty(S.shape[0] + 1)
    out[0] = 1.0
    out[1:] = S / scaler.divisors
    return out


def reservoir_output_batch(S, scaler: ReservoirScaler) -> np.ndarray:
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[1] != scaler.divisors.shape[0]:
        raise ValueError("projection width does not match the reservoir scaler")
    out = np.empty((S.shape[0], S.shape[1] + 1))
    out[:, 0] = 1.0
    out[:, 1:] = S / scaler.divisors
    return out
