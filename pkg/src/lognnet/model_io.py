"""Binary model files with int16-quantized head weights.

Layout (all little-endian)::

    offset  size  field
    0       4     magic b"LGNN"
    4       2     format version (u16, currently 1)
    6       1     quantization scheme (u8, 1 = symmetric int16, one scale per block)
    7       1     reserved, 0
    8       16    N, P, H, M (4 x u32)
    24      1     map kind code (u8)
    25      1     parameter count k (u8)
    26      8k    map parameters (f64)
    ..      1     input scaling mode (u8, 0 = max-abs, 1 = literal max)
    ..      8N    input divisors (f64)
    ..      8P    reservoir divisors (f64)
    ..      8     hidden block scale (f64)
    ..      2(P+1)H  hidden block weights (i16, row-major (P+1) x H)
    ..      8     output block scale (f64)
    ..      2(H+1)M  output block weights (i16, row-major (H+1) x M)
    ..      8     training seed (i64)
    ..      2+n   schema id (u16 length + UTF-8)
    ..      2+n   training timestamp (u16 length + UTF-8)
    ..      1     class count (u8), then each class name as u16 length + UTF-8
    end-4   4     CRC-32 of every preceding byte (u32)

Map parameters and scalers are stored losslessly; only the head weights
are quantized, with ``scale = max|w| / 32767`` (1 for an all-zero block).
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .chaos import MapKind, MapSpec
from .head import HeadWeights
from .pipeline import Architecture, Model
from .reservoir import InputScaler, ReservoirScaler, ScalingMode

__all__ = ["MAGIC", "VERSION", "ModelFileError", "QuantizedBlock", "quantize", "dequantize",
           "to_bytes", "from_bytes", "save", "load", "export_document", "import_document"]

MAGIC = b"LGNN"
VERSION = 1
SCHEME_INT16_BLOCK = 1
QMAX = 32767

_MODES = {ScalingMode.MAX_ABS: 0, ScalingMode.LITERAL_MAX: 1}


class ModelFileError(ValueError):
    """Unreadable, truncated, corrupted or incompatible model file."""


@dataclass(frozen=True)
class QuantizedBlock:
    q: np.ndarray  # int16, shape of the weight matrix
    scale: float

    def dequantize(self) -> np.ndarray:
        return dequantize(self)


def quantize(w: np.ndarray) -> QuantizedBlock:
    w = np.asarray(w, dtype=np.float64)
    if not np.isfinite(w).all():
        raise ModelFileError("refusing to quantize non-finite weights")
    peak = float(np.abs(w).max()) if w.size else 0.0
    scale = peak / QMAX if peak > 0 else 1.0
    q = np.clip(np.rint(w / scale), -QMAX, QMAX).astype(np.int16)
    return QuantizedBlock(q, scale)


def dequantize(block: QuantizedBlock) -> np.ndarray:
    return block.q.astype(np.float64) * block.scale


def _pack_str(text: str) -> bytes:
    raw = text.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ModelFileError("metadata string too long")
    return struct.pack("<H", len(raw)) + raw


def _encode(arch: Architecture, spec: MapSpec, mode: ScalingMode, in_div: np.ndarray,
            res_div: np.ndarray, w1: QuantizedBlock, w2: QuantizedBlock, seed: int,
            schema_id: str, trained_at: str, class_names: tuple[str, ...]) -> bytes:
    parts = [
        struct.pack("<4sHBB", MAGIC, VERSION, SCHEME_INT16_BLOCK, 0),
        struct.pack("<4I", arch.N, arch.P, arch.H, arch.M),
        struct.pack("<BB", spec.kind.code, len(spec.params)),
        np.asarray(spec.params, dtype="<f8").tobytes(),
        struct.pack("<B", _MODES[mode]),
        np.asarray(in_div, dtype="<f8").tobytes(),
        np.asarray(res_div, dtype="<f8").tobytes(),
        struct.pack("<d", w1.scale),
        np.ascontiguousarray(w1.q, dtype="<i2").tobytes(),
        struct.pack("<d", w2.scale),
        np.ascontiguousarray(w2.q, dtype="<i2").tobytes(),
        struct.pack("<q", seed),
        _pack_str(schema_id),
        _pack_str(trained_at),
        struct.pack("<B", len(class_names)),
        *(_pack_str(c) for c in class_names),
    ]
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def to_bytes(model: Model) -> bytes:
    """Serialize deterministically; identical models give identical bytes."""
    if not model.head.is_finite():
        raise ModelFileError("refusing to save a model with non-finite weights")
    return _encode(model.arch, model.spec, model.input_scaler.mode, model.input_scaler.divisors,
                   model.reservoir_scaler.divisors, quantize(model.head.W1),
                   quantize(model.head.W2), int(model.seed), model.schema_id,
                   model.trained_at, tuple(model.class_names))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ModelFileError("model file is truncated")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def array(self, dtype: str, count: int) -> np.ndarray:
        size = np.dtype(dtype).itemsize
        return np.frombuffer(self.take(size * count), dtype=dtype).copy()

    def string(self) -> str:
        (n,) = self.unpack("<H")
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ModelFileError(f"bad metadata string: {exc}") from exc


def _decode(data: bytes) -> dict[str, Any]:
    if len(data) < 8 or data[:4] != MAGIC:
        raise ModelFileError("not a model file (bad magic)")
    version, scheme = struct.unpack_from("<HB", data, 4)
    if version != VERSION:
        raise ModelFileError(f"unsupported model file version {version} (expected {VERSION})")
    if scheme != SCHEME_INT16_BLOCK:
        raise ModelFileError(f"unsupported quantization scheme {scheme}")
    if len(data) < 12:
        raise ModelFileError("model file is truncated")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    r = _Reader(body)
    r.take(8)
    try:
        N, P, H, M = r.unpack("<4I")
        arch = Architecture(N, P, H, M)
        code, k = r.unpack("<BB")
        kind = MapKind.from_code(code)
        params = r.array("<f8", k)
        (mode_code,) = r.unpack("<B")
        mode = {v: m for m, v in _MODES.items()}[mode_code]
        in_div = r.array("<f8", N)
        res_div = r.array("<f8", P)
        (s1,) = r.unpack("<d")
        q1 = r.array("<i2", (P + 1) * H).reshape(P + 1, H)
        (s2,) = r.unpack("<d")
        q2 = r.array("<i2", (H + 1) * M).reshape(H + 1, M)
        (seed,) = r.unpack("<q")
        schema_id = r.string()
        trained_at = r.string()
        (n_cls,) = r.unpack("<B")
        class_names = tuple(r.string() for _ in range(n_cls))
    except ModelFileError:
        if zlib.crc32(body) != crc:
            raise ModelFileError("checksum mismatch (file corrupted or truncated)") from None
        raise
    except (KeyError, ValueError) as exc:
        raise ModelFileError(f"malformed model file: {exc}") from exc
    if zlib.crc32(body) != crc:
        raise ModelFileError("checksum mismatch (file corrupted)")
    if r.pos != len(body):
        raise ModelFileError("trailing bytes after metadata")
    return {
        "arch": arch, "kind": kind, "params": params, "mode": mode, "input_divisors": in_div,
        "reservoir_divisors": res_div, "w1": QuantizedBlock(q1.astype(np.int16), s1),
        "w2": QuantizedBlock(q2.astype(np.int16), s2), "seed": int(seed), "schema_id": schema_id,
        "trained_at": trained_at, "class_names": class_names,
    }


def from_bytes(data: bytes) -> Model:
    f = _decode(data)
    return Model(
        f["arch"], MapSpec(f["kind"], tuple(f["params"].tolist())),
        InputScaler(f["input_divisors"], f["mode"]), ReservoirScaler(f["reservoir_divisors"]),
        HeadWeights(f["w1"].dequantize(), f["w2"].dequantize()),
        schema_id=f["schema_id"], class_names=f["class_names"], seed=f["seed"],
        trained_at=f["trained_at"],
    )


def save(model: Model, path: "str | Path") -> Path:
    path = Path(path)
    data = to_bytes(model)
    path.write_bytes(data)
    return path


def load(path: "str | Path") -> Model:
    """Read a model file; head weights come back dequantized."""
    return from_bytes(Path(path).read_bytes())


def export_document(data: bytes) -> dict[str, Any]:
    """Human-readable view of a model file, keeping the quantized integers."""
    f = _decode(data)
    return {
        "format": "lognnet-model",
        "version": VERSION,
        "architecture": str(f["arch"]),
        "map": {"kind": f["kind"].value, "params": f["params"].tolist()},
        "input_scaler": {"mode": f["mode"].value, "divisors": f["input_divisors"].tolist()},
        "reservoir_scaler": {"divisors": f["reservoir_divisors"].tolist()},
        "hidden_weights": {"scale": f["w1"].scale, "q": f["w1"].q.tolist()},
        "output_weights": {"scale": f["w2"].scale, "q": f["w2"].q.tolist()},
        "metadata": {"seed": f["seed"], "schema_id": f["schema_id"],
                     "trained_at": f["trained_at"], "class_names": list(f["class_names"])},
    }


def import_document(doc: dict[str, Any]) -> bytes:
    """Inverse of :func:`export_document`; reproduces the original bytes."""
    try:
        if doc.get("format") != "lognnet-model" or int(doc.get("version", -1)) != VERSION:
            raise ModelFileError("document is not a version-1 lognnet model export")
        arch = Architecture.parse(doc["architecture"])
        spec = MapSpec(MapKind.parse(doc["map"]["kind"]), tuple(doc["map"]["params"]))
        w1 = QuantizedBlock(np.asarray(doc["hidden_weights"]["q"], dtype=np.int16).reshape(arch.P + 1, arch.H),
                            float(doc["hidden_weights"]["scale"]))
        w2 = QuantizedBlock(np.asarray(doc["output_weights"]["q"], dtype=np.int16).reshape(arch.H + 1, arch.M),
                            float(doc["output_weights"]["scale"]))
        meta = doc["metadata"]
        in_div = np.asarray(doc["input_scaler"]["divisors"], dtype=np.float64)
        res_div = np.asarray(doc["reservoir_scaler"]["divisors"], dtype=np.float64)
        if in_div.shape != (arch.N,) or res_div.shape != (arch.P,):
            raise ModelFileError("scaler lengths do not match the architecture")
        return _encode(arch, spec, ScalingMode(doc["input_scaler"]["mode"]), in_div, res_div,
                       w1, w2, int(meta["seed"]), str(meta["schema_id"]), str(meta["trained_at"]),
                       tuple(str(c) for c in meta["class_names"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ModelFileError):
            raise
        raise ModelFileError(f"malformed model document: {exc}") from exc
