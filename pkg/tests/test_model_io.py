import struct
import zlib

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lognnet import model_io
from lognnet.chaos import MapSpec
from lognnet.head import HeadWeights, TrainConfig
from lognnet.model_io import ModelFileError, QuantizedBlock, dequantize, quantize
from lognnet.pipeline import Architecture, Model, train_model
from lognnet.reservoir import InputScaler, ReservoirScaler, ScalingMode

from .test_pipeline import covid_like


def make_model(seed=0, arch=(8, 6, 4, 2), scale=1.0, classes=("Negative", "Positive"),
               schema_id="covid"):
    N, P, H, M = arch
    rng = np.random.default_rng(seed)
    return Model(Architecture(N, P, H, M), MapSpec("sine", [0.123456789, 1.7]),
                 InputScaler(rng.uniform(0.5, 3, N), ScalingMode.LITERAL_MAX),
                 ReservoirScaler(rng.uniform(0.1, 9, P)),
                 HeadWeights(rng.normal(size=(P + 1, H)) * scale, rng.normal(size=(H + 1, M)) * scale),
                 schema_id=schema_id, class_names=classes, seed=42,
                 trained_at="2024-01-01T00:00:00+00:00")


class TestQuantizer:
    def test_all_zero(self):
        b = quantize(np.zeros((3, 2)))
        assert b.scale == 1.0 and not b.q.any()

    def test_unit_extremes(self):
        b = quantize(np.array([[-1.0, 1.0]]))
        assert b.q.tolist() == [[-32767, 32767]]
        assert b.scale == 1 / 32767

    def test_non_finite_refused(self):
        with pytest.raises(ModelFileError):
            quantize(np.array([1.0, np.inf]))

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50))
    def test_error_bound(self, values):
        w = np.asarray(values)
        b = quantize(w)
        err = np.abs(dequantize(b) - w)
        assert (err <= b.scale / 2 * (1 + 1e-9)).all()
        assert b.q.dtype == np.int16


class TestFile:
    def test_payload_size_for_small_arch(self, tmp_path):
        data = model_io.to_bytes(make_model())
        weights = (7 * 4 + 5 * 2) * 2
        assert weights == 76
        header = 8 + 16 + 2 + 2 * 8 + 1 + 8 * 8 + 6 * 8 + 8 + 8
        meta = 8 + (2 + 5) + (2 + 25) + 1 + (2 + 8) + (2 + 8)
        assert len(data) == header + weights + meta + 4

    def test_round_trip_lossless_fields(self, tmp_path):
        m = make_model()
        path = model_io.save(m, tmp_path / "m.lgnn")
        back = model_io.load(path)
        assert back.arch == m.arch and back.spec == m.spec
        assert back.input_scaler.divisors.tobytes() == m.input_scaler.divisors.tobytes()
        assert back.input_scaler.mode is ScalingMode.LITERAL_MAX
        assert back.reservoir_scaler.divisors.tobytes() == m.reservoir_scaler.divisors.tobytes()
        assert (back.schema_id, back.class_names, back.seed, back.trained_at) == \
            ("covid", ("Negative", "Positive"), 42, m.trained_at)
        for a, b in ((m.head.W1, back.head.W1), (m.head.W2, back.head.W2)):
            scale = np.abs(a).max() / 32767
            assert np.abs(a - b).max() <= scale / 2

    def test_deterministic_bytes(self):
        assert model_io.to_bytes(make_model(3)) == model_io.to_bytes(make_model(3))

    def test_resave_is_stable(self):
        data = model_io.to_bytes(make_model(5))
        assert model_io.to_bytes(model_io.from_bytes(data)) == data

    def test_magic(self):
        data = bytearray(model_io.to_bytes(make_model()))
        data[0:4] = b"XXXX"
        with pytest.raises(ModelFileError, match="magic"):
            model_io.from_bytes(bytes(data))

    def test_version(self):
        data = bytearray(model_io.to_bytes(make_model()))
        struct.pack_into("<H", data, 4, 99)
        with pytest.raises(ModelFileError, match="version"):
            model_io.from_bytes(bytes(data))

    def test_truncated(self):
        data = model_io.to_bytes(make_model())
        for cut in (6, 30, len(data) // 2, len(data) - 1):
            with pytest.raises(ModelFileError):
                model_io.from_bytes(data[:cut])

    def test_bit_flip_checksum(self):
        data = bytearray(model_io.to_bytes(make_model()))
        data[60] ^= 0x01
        with pytest.raises(ModelFileError, match="checksum"):
            model_io.from_bytes(bytes(data))

    def test_trailer_is_crc32(self):
        data = model_io.to_bytes(make_model())
        assert struct.unpack("<I", data[-4:])[0] == zlib.crc32(data[:-4])

    def test_non_finite_refused(self):
        m = make_model()
        m.head.W1[0, 0] = np.nan
        with pytest.raises(ModelFileError):
            model_io.to_bytes(m)

    def test_document_round_trip(self):
        m = make_model(7, arch=(25, 10, 5, 3), scale=3.0, classes=("N", "S", "P"), schema_id="ctg")
        data = model_io.to_bytes(m)
        doc = model_io.export_document(data)
        assert doc["architecture"] == "25:10:5:3"
        assert model_io.import_document(doc) == data

    def test_document_rejects_garbage(self):
        with pytest.raises(ModelFileError):
            model_io.import_document({"format": "other"})
        doc = model_io.export_document(model_io.to_bytes(make_model()))
        doc["reservoir_scaler"]["divisors"] = [1.0]
        with pytest.raises(ModelFileError):
            model_io.import_document(doc)


def test_trained_model_agreement(tmp_path):
    ds = covid_like(400, seed=1)
    m, _ = train_model(ds, "8:6:4:2", MapSpec("sine", [0.2, 1.8]), TrainConfig(epochs=20))
    back = model_io.load(model_io.save(m, tmp_path / "m.lgnn"))
    agree = np.mean(m.predict(ds.X) == back.predict(ds.X))
    assert agree >= 0.99


def test_block_dataclass():
    b = QuantizedBlock(np.array([1, -2], dtype=np.int16), 0.5)
    assert b.dequantize().tolist() == [0.5, -1.0]
