"""Compiled kernels against the pure-Python fallback."""

import os
import subprocess
import sys

import numpy as np
import pytest

from lognnet import _backend
from lognnet.chaos import MapKind, MapSpec

py = _backend.python_kernels
cy = _backend.compiled_kernels

needs_ext = pytest.mark.skipif(cy is None, reason="compiled extension not built")

SPECS = [
    MapSpec("lognnet", {"A": 0.6, "B": 3.0, "r": 1.8}),
    MapSpec("logistic", {"x0": 0.31, "r": 3.99}),
    MapSpec("sine", {"x0": -0.4, "r": 1.7}),
    MapSpec("gauss", {"x0": 0.2, "r1": -0.6, "r2": 5.5}),
    MapSpec("2sided", {"x0": 3.0, "r": 70.0}),
    MapSpec("plank", {"x0": 2.0, "r": 6.5}),
    MapSpec("henon1", {"x0": 0.3, "y0": 0.2, "r1": 1.4, "r2": 0.3}),
    MapSpec("henon2", {"x0": 0.2, "y0": 0.1, "r1": 0.2, "r2": 0.1, "r3": 0.3, "r4": 0.1}),
    MapSpec("henon2", [1.5, 10.0, 1.5, 1.5, 1.5, 1.5]),  # diverges
]


def test_backend_selection():
    assert _backend.BACKEND == _backend.kernels.NAME
    if cy is not None:
        assert _backend.kernels is cy


def test_env_var_forces_python():
    out = subprocess.run(
        [sys.executable, "-c", "from lognnet._backend import BACKEND; print(BACKEND)"],
        env={**os.environ, "LOGNNET_PURE_PYTHON": "1"}, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_ext
@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind.value)
def test_fill_bit_identical(spec):
    Wp, fp = py.fill(spec.kind.code, spec.params, 9, 13)
    Wc, fc = cy.fill(spec.kind.code, spec.params, 9, 13)
    assert fp == fc
    if fp < 0:
        assert Wp.tobytes() == Wc.tobytes()


@needs_ext
@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind.value)
def test_streaming_bit_identical(spec):
    Y = np.random.default_rng(spec.kind.code).uniform(-1, 1, 9)
    Sp, fp = py.project_streaming(spec.kind.code, spec.params, Y, 13)
    Sc, fc = cy.project_streaming(spec.kind.code, spec.params, Y, 13)
    assert fp == fc
    if fp < 0:
        assert Sp.tobytes() == Sc.tobytes()


@needs_ext
def test_project_bit_identical():
    rng = np.random.default_rng(0)
    W = rng.normal(size=(17, 11))
    Ys = rng.normal(size=(5, 17))
    assert py.project(W, Ys[0]).tobytes() == cy.project(W, Ys[0]).tobytes()
    assert py.project_batch(W, Ys).tobytes() == cy.project_batch(W, Ys).tobytes()


@needs_ext
def test_forward_agrees():
    rng = np.random.default_rng(1)
    W1 = rng.uniform(-1, 1, (7, 4))
    W2 = rng.uniform(-1, 1, (5, 3))
    X = np.hstack([np.ones((20, 1)), rng.uniform(-1, 1, (20, 6))])
    np.testing.assert_allclose(py.forward_batch(W1, W2, X), cy.forward_batch(W1, W2, X),
                               rtol=1e-13, atol=1e-15)


@needs_ext
def test_sgd_epoch_agrees():
    rng = np.random.default_rng(2)
    W1 = rng.uniform(-0.5, 0.5, (7, 4))
    W2 = rng.uniform(-0.5, 0.5, (5, 3))
    X = np.hstack([np.ones((50, 1)), rng.uniform(-1, 1, (50, 6))])
    y = rng.integers(0, 3, 50).astype(np.int64)
    a1, a2, b1, b2 = W1.copy(), W2.copy(), W1.copy(), W2.copy()
    la = py.sgd_epoch(a1, a2, X, y, 0.1)
    lb = cy.sgd_epoch(b1, b2, X, y, 0.1)
    assert la == pytest.approx(lb, rel=1e-12)
    np.testing.assert_allclose(a1, b1, rtol=1e-11, atol=1e-13)
    np.testing.assert_allclose(a2, b2, rtol=1e-11, atol=1e-13)


def test_codes_cover_all_kinds():
    for kind in MapKind:
        W, fail = py.fill(kind.code, MapSpec(kind, _default(kind)).params, 2, 2)
        assert W.shape == (2, 2)


def _default(kind):
    return {
        MapKind.SINE_LOGISTIC: [0.3, 5.9, 1.7],
        MapKind.LOGISTIC: [0.3, 4.0],
        MapKind.SINE: [0.3, 1.0],
        MapKind.GAUSS: [0.1, 0.1, 4.0],
        MapKind.TWO_SIDED: [1.0, 10.0],
        MapKind.PLANK: [1.0, 3.0],
        MapKind.HENON1: [0.1, 0.1, 1.4, 0.3],
        MapKind.HENON2: [0.1, 0.1, 0.1, 0.1, 0.1, 0.1],
    }[kind]
