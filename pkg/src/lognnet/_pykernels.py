"""Pure-Python/numpy kernels, used when the compiled extension is unavailable.

Every function here has a twin with the same signature in ``_ckernels.pyx``.
Orbit generation and reservoir projection produce bit-identical results in
both backends; the head kernels agree to rounding.
"""

from __future__ import annotations

import math

import numpy as np

from .chaos import MapKind, _next

NAME = "python"


def _sine_profile(params, i: int) -> float:
    a, b, _, d = params[0], params[1], params[2], params[3]
    return a * math.sin((i / d) * (math.pi / b))


def fill(code: int, params, n_rows: int, n_cols: int):
    """Materialize the reservoir matrix in column-major fill order.

    Returns ``(W, fail)`` where ``fail`` is -1 or the 1-based fill position
    of the first non-finite entry.
    """
    kind = MapKind.from_code(code)
    p = tuple(float(v) for v in params)
    W = np.zeros((n_rows, n_cols), dtype=np.float64)
    if kind is MapKind.SINE_LOGISTIC:
        r = p[2]
        for i in range(n_rows):
            w = _sine_profile(p, i)
            for j in range(n_cols):
                if j:
                    w = 1.0 - r * (w * w)
                if not math.isfinite(w):
                    return W, j * n_rows + i + 1
                W[i, j] = w
        return W, -1
    x = p[0]
    y = p[1] if kind in (MapKind.HENON1, MapKind.HENON2) else 0.0
    n = 0
    for j in range(n_cols):
        for i in range(n_rows):
            x, y = _next(kind, p, x, y)
            n += 1
            if not (math.isfinite(x) and math.isfinite(y)):
                return W, n
            W[i, j] = x
    return W, -1


def project(W, Y):
    W = np.asarray(W, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    S = np.zeros(W.shape[1], dtype=np.float64)
    for i in range(W.shape[0]):
        S += W[i] * Y[i]
    return S


def project_batch(W, Ys):
    W = np.asarray(W, dtype=np.float64)
    Ys = np.asarray(Ys, dtype=np.float64)
    S = np.zeros((Ys.shape[0], W.shape[1]), dtype=np.float64)
    for i in range(W.shape[0]):
        S += Ys[:, i:i + 1] * W[i]
    return S


def project_streaming(code: int, params, Y, n_cols: int):
    """Compute ``W^T Y`` while regenerating each entry of W on the fly."""
    kind = MapKind.from_code(code)
    p = tuple(float(v) for v in params)
    Y = [float(v) for v in Y]
    n_rows = len(Y)
    S = [0.0] * n_cols
    if kind is MapKind.SINE_LOGISTIC:
        # Row-wise regeneration; each S[j] still accumulates in ascending i.
        r = p[2]
        for i in range(n_rows):
            w = _sine_profile(p, i)
            yi = Y[i]
            for j in range(n_cols):
                if j:
                    w = 1.0 - r * (w * w)
                if not math.isfinite(w):
                    return np.asarray(S), j * n_rows + i + 1
                S[j] = S[j] + w * yi
        return np.asarray(S), -1
    x = p[0]
    y = p[1] if kind in (MapKind.HENON1, MapKind.HENON2) else 0.0
    n = 0
    for j in range(n_cols):
        acc = 0.0
        for i in range(n_rows):
            x, y = _next(kind, p, x, y)
            n += 1
            if not (math.isfinite(x) and math.isfinite(y)):
                return np.asarray(S), n
            acc = acc + x * Y[i]
        S[j] = acc
    return np.asarray(S), -1


def _sigmoid(a):
    return 1.0 / (1.0 + np.exp(-a))


def forward_batch(W1, W2, X):
    """Class probabilities for each row of X (rows are reservoir outputs)."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    A = np.zeros((n, W1.shape[1]))
    for i in range(W1.shape[0]):
        A += X[:, i:i + 1] * W1[i]
    H = np.empty((n, W1.shape[1] + 1))
    H[:, 0] = 1.0
    H[:, 1:] = _sigmoid(A)
    Z = np.zeros((n, W2.shape[1]))
    for k in range(W2.shape[0]):
        Z += H[:, k:k + 1] * W2[k]
    Z -= Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    total = np.zeros(n)
    for m in range(E.shape[1]):
        total += E[:, m]
    return E / total[:, None]


def sgd_epoch(W1, W2, X, labels, lr: float) -> float:
    """One pass of per-example SGD over the rows of X, in order; W1/W2 updated in place.

    Returns the summed cross-entropy loss (measured before each update).
    """
    total = 0.0
    hext = np.empty(W2.shape[0])
    hext[0] = 1.0
    for t in range(X.shape[0]):
        s = X[t]
        label = int(labels[t])
        h = _sigmoid(s @ W1)
        hext[1:] = h
        z = hext @ W2
        zmax = z.max()
        e = np.exp(z - zmax)
        se = e.sum()
        total += math.log(se) + zmax - z[label]
        dz = e / se
        dz[label] -= 1.0
        da = (W2[1:] @ dz) * h * (1.0 - h)
        W2 -= lr * np.outer(hext, dz)
        W1 -= lr * np.outer(s, da)
    return total
