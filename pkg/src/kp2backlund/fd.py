"""Sixth-order central finite differences, used as independent residual oracles.

Values within three samples of an array edge are invalid and left as NaN.
"""
from __future__ import annotations

import numpy as np

_D1 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
_D2 = np.array([2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0]) / 180.0


def _apply(a: np.ndarray, stencil: np.ndarray, axis: int) -> np.ndarray:
    a = np.moveaxis(np.asarray(a, dtype=np.float64), axis, -1)
    n = a.shape[-1]
    out = np.full(a.shape, np.nan)
    acc = np.zeros(a.shape[:-1] + (n - 6,))
    for k, c in enumerate(stencil):
        if c != 0.0:
            acc += c * a[..., k:n - 6 + k]
    out[..., 3:n - 3] = acc
    return np.moveaxis(out, -1, axis)


def d1(a: np.ndarray, h: float, axis: int) -> np.ndarray:
    return _apply(a, _D1, axis) / h


def d2(a: np.ndarray, h: float, axis: int) -> np.ndarray:
    return _apply(a, _D2, axis) / h**2


def d3(a: np.ndarray, h: float, axis: int) -> np.ndarray:
    return d1(d2(a, h, axis), h, axis)
