"""Flow-color rendering of motion maps (Middlebury-style color wheel).

Hue encodes direction, whiteness fades with magnitude: zero motion renders
white, and for a fixed normalization scaling the field scales each channel's
distance from white proportionally.
"""

from __future__ import annotations

import numpy as np

from ..blurcore.motion import MotionMap
from ..diffengine import Tensor

_WHEEL = None


def _color_wheel() -> np.ndarray:
    ry, yg, gc, cb, bm, mr = 15, 6, 4, 11, 13, 6
    wheel = np.zeros((ry + yg + gc + cb + bm + mr, 3))
    i = 0
    wheel[i:i + ry, 0] = 1.0
    wheel[i:i + ry, 1] = np.arange(ry) / ry
    i += ry
    wheel[i:i + yg, 0] = 1.0 - np.arange(yg) / yg
    wheel[i:i + yg, 1] = 1.0
    i += yg
    wheel[i:i + gc, 1] = 1.0
    wheel[i:i + gc, 2] = np.arange(gc) / gc
    i += gc
    wheel[i:i + cb, 1] = 1.0 - np.arange(cb) / cb
    wheel[i:i + cb, 2] = 1.0
    i += cb
    wheel[i:i + bm, 0] = np.arange(bm) / bm
    wheel[i:i + bm, 2] = 1.0
    i += bm
    wheel[i:i + mr, 0] = 1.0
    wheel[i:i + mr, 2] = 1.0 - np.arange(mr) / mr
    return wheel


def flow_to_color(m, max_norm: float | None = None) -> np.ndarray:
    """Motion map -> [3,h,w] float RGB in [0,1].

    ``max_norm`` fixes the magnitude normalization; by default it is the
    map's own maximum magnitude, falling back to the map's alpha bound (or 1)
    for an all-zero field.
    """
    global _WHEEL
    if _WHEEL is None:
        _WHEEL = _color_wheel()
    if isinstance(m, MotionMap):
        arr, alpha = m.data, m.alpha
    else:
        arr = m.data if isinstance(m, Tensor) else np.asarray(m)
        alpha = None
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[0] != 2:
        raise ValueError(f"flow_to_color: expected [2,h,w], got {arr.shape}")
    u, v = arr[0], arr[1]
    mag = np.sqrt(u * u + v * v)
    if max_norm is None:
        peak = float(mag.max())
        max_norm = peak if peak > 1e-9 else (alpha or 1.0)
    r = np.clip(mag / max_norm, 0.0, 1.0)

    ncols = _WHEEL.shape[0]
    angle = np.arctan2(-v, -u) / np.pi            # [-1, 1]
    idx = (angle + 1.0) / 2.0 * (ncols - 1)
    i0 = np.floor(idx).astype(np.int64)
    i1 = (i0 + 1) % ncols
    frac = idx - i0
    col0 = _WHEEL[i0]
    col1 = _WHEEL[i1]
    col = (1.0 - frac[..., None]) * col0 + frac[..., None] * col1
    col = 1.0 - r[..., None] * (1.0 - col)        # fade from white with magnitude
    return np.ascontiguousarray(col.transpose(2, 0, 1)).astype(np.float32)
