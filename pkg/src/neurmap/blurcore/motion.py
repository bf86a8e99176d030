"""Per-pixel motion maps and their binary file format.

A motion map assigns every pixel a 2-vector (u, v) in pixel units: u positive
points right, v positive points down. Maps produced by the motion network or
the synthesizer keep both components within [-alpha, alpha].

File format: magic b"NMAP", little-endian uint32 height, uint32 width, then
height*width (u, v) float32 pairs in row-major order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..diffengine import ShapeError, Tensor, sub

MAGIC = b"NMAP"


@dataclass
class MotionMap:
    """A (batched) 2-channel offset field plus its bound in pixels."""

    tensor: Tensor
    alpha: float

    def __post_init__(self):
        shape = self.tensor.data.shape
        if len(shape) not in (3, 4) or shape[-3] != 2:
            raise ShapeError(f"MotionMap: expected [2,h,w] or [n,2,h,w], got {shape}")

    @property
    def height(self) -> int:
        return self.tensor.data.shape[-2]

    @property
    def width(self) -> int:
        return self.tensor.data.shape[-1]

    @property
    def data(self) -> np.ndarray:
        return self.tensor.data

    @classmethod
    def from_array(cls, arr: np.ndarray, alpha: float) -> "MotionMap":
        return cls(Tensor(np.asarray(arr, dtype=np.float32)), alpha)


def relative_motion(m_blurry: MotionMap, m_deblurred: MotionMap) -> MotionMap:
    """Componentwise difference: the motion still separating a blurry image
    from its current deblurred estimate."""
    if m_blurry.tensor.data.shape != m_deblurred.tensor.data.shape:
        raise ShapeError(f"relative_motion: resolutions differ, "
                         f"{m_blurry.tensor.data.shape} vs {m_deblurred.tensor.data.shape}")
    return MotionMap(sub(m_blurry.tensor, m_deblurred.tensor), m_blurry.alpha)


def save_motion_map(m: MotionMap, path) -> None:
    arr = np.asarray(m.data, dtype="<f4")
    if arr.ndim != 3:
        raise ShapeError(f"save_motion_map: single map [2,h,w] required, got {arr.shape}")
    h, w = arr.shape[1], arr.shape[2]
    # row-major (u, v) pairs: [h, w, 2]
    payload = np.ascontiguousarray(arr.transpose(1, 2, 0))
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", h, w))
        f.write(payload.tobytes())


def load_motion_map(path, alpha: float = 40.0) -> MotionMap:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: bad magic {raw[:4]!r}, expected {MAGIC!r}")
    h, w = struct.unpack("<II", raw[4:12])
    expect = 12 + h * w * 2 * 4
    if len(raw) != expect:
        raise ValueError(f"{path}: truncated motion map (have {len(raw)} bytes, expected {expect})")
    pairs = np.frombuffer(raw, dtype="<f4", offset=12).reshape(h, w, 2)
    return MotionMap.from_array(pairs.transpose(2, 0, 1), alpha)
