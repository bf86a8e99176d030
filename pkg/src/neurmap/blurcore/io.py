"""8-bit RGB PNG image I/O; values map to [0,1] float32 via /255."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image


def load_image(path) -> np.ndarray:
    """PNG -> float32 [3,h,w] in [0,1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
    return np.ascontiguousarray(arr.transpose(2, 0, 1))


def save_image(arr: np.ndarray, path) -> None:
    """float [3,h,w] in [0,1] -> 8-bit RGB PNG (round-to-nearest)."""
    a = np.clip(np.asarray(arr, dtype=np.float32), 0.0, 1.0)
    q = np.rint(a * 255.0).astype(np.uint8).transpose(1, 2, 0)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(q, mode="RGB").save(path)


def list_images(directory) -> list[Path]:
    d = Path(directory)
    return sorted(p for p in d.iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg"))
