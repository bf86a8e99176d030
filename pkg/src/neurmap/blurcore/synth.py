"""Random motion-field and sharp-image synthesis for dataset construction.

A synthesized field is one global (camera) vector plus a few Gaussian-bump
regional vectors, optionally low-pass filtered, with both components clipped
to [-alpha, alpha]. Everything is deterministic in the seed.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter

from .motion import MotionMap


def synth_motion_field(seed: int, h: int, w: int, alpha: float = 40.0,
                       smoothness: float = 0.5, n_segments: int = 3,
                       mean_magnitude: float = 6.0) -> MotionMap:
    """Piecewise-smooth random motion field, bounded by ``alpha``.

    ``smoothness`` in [0, 1] scales the final low-pass sigma up to a quarter
    of the image size; with ``n_segments=0`` the field is exactly the sampled
    global vector (a constant field needs no filtering). ``mean_magnitude``
    sets the typical global displacement in pixels; alpha only clips.
    """
    if alpha <= 0:
        raise ValueError(f"synth_motion_field: alpha must be > 0, got {alpha}")
    if not 0.0 <= smoothness <= 1.0:
        raise ValueError(f"synth_motion_field: smoothness must be in [0,1], got {smoothness}")
    if n_segments < 0:
        raise ValueError(f"synth_motion_field: n_segments must be >= 0, got {n_segments}")
    rng = np.random.default_rng(seed)

    angle = rng.uniform(0.0, 2.0 * np.pi)
    mag = rng.uniform(0.4, 1.6) * mean_magnitude
    field = np.empty((2, h, w), dtype=np.float64)
    field[0] = mag * np.cos(angle)
    field[1] = mag * np.sin(angle)

    if n_segments > 0:
        ys = np.arange(h, dtype=np.float64)[:, None]
        xs = np.arange(w, dtype=np.float64)[None, :]
        for _ in range(n_segments):
            cy = rng.uniform(0, h)
            cx = rng.uniform(0, w)
            radius = rng.uniform(0.15, 0.45) * min(h, w)
            seg_angle = rng.uniform(0.0, 2.0 * np.pi)
            seg_mag = rng.uniform(0.2, 1.0) * mean_magnitude
            bump = np.exp(-((ys - cy) ** 2 + (xs - cx) ** 2) / (2.0 * radius ** 2))
            field[0] += seg_mag * np.cos(seg_angle) * bump
            field[1] += seg_mag * np.sin(seg_angle) * bump
        sigma = smoothness * 0.25 * min(h, w)
        if sigma > 0:
            field[0] = gaussian_filter(field[0], sigma, mode="nearest")
            field[1] = gaussian_filter(field[1], sigma, mode="nearest")

    np.clip(field, -alpha, alpha, out=field)
    return MotionMap.from_array(field.astype(np.float32), alpha)


def random_sharp_image(seed: int, h: int = 64, w: int = 64) -> np.ndarray:
    """Procedural sharp RGB test image in [0,1], shape [3,h,w].

    A smooth color gradient background with random rectangles, ellipses and a
    sinusoidal texture layer; lightly anti-aliased so edges survive 8-bit
    quantization.
    """
    rng = np.random.default_rng(seed)
    ys = np.arange(h, dtype=np.float64)[:, None] / max(h - 1, 1)
    xs = np.arange(w, dtype=np.float64)[None, :] / max(w - 1, 1)
    img = np.empty((3, h, w), dtype=np.float64)
    for ch in range(3):
        a, b, c = rng.uniform(0.15, 0.85, size=3)
        img[ch] = a + (b - a) * ys + (c - a) * xs

    for _ in range(rng.integers(4, 9)):
        color = rng.uniform(0.0, 1.0, size=3)
        cy, cx = rng.uniform(0.1, 0.9) * h, rng.uniform(0.1, 0.9) * w
        ry, rx = rng.uniform(0.06, 0.28) * h, rng.uniform(0.06, 0.28) * w
        if rng.integers(2):
            mask = (np.abs(np.arange(h)[:, None] - cy) < ry) & \
                   (np.abs(np.arange(w)[None, :] - cx) < rx)
        else:
            mask = ((np.arange(h)[:, None] - cy) / ry) ** 2 + \
                   ((np.arange(w)[None, :] - cx) / rx) ** 2 < 1.0
        img[:, mask] = color[:, None]

    fy, fx = rng.uniform(2.0, 6.0, size=2)
    phase = rng.uniform(0, 2 * np.pi)
    tex = 0.06 * np.sin(2 * np.pi * (fy * ys + fx * xs) + phase)
    img += tex[None]

    for ch in range(3):
        img[ch] = gaussian_filter(img[ch], 0.6, mode="nearest")
    return np.clip(img, 0.0, 1.0).astype(np.float32)
