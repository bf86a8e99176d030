"""Independent blur oracle for uniform motion.

Builds one linear blur kernel by bilinearly splatting the reblur sample
offsets onto a kernel grid, normalizes it, and convolves with scipy. Interior
pixels of the result must match the reblurring operator; the boundary differs
because the kernel route cannot replicate edge-clamped sampling exactly.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import correlate

from ..diffengine import Tensor


def line_kernel_oracle(sharp, uniform_motion, n_steps: int) -> np.ndarray:
    """Blur ``sharp`` ([3,h,w] array or Tensor) by a single linear kernel for
    constant motion ``(u, v)``; returns a plain float array."""
    img = sharp.data if isinstance(sharp, Tensor) else np.asarray(sharp)
    u, v = float(uniform_motion[0]), float(uniform_motion[1])

    half = int(np.ceil(max(abs(u), abs(v)) / 2.0)) + 1
    size = 2 * half + 1
    kernel = np.zeros((size, size), dtype=np.float64)
    for n in range(n_steps):
        t = n / (n_steps - 1) - 0.5
        dx, dy = t * u, t * v
        x0, y0 = int(np.floor(dx)), int(np.floor(dy))
        fx, fy = dx - x0, dy - y0
        for oy, wy in ((0, 1 - fy), (1, fy)):
            for ox, wx in ((0, 1 - fx), (1, fx)):
                kernel[half + y0 + oy, half + x0 + ox] += wx * wy / n_steps
    kernel /= kernel.sum()

    # warp reads source at p + offset, so the kernel is applied as a correlation
    out = np.empty_like(img, dtype=np.float64)
    for c in range(img.shape[0]):
        out[c] = correlate(img[c].astype(np.float64), kernel, mode="nearest")
    return out.astype(img.dtype)


def interior_margin(uniform_motion) -> int:
    """Pixels to exclude per side when comparing the oracle against reblur."""
    u, v = uniform_motion
    return int(np.ceil(max(abs(float(u)), abs(float(v))) / 2.0)) + 2
