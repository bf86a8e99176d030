"""Differentiable bilinear warping and the reblurring operator.

Conventions: images are [c,h,w] or [n,c,h,w]; offset fields carry 2 channels
(u = horizontal, v = vertical, in pixels) over the same spatial grid. Samples
that fall outside the image clamp to the edge (replicate), which preserves
constant images exactly. Bilinear weights are applied in nested-lerp form, so
zero offsets reproduce the input bitwise.
"""

from __future__ import annotations

import numpy as np

from ..diffengine import ShapeError, Tensor, accumulate, average, from_op, scale


def _offsets_tensor(offsets) -> Tensor:
    # MotionMap carries its field in .tensor; bare tensors pass through
    return getattr(offsets, "tensor", offsets)


def warp(image: Tensor, offsets) -> Tensor:
    """Sample ``image`` at p + offsets(p) with bilinear interpolation.

    Differentiable w.r.t. both the image values and the offsets. Where a
    sample coordinate is clamped to the border, its offset gradient is zero
    (moving the offset no longer moves the sample).
    """
    off = _offsets_tensor(offsets)
    squeeze = image.data.ndim == 3
    img = image.data[None] if squeeze else image.data
    offd = off.data[None] if off.data.ndim == 3 else off.data
    if img.ndim != 4 or offd.ndim != 4:
        raise ShapeError(f"warp: expected [c,h,w]/[n,c,h,w] image with matching offsets, "
                         f"got image {image.data.shape}, offsets {off.data.shape}")
    n, c, h, w = img.shape
    if offd.shape != (n, 2, h, w):
        raise ShapeError(f"warp: offsets must have shape {(n, 2, h, w)}, got {offd.shape}")

    dt = img.dtype
    u = offd[:, 0]
    v = offd[:, 1]
    x = np.arange(w, dtype=dt)[None, None, :] + u
    y = np.arange(h, dtype=dt)[None, :, None] + v
    in_x = (x > 0) & (x < w - 1)   # offset gradient vanishes once clamped
    in_y = (y > 0) & (y < h - 1)
    x = np.clip(x, 0, w - 1)
    y = np.clip(y, 0, h - 1)
    x0 = np.floor(x).astype(np.intp)
    y0 = np.floor(y).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    wx = (x - x0).astype(dt)[:, None]
    wy = (y - y0).astype(dt)[:, None]

    bi = np.arange(n)[:, None, None, None]
    ci = np.arange(c)[None, :, None, None]
    x0e, x1e = x0[:, None], x1[:, None]
    y0e, y1e = y0[:, None], y1[:, None]
    tl = img[bi, ci, y0e, x0e]
    tr = img[bi, ci, y0e, x1e]
    bl = img[bi, ci, y1e, x0e]
    br = img[bi, ci, y1e, x1e]

    top = tl + wx * (tr - tl)
    bot = bl + wx * (br - bl)
    out = top + wy * (bot - top)
    out = out[0] if squeeze else out

    def bwd(g, image=image, off=off):
        gd = g[None] if squeeze else g
        if image.requires_grad:
            w_tl = (1 - wx) * (1 - wy)
            w_tr = wx * (1 - wy)
            w_bl = (1 - wx) * wy
            w_br = wx * wy
            size = n * c * h * w
            base = ((bi * c + ci) * h)
            acc = np.zeros(size, dtype=np.float64)
            for yc, xc, wc in ((y0e, x0e, w_tl), (y0e, x1e, w_tr),
                               (y1e, x0e, w_bl), (y1e, x1e, w_br)):
                lin = ((base + yc) * w + xc).reshape(-1)
                acc += np.bincount(lin, weights=(gd * wc).reshape(-1).astype(np.float64),
                                   minlength=size)
            dimg = acc.reshape(n, c, h, w).astype(dt)
            accumulate(image, dimg[0] if squeeze else dimg)
        if off.requires_grad:
            du = (gd * ((1 - wy) * (tr - tl) + wy * (br - bl))).sum(axis=1) * in_x
            dv = (gd * ((1 - wx) * (bl - tl) + wx * (br - tr))).sum(axis=1) * in_y
            doff = np.stack([du, dv], axis=1).astype(dt)
            accumulate(off, doff[0] if off.data.ndim == 3 else doff)

    return from_op(out, (image, off), bwd)


def reblur(sharp: Tensor, motion, n_steps: int) -> Tensor:
    """Average ``n_steps`` warped copies of ``sharp`` along per-pixel motion.

    Copy n is displaced by (n/(N-1) - 1/2) * motion, so the trajectory spans
    [-motion/2, +motion/2] symmetrically. Differentiable through the image
    and the motion field. Requires n_steps >= 2.
    """
    if n_steps < 2:
        raise ValueError(f"reblur: n_steps must be >= 2, got {n_steps}")
    off = _offsets_tensor(motion)
    frames = []
    for i in range(n_steps):
        t = i / (n_steps - 1) - 0.5
        frames.append(warp(sharp, scale(off, t)))
    return average(frames)
