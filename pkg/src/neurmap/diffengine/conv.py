"""2-D convolution (cross-correlation) with zero padding.

The forward pass contracts a strided sliding-window view against the kernel
with einsum (BLAS-backed, no patch-matrix copy). The input gradient scatters
nine per-tap GEMM results back onto the padded grid; the weight gradient is a
single einsum against the same window view.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import ShapeError, Tensor, accumulate, from_op


def conv2d(x: Tensor, w: Tensor, b: Tensor | None = None,
           stride: int = 1, pad: int = 0) -> Tensor:
    """Convolve ``x`` ([c,h,w] or [n,c,h,w]) with ``w`` ([c_out,c_in,k,k]).

    Zero padding; ``k`` must be odd. Output spatial size is
    (h + 2*pad - k)//stride + 1. Differentiable w.r.t. input, weight and the
    optional per-output-channel bias.
    """
    if w.data.ndim != 4 or w.data.shape[2] != w.data.shape[3]:
        raise ShapeError(f"conv2d: weight must be [c_out,c_in,k,k], got {w.data.shape}")
    k = w.data.shape[2]
    if k % 2 != 1:
        raise ShapeError(f"conv2d: kernel size must be odd, got {k}")
    if stride < 1 or pad < 0:
        raise ShapeError(f"conv2d: need stride >= 1 and pad >= 0, got stride={stride} pad={pad}")

    squeeze = x.data.ndim == 3
    xd = x.data[None] if squeeze else x.data
    if xd.ndim != 4:
        raise ShapeError(f"conv2d: input must be [c,h,w] or [n,c,h,w], got {x.data.shape}")
    n, c, h, wdt = xd.shape
    co, ci = w.data.shape[0], w.data.shape[1]
    if ci != c:
        raise ShapeError(f"conv2d: input has {c} channels but weight expects {ci} "
                         f"(input {x.data.shape}, weight {w.data.shape})")
    if b is not None and b.data.shape != (co,):
        raise ShapeError(f"conv2d: bias must have shape ({co},), got {b.data.shape}")

    ho = (h + 2 * pad - k) // stride + 1
    wo = (wdt + 2 * pad - k) // stride + 1
    if ho < 1 or wo < 1:
        raise ShapeError(f"conv2d: kernel {k}x{k} does not fit input {h}x{wdt} with pad {pad}")

    xp = np.pad(xd, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else xd
    win = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    out = np.einsum("nchwij,ocij->nohw", win, w.data, optimize=True)
    if b is not None:
        out += b.data[None, :, None, None]
    if squeeze:
        out = out[0]

    parents = (x, w) if b is None else (x, w, b)

    def bwd(g, x=x, w=w, b=b, win=win, squeeze=squeeze,
            n=n, c=c, h=h, wdt=wdt, co=co, k=k, stride=stride, pad=pad, ho=ho, wo=wo):
        gd = g[None] if squeeze else g
        if w.requires_grad:
            accumulate(w, np.einsum("nohw,nchwij->ocij", gd, win, optimize=True))
        if b is not None and b.requires_grad:
            accumulate(b, gd.sum(axis=(0, 2, 3)))
        if x.requires_grad:
            dxp = np.zeros((n, c, h + 2 * pad, wdt + 2 * pad), dtype=g.dtype)
            wd_ = w.data
            use_einsum = stride == 1 and c * co >= 512
            g2 = None
            if not use_einsum:
                g2 = np.ascontiguousarray(gd.transpose(0, 2, 3, 1)).reshape(n * ho * wo, co)
            for i in range(k):
                for j in range(k):
                    if use_einsum:
                        dtap = np.einsum("nohw,oc->nchw", gd, wd_[:, :, i, j], optimize=True)
                    else:
                        dtap = (g2 @ wd_[:, :, i, j]).reshape(n, ho, wo, c).transpose(0, 3, 1, 2)
                    dxp[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride] += dtap
            dx = dxp[:, :, pad:pad + h, pad:pad + wdt] if pad else dxp
            accumulate(x, dx[0] if squeeze else dx)

    return from_op(out, parents, bwd)
