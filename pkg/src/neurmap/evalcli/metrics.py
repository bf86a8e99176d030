"""Image and motion quality metrics: PSNR, SSIM, motion MSE.

PSNR is 10*log10(1/MSE) on [0,1] images, capped at 99 dB when the MSE drops
below 1e-10. SSIM uses the common constants (k1=0.01, k2=0.03, 11-tap
Gaussian window with sigma 1.5) on Rec.601 luma with valid-mode windows.
Motion MSE averages squared differences over pixels and both components, so
its unit is px^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..blurcore.motion import MotionMap
from ..diffengine import ShapeError, Tensor

PSNR_CAP = 99.0


def _img_array(a) -> np.ndarray:
    arr = a.data if isinstance(a, Tensor) else np.asarray(a)
    return arr.astype(np.float64)


def psnr(a, b) -> float:
    x, y = _img_array(a), _img_array(b)
    if x.shape != y.shape:
        raise ShapeError(f"psnr: shapes differ, {x.shape} vs {y.shape}")
    err = float(np.mean((x - y) ** 2))
    if err < 1e-10:
        return PSNR_CAP
    return float(10.0 * np.log10(1.0 / err))


def _luma(img: np.ndarray) -> np.ndarray:
    return 0.299 * img[0] + 0.587 * img[1] + 0.114 * img[2]


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    r = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(r ** 2) / (2.0 * sigma ** 2))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(a, b, window: int = 11, k1: float = 0.01, k2: float = 0.03,
         sigma: float = 1.5) -> float:
    x, y = _img_array(a), _img_array(b)
    if x.shape != y.shape:
        raise ShapeError(f"ssim: shapes differ, {x.shape} vs {y.shape}")
    lx, ly = _luma(x), _luma(y)
    if lx.shape[0] < window or lx.shape[1] < window:
        raise ShapeError(f"ssim: image {lx.shape} smaller than the {window}x{window} window")
    w = _gaussian_window(window, sigma)

    def filt(img):
        wins = sliding_window_view(img, (window, window))
        return np.tensordot(wins, w, axes=([2, 3], [0, 1]))

    c1 = k1 ** 2
    c2 = k2 ** 2
    mu_x = filt(lx)
    mu_y = filt(ly)
    var_x = filt(lx * lx) - mu_x ** 2
    var_y = filt(ly * ly) - mu_y ** 2
    cov = filt(lx * ly) - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
    den = (mu_x ** 2 + mu_y ** 2 + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def motion_mse(pred, gt) -> float:
    p = pred.data if isinstance(pred, MotionMap) else np.asarray(getattr(pred, "data", pred))
    g = gt.data if isinstance(gt, MotionMap) else np.asarray(getattr(gt, "data", gt))
    if p.shape != g.shape:
        raise ShapeError(f"motion_mse: resolutions differ, {p.shape} vs {g.shape}")
    d = p.astype(np.float64) - g.astype(np.float64)
    return float(np.mean(d * d))


@dataclass
class MetricReport:
    """Per-image metric rows plus their arithmetic-mean aggregates."""

    rows: list[dict] = field(default_factory=list)

    def add(self, filename: str, psnr_db: float, ssim_val: float,
            motion_mse_px2: float | None = None):
        self.rows.append({"filename": filename, "psnr_db": psnr_db,
                          "ssim": ssim_val, "motion_mse_px2": motion_mse_px2})

    def aggregate(self) -> dict:
        if not self.rows:
            return {"count": 0}
        out = {"count": len(self.rows)}
        for key in ("psnr_db", "ssim", "motion_mse_px2"):
            vals = [r[key] for r in self.rows if r[key] is not None]
            out[key] = float(np.mean(vals)) if vals else None
        return out

    def to_csv(self) -> str:
        lines = ["filename,psnr_db,ssim,motion_mse_px2"]
        for r in sorted(self.rows, key=lambda r: r["filename"]):
            mm = "" if r["motion_mse_px2"] is None else f"{r['motion_mse_px2']:.6f}"
            lines.append(f"{r['filename']},{r['psnr_db']:.4f},{r['ssim']:.6f},{mm}")
        return "\n".join(lines) + "\n"
