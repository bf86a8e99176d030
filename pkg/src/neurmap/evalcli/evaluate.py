"""Held-out evaluation of trained networks on a synthesized dataset split."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..blurcore.dataset import MANIFEST_NAME, load_manifest
from ..blurcore.io import load_image
from ..blurcore.motion import load_motion_map
from ..diffengine import Tensor
from ..networks import deblur_forward, motion_forward
from ..objectives import Nets
from .metrics import motion_mse, psnr, ssim


def evaluate_split(nets: Nets, dataset_dir, split: str = "test") -> dict:
    """Run the deblurrer and motion estimator over one split of a dataset.

    Returns mean PSNR/SSIM of blurry and deblurred images against the sharp
    ground truth, the motion MSE of the estimated vs ground-truth fields (and
    of the zero-field baseline), and the mean absolute motion the estimator
    reports on blurry vs sharp images.
    """
    root = Path(dataset_dir)
    rows = [r for r in load_manifest(root / MANIFEST_NAME) if r.split == split]
    if not rows:
        raise ValueError(f"no rows with split={split!r} in {root / MANIFEST_NAME}")

    d_net = nets.d.detached()
    m_net = nets.m.detached()
    psnr_blurry, psnr_deblur, ssim_blurry, ssim_deblur = [], [], [], []
    mse_pred, mse_zero, mag_mb = [], [], []
    mag_ms = {}
    for row in rows:
        sharp = load_image(root / row.sharp)
        blurry = load_image(root / row.blurry)
        gt = load_motion_map(root / row.mmap)
        b = Tensor(blurry[None])
        s_hat = deblur_forward(d_net, b).data[0]
        m_b = motion_forward(m_net, b).data[0]
        psnr_blurry.append(psnr(blurry, sharp))
        psnr_deblur.append(psnr(s_hat, sharp))
        ssim_blurry.append(ssim(blurry, sharp))
        ssim_deblur.append(ssim(s_hat, sharp))
        mse_pred.append(motion_mse(m_b, gt.data))
        mse_zero.append(motion_mse(np.zeros_like(gt.data), gt.data))
        mag_mb.append(float(np.abs(m_b).mean()))
        if row.sharp not in mag_ms:
            m_s = motion_forward(m_net, Tensor(sharp[None])).data[0]
            mag_ms[row.sharp] = float(np.abs(m_s).mean())

    return {
        "count": len(rows),
        "psnr_blurry": float(np.mean(psnr_blurry)),
        "psnr_deblurred": float(np.mean(psnr_deblur)),
        "ssim_blurry": float(np.mean(ssim_blurry)),
        "ssim_deblurred": float(np.mean(ssim_deblur)),
        "motion_mse_pred": float(np.mean(mse_pred)),
        "motion_mse_zero": float(np.mean(mse_zero)),
        "mean_abs_motion_blurry": float(np.mean(mag_mb)),
        "mean_abs_motion_sharp": float(np.mean(list(mag_ms.values()))),
    }
