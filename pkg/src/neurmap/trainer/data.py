"""Training data pools and deterministic batch sampling.

The paired pool comes from a dataset manifest (train split, pairing kept);
the unpaired pools are plain image directories sampled independently. All
randomness (indices, crop corners, flips) flows through one generator in a
fixed call order, so a restored RNG state reproduces the batch stream.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..blurcore.dataset import MANIFEST_NAME, load_manifest
from ..blurcore.io import list_images, load_image
from ..diffengine import Tensor
from ..objectives import UnpairedBatch


@dataclass
class PairedSample:
    blurry: np.ndarray
    sharp: np.ndarray


@dataclass
class Pools:
    paired: list[PairedSample]
    unpaired_blurry: list[np.ndarray]
    unpaired_sharp: list[np.ndarray]


def load_pools(cfg) -> Pools:
    paired = []
    if not cfg.unsupervised:
        root = Path(cfg.paired_dir)
        manifest = root / MANIFEST_NAME
        if not manifest.exists():
            raise FileNotFoundError(f"paired_dir has no {MANIFEST_NAME}: {root}")
        for row in load_manifest(manifest):
            if row.split != "train":
                continue
            paired.append(PairedSample(load_image(root / row.blurry),
                                       load_image(root / row.sharp)))
        if not paired:
            raise ValueError(f"no train rows in {manifest}")
    blurry = [load_image(p) for p in list_images(cfg.unpaired_blurry_dir)]
    sharp = [load_image(p) for p in list_images(cfg.unpaired_sharp_dir)]
    if not blurry or not sharp:
        raise ValueError("unpaired pools must not be empty "
                         f"({cfg.unpaired_blurry_dir}: {len(blurry)}, "
                         f"{cfg.unpaired_sharp_dir}: {len(sharp)})")
    return Pools(paired, blurry, sharp)


def crop_flip(img: np.ndarray, y0: int, x0: int, crop: int, flip: bool) -> np.ndarray:
    out = img[:, y0:y0 + crop, x0:x0 + crop]
    if flip:
        out = out[:, :, ::-1]
    return np.ascontiguousarray(out)


def flip_motion_u(m: np.ndarray) -> np.ndarray:
    """Horizontal flip of a motion field: mirror x and negate u."""
    out = m[:, :, ::-1].copy()
    out[0] = -out[0]
    return out


def _draw_geometry(img: np.ndarray, crop: int, rng) -> tuple[int, int, bool]:
    h, w = img.shape[1], img.shape[2]
    if h < crop or w < crop:
        raise ValueError(f"image {h}x{w} smaller than crop {crop}")
    y0 = int(rng.integers(0, h - crop + 1))
    x0 = int(rng.integers(0, w - crop + 1))
    flip = bool(rng.integers(0, 2))
    return y0, x0, flip


def draw_batches(pools: Pools, cfg, rng):
    """One training step's batches: (paired_blurry, paired_sharp, unpaired)."""
    pb = ps = None
    if pools.paired:
        idx = rng.integers(0, len(pools.paired), size=cfg.batch_paired)
        bs, ss = [], []
        for i in idx:
            sample = pools.paired[int(i)]
            y0, x0, flip = _draw_geometry(sample.blurry, cfg.crop, rng)
            bs.append(crop_flip(sample.blurry, y0, x0, cfg.crop, flip))
            ss.append(crop_flip(sample.sharp, y0, x0, cfg.crop, flip))
        pb, ps = Tensor(np.stack(bs)), Tensor(np.stack(ss))

    idx = rng.integers(0, len(pools.unpaired_blurry), size=cfg.batch_unpaired)
    ub = []
    for i in idx:
        img = pools.unpaired_blurry[int(i)]
        y0, x0, flip = _draw_geometry(img, cfg.crop, rng)
        ub.append(crop_flip(img, y0, x0, cfg.crop, flip))
    idx = rng.integers(0, len(pools.unpaired_sharp), size=cfg.batch_unpaired)
    us = []
    for i in idx:
        img = pools.unpaired_sharp[int(i)]
        y0, x0, flip = _draw_geometry(img, cfg.crop, rng)
        us.append(crop_flip(img, y0, x0, cfg.crop, flip))
    return pb, ps, UnpairedBatch(Tensor(np.stack(ub)), Tensor(np.stack(us)))
