"""Kernel-synthesized blur dataset construction.

Each sharp image is blurred with ``kernels_per_image`` independently
synthesized motion fields through the reblurring operator. Samples are split
5:1 into train/test by source image (every sixth image is held out), so test
content never appears in training. Output tree:

    out_dir/sharp/<split>/<stem>.png      sharp copies
    out_dir/blurry/<split>/<stem>_k<j>.png
    out_dir/mmaps/<split>/<stem>_k<j>.mmap
    out_dir/manifest.tsv                  sharp, blurry, mmap, split, seed

Manifest rows are tab-separated with paths relative to out_dir. Every sample
is recomputable from its row seed alone.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..diffengine import Tensor
from .io import list_images, load_image, save_image
from .motion import MotionMap, save_motion_map
from .synth import random_sharp_image, synth_motion_field
from .warp import reblur

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.tsv"


@dataclass
class ManifestRow:
    sharp: str
    blurry: str
    mmap: str
    split: str
    seed: int


@dataclass
class BlurSample:
    """One synthesized pair: sharp image, ground-truth motion, blurry result."""

    sharp: np.ndarray
    motion: MotionMap
    blurry: np.ndarray
    seed: int


def synthesize_sample(sharp: np.ndarray, sample_seed: int, *, alpha: float,
                      smoothness: float, n_segments: int, mean_magnitude: float,
                      n_steps: int, zero_motion: bool = False) -> BlurSample:
    h, w = sharp.shape[1], sharp.shape[2]
    if zero_motion:
        motion = MotionMap.from_array(np.zeros((2, h, w), dtype=np.float32), alpha)
    else:
        motion = synth_motion_field(sample_seed, h, w, alpha=alpha,
                                    smoothness=smoothness, n_segments=n_segments,
                                    mean_magnitude=mean_magnitude)
    blurry = reblur(Tensor(sharp), motion, n_steps).data
    return BlurSample(sharp=sharp, motion=motion, blurry=blurry, seed=sample_seed)


def make_dataset(sharp_dir, kernels_per_image: int, seed: int, out_dir, *,
                 alpha: float = 40.0, smoothness: float = 0.5, n_segments: int = 3,
                 mean_magnitude: float = 6.0, n_steps: int = 15,
                 zero_motion: bool = False) -> list[ManifestRow]:
    """Blur every readable image in ``sharp_dir`` and write the dataset tree.

    Unreadable images are skipped with a warning; an empty directory is an
    error. Per-sample seeds derive as seed XOR sample index, so regeneration
    with the same arguments reproduces every file.
    """
    out = Path(out_dir)
    paths = list_images(sharp_dir)
    if not paths:
        raise ValueError(f"make_dataset: no images found in {sharp_dir}")

    rows: list[ManifestRow] = []
    img_idx = 0
    for path in paths:
        try:
            sharp = load_image(path)
        except Exception as exc:  # noqa: BLE001 - any unreadable file is skipped
            log.warning("make_dataset: skipping unreadable image %s (%s)", path, exc)
            continue
        split = "test" if img_idx % 6 == 5 else "train"
        stem = path.stem
        sharp_rel = f"sharp/{split}/{stem}.png"
        save_image(sharp, out / sharp_rel)
        for j in range(kernels_per_image):
            sample_seed = seed ^ (img_idx * kernels_per_image + j)
            sample = synthesize_sample(sharp, sample_seed, alpha=alpha,
                                       smoothness=smoothness, n_segments=n_segments,
                                       mean_magnitude=mean_magnitude, n_steps=n_steps,
                                       zero_motion=zero_motion)
            blurry_rel = f"blurry/{split}/{stem}_k{j}.png"
            mmap_rel = f"mmaps/{split}/{stem}_k{j}.mmap"
            save_image(sample.blurry, out / blurry_rel)
            (out / mmap_rel).parent.mkdir(parents=True, exist_ok=True)
            save_motion_map(sample.motion, out / mmap_rel)
            rows.append(ManifestRow(sharp_rel, blurry_rel, mmap_rel, split, sample_seed))
        img_idx += 1

    if not rows:
        raise ValueError(f"make_dataset: no readable images in {sharp_dir}")
    write_manifest(rows, out / MANIFEST_NAME)
    return rows


def write_manifest(rows, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for r in rows:
            f.write(f"{r.sharp}\t{r.blurry}\t{r.mmap}\t{r.split}\t{r.seed}\n")


def load_manifest(path) -> list[ManifestRow]:
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        sharp, blurry, mmap, split, s = line.split("\t")
        rows.append(ManifestRow(sharp, blurry, mmap, split, int(s)))
    return rows


def make_sharp_dir(out_dir, count: int, size: int, seed: int) -> list[Path]:
    """Write ``count`` procedural sharp images (img_000.png, ...) to a directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(count):
        img = random_sharp_image(seed + i, size, size)
        p = out / f"img_{i:03d}.png"
        save_image(img, p)
        paths.append(p)
    return paths
