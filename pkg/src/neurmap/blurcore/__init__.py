"""Motion maps, the differentiable warp/reblur operator, field synthesis,
dataset construction, and the independent blur oracle."""

from .dataset import (
    BlurSample,
    ManifestRow,
    load_manifest,
    make_dataset,
    make_sharp_dir,
    synthesize_sample,
    write_manifest,
)
from .io import list_images, load_image, save_image
from .motion import MotionMap, load_motion_map, relative_motion, save_motion_map
from .oracle import interior_margin, line_kernel_oracle
from .synth import random_sharp_image, synth_motion_field
from .warp import reblur, warp

__all__ = [
    "BlurSample", "ManifestRow", "MotionMap", "interior_margin",
    "line_kernel_oracle", "list_images", "load_image", "load_manifest",
    "load_motion_map", "make_dataset", "make_sharp_dir", "random_sharp_image",
    "reblur", "relative_motion", "save_image", "save_motion_map",
    "synth_motion_field", "synthesize_sample", "warp", "write_manifest",
]
