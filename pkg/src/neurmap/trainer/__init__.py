"""Semi-supervised alternating training: configuration, data plumbing,
checkpoints, and the step loop."""

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import ConfigError, TrainConfig
from .data import Pools, draw_batches, flip_motion_u, load_pools
from .loop import Trainer, lr_at, train

__all__ = [
    "Checkpoint", "ConfigError", "Pools", "TrainConfig", "Trainer",
    "draw_batches", "flip_motion_u", "load_checkpoint", "load_pools",
    "lr_at", "save_checkpoint", "train",
]
