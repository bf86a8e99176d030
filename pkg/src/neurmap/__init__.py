"""Joint training of a deblurrer, a motion estimator and a natural-image
discriminator on unpaired blurry/sharp images, built on a small numpy
autodiff engine and a differentiable reblurring operator."""

from .blurcore import MotionMap, reblur, relative_motion, warp
from .diffengine import Tensor
from .networks import ArchConfig, NetParams, init_params
from .objectives import LossWeights, Nets, UnpairedBatch

__version__ = "0.1.0"

__all__ = [
    "ArchConfig", "LossWeights", "MotionMap", "NetParams", "Nets", "Tensor",
    "UnpairedBatch", "init_params", "reblur", "relative_motion", "warp",
    "__version__",
]
