"""The three trainable networks: deblurrer, motion estimator, discriminator.

The deblurrer and motion estimator share a small encoder-decoder backbone
(stride-2 downsampling, nearest-neighbour upsampling, channel-concat skips,
leaky-relu activations). The deblurrer predicts a residual whose head is
zero-initialized, so it is exactly the identity at initialization; the motion
estimator's 2-channel head goes through alpha*tanh, so its output components
always lie in [-alpha, alpha] and start at the zero field. The discriminator
is a patch critic: stride-2 convolutions followed by a 1-channel linear head
emitting raw scores (the least-squares targets live in the losses).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .blurcore.motion import MotionMap
from .diffengine import ShapeError, Tensor, add, clamp, concat, conv2d, leaky_relu, scale, tanh, upsample2

ROLE_DEBLUR = "D"
ROLE_MOTION = "M"
ROLE_DISC = "N"

_OUT_CHANNELS = {ROLE_DEBLUR: 3, ROLE_MOTION: 2}


@dataclass
class ArchConfig:
    levels: int = 3
    base_channels: int = 16
    alpha: float = 40.0
    patch_levels: int = 3

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError(f"ArchConfig: levels must be >= 1, got {self.levels}")
        if self.base_channels < 4:
            raise ValueError(f"ArchConfig: base_channels must be >= 4, got {self.base_channels}")
        if self.alpha <= 0:
            raise ValueError(f"ArchConfig: alpha must be > 0, got {self.alpha}")
        if self.patch_levels < 1:
            raise ValueError(f"ArchConfig: patch_levels must be >= 1, got {self.patch_levels}")


@dataclass
class NetParams:
    """Named, ordered parameter tensors for one network."""

    role: str
    arch: ArchConfig
    init_seed: int
    params: dict[str, Tensor] = field(default_factory=dict)

    def detached(self) -> "NetParams":
        """A frozen view: same arrays, gradient flow severed at the weights."""
        out = NetParams(self.role, self.arch, self.init_seed)
        out.params = {k: v.detach() for k, v in self.params.items()}
        return out

    def grads(self) -> dict[str, np.ndarray | None]:
        return {k: v.grad for k, v in self.params.items()}

    def zero_grad(self):
        for v in self.params.values():
            v.grad = None

    def n_params(self) -> int:
        return sum(v.data.size for v in self.params.values())

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {k: v.data for k, v in self.params.items()}

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]


def _ed_channels(arch: ArchConfig) -> list[int]:
    # doubling channels, capped at 4x base to keep the bottleneck lean
    return [min(arch.base_channels * (1 << i), 4 * arch.base_channels)
            for i in range(arch.levels + 1)]


def _encoder_decoder_plan(arch: ArchConfig, out_channels: int):
    """(name, c_in, c_out, stride) for each 3x3 conv of the backbone."""
    ch = _ed_channels(arch)
    plan = [("stem", 3, ch[0], 1)]
    for i in range(1, arch.levels + 1):
        plan.append((f"down{i}", ch[i - 1], ch[i], 2))
    cur = ch[arch.levels]
    for i in range(arch.levels, 0, -1):
        out = ch[max(i - 2, 0)]
        plan.append((f"up{i}", cur + ch[i - 1], out, 1))
        cur = out
    plan.append(("head", cur, out_channels, 1))
    return plan


def _disc_plan(arch: ArchConfig):
    c_in = 3
    plan = []
    for i in range(arch.patch_levels):
        c_out = min(arch.base_channels * (1 << i), 8 * arch.base_channels)
        plan.append((f"conv{i}", c_in, c_out, 2))
        c_in = c_out
    plan.append(("head", c_in, 1, 1))
    return plan


def disc_receptive_field(arch: ArchConfig) -> int:
    rf, jump = 1, 1
    for _, _, _, stride in _disc_plan(arch):
        rf += 2 * jump
        jump *= stride
    return rf


def init_params(arch: ArchConfig, role: str, seed: int) -> NetParams:
    """Xavier-uniform conv weights, zero biases; the deblurrer and motion
    heads start at zero so both networks open at their identity/zero points."""
    if role not in (ROLE_DEBLUR, ROLE_MOTION, ROLE_DISC):
        raise ValueError(f"init_params: unknown role {role!r}")
    plan = _disc_plan(arch) if role == ROLE_DISC else \
        _encoder_decoder_plan(arch, _OUT_CHANNELS[role])
    rng = np.random.default_rng(seed)
    net = NetParams(role, arch, seed)
    for name, c_in, c_out, _stride in plan:
        if role != ROLE_DISC and name == "head":
            w = np.zeros((c_out, c_in, 3, 3), dtype=np.float32)
        else:
            fan_in = c_in * 9
            fan_out = c_out * 9
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-bound, bound, size=(c_out, c_in, 3, 3)).astype(np.float32)
        net.params[f"{name}.w"] = Tensor(w, requires_grad=True)
        net.params[f"{name}.b"] = Tensor(np.zeros(c_out, dtype=np.float32), requires_grad=True)
    return net


def _check_divisible(x: Tensor, levels: int, role: str):
    h, w = x.data.shape[-2], x.data.shape[-1]
    div = 1 << levels
    if h % div or w % div:
        need_h = (div - h % div) % div
        need_w = (div - w % div) % div
        raise ShapeError(
            f"{role} forward: resolution {h}x{w} must be divisible by {div}; "
            f"pad by ({need_h}, {need_w}) pixels")


def _backbone(net: NetParams, x: Tensor) -> Tensor:
    p = net.params
    L = net.arch.levels
    cur = leaky_relu(conv2d(x, p["stem.w"], p["stem.b"], stride=1, pad=1))
    skips = [cur]
    for i in range(1, L + 1):
        cur = leaky_relu(conv2d(cur, p[f"down{i}.w"], p[f"down{i}.b"], stride=2, pad=1))
        if i < L:
            skips.append(cur)
    axis = cur.data.ndim - 3
    for i in range(L, 0, -1):
        merged = concat([upsample2(cur), skips[i - 1]], axis=axis)
        cur = leaky_relu(conv2d(merged, p[f"up{i}.w"], p[f"up{i}.b"], stride=1, pad=1))
    return conv2d(cur, p["head.w"], p["head.b"], stride=1, pad=1)


def deblur_forward(net: NetParams, blurry: Tensor) -> Tensor:
    """Residual deblurring: clamp(blurry + residual, 0, 1), same resolution."""
    if net.role != ROLE_DEBLUR:
        raise ValueError(f"deblur_forward: params built for role {net.role!r}")
    _check_divisible(blurry, net.arch.levels, "deblur")
    residual = _backbone(net, blurry)
    return clamp(add(blurry, residual), 0.0, 1.0)


def motion_forward(net: NetParams, image: Tensor) -> MotionMap:
    """Full-resolution motion map, components bounded by alpha via tanh."""
    if net.role != ROLE_MOTION:
        raise ValueError(f"motion_forward: params built for role {net.role!r}")
    _check_divisible(image, net.arch.levels, "motion")
    raw = _backbone(net, image)
    return MotionMap(scale(tanh(raw), net.arch.alpha), net.arch.alpha)


def discriminator_forward(net: NetParams, image: Tensor) -> Tensor:
    """Patch score map from a stack of stride-2 convolutions; raw scores."""
    if net.role != ROLE_DISC:
        raise ValueError(f"discriminator_forward: params built for role {net.role!r}")
    rf = disc_receptive_field(net.arch)
    h, w = image.data.shape[-2], image.data.shape[-1]
    if h < rf or w < rf:
        raise ShapeError(f"discriminator forward: input {h}x{w} is smaller than "
                         f"the {rf}x{rf} receptive field")
    p = net.params
    cur = image
    for i in range(net.arch.patch_levels):
        cur = leaky_relu(conv2d(cur, p[f"conv{i}.w"], p[f"conv{i}.b"], stride=2, pad=1))
    return conv2d(cur, p["head.w"], p["head.b"], stride=1, pad=1)
