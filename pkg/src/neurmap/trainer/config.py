"""Training configuration: a line-based ``key = value`` text format.

Blank lines and ``#`` comments are ignored; unknown keys are rejected. The
original text is kept verbatim so checkpoints echo the exact configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from ..networks import ArchConfig
from ..objectives import LossWeights


class ConfigError(ValueError):
    pass


def _parse_bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("true", "yes", "1"):
        return True
    if s in ("false", "no", "0"):
        return False
    raise ConfigError(f"expected a boolean, got {v!r}")


@dataclass
class TrainConfig:
    paired_dir: str = ""
    unpaired_blurry_dir: str = ""
    unpaired_sharp_dir: str = ""
    out_dir: str = ""
    batch_paired: int = 2
    batch_unpaired: int = 2
    crop: int = 64
    total_steps: int = 5000
    lr_d: float = 5e-5
    lr_m: float = 1e-4
    lr_n: float = 1e-4
    lam: float = 100.0
    beta: float = 0.1
    alpha: float = 40.0
    n_steps: int = 15
    seed: int = 0
    init_seed: int = 1
    checkpoint_interval: int = 1000
    levels: int = 3
    base_channels: int = 16
    patch_levels: int = 3
    disable_reblur_d: bool = False
    disable_reblur_m: bool = False
    disable_tv: bool = False
    disable_natural: bool = False
    disable_sharp: bool = False
    natural_real_set: str = "blurry+sharp"
    unsupervised: bool = False
    text: str = field(default="", repr=False)

    def __post_init__(self):
        self.validate()
        if not self.text:
            self.text = self.to_text()

    def validate(self):
        if self.lr_d <= 0 or self.lr_m <= 0 or self.lr_n <= 0:
            raise ConfigError("learning rates must be positive")
        if self.total_steps < 0:
            raise ConfigError("total_steps must be >= 0")
        if self.batch_paired < 1 or self.batch_unpaired < 1:
            raise ConfigError("batch sizes must be >= 1")
        div = 1 << self.levels
        if self.crop % div:
            raise ConfigError(f"crop {self.crop} must be divisible by 2^levels = {div}")
        if self.n_steps < 2:
            raise ConfigError("n_steps must be >= 2")
        if self.checkpoint_interval < 1:
            raise ConfigError("checkpoint_interval must be >= 1")
        if self.natural_real_set != "blurry+sharp":
            # restricting the natural pool to sharp images destabilizes the
            # critic; rejected rather than exposed as a footgun
            raise ConfigError(
                f"natural_real_set must be 'blurry+sharp', got {self.natural_real_set!r}")
        LossWeights(self.lam, self.beta, self.alpha)
        ArchConfig(self.levels, self.base_channels, self.alpha, self.patch_levels)

    def arch(self) -> ArchConfig:
        return ArchConfig(self.levels, self.base_channels, self.alpha, self.patch_levels)

    def weights(self) -> LossWeights:
        return LossWeights(self.lam, self.beta, self.alpha)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            if f.name == "text":
                continue
            v = getattr(self, f.name)
            key = "lambda" if f.name == "lam" else f.name
            if isinstance(v, bool):
                v = "true" if v else "false"
            lines.append(f"{key} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TrainConfig":
        known = {f.name: f for f in fields(cls) if f.name != "text"}
        kwargs = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            name = "lam" if key == "lambda" else key
            if name == "disable_reblur":
                # shorthand covering both halves of the reblur ablation
                flag = _parse_bool(value)
                kwargs["disable_reblur_d"] = flag
                kwargs["disable_reblur_m"] = flag
                continue
            if name not in known:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            f = known[name]
            try:
                if f.type == "bool" or isinstance(f.default, bool):
                    kwargs[name] = _parse_bool(value)
                elif isinstance(f.default, int) and not isinstance(f.default, bool):
                    kwargs[name] = int(value)
                elif isinstance(f.default, float):
                    kwargs[name] = float(value)
                else:
                    kwargs[name] = value
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
        return cls(text=text, **kwargs)

    @classmethod
    def from_file(cls, path) -> "TrainConfig":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))
