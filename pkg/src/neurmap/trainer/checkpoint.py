"""Versioned binary checkpoints: all network parameters, optimizer state,
step counter, RNG state and a verbatim config echo.

Layout (little-endian): magic b"NMCK", uint32 version, uint64 step,
uint32 record count, then per record: uint32 name length, name bytes (utf-8),
uint32 rank, rank uint32 extents, float32 payload. After the records a
uint32-length-prefixed JSON block holds Adam step counters, the RNG state and
the config text. Save -> load -> save is byte-identical.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..diffengine import AdamState
from ..networks import init_params
from ..objectives import Nets
from .config import TrainConfig

MAGIC = b"NMCK"
VERSION = 1


@dataclass
class Checkpoint:
    step: int
    nets: Nets
    adam: dict[str, AdamState]
    config_text: str
    rng_state: dict


def _iter_records(ckpt: Checkpoint):
    for role, net in (("D", ckpt.nets.d), ("M", ckpt.nets.m), ("N", ckpt.nets.n)):
        for name, t in net.params.items():
            yield f"param.{role}.{name}", t.data
        state = ckpt.adam[role]
        for name in net.params:
            yield f"adam_m.{role}.{name}", state.m[name]
        for name in net.params:
            yield f"adam_v.{role}.{name}", state.v[name]


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    records = list(_iter_records(ckpt))
    meta = {
        "adam_t": {role: ckpt.adam[role].t for role in ("D", "M", "N")},
        "rng": ckpt.rng_state,
        "config": ckpt.config_text,
    }
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<IQ", VERSION, ckpt.step))
        f.write(struct.pack("<I", len(records)))
        for name, arr in records:
            nb = name.encode("utf-8")
            a = np.ascontiguousarray(arr, dtype="<f4")
            f.write(struct.pack("<I", len(nb)))
            f.write(nb)
            f.write(struct.pack("<I", a.ndim))
            f.write(struct.pack(f"<{a.ndim}I", *a.shape))
            f.write(a.tobytes())
        f.write(struct.pack("<I", len(meta_bytes)))
        f.write(meta_bytes)


class _Reader:
    def __init__(self, raw: bytes, path):
        self.raw = raw
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.raw):
            raise ValueError(f"{self.path}: truncated checkpoint "
                             f"(wanted {n} bytes at offset {self.pos}, have {len(self.raw)})")
        out = self.raw[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def load_checkpoint(path) -> Checkpoint:
    raw = Path(path).read_bytes()
    r = _Reader(raw, path)
    if r.take(4) != MAGIC:
        raise ValueError(f"{path}: bad magic, not a checkpoint file")
    version = r.u32()
    if version != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version} (expected {VERSION})")
    step = struct.unpack("<Q", r.take(8))[0]
    n_records = r.u32()
    arrays: dict[str, np.ndarray] = {}
    for _ in range(n_records):
        name = r.take(r.u32()).decode("utf-8")
        rank = r.u32()
        shape = struct.unpack(f"<{rank}I", r.take(4 * rank))
        count = int(np.prod(shape)) if rank else 1
        arrays[name] = np.frombuffer(r.take(4 * count), dtype="<f4").reshape(shape).copy()
    meta = json.loads(r.take(r.u32()).decode("utf-8"))
    if r.pos != len(raw):
        raise ValueError(f"{path}: {len(raw) - r.pos} trailing bytes after checkpoint payload")

    cfg = TrainConfig.from_text(meta["config"])
    arch = cfg.arch()
    nets = Nets(d=init_params(arch, "D", cfg.init_seed),
                m=init_params(arch, "M", cfg.init_seed + 1),
                n=init_params(arch, "N", cfg.init_seed + 2))
    adam: dict[str, AdamState] = {}
    for role, net in (("D", nets.d), ("M", nets.m), ("N", nets.n)):
        for name, t in net.params.items():
            key = f"param.{role}.{name}"
            if key not in arrays:
                raise ValueError(f"{path}: missing tensor record {key}")
            if arrays[key].shape != t.data.shape:
                raise ValueError(f"{path}: shape mismatch for {key}: "
                                 f"{arrays[key].shape} vs {t.data.shape}")
            t.data = arrays[key]
        state = AdamState(net.params)
        for name in net.params:
            state.m[name] = arrays[f"adam_m.{role}.{name}"]
            state.v[name] = arrays[f"adam_v.{role}.{name}"]
        state.t = meta["adam_t"][role]
        adam[role] = state
    return Checkpoint(step=step, nets=nets, adam=adam,
                      config_text=meta["config"], rng_state=meta["rng"])
