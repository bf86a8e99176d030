"""The alternating semi-supervised training loop.

Every step performs three isolated sub-updates in a fixed order: first the
natural-image critic, then the motion estimator, then the deblurrer (whose
unpaired objective is joined by the weighted paired content loss). Each
sub-update builds its own graph, backpropagates, and applies its own Adam
state at a linearly decaying learning rate. A non-finite objective aborts the
whole step with all state rolled back.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from ..blurcore.io import save_image
from ..blurcore.motion import MotionMap
from ..blurcore.warp import reblur
from ..diffengine import AdamState, Tensor, adam_step, backward, scale as t_scale
from ..evalcli.flow import flow_to_color
from ..networks import deblur_forward, init_params, motion_forward
from ..objectives import (
    LOSS_TERMS,
    Nets,
    UnpairedBatch,
    loss_content,
    objective_D,
    objective_M,
    objective_N,
)
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import TrainConfig
from .data import Pools, draw_batches, load_pools

log = logging.getLogger(__name__)

MAX_CONSECUTIVE_ABORTS = 50


def lr_at(step: int, lr0: float, total_steps: int) -> float:
    """Linear decay from lr0 at step 0 to exactly 0 at total_steps."""
    if step < 0 or step > total_steps:
        raise ValueError(f"lr_at: step {step} outside [0, {total_steps}]")
    if total_steps == 0:
        return 0.0
    return lr0 * (1.0 - step / total_steps)


class Trainer:
    def __init__(self, cfg: TrainConfig, resume: Checkpoint | None = None):
        self.cfg = cfg
        arch = cfg.arch()
        if resume is not None:
            self.nets = resume.nets
            self.adam = resume.adam
            self.step = resume.step
            self.rng = np.random.default_rng(0)
            self.rng.bit_generator.state = resume.rng_state
        else:
            self.nets = Nets(d=init_params(arch, "D", cfg.init_seed),
                             m=init_params(arch, "M", cfg.init_seed + 1),
                             n=init_params(arch, "N", cfg.init_seed + 2))
            self.adam = {"D": AdamState(self.nets.d.params),
                         "M": AdamState(self.nets.m.params),
                         "N": AdamState(self.nets.n.params)}
            self.step = 0
            self.rng = np.random.default_rng(cfg.seed)

    # -- sub-updates -------------------------------------------------------

    def _apply(self, role: str, net, total) -> float:
        value = total.item()
        if np.isfinite(value):
            net.zero_grad()
            backward(total)
            lr0 = {"D": self.cfg.lr_d, "M": self.cfg.lr_m, "N": self.cfg.lr_n}[role]
            lr = lr_at(self.step, lr0, self.cfg.total_steps)
            adam_step(net.params, net.grads(), self.adam[role], lr)
            net.zero_grad()
        return value

    def update_critic(self, batch: UnpairedBatch):
        if self.cfg.disable_natural:
            return 0.0, {}
        total, report = objective_N(batch, self.nets)
        return self._apply("N", self.nets.n, total), report

    def update_motion(self, batch: UnpairedBatch):
        total, report = objective_M(batch, self.nets, self.cfg.weights(),
                                    n_steps=self.cfg.n_steps,
                                    disable_reblur=self.cfg.disable_reblur_m,
                                    disable_tv=self.cfg.disable_tv)
        return self._apply("M", self.nets.m, total), report

    def update_deblur(self, batch: UnpairedBatch, paired_blurry, paired_sharp):
        total, report = objective_D(batch, self.nets, self.cfg.weights(),
                                    n_steps=self.cfg.n_steps,
                                    disable_reblur=self.cfg.disable_reblur_d,
                                    disable_tv=self.cfg.disable_tv,
                                    disable_natural=self.cfg.disable_natural,
                                    disable_sharp=self.cfg.disable_sharp)
        if paired_blurry is not None:
            content = loss_content(paired_sharp, deblur_forward(self.nets.d, paired_blurry))
            report["content"] = content.item()
            total = total + t_scale(content, self.cfg.lam)
        return self._apply("D", self.nets.d, total), report

    # -- one full step -----------------------------------------------------

    def _snapshot(self):
        snap = {}
        for role, net in (("D", self.nets.d), ("M", self.nets.m), ("N", self.nets.n)):
            state = self.adam[role]
            snap[role] = ({k: v.data.copy() for k, v in net.params.items()},
                          {k: v.copy() for k, v in state.m.items()},
                          {k: v.copy() for k, v in state.v.items()},
                          state.t)
        return snap

    def _restore(self, snap):
        for role, net in (("D", self.nets.d), ("M", self.nets.m), ("N", self.nets.n)):
            params, m, v, t = snap[role]
            for k, tensor in net.params.items():
                tensor.data = params[k]
            state = self.adam[role]
            state.m = m
            state.v = v
            state.t = t

    def train_step(self, paired_blurry, paired_sharp, batch: UnpairedBatch):
        """Three sub-updates (critic, motion, deblurrer); returns (ok, report).

        If any sub-objective is non-finite the step is aborted: parameters,
        optimizer state and the step counter all stay as they were.
        """
        snap = self._snapshot()
        values = {}
        values["N"], rep_n = self.update_critic(batch)
        values["M"], rep_m = self.update_motion(batch)
        values["D"], rep_d = self.update_deblur(batch, paired_blurry, paired_sharp)
        if not all(np.isfinite(v) for v in values.values()):
            self._restore(snap)
            breakdown = {**rep_n, **rep_d, **rep_m}
            log.error("step %d aborted: non-finite objective %s; term breakdown: %s",
                      self.step, values, breakdown)
            return False, breakdown
        self.step += 1
        report = {}
        report.update(rep_n)
        report.update(rep_d)
        report.update(rep_m)   # the motion step's reblur value wins the shared key
        return True, report

    # -- full run ----------------------------------------------------------

    def to_checkpoint(self) -> Checkpoint:
        return Checkpoint(step=self.step, nets=self.nets, adam=self.adam,
                          config_text=self.cfg.text,
                          rng_state=self.rng.bit_generator.state)

    def _write_samples(self, pools: Pools, out: Path):
        imgs = pools.unpaired_blurry[:4]
        if not imgs:
            return
        div = 1 << self.cfg.levels
        cols = []
        for img in imgs:
            if img.shape[1] % div or img.shape[2] % div:
                log.warning("sample grid skipped: image %s not divisible by %d",
                            img.shape, div)
                return
            b = Tensor(img[None])
            s_hat = deblur_forward(self.nets.d.detached(), b).detach()
            m_b = motion_forward(self.nets.m.detached(), b)
            m_shat = motion_forward(self.nets.m.detached(), s_hat)
            m_rel = Tensor(m_b.tensor.data - m_shat.tensor.data)
            reblurred = reblur(s_hat, m_rel, self.cfg.n_steps)
            flow = flow_to_color(MotionMap(Tensor(m_rel.data[0]), self.cfg.alpha),
                                 max_norm=max(1.0, float(np.abs(m_rel.data).max())))
            cols.append(np.concatenate([img, s_hat.data[0], reblurred.data[0], flow], axis=1))
        grid = np.concatenate(cols, axis=2)
        save_image(grid, out / "samples" / f"step_{self.step:06d}.png")

    def train(self) -> Checkpoint:
        cfg = self.cfg
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        pools = load_pools(cfg)

        log_path = out / "loss_log.csv"
        new_log = self.step == 0 or not log_path.exists()
        log_file = open(log_path, "w" if new_log else "a", encoding="utf-8")
        if new_log:
            log_file.write("step,lr," + ",".join(LOSS_TERMS) + "\n")

        aborts = 0
        try:
            while self.step < cfg.total_steps:
                lr = lr_at(self.step, cfg.lr_d, cfg.total_steps)
                pb, ps, batch = draw_batches(pools, cfg, self.rng)
                ok, report = self.train_step(pb, ps, batch)
                if not ok:
                    aborts += 1
                    if aborts >= MAX_CONSECUTIVE_ABORTS:
                        raise RuntimeError(
                            f"{aborts} consecutive aborted steps; training is diverging")
                    continue
                aborts = 0
                cells = [f"{report[k]:.6g}" if k in report else "" for k in LOSS_TERMS]
                log_file.write(f"{self.step},{lr:.8g}," + ",".join(cells) + "\n")
                if self.step % cfg.checkpoint_interval == 0 and self.step < cfg.total_steps:
                    save_checkpoint(self.to_checkpoint(), out / f"ckpt_{self.step:06d}.nmck")
                    log_file.flush()
                    self._write_samples(pools, out)
        finally:
            log_file.close()

        final = self.to_checkpoint()
        save_checkpoint(final, out / "ckpt_final.nmck")
        self._write_samples(pools, out)
        return final


def train(cfg: TrainConfig | None = None, resume_path=None) -> Checkpoint:
    """Run a full training; with ``resume_path`` the checkpoint's own config
    echo governs the continuation so the run stays bit-compatible."""
    if resume_path is not None:
        ckpt = load_checkpoint(resume_path)
        cfg = TrainConfig.from_text(ckpt.config_text)
        return Trainer(cfg, resume=ckpt).train()
    if cfg is None:
        raise ValueError("train: need a config or a resume path")
    return Trainer(cfg).train()
