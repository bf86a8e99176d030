"""Loss terms and the three assembled training objectives.

Per-step losses (all means over batch, channels and pixels, so the weights
are resolution-independent):

  reblur     squared error between the blurry input and the reblurred estimate
  m_b        blurry-image motion magnitudes driven toward alpha
  m_s        sharp-image motion driven toward zero
  m_shat     deblurred-image motion pulled toward the (detached) blurry motion
  tv_rel     total variation of the relative motion map
  sharp      deblurred-image motion pulled toward the sharp-batch expectation
  natural_d  least-squares realness of deblurred outputs (generator side)
  natural_n  least-squares real/fake regression (critic side)
  tv_shat    total variation of the deblurred-image motion map
  content    paired supervision ||S_pair - D(B_pair)||^2

The motion-estimator objective combines reblur + the kernel terms + tv_rel;
the deblurrer objective combines reblur + sharp + natural_d + tv_shat; the
critic trains on natural_n alone. Unspecified norms are mean absolute error;
the reconstruction terms stay mean squared error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blurcore.motion import MotionMap, relative_motion
from .blurcore.warp import reblur
from .diffengine import (
    ShapeError,
    Tensor,
    absval,
    add,
    concat,
    mse,
    reduce_mean,
    reduce_sum,
    scale,
    slice_,
    square,
    sub,
)
from .networks import NetParams, deblur_forward, discriminator_forward, motion_forward

LOSS_TERMS = ("reblur", "m_b", "m_s", "m_shat", "tv_rel", "sharp",
              "natural_d", "natural_n", "tv_shat", "content")

M_REPORT_KEYS = frozenset({"reblur", "m_b", "m_s", "m_shat", "tv_rel"})
D_REPORT_KEYS = frozenset({"reblur", "sharp", "natural_d", "tv_shat"})


@dataclass
class LossWeights:
    lam: float = 100.0    # reconstruction weight (reblur and paired content)
    beta: float = 0.1     # natural-image prior weight
    alpha: float = 40.0   # motion magnitude target, pixels

    def __post_init__(self):
        if self.lam < 0 or self.beta < 0 or self.alpha < 0:
            raise ValueError("LossWeights: all weights must be nonnegative")


@dataclass
class Nets:
    d: NetParams
    m: NetParams
    n: NetParams


@dataclass
class UnpairedBatch:
    blurry: Tensor
    sharp: Tensor


def _field(m) -> Tensor:
    return m.tensor if isinstance(m, MotionMap) else m


# ---------------------------------------------------------------------------
# individual terms


def loss_reblur(b: Tensor, s_hat: Tensor, m_rel, n_steps: int) -> Tensor:
    """Mean squared error between B and the reblurred deblurring estimate."""
    if b.data.shape != s_hat.data.shape:
        raise ShapeError(f"loss_reblur: image shapes differ, {b.data.shape} vs {s_hat.data.shape}")
    return mse(b, reblur(s_hat, m_rel, n_steps))


def kernel_prior_terms(m_b, m_s, m_shat, m_b_detached, alpha: float):
    """The three motion priors: |M(B)| -> alpha, M(S) -> 0, M(Shat) -> M(B)."""
    t_mb = reduce_mean(absval(sub(absval(_field(m_b)), float(alpha))))
    t_ms = reduce_mean(absval(_field(m_s)))
    t_mshat = reduce_mean(absval(sub(_field(m_shat), _field(m_b_detached))))
    return t_mb, t_ms, t_mshat


def loss_kernel_prior(m_b, m_s, m_shat, m_b_detached, alpha: float) -> Tensor:
    t_mb, t_ms, t_mshat = kernel_prior_terms(m_b, m_s, m_shat, m_b_detached, alpha)
    return add(add(t_mb, t_ms), t_mshat)


def loss_tv(m) -> Tensor:
    """Total variation of a motion map, summed over both components.

    Horizontal differences are normalized by (w-1)*h, vertical ones by
    w*(h-1); batched maps average over the batch. Degenerate 1-pixel axes
    contribute zero by convention.
    """
    t = _field(m)
    shape = t.data.shape
    h, w = shape[-2], shape[-1]
    nb = shape[0] if len(shape) == 4 else 1
    total = None
    if w >= 2:
        hd = sub(slice_(t, (..., slice(None), slice(1, None))),
                 slice_(t, (..., slice(None), slice(0, -1))))
        term = scale(reduce_sum(absval(hd)), 1.0 / ((w - 1) * h * nb))
        total = term
    if h >= 2:
        vd = sub(slice_(t, (..., slice(1, None), slice(None))),
                 slice_(t, (..., slice(0, -1), slice(None))))
        term = scale(reduce_sum(absval(vd)), 1.0 / (w * (h - 1) * nb))
        total = term if total is None else add(total, term)
    if total is None:
        total = Tensor(np.zeros((), dtype=t.data.dtype))
    return total


def batch_mean_motion(m_s) -> np.ndarray:
    """Detached per-component mean of a motion map batch: the sharp-image
    motion expectation used as the sharpness target."""
    d = _field(m_s).data
    if d.ndim == 4:
        return d.mean(axis=(0, 2, 3))
    return d.mean(axis=(1, 2))


def loss_sharp(m_shat, target: np.ndarray) -> Tensor:
    """Mean absolute deviation of the deblurred-image motion from a fixed
    per-component target vector (detached)."""
    t = _field(m_shat)
    full = np.empty_like(t.data)
    if t.data.ndim == 4:
        full[:, 0] = target[0]
        full[:, 1] = target[1]
    else:
        full[0] = target[0]
        full[1] = target[1]
    return reduce_mean(absval(sub(t, Tensor(full))))


def loss_gan(d_scores_fake: Tensor, d_scores_real: Tensor | None, side: str) -> Tensor:
    """Least-squares adversarial loss; natural images carry label 1, fakes 0.

    side "N": critic regression on both pools. side "D": generator term, only
    the fake scores pulled toward 1.
    """
    if side == "N":
        if d_scores_real is None:
            raise ValueError("loss_gan: side 'N' needs real scores")
        return add(reduce_mean(square(d_scores_fake)),
                   reduce_mean(square(sub(d_scores_real, 1.0))))
    if side == "D":
        return reduce_mean(square(sub(d_scores_fake, 1.0)))
    raise ValueError(f"loss_gan: side must be 'D' or 'N', got {side!r}")


def loss_content(s_pair: Tensor, d_of_b_pair: Tensor) -> Tensor:
    if s_pair.data.shape != d_of_b_pair.data.shape:
        raise ShapeError(f"loss_content: shapes differ, "
                         f"{s_pair.data.shape} vs {d_of_b_pair.data.shape}")
    return mse(s_pair, d_of_b_pair)


# ---------------------------------------------------------------------------
# assembled objectives


def objective_M(batch: UnpairedBatch, nets: Nets, weights: LossWeights,
                n_steps: int = 15, *, disable_reblur: bool = False,
                disable_tv: bool = False, m_b_anchor: Tensor | None = None,
                s_hat: Tensor | None = None):
    """Motion-estimator objective: lam*reblur + kernel priors + tv_rel.

    The deblurrer is frozen; a precomputed detached ``s_hat`` for this batch
    may be passed to avoid rerunning it. The blurry, sharp and deblurred
    images go through the motion estimator as one stacked batch (samples are
    independent, so the values are unchanged). ``m_b_anchor`` overrides the
    detached blurry motion used as the third kernel-prior target; passing a
    constant keeps finite-difference checks exact (the default detach is
    equivalent for values and analytic gradients).
    """
    b, s = batch.blurry, batch.sharp
    if s_hat is None:
        s_hat = deblur_forward(nets.d.detached(), b).detach()
    nb, ns = b.data.shape[0], s.data.shape[0]
    m_all = motion_forward(nets.m, concat([b, s, s_hat], axis=0)).tensor
    alpha = nets.m.arch.alpha
    m_b = MotionMap(slice_(m_all, slice(0, nb)), alpha)
    m_s = MotionMap(slice_(m_all, slice(nb, nb + ns)), alpha)
    m_shat = MotionMap(slice_(m_all, slice(nb + ns, 2 * nb + ns)), alpha)
    anchor = m_b_anchor if m_b_anchor is not None else m_b.tensor.detach()
    m_rel = relative_motion(m_b, m_shat)

    t_mb, t_ms, t_mshat = kernel_prior_terms(m_b, m_s, m_shat, anchor, weights.alpha)
    report = {"m_b": t_mb.item(), "m_s": t_ms.item(), "m_shat": t_mshat.item()}
    total = add(add(t_mb, t_ms), t_mshat)
    if not disable_reblur:
        rb = loss_reblur(b, s_hat, m_rel, n_steps)
        report["reblur"] = rb.item()
        total = add(total, scale(rb, weights.lam))
    if not disable_tv:
        tv = loss_tv(m_rel)
        report["tv_rel"] = tv.item()
        total = add(total, tv)
    return total, report


def objective_D(batch: UnpairedBatch, nets: Nets, weights: LossWeights,
                n_steps: int = 15, *, disable_reblur: bool = False,
                disable_tv: bool = False, disable_natural: bool = False,
                disable_sharp: bool = False):
    """Deblurrer objective: lam*reblur + sharp prior + beta*natural + tv_shat.

    The motion estimator and the critic are frozen; gradients flow through
    them into the deblurrer only.
    """
    b, s = batch.blurry, batch.sharp
    m_frozen = nets.m.detached()
    s_hat = deblur_forward(nets.d, b)
    m_shat = motion_forward(m_frozen, s_hat)
    nb = b.data.shape[0]

    report = {}
    total = None

    def _add(term):
        nonlocal total
        total = term if total is None else add(total, term)

    m_aux = None
    if not disable_reblur or not disable_sharp:
        # frozen net on leaf inputs: a gradient-free stacked forward
        m_aux = motion_forward(m_frozen, concat([b, s], axis=0)).tensor.data
    if not disable_reblur:
        m_b = Tensor(m_aux[:nb])
        m_rel = sub(m_b, m_shat.tensor)
        rb = loss_reblur(b, s_hat, m_rel, n_steps)
        report["reblur"] = rb.item()
        _add(scale(rb, weights.lam))
    if not disable_sharp:
        target = m_aux[nb:].mean(axis=(0, 2, 3))
        sh = loss_sharp(m_shat, target)
        report["sharp"] = sh.item()
        _add(sh)
    if not disable_natural and weights.beta != 0.0:
        fake = discriminator_forward(nets.n.detached(), s_hat)
        nat = loss_gan(fake, None, "D")
        report["natural_d"] = nat.item()
        _add(scale(nat, weights.beta))
    if not disable_tv:
        tv = loss_tv(m_shat)
        report["tv_shat"] = tv.item()
        _add(tv)
    if total is None:
        total = Tensor(np.zeros((), dtype=b.data.dtype))
    return total, report


def objective_N(batch: UnpairedBatch, nets: Nets, s_hat: Tensor | None = None):
    """Critic objective: regress deblurred outputs to 0 and the natural pool
    (blurry and sharp images together) to 1. The deblurrer is frozen; a
    precomputed detached ``s_hat`` may be passed to avoid rerunning it."""
    b, s = batch.blurry, batch.sharp
    if s_hat is None:
        s_hat = deblur_forward(nets.d.detached(), b).detach()
    nb = b.data.shape[0]
    scores = discriminator_forward(nets.n, concat([s_hat, b, s], axis=0))
    fake = slice_(scores, slice(0, nb))
    real = slice_(scores, slice(nb, None))
    total = loss_gan(fake, real, "N")
    return total, {"natural_n": total.item()}


# ---------------------------------------------------------------------------
# finite-difference harness for the composites


def _f64_net(net: NetParams) -> NetParams:
    out = NetParams(net.role, net.arch, net.init_seed)
    out.params = {k: Tensor(v.data.astype(np.float64), requires_grad=True)
                  for k, v in net.params.items()}
    return out


COMPOSITE_FD_STEP = 1e-6  # L1 terms have kinks; the step must stay well inside
#                           the distance from the evaluation point to the
#                           nearest kink or central differences average slopes


def gradcheck_composites(rng):
    """(name, max_rel_error) for loss_reblur and the two generator-side
    objectives, differentiated through tiny float64 networks on 16x16 crops."""
    from .diffengine.gradcheck import check_gradients
    from .networks import ArchConfig, init_params

    arch = ArchConfig(levels=2, base_channels=4, alpha=4.0, patch_levels=2)
    weights = LossWeights(lam=10.0, beta=0.1, alpha=4.0)
    nets = Nets(d=_f64_net(init_params(arch, "D", 101)),
                m=_f64_net(init_params(arch, "M", 102)),
                n=_f64_net(init_params(arch, "N", 103)))
    # Nudge the zero-initialized heads hard enough that the L1 terms sit far
    # from their kinks relative to the finite-difference step.
    for net in (nets.d, nets.m):
        hw = net.params["head.w"]
        hw.data = hw.data + rng.normal(0.0, 0.4, size=hw.data.shape)

    b_arr = rng.uniform(0.25, 0.75, size=(1, 3, 16, 16))
    s_arr = rng.uniform(0.25, 0.75, size=(1, 3, 16, 16))
    results = []

    err = check_gradients(
        lambda bb, ss, mm: loss_reblur(bb, ss, mm, 3),
        [rng.uniform(0.1, 0.9, (1, 3, 8, 8)), rng.uniform(0.1, 0.9, (1, 3, 8, 8)),
         rng.uniform(-1.2, 1.2, (1, 2, 8, 8))], rng=rng)
    results.append(("loss_reblur", err))

    batch = UnpairedBatch(Tensor(b_arr), Tensor(s_arr))
    anchor = motion_forward(nets.m, batch.blurry).tensor.detach()

    m_names = list(nets.m.params)

    def build_m(*leaves):
        mp = NetParams(nets.m.role, nets.m.arch, nets.m.init_seed)
        mp.params = dict(zip(m_names, leaves))
        total, _ = objective_M(batch, Nets(nets.d, mp, nets.n), weights,
                               n_steps=3, m_b_anchor=anchor)
        return total

    err = check_gradients(build_m, [nets.m.params[k].data for k in m_names],
                          step=COMPOSITE_FD_STEP, max_coords=6, rng=rng)
    results.append(("objective_M", err))

    d_names = list(nets.d.params)

    def build_d(*leaves):
        dp = NetParams(nets.d.role, nets.d.arch, nets.d.init_seed)
        dp.params = dict(zip(d_names, leaves))
        total, _ = objective_D(batch, Nets(dp, nets.m, nets.n), weights, n_steps=3)
        return total

    err = check_gradients(build_d, [nets.d.params[k].data for k in d_names],
                          step=COMPOSITE_FD_STEP, max_coords=6, rng=rng)
    results.append(("objective_D", err))
    return results
