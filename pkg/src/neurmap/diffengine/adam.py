"""Adam optimizer with bias correction (beta1=0.9, beta2=0.999, eps=1e-8)."""

from __future__ import annotations

import logging

import numpy as np

log = logging.getLogger(__name__)

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8


class AdamState:
    """First/second-moment buffers and step counter for one parameter group."""

    def __init__(self, params):
        self.m = {name: np.zeros_like(t.data) for name, t in params.items()}
        self.v = {name: np.zeros_like(t.data) for name, t in params.items()}
        self.t = 0


def adam_step(params, grads, state: AdamState, lr: float):
    """One Adam update over a named parameter group, in place.

    ``grads`` maps name -> ndarray or None (None counts as zero). If any
    gradient in the group is non-finite the whole group's step is rejected:
    parameters, moments and the counter stay untouched and the event is
    logged.

    Returns (params, state) for convenience.
    """
    if lr < 0:
        raise ValueError(f"adam_step: learning rate must be >= 0, got {lr}")
    for name, g in grads.items():
        if g is not None and not np.isfinite(g).all():
            log.warning("adam_step: non-finite gradient for %r, step rejected for the group", name)
            return params, state
    state.t += 1
    bc1 = 1.0 - BETA1 ** state.t
    bc2 = 1.0 - BETA2 ** state.t
    for name, p in params.items():
        g = grads.get(name)
        m, v = state.m[name], state.v[name]
        if g is None:
            m *= BETA1
            v *= BETA2
        else:
            m *= BETA1
            m += (1.0 - BETA1) * g
            v *= BETA2
            v += (1.0 - BETA2) * (g * g)
        if lr != 0.0:
            p.data -= (lr * (m / bc1)) / (np.sqrt(v / bc2) + EPS)
    return params, state
