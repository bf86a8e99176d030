"""Central finite-difference verification of analytic gradients.

All checks run in float64. The relative error of an analytic/numeric pair is
|a - n| / max(|a|, |n|, 1e-8); operations must stay below 1e-4 and composite
losses below 1e-3.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, backward

STEP = 1e-4
DENOM_FLOOR = 1e-8
OP_TOL = 1e-4
COMPOSITE_TOL = 1e-3


def rel_error(analytic: float, numeric: float) -> float:
    denom = max(abs(analytic), abs(numeric), DENOM_FLOOR)
    return abs(analytic - numeric) / denom


def check_gradients(build, inputs, step: float = STEP, max_coords: int = 32,
                    rng=None) -> float:
    """Compare analytic gradients of ``build(*inputs)`` against central differences.

    ``build`` maps float64 leaf tensors to a scalar-reducible tensor (if the
    output is not scalar it is reduced with ``mean`` internally). At most
    ``max_coords`` coordinates per input are probed (all of them for small
    inputs). Returns the maximum relative error over all probed coordinates.
    """
    from .tensor import reduce_mean

    rng = rng or np.random.default_rng(0)
    leaves = []
    for x in inputs:
        t = Tensor(np.asarray(x, dtype=np.float64), requires_grad=True)
        leaves.append(t)

    def forward_value():
        out = build(*leaves)
        if out.data.size != 1:
            out = reduce_mean(out)
        return out

    out = forward_value()
    backward(out)
    analytic = [None if t.grad is None else t.grad.copy() for t in leaves]

    worst = 0.0
    for t, a in zip(leaves, analytic):
        flat = t.data.reshape(-1)
        n = flat.size
        coords = np.arange(n) if n <= max_coords else rng.choice(n, size=max_coords, replace=False)
        ga = np.zeros(n) if a is None else a.reshape(-1)
        for idx in coords:
            orig = flat[idx]
            flat[idx] = orig + step
            fp = forward_value().item()
            flat[idx] = orig - step
            fm = forward_value().item()
            flat[idx] = orig
            numeric = (fp - fm) / (2.0 * step)
            worst = max(worst, rel_error(float(ga[idx]), numeric))
    return worst


def run_suite(verbose: bool = False):
    """Finite-difference checks for every registered operation plus the
    reblur/objective composites on tiny networks.

    Returns a list of (name, max_rel_error, tolerance) triples.
    """
    from . import conv
    from .tensor import ELEMENTWISE_OPS, STRUCTURAL_OPS

    rng = np.random.default_rng(7)
    results = []

    def record(name, err, tol):
        results.append((name, err, tol))
        if verbose:
            status = "ok" if err < tol else "FAIL"
            print(f"  {name:<24s} max rel err {err:.3e}  (tol {tol:.0e})  {status}")

    for name, (arity, fn) in {**ELEMENTWISE_OPS, **STRUCTURAL_OPS}.items():
        ins = [rng.uniform(-1.5, 1.5, size=(3, 4)) for _ in range(arity)]
        if name == "clamp":
            # keep probes away from the clamp corners where the FD stencil straddles the kink
            ins = [np.where(np.abs(np.abs(a) - 0.75) < 5 * STEP, a * 0.5, a) for a in ins]
        err = check_gradients(fn, ins, rng=rng)
        record(name, err, OP_TOL)

    err = check_gradients(
        lambda x, w, b: conv.conv2d(x, w, b, stride=1, pad=1),
        [rng.standard_normal((2, 3, 6, 6)), rng.standard_normal((4, 3, 3, 3)),
         rng.standard_normal(4)], rng=rng)
    record("conv2d", err, OP_TOL)
    err = check_gradients(
        lambda x, w: conv.conv2d(x, w, stride=2, pad=1),
        [rng.standard_normal((1, 2, 8, 8)), rng.standard_normal((3, 2, 3, 3))], rng=rng)
    record("conv2d_stride2", err, OP_TOL)

    from ..blurcore.warp import reblur as _reblur
    from ..blurcore.warp import warp as _warp
    img = rng.uniform(0.1, 0.9, size=(1, 2, 8, 8))
    off = rng.uniform(-1.5, 1.5, size=(1, 2, 8, 8))
    err = check_gradients(_warp, [img, off], rng=rng)
    record("warp", err, OP_TOL)
    err = check_gradients(lambda i, o: _reblur(i, o, 5), [img, off], rng=rng)
    record("reblur", err, OP_TOL)

    from .. import objectives
    for name, err in objectives.gradcheck_composites(rng):
        record(name, err, COMPOSITE_TOL)

    return results
