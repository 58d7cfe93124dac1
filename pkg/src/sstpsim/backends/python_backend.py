"""Pure-Python trajectory runner, the fallback when the compiled kernel
is unavailable (and the ground truth it is tested against).

Wraps propagator.run_trajectory behind the backend protocol: a factory
returning a per-trajectory callable fed with pre-drawn uniforms, so a
trajectory replays bit-identically no matter how the caller schedules it.
"""

from __future__ import annotations

import numpy as np

from ..propagator import run_trajectory
from ..sampling import InitialDraw

name = "python"


class _BufferDraws:
    """Minimal stand-in for a Generator: .random() pops pre-drawn uniforms.

    numpy Generators hand out the same doubles whether drawn one at a time
    or as a block, so feeding the block through this adapter reproduces a
    live-Generator run exactly.
    """

    __slots__ = ("_buf", "_i")

    def __init__(self, buf):
        self._buf = buf
        self._i = 0

    def random(self) -> float:
        v = self._buf[self._i]
        self._i += 1
        return float(v)


def make_runner(params, tab, scheme, tau, n_steps, record_stride, max_hops,
                eig_sign):
    """Bind run parameters, return runner(r, p, a, ap, w0, uniforms, out).

    eig_sign is accepted for protocol compatibility; the reference code
    reads the model module's convention constant directly.
    """
    n_rec = n_steps // record_stride + 1
    t_grid = tau * record_stride * np.arange(n_rec)

    def run_one(r, p, a, ap, w0, uniforms, out):
        draw = InitialDraw(r0=r, p0=p, pair0=(a, ap), w0=w0)
        res = run_trajectory(draw, t_grid, tau, scheme,
                             _BufferDraws(uniforms), tab, params,
                             max_hops=max_hops)
        out[:] = res.contrib
        return res.n_hops, res.aborted, res.max_weight

    return run_one
