"""Backend selection: compiled kernel when available, pure Python otherwise.

Both backends expose the same protocol:

    make_runner(params, tab, scheme, tau, n_steps, record_stride,
                max_hops, eig_sign) -> runner
    runner(r, p, a, ap, w0, uniforms, out) -> (n_hops, aborted, max_weight)

where r/p are float64 arrays mutated in place, uniforms holds at least
2*n_steps pre-drawn U(0,1) doubles, and out is a complex128 array of
length n_steps//record_stride + 1 receiving w0 * W * sigma_z^{aa'} at the
grid times.

The environment variable SSTPSIM_BACKEND forces the choice: "cython",
"python", or "auto" (the default; prefer the kernel, fall back silently).
Results agree between backends to floating-point roundoff, not bitwise:
the compiled kernel sums dot products in a different order than BLAS.
"""

from __future__ import annotations

import os

from . import python_backend

try:
    from . import _sstp_core
except ImportError:
    _sstp_core = None

__all__ = ["get_backend", "available_backends", "BackendError"]


class BackendError(RuntimeError):
    pass


def available_backends() -> list[str]:
    names = ["python"]
    if _sstp_core is not None:
        names.insert(0, "cython")
    return names


def get_backend(name: str | None = None):
    """Return the backend module for `name` (default: env or auto)."""
    if name is None:
        name = os.environ.get("SSTPSIM_BACKEND", "auto")
    name = name.lower()
    if name == "auto":
        return _sstp_core if _sstp_core is not None else python_backend
    if name == "cython":
        if _sstp_core is None:
            raise BackendError("compiled kernel not available; reinstall "
                               "with a C compiler or set "
                               "SSTPSIM_BACKEND=python")
        return _sstp_core
    if name == "python":
        return python_backend
    raise BackendError(f"unknown backend {name!r}; expected cython, python "
                       "or auto")
