"""Convolution kernel backend selection.

Two interchangeable implementations of the conv2d forward/backward kernels:
a compiled Cython core and a pure-numpy fallback. The compiled one is used
when it imported successfully; ``AAI_KERNELS=python`` or ``AAI_KERNELS=cython``
forces a choice (forcing cython raises if the extension is missing).

Both backends compute the same quantities; they may differ in the last few
floating-point bits because summation order differs. Each backend is
individually deterministic, which is what the reproducibility contracts
require.

Run ``python benchmarks/bench_kernels.py`` for a side-by-side timing.
"""

import os

from . import _convpy

_requested = os.environ.get("AAI_KERNELS", "").strip().lower()

if _requested in ("python", "py", "numpy"):
    _impl = _convpy
    BACKEND = "python"
elif _requested in ("cython", "c", "compiled"):
    from . import _convcore as _impl  # noqa: F401  (raises if not built)
    BACKEND = "cython"
elif _requested == "":
    try:
        from . import _convcore as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _convpy
        BACKEND = "python"
else:
    raise RuntimeError(f"AAI_KERNELS must be 'python' or 'cython', got {_requested!r}")


def backend() -> str:
    """Name of the active kernel backend."""
    return BACKEND


def get_impl(name: str):
    """Return a specific backend module by name (used by tests/benchmarks)."""
    if name == "python":
        return _convpy
    if name == "cython":
        from . import _convcore
        return _convcore
    raise ValueError(f"unknown backend {name!r}")


def conv2d_forward(x, w, bias, stride, pad):
    return _impl.conv2d_forward(x, w, bias, stride, pad)


def conv2d_backward_weights(x, dy, kh, kw, stride, pad):
    return _impl.conv2d_backward_weights(x, dy, kh, kw, stride, pad)


def conv2d_backward_input(dy, w, stride, pad, in_h, in_w):
    return _impl.conv2d_backward_input(dy, w, stride, pad, in_h, in_w)
