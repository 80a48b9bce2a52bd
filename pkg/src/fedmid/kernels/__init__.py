"""Numeric hot kernels with a compiled fast path.

The Cython extension (``_ckernels``) is built at install time when a C
compiler is present; otherwise the NumPy implementations are selected at
import. ``set_backend`` allows explicit selection, used by the tests and the
kernel benchmark.
"""

import numpy as np

from . import _npkernels

try:
    from . import _ckernels
except ImportError:  # pragma: no cover - depends on build environment
    _ckernels = None

_BACKENDS = {"numpy": _npkernels}
if _ckernels is not None:
    _BACKENDS["compiled"] = _ckernels

_active_name = "compiled" if _ckernels is not None else "numpy"
_active = _BACKENDS[_active_name]


def available_backends():
    return tuple(sorted(_BACKENDS))


def active_backend():
    return _active_name


def set_backend(name):
    """Select the kernel backend by name ('compiled' or 'numpy')."""
    global _active, _active_name
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}; available: {available_backends()}")
    _active_name = name
    _active = _BACKENDS[name]


def _as_real(x, ndim, name):
    x = np.ascontiguousarray(x)
    if x.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {x.shape}")
    if x.dtype not in (np.float32, np.float64):
        x = x.astype(np.float64)
    return x


def im2col(x, kh, kw, stride=1, pad=0):
    """Gather conv patches of x (N,C,H,W) into a (N*OH*OW, C*kh*kw) matrix."""
    return _active.im2col(_as_real(x, 4, "x"), kh, kw, stride, pad)


def col2im(cols, x_shape, kh, kw, stride=1, pad=0):
    """Adjoint of im2col: scatter-add patch rows back to shape x_shape."""
    n, c, h, w = x_shape
    return _active.col2im(_as_real(cols, 2, "cols"), n, c, h, w, kh, kw, stride, pad)


def pairwise_distances(x):
    """Euclidean distance matrix (float64) between the rows of x."""
    x = _as_real(x, 2, "x")
    if x.dtype != np.float64:
        # one upfront convert keeps the hot loop on vectorizable float64
        x = x.astype(np.float64)
    return _active.pairwise_distances(x)
