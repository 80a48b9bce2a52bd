"""NumPy implementations of the hot kernels (fallback backend).

Semantics match the compiled kernels: im2col/col2im are pure gather/scatter
(bit-identical to the compiled path), pairwise_distances accumulates squared
differences in float64.
"""

import numpy as np


def im2col(x, kh, kw, stride, pad):
    n, c, h, w = x.shape
    if pad > 0:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    windows = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(2, 3))
    windows = windows[:, :, ::stride, :: stride]  # (N, C, OH, OW, kh, kw)
    oh, ow = windows.shape[2], windows.shape[3]
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * oh * ow, c * kh * kw)
    return np.ascontiguousarray(cols)


def col2im(cols, n, c, h, w, kh, kw, stride, pad):
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (w + 2 * pad - kw) // stride + 1
    padded = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=cols.dtype)
    patches = cols.reshape(n, oh, ow, c, kh, kw).transpose(0, 3, 1, 2, 4, 5)
    for ky in range(kh):
        for kx in range(kw):
            padded[:, :, ky : ky + oh * stride : stride, kx : kx + ow * stride : stride] += patches[
                :, :, :, :, ky, kx
            ]
    if pad > 0:
        return np.ascontiguousarray(padded[:, :, pad : pad + h, pad : pad + w])
    return padded


def pairwise_distances(x, chunk=16):
    x = x.astype(np.float64, copy=False)
    m = x.shape[0]
    dist = np.zeros((m, m), dtype=np.float64)
    for start in range(0, m, chunk):
        stop = min(start + chunk, m)
        diff = x[start:stop, None, :] - x[None, :, :]
        dist[start:stop] = np.sqrt(np.sum(diff * diff, axis=-1))
    np.fill_diagonal(dist, 0.0)
    return dist
