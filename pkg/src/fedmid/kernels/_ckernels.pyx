# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: conv patch gather/scatter and pairwise distances."""

from libc.math cimport sqrt

import numpy as np

cimport cython


ctypedef fused real:
    float
    double


def im2col(real[:, :, :, ::1] x, int kh, int kw, int stride, int pad):
    """Gather conv patches of ``x`` (N,C,H,W) into rows (N*OH*OW, C*kh*kw)."""
    cdef Py_ssize_t n_batch = x.shape[0]
    cdef Py_ssize_t ch = x.shape[1]
    cdef Py_ssize_t h = x.shape[2]
    cdef Py_ssize_t w = x.shape[3]
    cdef Py_ssize_t oh = (h + 2 * pad - kh) // stride + 1
    cdef Py_ssize_t ow = (w + 2 * pad - kw) // stride + 1

    if real is float:
        out_arr = np.zeros((n_batch * oh * ow, ch * kh * kw), dtype=np.float32)
    else:
        out_arr = np.zeros((n_batch * oh * ow, ch * kh * kw), dtype=np.float64)
    cdef real[:, ::1] cols = out_arr

    cdef Py_ssize_t n, c, oy, ox, ky, kx, iy, ix, row, col
    with nogil:
        for n in range(n_batch):
            for oy in range(oh):
                for ox in range(ow):
                    row = (n * oh + oy) * ow + ox
                    for c in range(ch):
                        for ky in range(kh):
                            iy = oy * stride + ky - pad
                            if iy < 0 or iy >= h:
                                continue
                            for kx in range(kw):
                                ix = ox * stride + kx - pad
                                if ix < 0 or ix >= w:
                                    continue
                                col = (c * kh + ky) * kw + kx
                                cols[row, col] = x[n, c, iy, ix]
    return out_arr


def col2im(real[:, ::1] cols, int n_batch, int ch, int h, int w,
           int kh, int kw, int stride, int pad):
    """Scatter-add patch rows back onto an (N,C,H,W) gradient (im2col adjoint)."""
    cdef Py_ssize_t oh = (h + 2 * pad - kh) // stride + 1
    cdef Py_ssize_t ow = (w + 2 * pad - kw) // stride + 1

    if real is float:
        out_arr = np.zeros((n_batch, ch, h, w), dtype=np.float32)
    else:
        out_arr = np.zeros((n_batch, ch, h, w), dtype=np.float64)
    cdef real[:, :, :, ::1] x = out_arr

    cdef Py_ssize_t n, c, oy, ox, ky, kx, iy, ix, row, col
    with nogil:
        for n in range(n_batch):
            for oy in range(oh):
                for ox in range(ow):
                    row = (n * oh + oy) * ow + ox
                    for c in range(ch):
                        for ky in range(kh):
                            iy = oy * stride + ky - pad
                            if iy < 0 or iy >= h:
                                continue
                            for kx in range(kw):
                                ix = ox * stride + kx - pad
                                if ix < 0 or ix >= w:
                                    continue
                                col = (c * kh + ky) * kw + kx
                                x[n, c, iy, ix] += cols[row, col]
    return out_arr


def pairwise_distances(real[:, ::1] x):
    """Euclidean distance matrix of the rows of ``x``, accumulated in float64.

    Four independent accumulators per pair keep the loop vectorizable
    without reassociation flags.
    """
    cdef Py_ssize_t m = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    out_arr = np.zeros((m, m), dtype=np.float64)
    cdef double[:, ::1] dist = out_arr

    cdef Py_ssize_t i, j, k
    cdef Py_ssize_t d4 = d - (d % 4)
    cdef double acc, a0, a1, a2, a3, e0, e1, e2, e3
    with nogil:
        for i in range(m):
            for j in range(i + 1, m):
                a0 = a1 = a2 = a3 = 0.0
                for k in range(0, d4, 4):
                    e0 = (<double> x[i, k]) - (<double> x[j, k])
                    e1 = (<double> x[i, k + 1]) - (<double> x[j, k + 1])
                    e2 = (<double> x[i, k + 2]) - (<double> x[j, k + 2])
                    e3 = (<double> x[i, k + 3]) - (<double> x[j, k + 3])
                    a0 += e0 * e0
                    a1 += e1 * e1
                    a2 += e2 * e2
                    a3 += e3 * e3
                acc = (a0 + a1) + (a2 + a3)
                for k in range(d4, d):
                    e0 = (<double> x[i, k]) - (<double> x[j, k])
                    acc += e0 * e0
                acc = sqrt(acc)
                dist[i, j] = acc
                dist[j, i] = acc
    return out_arr
