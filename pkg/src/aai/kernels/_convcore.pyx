# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled convolution kernels (direct loops, no im2col materialization)."""

import numpy as np

cimport cython
from cython cimport floating


def conv2d_forward(floating[:, :, :, ::1] x, floating[:, :, :, ::1] w,
                   bias, int stride, int pad):
    cdef Py_ssize_t B = x.shape[0], Cin = x.shape[1], H = x.shape[2], W = x.shape[3]
    cdef Py_ssize_t Cout = w.shape[0], kh = w.shape[2], kw = w.shape[3]
    if w.shape[1] != Cin:
        raise ValueError(f"channel mismatch: input has {Cin}, weight expects {w.shape[1]}")
    cdef Py_ssize_t Ho = (H + 2 * pad - kh) // stride + 1
    cdef Py_ssize_t Wo = (W + 2 * pad - kw) // stride + 1

    dtype = np.float32 if floating is float else np.float64
    y_arr = np.zeros((B, Cout, Ho, Wo), dtype=dtype)
    cdef floating[:, :, :, ::1] y = y_arr
    cdef floating[::1] bview
    cdef bint has_bias = bias is not None
    if has_bias:
        bview = np.ascontiguousarray(bias, dtype=dtype)

    cdef Py_ssize_t b, o, c, u, v, i, j, iy, jx
    cdef floating acc, wv
    with nogil:
        for b in range(B):
            for o in range(Cout):
                for c in range(Cin):
                    for u in range(kh):
                        for v in range(kw):
                            wv = w[o, c, u, v]
                            if wv == 0.0:
                                continue
                            for i in range(Ho):
                                iy = i * stride + u - pad
                                if iy < 0 or iy >= H:
                                    continue
                                for j in range(Wo):
                                    jx = j * stride + v - pad
                                    if 0 <= jx < W:
                                        y[b, o, i, j] += wv * x[b, c, iy, jx]
                if has_bias:
                    for i in range(Ho):
                        for j in range(Wo):
                            y[b, o, i, j] += bview[o]
    return y_arr


def conv2d_backward_weights(floating[:, :, :, ::1] x, floating[:, :, :, ::1] dy,
                            int kh, int kw, int stride, int pad):
    cdef Py_ssize_t B = x.shape[0], Cin = x.shape[1], H = x.shape[2], W = x.shape[3]
    cdef Py_ssize_t Cout = dy.shape[1], Ho = dy.shape[2], Wo = dy.shape[3]

    dtype = np.float32 if floating is float else np.float64
    dw_arr = np.zeros((Cout, Cin, kh, kw), dtype=dtype)
    db_arr = np.zeros(Cout, dtype=dtype)
    cdef floating[:, :, :, ::1] dw = dw_arr
    cdef floating[::1] db = db_arr

    cdef Py_ssize_t b, o, c, u, v, i, j, iy, jx
    cdef floating acc, g
    with nogil:
        for o in range(Cout):
            for b in range(B):
                for i in range(Ho):
                    for j in range(Wo):
                        db[o] += dy[b, o, i, j]
            for c in range(Cin):
                for u in range(kh):
                    for v in range(kw):
                        acc = 0.0
                        for b in range(B):
                            for i in range(Ho):
                                iy = i * stride + u - pad
                                if iy < 0 or iy >= H:
                                    continue
                                for j in range(Wo):
                                    jx = j * stride + v - pad
                                    if 0 <= jx < W:
                                        acc += dy[b, o, i, j] * x[b, c, iy, jx]
                        dw[o, c, u, v] = acc
    return dw_arr, db_arr


def conv2d_backward_input(floating[:, :, :, ::1] dy, floating[:, :, :, ::1] w,
                          int stride, int pad, int in_h, int in_w):
    cdef Py_ssize_t B = dy.shape[0], Cout = dy.shape[1], Ho = dy.shape[2], Wo = dy.shape[3]
    cdef Py_ssize_t Cin = w.shape[1], kh = w.shape[2], kw = w.shape[3]

    dtype = np.float32 if floating is float else np.float64
    dx_arr = np.zeros((B, Cin, in_h, in_w), dtype=dtype)
    cdef floating[:, :, :, ::1] dx = dx_arr

    cdef Py_ssize_t b, o, c, u, v, i, j, iy, jx
    cdef floating wv
    with nogil:
        for b in range(B):
            for o in range(Cout):
                for c in range(Cin):
                    for u in range(kh):
                        for v in range(kw):
                            wv = w[o, c, u, v]
                            if wv == 0.0:
                                continue
                            for i in range(Ho):
                                iy = i * stride + u - pad
                                if iy < 0 or iy >= in_h:
                                    continue
                                for j in range(Wo):
                                    jx = j * stride + v - pad
                                    if 0 <= jx < in_w:
                                        dx[b, c, iy, jx] += wv * dy[b, o, i, j]
    return dx_arr
