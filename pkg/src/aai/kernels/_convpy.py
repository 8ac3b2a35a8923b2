"""Pure-numpy convolution kernels (fallback backend).

Forward and both backward passes for a plain 2-D convolution with symmetric
zero padding. Shapes follow the layout used everywhere in this package:
activations are [B, C, H, W], weights are [Cout, Cin, kh, kw].
"""

import numpy as np


def _sliding_windows(x_padded, kh, kw, stride, out_h, out_w):
    # view [B, C, kh, kw, Ho, Wo] over the padded input, no copy
    b, c, _, _ = x_padded.shape
    sb, sc, sh, sw = x_padded.strides
    shape = (b, c, kh, kw, out_h, out_w)
    strides = (sb, sc, sh, sw, sh * stride, sw * stride)
    return np.lib.stride_tricks.as_strided(x_padded, shape=shape, strides=strides)


def conv2d_forward(x, w, bias, stride, pad):
    b, cin, h, wd = x.shape
    cout, cin_w, kh, kw = w.shape
    if cin != cin_w:
        raise ValueError(f"channel mismatch: input has {cin}, weight expects {cin_w}")
    out_h = (h + 2 * pad - kh) // stride + 1
    out_w = (wd + 2 * pad - kw) // stride + 1
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    cols = _sliding_windows(xp, kh, kw, stride, out_h, out_w)
    # contract over (cin, kh, kw)
    y = np.einsum("bcuvij,ocuv->boij", cols, w, optimize=True)
    if bias is not None:
        y += bias[None, :, None, None]
    return np.ascontiguousarray(y)


def conv2d_backward_weights(x, dy, kh, kw, stride, pad):
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    out_h, out_w = dy.shape[2], dy.shape[3]
    cols = _sliding_windows(xp, kh, kw, stride, out_h, out_w)
    dw = np.einsum("bcuvij,boij->ocuv", cols, dy, optimize=True)
    db = dy.sum(axis=(0, 2, 3))
    return np.ascontiguousarray(dw), db


def conv2d_backward_input(dy, w, stride, pad, in_h, in_w):
    b = dy.shape[0]
    cout, cin, kh, kw = w.shape
    out_h, out_w = dy.shape[2], dy.shape[3]
    dxp = np.zeros((b, cin, in_h + 2 * pad, in_w + 2 * pad), dtype=dy.dtype)
    # scatter-add one kernel tap at a time; kh*kw iterations of a big matmul
    for u in range(kh):
        for v in range(kw):
            contrib = np.einsum("boij,oc->bcij", dy, w[:, :, u, v], optimize=True)
            dxp[:, :, u:u + out_h * stride:stride, v:v + out_w * stride:stride] += contrib
    if pad:
        return np.ascontiguousarray(dxp[:, :, pad:pad + in_h, pad:pad + in_w])
    return dxp
