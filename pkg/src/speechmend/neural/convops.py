"""Real 2-D cross-correlation primitives used by the complex layers.

Three linear maps cover every direction the network needs:

* :func:`conv2d` - strided cross-correlation (encoder forward),
* :func:`conv2d_input_grad` - its adjoint in the input argument, which also
  *is* the forward pass of a transposed convolution,
* :func:`conv2d_weight_grad` - its adjoint in the weight argument.

Shapes are channel-first without a batch axis: inputs (C, H, W), kernels
(O, C, kh, kw), outputs (O, H', W').
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "conv2d",
    "conv2d_input_grad",
    "conv2d_weight_grad",
    "conv_output_size",
    "transposed_output_size",
]


def conv_output_size(size: int, kernel: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - kernel) // stride + 1


def transposed_output_size(size: int, kernel: int, stride: int, pad: int) -> int:
    return (size - 1) * stride - 2 * pad + kernel


def _im2col(padded: np.ndarray, kh: int, kw: int, sh: int, sw: int, oh: int, ow: int) -> np.ndarray:
    """(C*kh*kw, oh*ow) patch matrix built as a strided view, then flattened."""
    c = padded.shape[0]
    s0, s1, s2 = padded.strides
    view = np.lib.stride_tricks.as_strided(
        padded,
        shape=(c, kh, kw, oh, ow),
        strides=(s0, s1, s2, s1 * sh, s2 * sw),
    )
    return view.reshape(c * kh * kw, oh * ow)


def _pad(x: np.ndarray, ph: int, pw: int) -> np.ndarray:
    if ph == 0 and pw == 0:
        return x
    return np.pad(x, ((0, 0), (ph, ph), (pw, pw)))


def conv2d(x: np.ndarray, w: np.ndarray, stride: tuple[int, int], pad: tuple[int, int]) -> np.ndarray:
    """Strided cross-correlation of x (C,H,W) with kernels w (O,C,kh,kw)."""
    c, h, wd = x.shape
    o, cw, kh, kw = w.shape
    if cw != c:
        raise ValueError(f"kernel expects {cw} input channels, got {c}")
    sh, sw = stride
    ph, pw = pad
    oh = conv_output_size(h, kh, sh, ph)
    ow = conv_output_size(wd, kw, sw, pw)
    if oh <= 0 or ow <= 0:
        raise ValueError(f"input {x.shape[1:]} too small for kernel {kh}x{kw} stride {stride}")
    cols = _im2col(_pad(x, ph, pw), kh, kw, sh, sw, oh, ow)
    return (w.reshape(o, -1) @ cols).reshape(o, oh, ow)


def conv2d_input_grad(
    dy: np.ndarray,
    w: np.ndarray,
    stride: tuple[int, int],
    pad: tuple[int, int],
    input_hw: tuple[int, int],
) -> np.ndarray:
    """Adjoint of :func:`conv2d` with respect to its input.

    ``dy`` has the conv output shape (O, oh, ow); the result has shape
    (C, *input_hw).  Used directly as the transposed-convolution forward.
    """
    o, oh, ow = dy.shape
    _, c, kh, kw = w.shape
    sh, sw = stride
    ph, pw = pad
    h, wd = input_hw
    dcols = (w.reshape(o, -1).T @ dy.reshape(o, -1)).reshape(c, kh, kw, oh, ow)
    dxp = np.zeros((c, h + 2 * ph, wd + 2 * pw))
    for u in range(kh):
        for v in range(kw):
            dxp[:, u : u + sh * oh : sh, v : v + sw * ow : sw] += dcols[:, u, v]
    return dxp[:, ph : ph + h, pw : pw + wd]


def conv2d_weight_grad(
    dy: np.ndarray,
    x: np.ndarray,
    stride: tuple[int, int],
    pad: tuple[int, int],
    kernel_hw: tuple[int, int],
) -> np.ndarray:
    """Adjoint of :func:`conv2d` with respect to its kernel, shape (O, C, kh, kw)."""
    o, oh, ow = dy.shape
    c = x.shape[0]
    kh, kw = kernel_hw
    sh, sw = stride
    ph, pw = pad
    cols = _im2col(_pad(x, ph, pw), kh, kw, sh, sw, oh, ow)
    return (dy.reshape(o, -1) @ cols.T).reshape(o, c, kh, kw)
