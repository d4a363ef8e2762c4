"""Complex-valued U-Net that estimates a complex ratio mask.

Convolutions follow complex arithmetic on (real, imaginary) plane pairs:
for input x + iy and kernel A + iB the output is (A*x - B*y) + i(A*y + B*x),
where * is strided real cross-correlation.  Gradients are ordinary real
backpropagation over the two planes; no Wirtinger calculus anywhere.

The encoder halves the frequency axis per level (stride 2x1), the decoder
mirrors it exactly with transposed convolutions, and skip connections
concatenate encoder level i onto decoder level depth-1-i.  The final layer
emits the raw complex mask; in bounded mode its magnitude is squashed to
tanh(|m|) while the phase is kept.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ..audio import AudioClip, ComplexSpectrogram, istft
from .convops import (
    conv2d,
    conv2d_input_grad,
    conv2d_weight_grad,
    conv_output_size,
    transposed_output_size,
)

__all__ = [
    "ComplexTensor",
    "ComplexConvLayer",
    "ComplexMask",
    "UNetConfig",
    "ComplexUNet",
    "complex_conv_forward",
    "unet_forward",
    "apply_mask",
    "enhance",
    "save_checkpoint",
    "load_checkpoint",
]

CHECKPOINT_VERSION = 1


@dataclass
class ComplexTensor:
    """A pair of equal-shape real arrays standing for real/imaginary parts."""

    re: np.ndarray
    im: np.ndarray

    def __post_init__(self) -> None:
        self.re = np.asarray(self.re, dtype=np.float64)
        self.im = np.asarray(self.im, dtype=np.float64)
        if self.re.shape != self.im.shape:
            raise ValueError(f"real/imag shapes differ: {self.re.shape} vs {self.im.shape}")
        if not (np.all(np.isfinite(self.re)) and np.all(np.isfinite(self.im))):
            raise ValueError("ComplexTensor entries must be finite")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.re.shape

    def to_complex(self) -> np.ndarray:
        return self.re + 1j * self.im

    @classmethod
    def from_complex(cls, data: np.ndarray) -> "ComplexTensor":
        data = np.asarray(data)
        return cls(data.real.copy(), data.imag.copy())


class ComplexConvLayer:
    """One complex convolution, either downsampling ("down") or transposed ("up").

    Down layers store kernels as (out_ch, in_ch, kh, kw); up layers as
    (in_ch, out_ch, kh, kw) because their forward pass is the adjoint of a
    down convolution with the same kernel.
    """

    def __init__(
        self,
        w_re: np.ndarray,
        w_im: np.ndarray,
        b_re: np.ndarray,
        b_im: np.ndarray,
        stride: tuple[int, int],
        padding: tuple[int, int],
        direction: str,
    ) -> None:
        if direction not in ("down", "up"):
            raise ValueError(f"direction must be 'down' or 'up', got {direction!r}")
        if w_re.shape != w_im.shape:
            raise ValueError("kernel plane shapes differ")
        kh, kw = w_re.shape[2], w_re.shape[3]
        for k, s in ((kh, stride[0]), (kw, stride[1])):
            if k % 2 == 0 and k != s:
                raise ValueError("kernel dims must be odd (or equal to the stride)")
        self.w_re = w_re
        self.w_im = w_im
        self.b_re = b_re
        self.b_im = b_im
        self.stride = stride
        self.padding = padding
        self.direction = direction

    @property
    def in_channels(self) -> int:
        return self.w_re.shape[1] if self.direction == "down" else self.w_re.shape[0]

    @property
    def out_channels(self) -> int:
        return self.w_re.shape[0] if self.direction == "down" else self.w_re.shape[1]

    @property
    def kernel(self) -> tuple[int, int]:
        return self.w_re.shape[2], self.w_re.shape[3]

    def output_hw(self, in_hw: tuple[int, int]) -> tuple[int, int]:
        size = conv_output_size if self.direction == "down" else transposed_output_size
        kh, kw = self.kernel
        return (
            size(in_hw[0], kh, self.stride[0], self.padding[0]),
            size(in_hw[1], kw, self.stride[1], self.padding[1]),
        )

    def forward(self, x_re: np.ndarray, x_im: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.direction == "down":
            rr = conv2d(x_re, self.w_re, self.stride, self.padding)
            ii = conv2d(x_im, self.w_im, self.stride, self.padding)
            ri = conv2d(x_re, self.w_im, self.stride, self.padding)
            ir = conv2d(x_im, self.w_re, self.stride, self.padding)
        else:
            hw = self.output_hw((x_re.shape[1], x_re.shape[2]))
            rr = conv2d_input_grad(x_re, self.w_re, self.stride, self.padding, hw)
            ii = conv2d_input_grad(x_im, self.w_im, self.stride, self.padding, hw)
            ri = conv2d_input_grad(x_re, self.w_im, self.stride, self.padding, hw)
            ir = conv2d_input_grad(x_im, self.w_re, self.stride, self.padding, hw)
        y_re = rr - ii + self.b_re[:, None, None]
        y_im = ri + ir + self.b_im[:, None, None]
        return y_re, y_im

    def input_grad(
        self, dy_re: np.ndarray, dy_im: np.ndarray, in_hw: tuple[int, int]
    ) -> tuple[np.ndarray, np.ndarray]:
        if self.direction == "down":
            dx_re = conv2d_input_grad(dy_re, self.w_re, self.stride, self.padding, in_hw) + \
                conv2d_input_grad(dy_im, self.w_im, self.stride, self.padding, in_hw)
            dx_im = conv2d_input_grad(dy_im, self.w_re, self.stride, self.padding, in_hw) - \
                conv2d_input_grad(dy_re, self.w_im, self.stride, self.padding, in_hw)
        else:
            dx_re = conv2d(dy_re, self.w_re, self.stride, self.padding) + \
                conv2d(dy_im, self.w_im, self.stride, self.padding)
            dx_im = conv2d(dy_im, self.w_re, self.stride, self.padding) - \
                conv2d(dy_re, self.w_im, self.stride, self.padding)
        return dx_re, dx_im

    def param_grads(
        self,
        dy_re: np.ndarray,
        dy_im: np.ndarray,
        x_re: np.ndarray,
        x_im: np.ndarray,
    ) -> dict[str, np.ndarray]:
        k = self.kernel
        if self.direction == "down":
            dw_re = conv2d_weight_grad(dy_re, x_re, self.stride, self.padding, k) + \
                conv2d_weight_grad(dy_im, x_im, self.stride, self.padding, k)
            dw_im = conv2d_weight_grad(dy_im, x_re, self.stride, self.padding, k) - \
                conv2d_weight_grad(dy_re, x_im, self.stride, self.padding, k)
        else:
            dw_re = conv2d_weight_grad(x_re, dy_re, self.stride, self.padding, k) + \
                conv2d_weight_grad(x_im, dy_im, self.stride, self.padding, k)
            dw_im = conv2d_weight_grad(x_re, dy_im, self.stride, self.padding, k) - \
                conv2d_weight_grad(x_im, dy_re, self.stride, self.padding, k)
        return {
            "w_re": dw_re,
            "w_im": dw_im,
            "b_re": dy_re.sum(axis=(1, 2)),
            "b_im": dy_im.sum(axis=(1, 2)),
        }


def complex_conv_forward(x: ComplexTensor, layer: ComplexConvLayer) -> ComplexTensor:
    """Apply one complex convolution layer (bias included, no activation)."""
    if x.re.ndim != 3 or x.re.shape[0] != layer.in_channels:
        raise ValueError(
            f"expected input of shape ({layer.in_channels}, H, W), got {x.shape}"
        )
    y_re, y_im = layer.forward(x.re, x.im)
    return ComplexTensor(y_re, y_im)


def _leaky_relu(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x >= 0, x, slope * x)


def _leaky_relu_grad(dy: np.ndarray, pre: np.ndarray, slope: float) -> np.ndarray:
    return dy * np.where(pre >= 0, 1.0, slope)


def _tanh_ratio(u: np.ndarray) -> np.ndarray:
    """tanh(u)/u, continuous at 0."""
    small = u < 1e-4
    safe = np.where(small, 1.0, u)
    out = np.tanh(safe) / safe
    return np.where(small, 1.0 - u**2 / 3.0, out)


def _tanh_ratio_deriv_over_u(u: np.ndarray) -> np.ndarray:
    """(d/du tanh(u)/u) / u, continuous at 0 (limit -2/3)."""
    small = u < 1e-3
    safe = np.where(small, 1.0, u)
    sech2 = 1.0 / np.cosh(safe) ** 2
    out = (safe * sech2 - np.tanh(safe)) / safe**3
    return np.where(small, -2.0 / 3.0 + 8.0 * u**2 / 15.0, out)


def bound_mask(m_re: np.ndarray, m_im: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Squash the mask magnitude to tanh(|m|), preserving phase (0 maps to 0)."""
    u = np.hypot(m_re, m_im)
    f = _tanh_ratio(u)
    return m_re * f, m_im * f


def bound_mask_grad(
    dg_re: np.ndarray, dg_im: np.ndarray, m_re: np.ndarray, m_im: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    u = np.hypot(m_re, m_im)
    f = _tanh_ratio(u)
    h = _tanh_ratio_deriv_over_u(u)
    dm_re = dg_re * (f + m_re * m_re * h) + dg_im * (m_re * m_im * h)
    dm_im = dg_re * (m_re * m_im * h) + dg_im * (f + m_im * m_im * h)
    return dm_re, dm_im


@dataclass(frozen=True)
class UNetConfig:
    """Architecture knobs.  Defaults are deliberately small: CPU trainable
    and checkable by finite differences at reduced size."""

    depth: int = 3
    channels: tuple[int, ...] = (8, 16, 32)
    kernel: tuple[int, int] = (5, 5)
    freq_stride: int = 2
    leak: float = 0.1
    bounded_mask: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.depth < 1:
            raise ValueError("depth must be at least 1")
        if len(self.channels) != self.depth:
            raise ValueError("channels must list one width per level")
        if any(c < 1 for c in self.channels):
            raise ValueError("channel counts must be positive")
        if self.kernel[0] % 2 == 0 or self.kernel[1] % 2 == 0:
            raise ValueError("kernel dims must be odd for exact encoder/decoder mirroring")
        if self.freq_stride not in (1, 2):
            raise ValueError("freq_stride must be 1 or 2")


@dataclass(frozen=True)
class ComplexMask:
    """Per-cell complex multiplier, frames x bins."""

    data: np.ndarray
    bounded: bool

    def __post_init__(self) -> None:
        if self.bounded and self.data.size:
            peak = float(np.abs(self.data).max())
            if peak > 1.0 + 1e-9:
                raise ValueError(f"bounded mask has magnitude {peak} > 1")


class ComplexUNet:
    """Mirrored encoder/decoder stacks over complex planes."""

    def __init__(self, config: UNetConfig, encoders: list[ComplexConvLayer], decoders: list[ComplexConvLayer]):
        self.config = config
        self.encoders = encoders
        self.decoders = decoders

    @classmethod
    def create(cls, config: UNetConfig) -> "ComplexUNet":
        rng = np.random.default_rng(config.seed)
        kh, kw = config.kernel
        stride = (config.freq_stride, 1)
        padding = (kh // 2, kw // 2)

        def make(shape_in: int, shape_out: int, direction: str) -> ComplexConvLayer:
            fan_in = shape_in * kh * kw
            scale = 1.0 / np.sqrt(2.0 * fan_in)
            if direction == "down":
                shape = (shape_out, shape_in, kh, kw)
            else:
                shape = (shape_in, shape_out, kh, kw)
            return ComplexConvLayer(
                w_re=rng.standard_normal(shape) * scale,
                w_im=rng.standard_normal(shape) * scale,
                b_re=np.zeros(shape_out),
                b_im=np.zeros(shape_out),
                stride=stride,
                padding=padding,
                direction=direction,
            )

        encoders = []
        prev = 1
        for width in config.channels:
            encoders.append(make(prev, width, "down"))
            prev = width
        decoders = []
        for level in range(config.depth):
            out_ch = config.channels[config.depth - 2 - level] if level < config.depth - 1 else 1
            in_ch = config.channels[-1] if level == 0 else 2 * config.channels[config.depth - 1 - level]
            decoders.append(make(in_ch, out_ch, "up"))
        return cls(config, encoders, decoders)

    def parameters(self) -> dict[str, np.ndarray]:
        """Name -> array mapping; arrays are the live parameter buffers."""
        params: dict[str, np.ndarray] = {}
        for kind, layers in (("enc", self.encoders), ("dec", self.decoders)):
            for i, layer in enumerate(layers):
                for attr in ("w_re", "w_im", "b_re", "b_im"):
                    params[f"{kind}{i}.{attr}"] = getattr(layer, attr)
        return params

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters().values())

    def padded_bins(self, bins: int) -> int:
        """Smallest bin count >= bins that the strided mirror inverts exactly."""
        if self.config.freq_stride == 1:
            return bins
        step = 2**self.config.depth
        rem = (bins - 1) % step
        return bins if rem == 0 else bins + step - rem

    def forward_planes(
        self, x_re: np.ndarray, x_im: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, list[dict]]:
        """Raw (unbounded) mask planes for input planes of shape (1, F, T)."""
        leak = self.config.leak
        cache: list[dict] = []
        feats: list[tuple[np.ndarray, np.ndarray]] = []
        cur = (x_re, x_im)
        for layer in self.encoders:
            pre = layer.forward(*cur)
            cache.append({"input": cur, "pre": pre})
            cur = (_leaky_relu(pre[0], leak), _leaky_relu(pre[1], leak))
            feats.append(cur)
        for level, layer in enumerate(self.decoders):
            if level == 0:
                inp = feats[-1]
            else:
                skip = feats[self.config.depth - 1 - level]
                inp = (
                    np.concatenate([cur[0], skip[0]], axis=0),
                    np.concatenate([cur[1], skip[1]], axis=0),
                )
            pre = layer.forward(*inp)
            cache.append({"input": inp, "pre": pre})
            if level < self.config.depth - 1:
                cur = (_leaky_relu(pre[0], leak), _leaky_relu(pre[1], leak))
            else:
                cur = pre
        return cur[0], cur[1], cache

    def backward_planes(
        self, cache: list[dict], dm_re: np.ndarray, dm_im: np.ndarray
    ) -> dict[str, np.ndarray]:
        """Parameter gradients for the raw mask planes emitted by forward_planes."""
        leak = self.config.leak
        depth = self.config.depth
        grads: dict[str, np.ndarray] = {}
        dfeat: list[tuple[np.ndarray, np.ndarray] | None] = [None] * depth

        def add_feat(idx: int, d: tuple[np.ndarray, np.ndarray]) -> None:
            if dfeat[idx] is None:
                dfeat[idx] = d
            else:
                dfeat[idx] = (dfeat[idx][0] + d[0], dfeat[idx][1] + d[1])

        cur = (dm_re, dm_im)
        for level in reversed(range(depth)):
            entry = cache[depth + level]
            layer = self.decoders[level]
            if level < depth - 1:
                dpre = (
                    _leaky_relu_grad(cur[0], entry["pre"][0], leak),
                    _leaky_relu_grad(cur[1], entry["pre"][1], leak),
                )
            else:
                dpre = cur
            x_re, x_im = entry["input"]
            for name, g in layer.param_grads(dpre[0], dpre[1], x_re, x_im).items():
                grads[f"dec{level}.{name}"] = g
            dinp = layer.input_grad(dpre[0], dpre[1], (x_re.shape[1], x_re.shape[2]))
            if level == 0:
                add_feat(depth - 1, dinp)
            else:
                split = self.decoders[level - 1].out_channels
                cur = (dinp[0][:split], dinp[1][:split])
                add_feat(depth - 1 - level, (dinp[0][split:], dinp[1][split:]))

        nxt = dfeat[depth - 1]
        for i in reversed(range(depth)):
            entry = cache[i]
            layer = self.encoders[i]
            dpre = (
                _leaky_relu_grad(nxt[0], entry["pre"][0], leak),
                _leaky_relu_grad(nxt[1], entry["pre"][1], leak),
            )
            x_re, x_im = entry["input"]
            for name, g in layer.param_grads(dpre[0], dpre[1], x_re, x_im).items():
                grads[f"enc{i}.{name}"] = g
            if i > 0:
                dinp = layer.input_grad(dpre[0], dpre[1], (x_re.shape[1], x_re.shape[2]))
                nxt = dinp
                if dfeat[i - 1] is not None:
                    nxt = (nxt[0] + dfeat[i - 1][0], nxt[1] + dfeat[i - 1][1])
        return grads


def _spec_to_planes(spec: ComplexSpectrogram, padded_bins: int) -> tuple[np.ndarray, np.ndarray]:
    grid = spec.data.T  # (F, T)
    re = np.zeros((1, padded_bins, grid.shape[1]))
    im = np.zeros((1, padded_bins, grid.shape[1]))
    re[0, : grid.shape[0]] = grid.real
    im[0, : grid.shape[0]] = grid.imag
    return re, im


def unet_forward(spec: ComplexSpectrogram, model: ComplexUNet) -> ComplexMask:
    """Estimate the complex mask for a spectrogram (same frames x bins shape)."""
    padded = model.padded_bins(spec.bins)
    x_re, x_im = _spec_to_planes(spec, padded)
    m_re, m_im, _ = model.forward_planes(x_re, x_im)
    raw = (m_re[0] + 1j * m_im[0])[: spec.bins].T
    if model.config.bounded_mask:
        b_re, b_im = bound_mask(raw.real, raw.imag)
        return ComplexMask(b_re + 1j * b_im, bounded=True)
    return ComplexMask(raw.copy(), bounded=False)


def apply_mask(spec: ComplexSpectrogram, mask: ComplexMask) -> ComplexSpectrogram:
    """Cell-wise complex product of spectrogram and mask."""
    if mask.data.shape != spec.data.shape:
        raise ValueError(f"mask shape {mask.data.shape} does not match spectrogram {spec.data.shape}")
    return ComplexSpectrogram(spec.data * mask.data, spec.config, spec.sample_rate, spec.num_samples)


def enhance(spec: ComplexSpectrogram, model: ComplexUNet, original_length: int | None = None) -> AudioClip:
    """Mask the spectrogram with the model's estimate and synthesise a waveform."""
    masked = apply_mask(spec, unet_forward(spec, model))
    clip = istft(masked)
    if original_length is None:
        original_length = spec.num_samples
    if original_length > len(clip):
        raise ValueError(f"original_length {original_length} exceeds synthesised {len(clip)} samples")
    return AudioClip(clip.samples[:original_length], clip.sample_rate)


def save_checkpoint(model: ComplexUNet, path) -> None:
    """Write config and all parameters; the round trip is bit-exact."""
    meta = {"version": CHECKPOINT_VERSION, "config": asdict(model.config)}
    arrays = {f"param:{k}": v for k, v in model.parameters().items()}
    np.savez(path, meta=json.dumps(meta, sort_keys=True), **arrays)


def load_checkpoint(path) -> ComplexUNet:
    with np.load(path, allow_pickle=False) as bundle:
        meta = json.loads(str(bundle["meta"]))
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('version')!r}")
        cfg_dict = meta["config"]
        cfg_dict["channels"] = tuple(cfg_dict["channels"])
        cfg_dict["kernel"] = tuple(cfg_dict["kernel"])
        config = UNetConfig(**cfg_dict)
        model = ComplexUNet.create(config)
        for name, array in model.parameters().items():
            stored = bundle[f"param:{name}"]
            if stored.shape != array.shape:
                raise ValueError(f"checkpoint parameter {name} has shape {stored.shape}, expected {array.shape}")
            array[...] = stored
    return model
