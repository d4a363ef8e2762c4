"""Audio containers and the short-time Fourier transform.

Everything downstream (interpolation, masking, metrics) works either on
:class:`AudioClip` waveforms or on :class:`ComplexSpectrogram` grids produced
by :func:`stft`.  All functions are pure; nothing here keeps mutable state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AudioClip",
    "StftConfig",
    "ComplexSpectrogram",
    "stft",
    "istft",
    "istft_input_grad",
    "frame_count",
]

# Relative tolerance for the constant-overlap-add check on squared windows.
_COLA_TOL = 1e-10


def _window_samples(name: str, length: int) -> np.ndarray:
    """Periodic analysis window of the given length."""
    n = np.arange(length)
    if name == "hann":
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / length)
    if name == "hamming":
        return 0.54 - 0.46 * np.cos(2.0 * np.pi * n / length)
    if name == "rect":
        return np.ones(length)
    raise ValueError(f"unknown window function {name!r} (expected hann, hamming or rect)")


@dataclass
class AudioClip:
    """Mono waveform: float samples (nominal range [-1, 1]) at a fixed rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        self.samples = np.ascontiguousarray(np.asarray(self.samples, dtype=np.float64))
        if self.samples.ndim != 1:
            raise ValueError(f"samples must be one-dimensional, got shape {self.samples.shape}")
        if not (isinstance(self.sample_rate, (int, np.integer)) and self.sample_rate > 0):
            raise ValueError(f"sample_rate must be a positive integer, got {self.sample_rate!r}")
        self.sample_rate = int(self.sample_rate)
        if self.samples.size and not np.all(np.isfinite(self.samples)):
            raise ValueError("samples contain NaN or Inf")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def copy(self) -> "AudioClip":
        return AudioClip(self.samples.copy(), self.sample_rate)


@dataclass(frozen=True)
class StftConfig:
    """Analysis parameters for :func:`stft` / :func:`istft`.

    The window must overlap-add to a constant when squared at the chosen hop
    (weighted overlap-add synthesis assumes this).  A periodic Hann window
    satisfies it for any hop dividing window_length // 2; the default is a
    quarter-window hop.
    """

    window_length: int = 512
    hop_length: int = 128
    window: str = "hann"

    def __post_init__(self) -> None:
        if self.window_length <= 0:
            raise ValueError("window_length must be positive")
        if not (0 < self.hop_length <= self.window_length):
            raise ValueError("hop_length must satisfy 0 < hop <= window_length")
        w2 = self.window_samples() ** 2
        ola = self._overlap_add(w2)
        interior = ola[self.window_length : ola.size - self.window_length]
        if interior.size:
            mean = interior.mean()
            if mean <= 0.0 or (interior.max() - interior.min()) > _COLA_TOL * mean:
                raise ValueError(
                    f"window {self.window!r} does not satisfy constant overlap-add "
                    f"of squared windows at hop {self.hop_length}"
                )

    def window_samples(self) -> np.ndarray:
        return _window_samples(self.window, self.window_length)

    def _overlap_add(self, w: np.ndarray, num_frames: int | None = None) -> np.ndarray:
        if num_frames is None:
            num_frames = 4 * self.window_length // self.hop_length + 1
        total = (num_frames - 1) * self.hop_length + self.window_length
        acc = np.zeros(total)
        for t in range(num_frames):
            start = t * self.hop_length
            acc[start : start + self.window_length] += w
        return acc

    @property
    def num_bins(self) -> int:
        return self.window_length // 2 + 1


@dataclass
class ComplexSpectrogram:
    """One-sided complex STFT grid, frames x bins.

    ``num_samples`` remembers the waveform length so :func:`istft` can strip
    the tail padding added by :func:`stft`.
    """

    data: np.ndarray
    config: StftConfig
    sample_rate: int
    num_samples: int = field(default=-1)

    def __post_init__(self) -> None:
        self.data = np.ascontiguousarray(np.asarray(self.data, dtype=np.complex128))
        if self.data.ndim != 2:
            raise ValueError(f"spectrogram data must be 2-D (frames x bins), got {self.data.shape}")
        if self.data.shape[1] != self.config.num_bins:
            raise ValueError(
                f"expected {self.config.num_bins} bins for window_length "
                f"{self.config.window_length}, got {self.data.shape[1]}"
            )
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        covered = (self.data.shape[0] - 1) * self.config.hop_length + self.config.window_length
        if self.num_samples < 0:
            self.num_samples = covered
        if self.num_samples > covered:
            raise ValueError(
                f"num_samples {self.num_samples} exceeds the {covered} samples "
                f"covered by {self.data.shape[0]} frames"
            )

    @property
    def frames(self) -> int:
        return self.data.shape[0]

    @property
    def bins(self) -> int:
        return self.data.shape[1]

    def copy(self) -> "ComplexSpectrogram":
        return ComplexSpectrogram(self.data.copy(), self.config, self.sample_rate, self.num_samples)


def frame_count(num_samples: int, config: StftConfig) -> int:
    """Number of frames needed so every sample falls inside some window."""
    if num_samples <= config.window_length:
        return 1
    return int(math.ceil((num_samples - config.window_length) / config.hop_length)) + 1


def _frame_signal(x: np.ndarray, config: StftConfig) -> np.ndarray:
    """Strided (frames, window_length) view of x, zero-padded at the tail."""
    num_frames = frame_count(x.size, config)
    total = (num_frames - 1) * config.hop_length + config.window_length
    padded = np.zeros(total)
    padded[: x.size] = x
    stride = padded.strides[0]
    return np.lib.stride_tricks.as_strided(
        padded,
        shape=(num_frames, config.window_length),
        strides=(config.hop_length * stride, stride),
    )


def stft(clip: AudioClip, config: StftConfig) -> ComplexSpectrogram:
    """One-sided STFT.  Frame t covers samples [t*hop, t*hop + window)."""
    if len(clip) < 1:
        raise ValueError("clip must contain at least one sample")
    frames = _frame_signal(clip.samples, config) * config.window_samples()
    data = np.fft.rfft(frames, axis=1)
    return ComplexSpectrogram(data, config, clip.sample_rate, num_samples=len(clip))


def _synthesis_norm(config: StftConfig, num_frames: int, total: int) -> np.ndarray:
    norm = np.zeros(total)
    w2 = config.window_samples() ** 2
    for t in range(num_frames):
        start = t * config.hop_length
        norm[start : start + config.window_length] += w2
    return norm


def istft(spec: ComplexSpectrogram) -> AudioClip:
    """Weighted overlap-add synthesis, truncated to the recorded length.

    Samples whose synthesis-window normalisation is (near) zero -- only the
    very edges for tapered windows -- are emitted as zero.
    """
    config = spec.config
    num_frames = spec.frames
    total = (num_frames - 1) * config.hop_length + config.window_length
    window = config.window_samples()
    frames_time = np.fft.irfft(spec.data, n=config.window_length, axis=1) * window
    acc = np.zeros(total)
    for t in range(num_frames):
        start = t * config.hop_length
        acc[start : start + config.window_length] += frames_time[t]
    norm = _synthesis_norm(config, num_frames, total)
    out = np.zeros(total)
    usable = norm > 1e-12
    out[usable] = acc[usable] / norm[usable]
    return AudioClip(out[: spec.num_samples], spec.sample_rate)


def istft_input_grad(
    d_output: np.ndarray, config: StftConfig, num_frames: int
) -> np.ndarray:
    """Adjoint of :func:`istft` as a linear map from spectrogram to waveform.

    Given the gradient of a scalar loss with respect to the istft output
    (truncated waveform), returns the gradient with respect to the complex
    spectrogram data, real and imaginary parts treated as independent real
    parameters.  The imaginary parts of the DC and Nyquist bins do not reach
    the output (irfft of a one-sided spectrum drops them), so their gradient
    is exactly zero.
    """
    total = (num_frames - 1) * config.hop_length + config.window_length
    if d_output.size > total:
        raise ValueError("gradient longer than the synthesised signal")
    window = config.window_samples()
    norm = _synthesis_norm(config, num_frames, total)
    d_full = np.zeros(total)
    usable = norm > 1e-12
    d_full[: d_output.size] = d_output
    d_full[usable] /= norm[usable]
    d_full[~usable] = 0.0

    stride = d_full.strides[0]
    d_frames = np.lib.stride_tricks.as_strided(
        d_full,
        shape=(num_frames, config.window_length),
        strides=(config.hop_length * stride, stride),
    ) * window
    # adjoint of irfft: scale k-th bin by c_k / n with c = 1 at DC/Nyquist, 2 inside
    grad = np.fft.rfft(d_frames, axis=1)
    scale = np.full(config.num_bins, 2.0 / config.window_length)
    scale[0] = 1.0 / config.window_length
    if config.window_length % 2 == 0:
        scale[-1] = 1.0 / config.window_length
    grad *= scale
    # rfft of a real signal already has zero imaginary part at DC (and Nyquist
    # for even windows); force exact zeros so the gradient is bit-clean.
    grad[:, 0] = grad[:, 0].real
    if config.window_length % 2 == 0:
        grad[:, -1] = grad[:, -1].real
    return grad
