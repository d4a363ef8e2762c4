"""Short-time objective intelligibility (STOI), implemented from its definition.

Pipeline: resample both signals to 10 kHz, drop frames where the clean
signal is more than 40 dB below its loudest frame, take one-third-octave
band envelopes of a 256-sample / 50%-overlap DFT analysis, and average the
per-band correlation coefficients of 384 ms envelope segments after
normalising and clipping the degraded envelope against the clean one.

Scores land in [-1, 1] and in practice [0, 1]; identical signals score 1 and
any global gain on either signal cancels out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..audio import AudioClip
from .resample import resample

__all__ = ["StoiConfig", "stoi"]

_EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class StoiConfig:
    """The fixed constants of the standard STOI definition."""

    internal_rate: int = 10000
    frame_length: int = 256
    fft_length: int = 512
    num_bands: int = 15
    min_center_freq: float = 150.0
    segment_frames: int = 30
    clip_db: float = -15.0
    silence_range_db: float = 40.0

    @property
    def hop_length(self) -> int:
        return self.frame_length // 2


STANDARD = StoiConfig()


def _analysis_window(length: int) -> np.ndarray:
    # symmetric Hann with the zero endpoints trimmed, as in the reference code
    return np.hanning(length + 2)[1:-1]


def _frame(x: np.ndarray, length: int, hop: int) -> np.ndarray:
    count = (x.size - length) // hop + 1
    if count < 1:
        return np.empty((0, length))
    idx = np.arange(length)[None, :] + hop * np.arange(count)[:, None]
    return x[idx]


def _remove_silent_frames(
    clean: np.ndarray, other: np.ndarray, config: StoiConfig
) -> tuple[np.ndarray, np.ndarray]:
    window = _analysis_window(config.frame_length)
    hop = config.hop_length
    clean_frames = _frame(clean, config.frame_length, hop) * window
    other_frames = _frame(other, config.frame_length, hop) * window
    if clean_frames.shape[0] == 0:
        raise ValueError("signal shorter than one analysis frame")
    energies = 20.0 * np.log10(np.linalg.norm(clean_frames, axis=1) + _EPS)
    keep = energies > energies.max() - config.silence_range_db
    if not keep.any():
        raise ValueError("clean signal has no frames above the silence threshold")
    clean_frames = clean_frames[keep]
    other_frames = other_frames[keep]
    total = (clean_frames.shape[0] - 1) * hop + config.frame_length
    clean_out = np.zeros(total)
    other_out = np.zeros(total)
    for i in range(clean_frames.shape[0]):
        sl = slice(i * hop, i * hop + config.frame_length)
        clean_out[sl] += clean_frames[i]
        other_out[sl] += other_frames[i]
    return clean_out, other_out


def _spectra(x: np.ndarray, config: StoiConfig) -> np.ndarray:
    frames = _frame(x, config.frame_length, config.hop_length) * _analysis_window(
        config.frame_length
    )
    return np.fft.rfft(frames, n=config.fft_length, axis=1)


def third_octave_band_matrix(config: StoiConfig = STANDARD) -> np.ndarray:
    """(num_bands, fft bins) 0/1 matrix grouping DFT bins into 1/3-octave bands."""
    freqs = np.linspace(0, config.internal_rate, config.fft_length + 1)[
        : config.fft_length // 2 + 1
    ]
    k = np.arange(config.num_bands)
    lo_edges = config.min_center_freq * 2.0 ** ((2.0 * k - 1.0) / 6.0)
    hi_edges = config.min_center_freq * 2.0 ** ((2.0 * k + 1.0) / 6.0)
    matrix = np.zeros((config.num_bands, freqs.size))
    for band in range(config.num_bands):
        lo = int(np.argmin((freqs - lo_edges[band]) ** 2))
        hi = int(np.argmin((freqs - hi_edges[band]) ** 2))
        matrix[band, lo:hi] = 1.0
    return matrix


def _row_correlation(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = a - a.mean(axis=-1, keepdims=True)
    b = b - b.mean(axis=-1, keepdims=True)
    a = a / (np.linalg.norm(a, axis=-1, keepdims=True) + _EPS)
    b = b / (np.linalg.norm(b, axis=-1, keepdims=True) + _EPS)
    return np.sum(a * b, axis=-1)


def stoi(clean: AudioClip, processed: AudioClip, config: StoiConfig = STANDARD) -> float:
    """Intelligibility of ``processed`` with ``clean`` as the reference."""
    if clean.sample_rate != processed.sample_rate:
        raise ValueError("sample rates differ")
    if len(clean) != len(processed):
        raise ValueError(f"length mismatch: {len(clean)} vs {len(processed)}")
    x = resample(clean.samples, clean.sample_rate, config.internal_rate)
    y = resample(processed.samples, processed.sample_rate, config.internal_rate)
    x, y = _remove_silent_frames(x, y, config)

    bands = third_octave_band_matrix(config)
    x_env = np.sqrt(bands @ np.abs(_spectra(x, config).T) ** 2)  # (bands, frames)
    y_env = np.sqrt(bands @ np.abs(_spectra(y, config).T) ** 2)
    n_seg = config.segment_frames
    if x_env.shape[1] < n_seg:
        raise ValueError(
            f"too short after silence removal: {x_env.shape[1]} frames, need {n_seg}"
        )

    clip_gain = 10.0 ** (-config.clip_db / 20.0)
    correlations = []
    for m in range(n_seg, x_env.shape[1] + 1):
        x_seg = x_env[:, m - n_seg : m]
        y_seg = y_env[:, m - n_seg : m]
        alpha = np.linalg.norm(x_seg, axis=1, keepdims=True) / (
            np.linalg.norm(y_seg, axis=1, keepdims=True) + _EPS
        )
        y_prime = np.minimum(alpha * y_seg, x_seg * (1.0 + clip_gain))
        correlations.append(_row_correlation(x_seg, y_prime))
    score = float(np.mean(correlations))
    return float(np.clip(score, -1.0, 1.0))
