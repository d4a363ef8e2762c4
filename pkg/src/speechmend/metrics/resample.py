"""Rational-rate resampling for the intelligibility front end.

Windowed-sinc polyphase design: upsample by zero stuffing, convolve with a
Kaiser-windowed lowpass whose support spans 64 input samples per output, and
decimate.  The filter is centred (odd length) so input and output timelines
stay aligned.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["resample", "kaiser_sinc_lowpass"]


def kaiser_sinc_lowpass(cutoff: float, half_taps: int, beta: float = 8.6) -> np.ndarray:
    """Odd-length lowpass: sinc at normalised cutoff (cycles/sample), Kaiser window."""
    t = np.arange(-half_taps, half_taps + 1)
    kernel = 2.0 * cutoff * np.sinc(2.0 * cutoff * t)
    return kernel * np.kaiser(2 * half_taps + 1, beta)


def resample(x: np.ndarray, orig_rate: int, target_rate: int, taps: int = 64) -> np.ndarray:
    """Resample x from orig_rate to target_rate (both integer Hz).

    ``taps`` is the kernel support measured in input samples; 64 gives a
    transition band narrow enough for band-envelope work below 0.86 of the
    output Nyquist.
    """
    if orig_rate <= 0 or target_rate <= 0:
        raise ValueError("rates must be positive")
    x = np.asarray(x, dtype=np.float64)
    if orig_rate == target_rate:
        return x.copy()
    g = math.gcd(orig_rate, target_rate)
    up = target_rate // g
    down = orig_rate // g
    half = (taps * up) // 2
    cutoff = 1.0 / (2.0 * max(up, down))  # in cycles/sample at the upsampled rate
    h = kaiser_sinc_lowpass(cutoff, half)
    h *= up / h.sum()  # unity DC gain after zero stuffing

    stuffed = np.zeros(x.size * up)
    stuffed[::up] = x
    smoothed = np.convolve(stuffed, h)[half : half + stuffed.size]
    out_len = -(-x.size * up // down)  # ceil
    return smoothed[::down][:out_len]
