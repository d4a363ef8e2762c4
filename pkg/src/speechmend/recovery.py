"""Gap interpolation in the spectrogram and indicator combination in the waveform.

Interpolation cross-fades each run of null frames linearly between the frames
immediately before and after the gap (complex coefficients, real and
imaginary parts independently).  A gap touching the first or last frame uses
a zero vector for the missing anchor.  Combination is the final stage: keep
original samples wherever they exist, take enhanced samples inside the nulls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import AudioClip, ComplexSpectrogram
from .energy import IntermittentClip

__all__ = ["GapRecord", "InterpolationReport", "interpolate", "combine"]


@dataclass(frozen=True)
class GapRecord:
    """One interpolated gap: its frame range and the anchor frames used.

    ``left_anchor`` / ``right_anchor`` are frame indices, or None when the gap
    touches the signal boundary and the anchor was a zero vector.
    """

    frames: tuple[int, int]
    left_anchor: int | None
    right_anchor: int | None


@dataclass(frozen=True)
class InterpolationReport:
    gaps: tuple[GapRecord, ...]


def _normalize_ranges(ranges, total_frames: int) -> list[tuple[int, int]]:
    out: list[tuple[int, int]] = []
    prev_end = -1
    for start, end in ranges:
        start, end = int(start), int(end)
        if not (0 <= start < end <= total_frames):
            raise ValueError(f"frame range [{start}, {end}) out of bounds for {total_frames} frames")
        if start < prev_end:
            raise ValueError("frame ranges overlap or are unsorted")
        if start == prev_end and out:
            out[-1] = (out[-1][0], end)  # touching ranges form one gap
        else:
            out.append((start, end))
        prev_end = end
    return out


def interpolate(
    spec: ComplexSpectrogram, null_ranges
) -> tuple[ComplexSpectrogram, InterpolationReport]:
    """Fill null frame ranges by linear cross-fade between their anchor frames.

    For a gap spanning frames [t1, t2] the weight of frame t is
    r(t) = (t - (t1-1)) / ((t2+1) - (t1-1)) and the filled frame is
    (1 - r) * X(t1-1) + r * X(t2+1).  Missing anchors at the signal
    boundaries are zero vectors.  Frames outside gaps are returned untouched.
    """
    total = spec.frames
    gaps = _normalize_ranges(null_ranges, total)
    data = spec.data.copy()
    records = []
    zero = np.zeros(spec.bins, dtype=np.complex128)
    for start, end in gaps:
        left = start - 1 if start > 0 else None
        right = end if end < total else None
        left_vec = data[left] if left is not None else zero
        right_vec = data[right] if right is not None else zero
        # anchors sit at start-1 and end; the fade spans their distance
        r = (np.arange(start, end) - (start - 1)) / (end - (start - 1))
        data[start:end] = np.outer(1.0 - r, left_vec) + np.outer(r, right_vec)
        records.append(GapRecord(frames=(start, end), left_anchor=left, right_anchor=right))
    out = ComplexSpectrogram(data, spec.config, spec.sample_rate, spec.num_samples)
    return out, InterpolationReport(gaps=tuple(records))


def combine(original: IntermittentClip, enhanced: AudioClip) -> AudioClip:
    """Indicator combination: enhanced samples inside nulls, originals elsewhere."""
    source = original.clip
    if len(enhanced) != len(source):
        raise ValueError(
            f"enhanced length {len(enhanced)} does not match original length {len(source)}"
        )
    if enhanced.sample_rate != source.sample_rate:
        raise ValueError("sample rates differ")
    samples = source.samples.copy()
    for seg in original.nulls:
        samples[seg.start : seg.end] = enhanced.samples[seg.start : seg.end]
    return AudioClip(samples, source.sample_rate)
