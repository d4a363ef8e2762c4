"""Capacitor energy model and intermittent capture simulation.

A harvesting front end charges a capacitor while the recorder is off and
drains it (net of harvest) while recording.  One charge/discharge cycle gives
a fixed on/off duty cycle; applying that periodic schedule to a clean clip
zeroes the off windows and records them as null segments with sample-accurate
timestamps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .audio import AudioClip, StftConfig

__all__ = [
    "EnergyHarvestConfig",
    "DutyCycle",
    "NullSegment",
    "IntermittentClip",
    "NeverPowersOnError",
    "duty_cycle",
    "apply_intermittency",
    "nulls_to_frame_ranges",
]


class NeverPowersOnError(ValueError):
    """The energy source cannot ever charge the capacitor to the on threshold."""


@dataclass(frozen=True)
class EnergyHarvestConfig:
    """Capacitor constants plus source and recording load power.

    Units are SI: farads, volts, watts.  ``v_on`` is the restore threshold
    (power-up), ``v_off`` the backup threshold (power-down).
    """

    capacitance: float
    v_on: float
    v_off: float
    source_power: float
    load_power: float

    def __post_init__(self) -> None:
        if self.capacitance <= 0:
            raise ValueError("capacitance must be positive")
        if not (self.v_on > self.v_off > 0):
            raise ValueError("thresholds must satisfy v_on > v_off > 0")
        if self.source_power < 0:
            raise ValueError("source_power must be nonnegative")
        if self.load_power <= 0:
            raise ValueError("load_power must be positive")

    @property
    def cycle_energy(self) -> float:
        """Usable energy of one charge/discharge swing: C * (v_on^2 - v_off^2) / 2."""
        return self.capacitance * (self.v_on**2 - self.v_off**2) / 2.0


@dataclass(frozen=True)
class DutyCycle:
    """Derived schedule: ``t_on`` seconds recording, ``t_off`` seconds charging."""

    t_on: float
    t_off: float
    always_on: bool = False

    def __post_init__(self) -> None:
        if not self.always_on and not (self.t_on > 0 and self.t_off > 0):
            raise ValueError("t_on and t_off must be positive unless always_on")

    @property
    def period(self) -> float:
        return self.t_on + self.t_off


@dataclass(frozen=True)
class NullSegment:
    """Half-open sample-index range [start, end) lost while unpowered."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid null segment [{self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start


@dataclass
class IntermittentClip:
    """A clip whose null segments are zero-filled, plus their timestamps."""

    clip: AudioClip
    nulls: tuple[NullSegment, ...]

    def __post_init__(self) -> None:
        self.nulls = tuple(self.nulls)
        prev_end = -1
        for seg in self.nulls:
            if seg.start <= prev_end:
                raise ValueError("null segments must be sorted, disjoint and non-adjacent")
            if seg.end > len(self.clip):
                raise ValueError(f"null segment [{seg.start}, {seg.end}) exceeds clip length")
            if np.any(self.clip.samples[seg.start : seg.end] != 0.0):
                raise ValueError(f"samples inside null segment [{seg.start}, {seg.end}) are nonzero")
            prev_end = seg.end

    @property
    def nulled_fraction(self) -> float:
        if len(self.clip) == 0:
            return 0.0
        return sum(len(s) for s in self.nulls) / len(self.clip)


def duty_cycle(config: EnergyHarvestConfig) -> DutyCycle:
    """Solve the capacitor energy balance for the on/off periods.

    One cycle swings the stored energy by E = C*(v_on^2 - v_off^2)/2.  While
    off, the source alone refills it: t_off = E / source.  While recording,
    the load drains it net of harvest: t_on = E / (load - source).  A source
    at least as strong as the load never switches off.
    """
    if config.source_power == 0:
        raise NeverPowersOnError("source_power is zero; the device never powers on")
    if config.source_power >= config.load_power:
        return DutyCycle(t_on=math.inf, t_off=0.0, always_on=True)
    energy = config.cycle_energy
    return DutyCycle(
        t_on=energy / (config.load_power - config.source_power),
        t_off=energy / config.source_power,
    )


def _segments_from_mask(mask: np.ndarray) -> tuple[NullSegment, ...]:
    if not mask.any():
        return ()
    edges = np.flatnonzero(np.diff(np.concatenate(([False], mask, [False])).astype(np.int8)))
    starts, ends = edges[::2], edges[1::2]
    return tuple(NullSegment(int(s), int(e)) for s, e in zip(starts, ends))


def apply_intermittency(
    clip: AudioClip,
    duty: DutyCycle,
    phase: float | None = None,
    seed: int = 0,
) -> IntermittentClip:
    """Zero the samples that fall in the off windows of the periodic schedule.

    The cycle starts with the on window; ``phase`` shifts the clip start to
    that many seconds into the cycle.  When ``phase`` is None it is drawn
    uniformly from the cycle using ``seed`` so corpora stay reproducible.
    Samples outside the off windows are copied bit-exactly.
    """
    if duty.always_on:
        return IntermittentClip(clip.copy(), ())
    period = duty.period
    if phase is None:
        phase = float(np.random.default_rng(seed).uniform(0.0, period))
    if not (0.0 <= phase < period):
        raise ValueError(f"phase must lie in [0, {period}), got {phase}")
    times = np.arange(len(clip)) / clip.sample_rate
    off = (times + phase) % period >= duty.t_on
    samples = clip.samples.copy()
    samples[off] = 0.0
    return IntermittentClip(AudioClip(samples, clip.sample_rate), _segments_from_mask(off))


def nulls_to_frame_ranges(
    nulls: tuple[NullSegment, ...] | list[NullSegment],
    config: StftConfig,
    total_frames: int,
) -> list[tuple[int, int]]:
    """Map sample-domain null segments to STFT frame-index ranges.

    Frame t covers samples [t*hop, t*hop + window).  A frame counts as null
    when strictly more than half of its window samples lie inside null
    segments; runs of null frames are merged into half-open ranges.
    """
    if total_frames <= 0:
        return []
    starts = np.arange(total_frames) * config.hop_length
    overlap = np.zeros(total_frames)
    for seg in nulls:
        lo = np.maximum(starts, seg.start)
        hi = np.minimum(starts + config.window_length, seg.end)
        overlap += np.maximum(hi - lo, 0)
    null_frames = overlap * 2 > config.window_length
    ranges: list[tuple[int, int]] = []
    for t in np.flatnonzero(null_frames):
        if ranges and ranges[-1][1] == t:
            ranges[-1] = (ranges[-1][0], int(t) + 1)
        else:
            ranges.append((int(t), int(t) + 1))
    return ranges
