"""Minimal RIFF/WAVE reader and writer.

Reads 16-bit integer PCM and 32-bit IEEE float files (any channel count,
averaged to mono); writes 16-bit PCM mono.  The three failure modes are
reported distinctly: a missing file raises :class:`FileNotFoundError`, a
broken container raises :class:`MalformedWavError`, and a format this module
does not handle raises :class:`UnsupportedWavError`.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

from .audio import AudioClip

__all__ = ["MalformedWavError", "UnsupportedWavError", "load_wav", "save_wav"]

_PCM = 1
_IEEE_FLOAT = 3


class MalformedWavError(ValueError):
    """The file is not a well-formed RIFF/WAVE container."""


class UnsupportedWavError(ValueError):
    """The file is valid WAV but uses an encoding this reader does not handle."""


def _read_chunks(blob: bytes, path: str) -> dict[bytes, bytes]:
    chunks: dict[bytes, bytes] = {}
    pos = 12
    while pos + 8 <= len(blob):
        cid = blob[pos : pos + 4]
        (size,) = struct.unpack_from("<I", blob, pos + 4)
        body = blob[pos + 8 : pos + 8 + size]
        if len(body) < size:
            raise MalformedWavError(f"{path}: chunk {cid!r} truncated")
        if cid not in chunks:
            chunks[cid] = body
        pos += 8 + size + (size & 1)  # chunk bodies are word-aligned
    return chunks


def load_wav(path: str | os.PathLike) -> AudioClip:
    """Read a WAV file as a mono clip.

    Integer samples are scaled by 1/32768 into [-1, 1); float samples are
    taken as stored.  Multichannel audio is averaged across channels.
    """
    path = Path(path)
    blob = path.read_bytes()  # raises FileNotFoundError for missing files
    if len(blob) < 12 or blob[:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise MalformedWavError(f"{path}: not a RIFF/WAVE file")
    chunks = _read_chunks(bytes(blob), str(path))
    if b"fmt " not in chunks:
        raise MalformedWavError(f"{path}: missing fmt chunk")
    if b"data" not in chunks:
        raise MalformedWavError(f"{path}: missing data chunk")
    fmt = chunks[b"fmt "]
    if len(fmt) < 16:
        raise MalformedWavError(f"{path}: fmt chunk too short")
    audio_format, channels, sample_rate, _, _, bits = struct.unpack_from("<HHIIHH", fmt, 0)
    if channels < 1:
        raise MalformedWavError(f"{path}: zero channels")
    if sample_rate < 1:
        raise MalformedWavError(f"{path}: invalid sample rate {sample_rate}")

    data = chunks[b"data"]
    if audio_format == _PCM and bits == 16:
        dtype, scale = np.dtype("<i2"), 1.0 / 32768.0
    elif audio_format == _IEEE_FLOAT and bits == 32:
        dtype, scale = np.dtype("<f4"), 1.0
    else:
        raise UnsupportedWavError(
            f"{path}: unsupported encoding (format tag {audio_format}, {bits}-bit); "
            "only 16-bit PCM and 32-bit IEEE float are readable"
        )
    frame_bytes = dtype.itemsize * channels
    usable = len(data) - len(data) % frame_bytes
    raw = np.frombuffer(data[:usable], dtype=dtype).astype(np.float64) * scale
    if channels > 1:
        raw = raw.reshape(-1, channels).mean(axis=1)
    return AudioClip(raw, int(sample_rate))


def save_wav(clip: AudioClip, path: str | os.PathLike) -> int:
    """Write a clip as 16-bit PCM mono WAV.

    Amplitudes outside [-1, 1] are clipped; the return value counts how many
    samples were clipped so callers can warn about hot signals.
    """
    x = clip.samples
    clipped = int(np.count_nonzero((x > 1.0) | (x < -1.0)))
    quantised = np.clip(np.rint(x * 32768.0), -32768, 32767).astype("<i2")
    data = quantised.tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(data)) + b"WAVE"
    header += b"fmt " + struct.pack(
        "<IHHIIHH", 16, _PCM, 1, clip.sample_rate, clip.sample_rate * 2, 2, 16
    )
    header += b"data" + struct.pack("<I", len(data))
    Path(path).write_bytes(header + data)
    return clipped
