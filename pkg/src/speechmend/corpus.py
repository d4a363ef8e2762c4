"""Dataset plumbing: manifests, corruption plans, and null-segment sidecars.

A manifest is a TSV file (id, audio path, optional transcript file, optional
split tag), paths resolved relative to the manifest location.  Corrupting a
manifest writes, per (utterance, source power): a zero-filled WAV plus a JSON
sidecar holding the null-segment timestamps and enough provenance (clean
path, power, phase, seed) to reproduce or pair the file later.

Phases are derived from a documented hash so regeneration is byte-identical:
fraction = sha256("<seed>|<utterance id>|<milliwatts to 6 decimals>")[:8]
as a big-endian integer / 2**64, scaled by the cycle period.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .energy import (
    EnergyHarvestConfig,
    IntermittentClip,
    NullSegment,
    apply_intermittency,
    duty_cycle,
)
from .wavio import load_wav, save_wav

__all__ = [
    "ManifestRecord",
    "Manifest",
    "CorruptionPlan",
    "CorruptionResult",
    "SidecarIntegrityError",
    "TABLE_DEVICE",
    "default_plans",
    "schedule_phase",
    "save_sidecar",
    "load_sidecar",
    "generate_corruptions",
    "load_intermittent",
]

SIDECAR_VERSION = 1

# Reference device: 200 uF capacitor, 2.8 V / 2.3 V thresholds, 5.6 mW recording
# load.  source_power is a placeholder; plans substitute their grid values.
TABLE_DEVICE = EnergyHarvestConfig(
    capacitance=200e-6, v_on=2.8, v_off=2.3, source_power=0.0, load_power=5.6e-3
)


class SidecarIntegrityError(ValueError):
    """WAV and sidecar disagree (length, rate, or nonzero samples in a null)."""


@dataclass(frozen=True)
class ManifestRecord:
    utterance_id: str
    audio_path: Path
    transcript_path: Path | None = None
    split: str | None = None


@dataclass
class Manifest:
    records: list[ManifestRecord]

    def __post_init__(self) -> None:
        seen = set()
        for rec in self.records:
            if rec.utterance_id in seen:
                raise ValueError(f"duplicate utterance id {rec.utterance_id!r}")
            seen.add(rec.utterance_id)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @classmethod
    def load(cls, path: str | Path, check_files: bool = True) -> "Manifest":
        path = Path(path)
        base = path.parent
        records = []
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) < 2:
                raise ValueError(f"{path}:{lineno}: expected at least id<TAB>audio_path")
            uid, audio = fields[0].strip(), fields[1].strip()
            transcript = fields[2].strip() if len(fields) > 2 and fields[2].strip() else None
            split = fields[3].strip() if len(fields) > 3 and fields[3].strip() else None
            audio_path = (base / audio).resolve() if not Path(audio).is_absolute() else Path(audio)
            transcript_path = None
            if transcript is not None:
                transcript_path = (
                    (base / transcript).resolve()
                    if not Path(transcript).is_absolute()
                    else Path(transcript)
                )
            records.append(ManifestRecord(uid, audio_path, transcript_path, split))
        manifest = cls(records)
        if check_files:
            missing = [
                str(p)
                for rec in records
                for p in (rec.audio_path, rec.transcript_path)
                if p is not None and not p.exists()
            ]
            if missing:
                raise FileNotFoundError(f"{path}: missing referenced files: {', '.join(missing)}")
        return manifest

    def save(self, path: str | Path) -> None:
        lines = []
        for rec in self.records:
            lines.append(
                "\t".join(
                    [
                        rec.utterance_id,
                        str(rec.audio_path),
                        str(rec.transcript_path) if rec.transcript_path else "",
                        rec.split or "",
                    ]
                )
            )
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class CorruptionPlan:
    """Energy grid (watts) applied with the given device constants and seed."""

    source_powers: tuple[float, ...]
    device: EnergyHarvestConfig = TABLE_DEVICE
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.source_powers:
            raise ValueError("empty energy grid")
        if any(p <= 0 for p in self.source_powers):
            raise ValueError("grid values must be positive")


def default_plans(seed: int = 0) -> tuple[CorruptionPlan, CorruptionPlan]:
    """Mismatched training/testing grids for the reference device.

    Training sweeps 1.5 to 5.5 mW in 0.25 mW steps with the four testing
    powers (2, 3, 4, 5 mW) withheld, leaving 13 values; testing uses exactly
    those four.
    """
    testing_mw = [2.0, 3.0, 4.0, 5.0]
    training_mw = [1.5 + 0.25 * k for k in range(17) if (1.5 + 0.25 * k) not in testing_mw]
    train = CorruptionPlan(tuple(mw / 1000.0 for mw in training_mw), TABLE_DEVICE, seed)
    test = CorruptionPlan(tuple(mw / 1000.0 for mw in testing_mw), TABLE_DEVICE, seed)
    return train, test


def schedule_phase(seed: int, utterance_id: str, source_power: float, period: float) -> float:
    """Deterministic cycle phase in [0, period) for one corrupted record."""
    key = f"{seed}|{utterance_id}|{source_power * 1000.0:.6f}".encode()
    fraction = int.from_bytes(hashlib.sha256(key).digest()[:8], "big") / 2.0**64
    return fraction * period


def _corrupted_id(utterance_id: str, source_power: float) -> str:
    return f"{utterance_id}__{source_power * 1000.0:.2f}mW"


def save_sidecar(
    path: str | Path,
    clip: IntermittentClip,
    utterance_id: str,
    source_power: float,
    phase: float,
    seed: int,
    clean_path: str | Path,
) -> None:
    doc = {
        "version": SIDECAR_VERSION,
        "utterance_id": utterance_id,
        "sample_rate": clip.clip.sample_rate,
        "total_samples": len(clip.clip),
        "segments": [[seg.start, seg.end] for seg in clip.nulls],
        "source_power_watts": source_power,
        "phase_seconds": phase,
        "seed": seed,
        "clean_path": str(clean_path),
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def load_sidecar(path: str | Path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("version") != SIDECAR_VERSION:
        raise ValueError(f"{path}: unsupported sidecar version {doc.get('version')!r}")
    return doc


@dataclass
class CorruptionResult:
    manifest: Manifest
    failures: list[tuple[str, str]]  # (record id, error message)


def generate_corruptions(
    manifest: Manifest, plan: CorruptionPlan, out_dir: str | Path
) -> CorruptionResult:
    """Corrupt every manifest record with every grid value.

    Writes ``<id>__<mW>mW.wav`` and matching ``.json`` sidecars into
    ``out_dir`` plus a ``manifest.tsv`` listing the corrupted records.
    Failures are collected per record; the run continues.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records: list[ManifestRecord] = []
    failures: list[tuple[str, str]] = []
    for rec in manifest:
        for power in plan.source_powers:
            cid = _corrupted_id(rec.utterance_id, power)
            try:
                clip = load_wav(rec.audio_path)
                duty = duty_cycle(replace(plan.device, source_power=power))
                if duty.always_on:
                    phase = 0.0
                    corrupted = IntermittentClip(clip, ())
                else:
                    phase = schedule_phase(plan.seed, rec.utterance_id, power, duty.period)
                    corrupted = apply_intermittency(clip, duty, phase=phase)
                wav_path = out_dir / f"{cid}.wav"
                save_wav(corrupted.clip, wav_path)
                save_sidecar(
                    out_dir / f"{cid}.json",
                    corrupted,
                    rec.utterance_id,
                    power,
                    phase,
                    plan.seed,
                    rec.audio_path,
                )
                records.append(
                    ManifestRecord(cid, wav_path, rec.transcript_path, rec.split)
                )
            except Exception as exc:  # keep going; report at the end
                failures.append((cid, str(exc)))
    result = Manifest(records)
    result.save(out_dir / "manifest.tsv")
    return CorruptionResult(result, failures)


def load_intermittent(wav_path: str | Path, sidecar_path: str | Path) -> IntermittentClip:
    """Rebuild an IntermittentClip from a corrupted WAV and its sidecar.

    The sidecar's length, rate, and zero-sample claims are verified; any
    disagreement raises :class:`SidecarIntegrityError`.
    """
    clip = load_wav(wav_path)
    doc = load_sidecar(sidecar_path)
    if doc["total_samples"] != len(clip):
        raise SidecarIntegrityError(
            f"{wav_path}: {len(clip)} samples but sidecar declares {doc['total_samples']}"
        )
    if doc["sample_rate"] != clip.sample_rate:
        raise SidecarIntegrityError(
            f"{wav_path}: rate {clip.sample_rate} but sidecar declares {doc['sample_rate']}"
        )
    segments = tuple(NullSegment(int(s), int(e)) for s, e in doc["segments"])
    for seg in segments:
        if np.any(clip.samples[seg.start : seg.end] != 0.0):
            raise SidecarIntegrityError(
                f"{wav_path}: nonzero samples inside declared null [{seg.start}, {seg.end})"
            )
    return IntermittentClip(clip, segments)
