"""Waveform container, 16-bit PCM WAV I/O and length normalization."""
from __future__ import annotations

import csv
import os
import struct
import wave
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

DEFAULT_SR = 16000
LABELS = ("bonafide", "spoof")
MANIFEST_COLUMNS = ("trial_id", "path", "label", "speaker_id")


class WavFormatError(ValueError):
    """Malformed RIFF/WAVE container."""


class UnsupportedFormatError(ValueError):
    """Well-formed WAV that is not 16-bit mono PCM."""


class SampleRangeError(ValueError):
    """Sample outside [-1, 1] at write time."""


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray
    sample_rate: int = DEFAULT_SR

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.float64).reshape(-1)
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if x.size < 1:
            raise ValueError("waveform must contain at least one sample")
        if not np.all(np.isfinite(x)):
            raise ValueError("waveform contains non-finite samples")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    def __len__(self) -> int:
        return self.samples.size

    def with_samples(self, samples: np.ndarray) -> "Waveform":
        return Waveform(samples, self.sample_rate)


def read_wav(path: str | os.PathLike) -> Waveform:
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(12)
    if len(head) < 12 or head[:4] != b"RIFF" or head[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")
    try:
        with wave.open(str(path), "rb") as wf:
            nch = wf.getnchannels()
            width = wf.getsampwidth()
            sr = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except wave.Error as exc:
        msg = str(exc)
        if "unknown format" in msg:
            raise UnsupportedFormatError(f"{path}: {msg}") from exc
        raise WavFormatError(f"{path}: {msg}") from exc
    except (EOFError, struct.error) as exc:
        raise WavFormatError(f"{path}: truncated header") from exc
    if nch != 1:
        raise UnsupportedFormatError(f"{path}: expected mono, got {nch} channels")
    if width != 2:
        raise UnsupportedFormatError(f"{path}: expected 16-bit PCM, got {8 * width}-bit")
    pcm = np.frombuffer(raw, dtype="<i2")
    if pcm.size == 0:
        raise WavFormatError(f"{path}: no sample frames")
    return Waveform(pcm.astype(np.float64) / 32768.0, sr)


def quantize_pcm16(samples: np.ndarray) -> np.ndarray:
    """Map [-1, 1] to int16 by round-half-away-from-zero; +1.0 saturates to 32767."""
    x = np.asarray(samples, dtype=np.float64)
    if np.any(np.abs(x) > 1.0) or not np.all(np.isfinite(x)):
        bad = int(np.argmax(~np.isfinite(x) | (np.abs(x) > 1.0)))
        raise SampleRangeError(f"sample {bad} = {x[bad]!r} is outside [-1, 1]")
    scaled = x * 32768.0
    q = np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)
    return np.clip(q, -32768, 32767).astype("<i2")


def write_wav(w: Waveform, path: str | os.PathLike) -> None:
    pcm = quantize_pcm16(w.samples)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with wave.open(str(tmp), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(int(w.sample_rate))
        wf.writeframes(pcm.tobytes())
    os.replace(tmp, path)


def fit_length(w: Waveform, n: int, mode: str = "truncate_or_repeat") -> Waveform:
    """Truncate to the first ``n`` samples, or tile cyclically up to ``n``."""
    if mode != "truncate_or_repeat":
        raise ValueError(f"unknown fit mode {mode!r}")
    if n < 1:
        raise ValueError("target length must be >= 1")
    x = np.asarray(w.samples if isinstance(w, Waveform) else w, dtype=np.float64)
    if x.size == 0:
        raise ValueError("cannot fit an empty waveform")
    if x.size >= n:
        out = x[:n]
    else:
        out = np.tile(x, -(-n // x.size))[:n]
    if isinstance(w, Waveform):
        return Waveform(out, w.sample_rate)
    return out


# -- manifests ---------------------------------------------------------------

@dataclass(frozen=True)
class ManifestEntry:
    trial_id: str
    path: str
    label: str
    speaker_id: str

    @property
    def is_bonafide(self) -> bool:
        return self.label == "bonafide"


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry] = field(default_factory=list)
    root: Path | None = None

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.label not in LABELS:
                raise ManifestError(f"trial {e.trial_id}: label {e.label!r} not in {LABELS}")
            if e.trial_id in seen:
                raise ManifestError(f"duplicate trial_id {e.trial_id!r}")
            seen.add(e.trial_id)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def resolve(self, entry: ManifestEntry) -> Path:
        p = Path(entry.path)
        if not p.is_absolute() and self.root is not None:
            p = self.root / p
        return p

    def labels(self) -> dict[str, str]:
        return {e.trial_id: e.label for e in self.entries}


def read_manifest(path: str | os.PathLike) -> DatasetManifest:
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh, delimiter="\t"))
    if not rows or tuple(rows[0]) != MANIFEST_COLUMNS:
        raise ManifestError(f"{path}: header must be {' '.join(MANIFEST_COLUMNS)}")
    entries = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 4:
            raise ManifestError(f"{path}:{lineno}: expected 4 columns, got {len(row)}")
        entries.append(ManifestEntry(*row))
    return DatasetManifest(entries, root=path.parent)


def write_manifest(entries: Iterable[ManifestEntry], path: str | os.PathLike) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(MANIFEST_COLUMNS)
        for e in entries:
            writer.writerow([e.trial_id, e.path, e.label, e.speaker_id])
