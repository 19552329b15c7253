"""Synthetic bona fide / spoof corpus for desk-scale runs.

Bona fide trials are harmonic vowel-like tones with period jitter and a
formant envelope.  Spoof trials come from the same generator and speaker
pool, then pass through a random tanh drive and one to three spectral notches.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .augment import utterance_rng
from .dsp import biquad_apply, biquad_design
from .waveio import DEFAULT_SR, ManifestEntry, Waveform, write_manifest, write_wav

# (F1, F2, F3) in Hz for a handful of vowels
VOWELS = ((730, 1090, 2440), (270, 2290, 3010), (530, 1840, 2480),
          (570, 840, 2410), (300, 870, 2240), (660, 1720, 2410))


@dataclass(frozen=True)
class SynthConfig:
    n_per_class: int = 200
    n_speakers: int = 10
    dev_speakers: int = 3
    duration: float = 1.0
    sample_rate: int = DEFAULT_SR
    seed: int = 0


def speaker_f0(seed: int, speaker: int) -> float:
    return float(utterance_rng(seed, 0x5EED, speaker).uniform(90.0, 240.0))


def vowel_tone(rng: np.random.Generator, f0: float, n: int, sr: int) -> np.ndarray:
    """Sum of harmonics under a three-formant envelope, f0 wandering with jitter."""
    formants = np.array(VOWELS[int(rng.integers(len(VOWELS)))], dtype=float)
    formants *= rng.uniform(0.9, 1.1, 3)
    drift = np.cumsum(rng.normal(0.0, 0.002, n))
    drift -= np.linspace(0.0, drift[-1], n)           # keep the walk anchored
    jitter = np.repeat(rng.normal(0.0, 0.01, n // 80 + 1), 80)[:n]
    f_inst = f0 * (1.0 + drift + jitter)
    phase = 2 * np.pi * np.cumsum(f_inst) / sr
    x = np.zeros(n)
    for k in range(1, int(0.45 * sr / f0) + 1):
        fk = k * f0
        env = sum(np.exp(-0.5 * ((fk - f) / (0.12 * f)) ** 2) for f in formants) + 0.02
        x += env / k ** 0.5 * np.sin(k * phase + rng.uniform(0, 2 * np.pi))
    t = np.arange(n) / sr
    am = 0.6 + 0.4 * np.sin(2 * np.pi * rng.uniform(2.0, 5.0) * t + rng.uniform(0, 2 * np.pi))
    x = x * am + rng.normal(0.0, 0.01 * np.std(x), n)
    return x


def spoof_filter(x: np.ndarray, rng: np.random.Generator, sr: int) -> np.ndarray:
    g = rng.uniform(3.0, 10.0)
    y = np.tanh(g * x / np.max(np.abs(x)))
    for _ in range(int(rng.integers(1, 4))):
        c = biquad_design("bandstop", rng.uniform(500.0, 6000.0), q=rng.uniform(0.7, 2.0), sr=sr)
        y = biquad_apply(c, biquad_apply(c, y))
    return y


def make_trial(seed: int, index: int, speaker: int, spoof: bool, cfg: SynthConfig) -> Waveform:
    rng = utterance_rng(seed, 0x7A1, index)
    n = int(round(cfg.duration * cfg.sample_rate))
    x = vowel_tone(rng, speaker_f0(seed, speaker), n, cfg.sample_rate)
    if spoof:
        x = spoof_filter(x, rng, cfg.sample_rate)
    x = 0.7 * x / np.max(np.abs(x)) * rng.uniform(0.5, 1.0)
    return Waveform(x, cfg.sample_rate)


def rir_kernels(seed: int, sr: int = DEFAULT_SR) -> dict[str, np.ndarray]:
    """A unit impulse plus two rooms: direct path, then an exponentially decaying
    noise tail after a 2.5 ms pre-delay, 10 dB below the direct path."""
    out = {"delta": np.array([1.0])}
    for name, t60 in (("room_small", 0.05), ("room_medium", 0.12)):
        rng = utterance_rng(seed, 0xA1B, int(t60 * 1000))
        n = int(t60 * sr)
        h = rng.normal(size=n) * np.exp(-6.9 * np.arange(n) / n)
        h[:40] = 0.0
        h *= np.sqrt(0.1 / np.sum(h * h))
        h[0] = 1.0
        out[name] = 0.99 * h / np.max(np.abs(h))
    return out


def default_config_text(fit_length: int, seed: int) -> str:
    return f"""# desk-scale run on the synthetic corpus
seed = {seed}
fit_length = {fit_length}

[data]
train = "train.tsv"
dev = "dev.tsv"
eval = "dev.tsv"
rir_bank = "rir"

[policy]
preset = "rir_timemask"

[model]
widths = [64, 32, 16, 2]

[optimizer]
name = "adam"

[schedule]
eta0 = 1e-3
eta_min = 1e-8
max_epochs = 50
patience = 10
batch_size = 32
"""


def synthesize(out_dir, cfg: SynthConfig = SynthConfig()) -> dict[str, list[ManifestEntry]]:
    """Write WAVs, manifest.tsv / train.tsv / dev.tsv, rir/*.wav and config.toml."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dev_spk = set(range(cfg.n_speakers - cfg.dev_speakers, cfg.n_speakers))
    entries = []
    for i in range(2 * cfg.n_per_class):
        spoof = i >= cfg.n_per_class
        j = i - cfg.n_per_class if spoof else i
        spk = j % cfg.n_speakers
        tid = f"SYN{i:05d}"
        rel = f"wav/{tid}.wav"
        write_wav(make_trial(cfg.seed, i, spk, spoof, cfg), out / rel)
        entries.append(ManifestEntry(tid, rel, "spoof" if spoof else "bonafide", f"spk{spk:02d}"))
    dev = [e for e in entries if int(e.speaker_id[3:]) in dev_spk]
    train = [e for e in entries if int(e.speaker_id[3:]) not in dev_spk]
    write_manifest(entries, out / "manifest.tsv")
    write_manifest(train, out / "train.tsv")
    write_manifest(dev, out / "dev.tsv")
    for name, h in rir_kernels(cfg.seed, cfg.sample_rate).items():
        write_wav(Waveform(h, cfg.sample_rate), out / "rir" / f"{name}.wav")
    (out / "config.toml").write_text(
        default_config_text(int(round(cfg.duration * cfg.sample_rate)), cfg.seed), encoding="utf-8")
    return {"all": entries, "train": train, "dev": dev}
