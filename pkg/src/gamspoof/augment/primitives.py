"""Length-preserving waveform transforms.

Every stochastic parameter accepts either a scalar (used as-is) or a
``(lo, hi)`` range sampled uniformly per call, so ``(x, x)`` pins a value
while still consuming the same RNG draw as the random case.  Every transform
also takes ``p``, the probability of being applied at all.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .. import dsp
from ..waveio import Waveform, fit_length, read_wav

log = logging.getLogger(__name__)

MU = 255.0
A_LAW = 87.6
COMPAND_LEVELS = 127  # magnitude codes; sign bit makes up the 8-bit code


class ConfigurationError(ValueError):
    pass


def draw(rng: np.random.Generator, value) -> float:
    if isinstance(value, (tuple, list)):
        lo, hi = value
        if lo > hi:
            raise ConfigurationError(f"empty range [{lo}, {hi}]")
        return float(rng.uniform(lo, hi))
    return float(value)


def draw_int(rng: np.random.Generator, value) -> int:
    if isinstance(value, (tuple, list)):
        lo, hi = int(value[0]), int(value[1])
        if lo > hi:
            raise ConfigurationError(f"empty range [{lo}, {hi}]")
        return int(rng.integers(lo, hi + 1))
    return int(value)


def _skip(rng: np.random.Generator, p: float) -> bool:
    if p >= 1.0:
        return False
    return not (rng.random() < p)


def _signal_power(x: np.ndarray) -> float:
    return float(np.mean(x * x))


def _add_at_snr(x: np.ndarray, noise: np.ndarray, snr_db: float) -> np.ndarray:
    if np.isposinf(snr_db):
        return x
    pn = _signal_power(noise)
    if pn == 0.0:
        return x
    gain = np.sqrt(_signal_power(x) / (pn * 10.0 ** (snr_db / 10.0)))
    return x + gain * noise


# -- RIR -----------------------------------------------------------------------

@dataclass(frozen=True)
class RirBank:
    kernels: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not self.kernels:
            raise ConfigurationError("RIR bank is empty")

    @classmethod
    def from_dir(cls, path) -> "RirBank":
        path = Path(path)
        if not path.is_dir():
            raise ConfigurationError(f"RIR bank {path} is not a directory")
        files = sorted(path.glob("*.wav"))
        return cls(tuple(read_wav(f).samples for f in files))

    def __len__(self) -> int:
        return len(self.kernels)


def apply_rir(w: Waveform, bank: RirBank | Sequence[np.ndarray], rng: np.random.Generator,
              intensity=(0.2, 0.8), p: float = 1.0) -> Waveform:
    if not isinstance(bank, RirBank):
        bank = RirBank(tuple(np.asarray(h, dtype=np.float64) for h in bank))
    if _skip(rng, p):
        return w
    h = bank.kernels[int(rng.integers(len(bank)))]
    a = draw(rng, intensity)
    h = np.trim_zeros(np.asarray(h, dtype=np.float64), "b")
    norm = np.linalg.norm(h)
    if norm == 0.0:
        return w
    h = h / norm
    x = w.samples
    wet = x * h[0] if h.size == 1 else dsp.convolve(x, h)
    y = x + a * (wet - x)
    peak = np.max(np.abs(y))
    if peak > 1.0:
        y = y / peak
    return w.with_samples(y)


# -- RawBoost ------------------------------------------------------------------

def _notch_chain(x, rng, sr, n_notches, f_range, bandwidth):
    n = draw_int(rng, n_notches)
    f_hi = min(f_range[1], 0.45 * sr)
    for _ in range(n):
        fc = draw(rng, (min(f_range[0], f_hi), f_hi))
        bw = draw(rng, bandwidth)
        x = dsp.biquad_apply(dsp.biquad_design("bandstop", fc, fc / bw, sr=sr), x)
    return x


def rawboost_lnl(w: Waveform, rng, n_notches=(1, 5), f_range=(20.0, 8000.0),
                 bandwidth=(100.0, 1000.0), order=(1, 5), coeff=(0.05, 0.5),
                 p: float = 1.0) -> Waveform:
    """Random notch-filter chain followed by an odd polynomial nonlinearity."""
    if _skip(rng, p):
        return w
    x = w.samples
    z = _notch_chain(x, rng, w.sample_rate, n_notches, f_range, bandwidth)
    max_order = draw_int(rng, order)
    y = z.copy() if max_order > 1 else z
    for k in range(3, max_order + 1, 2):
        y = y + draw(rng, coeff) * z ** k
    peak_in, peak_out = np.max(np.abs(x)), np.max(np.abs(y))
    if peak_out > 0.0:
        y = y * (peak_in / peak_out)
    return w.with_samples(y)


def rawboost_ssi(w: Waveform, rng, snr_db=(10.0, 40.0), n_bands=(1, 5),
                 f_range=(20.0, 8000.0), bandwidth=(100.0, 1000.0),
                 p: float = 1.0) -> Waveform:
    """Additive stationary coloured noise: white noise through random bandpasses."""
    if _skip(rng, p):
        return w
    sr = w.sample_rate
    white = rng.standard_normal(len(w))
    nb = draw_int(rng, n_bands)
    f_hi = min(f_range[1], 0.45 * sr)
    noise = np.zeros(len(w)) if nb else white
    for _ in range(nb):
        fc = draw(rng, (min(f_range[0], f_hi), f_hi))
        bw = draw(rng, bandwidth)
        noise = noise + dsp.biquad_apply(dsp.biquad_design("bandpass", fc, fc / bw, sr=sr), white)
    snr = draw(rng, snr_db)
    return w.with_samples(_add_at_snr(w.samples, noise, snr))


def rawboost_isd(w: Waveform, rng, fraction=(0.0, 0.2), g_sd: float = 2.0,
                 p: float = 1.0) -> Waveform:
    """Signal-dependent impulses on a random subset of samples."""
    if _skip(rng, p):
        return w
    x = w.samples
    frac = draw(rng, fraction)
    k = int(frac * x.size)
    if k == 0:
        return w
    pos = rng.choice(x.size, size=k, replace=False)
    y = x.copy()
    y[pos] = x[pos] + g_sd * np.abs(x[pos]) * rng.uniform(-1.0, 1.0, size=k)
    return w.with_samples(y)


def rawboost(w: Waveform, variant: str, cfg: dict | None, rng) -> Waveform:
    fn = {"lnl": rawboost_lnl, "ssi": rawboost_ssi, "isd": rawboost_isd}.get(variant)
    if fn is None:
        raise ConfigurationError(f"unknown RawBoost variant {variant!r}")
    return fn(w, rng, **(cfg or {}))


# -- companding ----------------------------------------------------------------

def compress(x, law: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    ax = np.abs(x)
    if law == "mu_law":
        return np.sign(x) * np.log1p(MU * ax) / np.log1p(MU)
    if law == "a_law":
        d = 1.0 + np.log(A_LAW)
        small = A_LAW * ax / d
        with np.errstate(divide="ignore"):
            big = (1.0 + np.log(A_LAW * ax)) / d
        return np.sign(x) * np.where(ax < 1.0 / A_LAW, small, big)
    raise ConfigurationError(f"unknown companding law {law!r}")


def expand(y, law: str) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    ay = np.abs(y)
    if law == "mu_law":
        return np.sign(y) * np.expm1(ay * np.log1p(MU)) / MU
    if law == "a_law":
        d = 1.0 + np.log(A_LAW)
        return np.sign(y) * np.where(ay < 1.0 / d, ay * d / A_LAW, np.exp(ay * d - 1.0) / A_LAW)
    raise ConfigurationError(f"unknown companding law {law!r}")


def compand(w: Waveform, law: str) -> Waveform:
    """8-bit sign-magnitude companding round trip (G.711 style)."""
    x = w.samples
    if np.any(np.abs(x) > 1.0):
        raise ValueError("compand input must lie in [-1, 1]")
    y = compress(x, law)
    q = np.sign(y) * np.floor(np.abs(y) * COMPAND_LEVELS + 0.5) / COMPAND_LEVELS
    return w.with_samples(expand(q, law))


def random_compand(w: Waveform, rng, law: str = "random", p: float = 1.0) -> Waveform:
    if _skip(rng, p):
        return w
    if law == "random":
        law = ("a_law", "mu_law")[int(rng.integers(2))]
    # the codec saturates, so upstream overshoot is clipped rather than rejected
    return compand(w.with_samples(np.clip(w.samples, -1.0, 1.0)), law)


# -- masking / mixing ----------------------------------------------------------

def time_mask(w: Waveform, rng, max_fraction=(0.2, 0.5), t0: int | None = None,
              t: int | None = None, p: float = 1.0) -> Waveform:
    """Zero ``[t0, t0 + t)``; ``t ~ U[0, T]`` with ``T`` a random fraction of the length."""
    tau = len(w)
    if tau < 2:
        raise ValueError("time_mask needs at least 2 samples")
    if _skip(rng, p):
        return w
    if t is None:
        T = draw(rng, max_fraction) * tau
        t = int(np.floor(rng.uniform(0.0, T))) if T > 0 else 0
    if t0 is None:
        t0 = int(rng.integers(0, tau - t)) if tau - t > 0 else 0
    if t == 0:
        return w
    y = w.samples.copy()
    y[t0:t0 + t] = 0.0
    return w.with_samples(y)


def mixup(w1: Waveform, y1, w2: Waveform, y2, rng, sigma: float = 1.0,
          lam: float | None = None) -> tuple[Waveform, np.ndarray]:
    if len(w1) != len(w2):
        raise ValueError(f"mixup length mismatch: {len(w1)} vs {len(w2)}")
    if lam is None:
        lam = float(rng.beta(sigma, sigma))
    y1 = np.asarray(y1, dtype=np.float64)
    y2 = np.asarray(y2, dtype=np.float64)
    x = lam * w1.samples + (1.0 - lam) * w2.samples
    label = lam * y1 + (1.0 - lam) * y2
    return w1.with_samples(x), label


def amplitude_mix(w1: Waveform, w2: Waveform, gamma: float, n_fft: int | None = 512,
                  hop: int | None = None) -> Waveform:
    """Blend magnitude spectra of two utterances, keeping the phase of ``w1``.

    ``n_fft=None`` uses one transform over the whole utterance instead of an
    STFT.  With short frames, components present only in ``w2`` inherit the
    frame-to-frame phase of ``w1``'s leakage and largely cancel on overlap-add;
    the whole-utterance transform keeps them.
    """
    if len(w1) != len(w2):
        raise ValueError(f"amplitude_mix length mismatch: {len(w1)} vs {len(w2)}")
    if n_fft is None:
        S1, S2 = np.fft.rfft(w1.samples), np.fft.rfft(w2.samples)
        mag = (1.0 - gamma) * np.abs(S1) + gamma * np.abs(S2)
        return w1.with_samples(np.fft.irfft(mag * np.exp(1j * np.angle(S1)), n=len(w1)))
    s1 = dsp.stft(w1.samples, n_fft, hop)
    s2 = dsp.stft(w2.samples, n_fft, hop)
    mag = (1.0 - gamma) * np.abs(s1.frames) + gamma * np.abs(s2.frames)
    mixed = mag * np.exp(1j * np.angle(s1.frames))
    grid = dsp.StftGrid(mixed, s1.n_fft, s1.hop, s1.length)
    return w1.with_samples(dsp.istft(grid))


def amplitude(w: Waveform, rng, partner: Waveform | None = None, gamma=(0.1, 0.5),
              n_fft: int | None = 512, p: float = 1.0) -> Waveform:
    if _skip(rng, p):
        return w
    g = draw(rng, gamma)
    if partner is None:
        log.debug("amplitude: no same-speaker/label partner, passing through")
        return w
    partner = fit_length(partner, len(w))
    return amplitude_mix(w, partner, g, n_fft=n_fft)


# -- noise set -----------------------------------------------------------------

def add_gaussian_noise(w: Waveform, rng, sigma=(0.001, 0.015), p: float = 1.0) -> Waveform:
    if _skip(rng, p):
        return w
    s = draw(rng, sigma)
    noise = rng.standard_normal(len(w))
    if s == 0.0:
        return w
    return w.with_samples(w.samples + s * noise)


def add_gaussian_snr(w: Waveform, rng, snr_db=(10.0, 40.0), p: float = 1.0) -> Waveform:
    if _skip(rng, p):
        return w
    snr = draw(rng, snr_db)
    noise = rng.standard_normal(len(w))
    return w.with_samples(_add_at_snr(w.samples, noise, snr))


def color_noise(n: int, exponent: float, rng) -> np.ndarray:
    """Noise with power spectral density proportional to ``1 / f**exponent``."""
    spec = np.fft.rfft(rng.standard_normal(n))
    f = np.fft.rfftfreq(n)
    scale = np.zeros_like(f)
    scale[1:] = f[1:] ** (-exponent / 2.0)
    return np.fft.irfft(spec * scale, n=n)


def add_color_noise(w: Waveform, rng, snr_db=(10.0, 40.0), exponent=(0.0, 2.0),
                    p: float = 1.0) -> Waveform:
    if _skip(rng, p):
        return w
    snr = draw(rng, snr_db)
    beta = draw(rng, exponent)
    noise = color_noise(len(w), beta, rng)
    return w.with_samples(_add_at_snr(w.samples, noise, snr))


# -- filter set ----------------------------------------------------------------

def _biquad(w: Waveform, kind: str, fc: float, q: float, gain_db: float = 0.0) -> Waveform:
    sr = w.sample_rate
    fc = min(max(fc, 1.0), 0.49 * sr)
    return w.with_samples(dsp.biquad_apply(dsp.biquad_design(kind, fc, q, gain_db, sr), w.samples))


def low_pass_filter(w, rng, cutoff=(150.0, 7500.0), q: float = 0.7071067811865476, p: float = 1.0):
    if _skip(rng, p):
        return w
    return _biquad(w, "lowpass", draw(rng, cutoff), q)


def high_pass_filter(w, rng, cutoff=(20.0, 2400.0), q: float = 0.7071067811865476, p: float = 1.0):
    if _skip(rng, p):
        return w
    return _biquad(w, "highpass", draw(rng, cutoff), q)


def band_pass_filter(w, rng, center=(200.0, 4000.0), bandwidth_fraction=(0.5, 1.99), p: float = 1.0):
    if _skip(rng, p):
        return w
    fc = draw(rng, center)
    return _biquad(w, "bandpass", fc, 1.0 / draw(rng, bandwidth_fraction))


def band_stop_filter(w, rng, center=(200.0, 4000.0), bandwidth_fraction=(0.5, 1.99), p: float = 1.0):
    if _skip(rng, p):
        return w
    fc = draw(rng, center)
    return _biquad(w, "bandstop", fc, 1.0 / draw(rng, bandwidth_fraction))


def _gain_filter(kind, w, rng, center, gain_db, q, p):
    if _skip(rng, p):
        return w
    fc = draw(rng, center)
    g = draw(rng, gain_db)
    qq = draw(rng, q)
    if g == 0.0:
        return w
    return _biquad(w, kind, fc, qq, g)


def low_shelf_filter(w, rng, center=(50.0, 4000.0), gain_db=(-18.0, 18.0),
                     q: float = 0.7071067811865476, p: float = 1.0):
    return _gain_filter("lowshelf", w, rng, center, gain_db, q, p)


def high_shelf_filter(w, rng, center=(300.0, 7500.0), gain_db=(-18.0, 18.0),
                      q: float = 0.7071067811865476, p: float = 1.0):
    return _gain_filter("highshelf", w, rng, center, gain_db, q, p)


def peaking_filter(w, rng, center=(50.0, 7500.0), gain_db=(-24.0, 24.0), q=(0.5, 5.0),
                   p: float = 1.0):
    return _gain_filter("peaking", w, rng, center, gain_db, q, p)


# -- mix-set extras ------------------------------------------------------------

def air_absorption(w, rng, cutoff=(3000.0, 7000.0), p: float = 1.0):
    """High-frequency loss modelled as a lowpass; a cutoff at or above Nyquist bypasses."""
    if _skip(rng, p):
        return w
    fc = draw(rng, cutoff)
    if fc >= w.sample_rate / 2:
        return w
    return _biquad(w, "lowpass", fc, 0.7071067811865476)


def aliasing(w, rng, target_sr=(4000.0, 8000.0), p: float = 1.0):
    """Down- and up-sample without an anti-alias filter."""
    if _skip(rng, p):
        return w
    tsr = draw(rng, target_sr)
    sr = w.sample_rate
    if tsr >= sr:
        return w
    n = len(w)
    down_pos = np.arange(int(np.ceil(n * tsr / sr))) * (sr / tsr)
    down = np.interp(down_pos, np.arange(n), w.samples)
    y = np.interp(np.arange(n), down_pos, down)
    return w.with_samples(y)


def shift(w, rng, fraction=(-0.25, 0.25), p: float = 1.0):
    if _skip(rng, p):
        return w
    k = int(round(draw(rng, fraction) * len(w)))
    if k == 0:
        return w
    return w.with_samples(np.roll(w.samples, k))


def pitch_shift(w, rng, semitones=(-2.0, 2.0), p: float = 1.0):
    if _skip(rng, p):
        return w
    st = draw(rng, semitones)
    if st == 0.0:
        return w
    factor = 2.0 ** (st / 12.0)
    y = dsp.resample_linear(w.samples, w.sample_rate, w.sample_rate / factor)
    return w.with_samples(fit_length(y, len(w)))


def polarity_inversion(w, rng, p: float = 1.0):
    if _skip(rng, p):
        return w
    return w.with_samples(-w.samples)


def ola_stretch(x: np.ndarray, rate: float, n_fft: int = 512) -> np.ndarray:
    """Phase-vocoder time stretch with overlap-add resynthesis; ``rate > 1`` shortens.

    Output length is ``round(len(x) / rate)``; pitch is kept.
    """
    if rate <= 0:
        raise ValueError("rate must be positive")
    grid = dsp.stft(x, n_fft)
    S = grid.frames
    hop = grid.hop
    steps = np.arange(0.0, S.shape[0] - 1, rate)
    omega = 2.0 * np.pi * hop * np.arange(S.shape[1]) / n_fft  # expected advance per hop
    phase = np.angle(S[0])
    out = np.empty((steps.size, S.shape[1]), dtype=np.complex128)
    for k, t in enumerate(steps):
        i = int(t)
        frac = t - i
        mag = (1.0 - frac) * np.abs(S[i]) + frac * np.abs(S[i + 1])
        out[k] = mag * np.exp(1j * phase)
        dphi = np.angle(S[i + 1]) - np.angle(S[i]) - omega
        dphi -= 2.0 * np.pi * np.round(dphi / (2.0 * np.pi))
        phase = phase + omega + dphi
    length = max(1, int(round(x.size / rate)))
    return dsp.istft(dsp.StftGrid(out, n_fft, hop, length))


def time_stretch(w, rng, rate=(0.9, 1.1), p: float = 1.0):
    if _skip(rng, p):
        return w
    r = draw(rng, rate)
    if r == 1.0:
        return w
    return w.with_samples(fit_length(ola_stretch(w.samples, r), len(w)))


def tanh_distortion(w, rng, gain=(1.0, 8.0), p: float = 1.0):
    if _skip(rng, p):
        return w
    g = draw(rng, gain)
    if g == 0.0:
        return w
    return w.with_samples(np.tanh(g * w.samples) / np.tanh(g))


# -- registry ------------------------------------------------------------------

@dataclass
class AugmentContext:
    """Resources some transforms need beyond the waveform itself."""
    rir_bank: RirBank | None = None
    partner: Callable[[np.random.Generator], Waveform | None] | None = None


def _needs_bank(fn):
    def run(w, rng, ctx, **params):
        if ctx is None or ctx.rir_bank is None:
            raise ConfigurationError("RIR transform requires an RIR bank")
        return fn(w, ctx.rir_bank, rng, **params)
    return run


def _with_partner(w, rng, ctx, **params):
    partner = ctx.partner(rng) if ctx is not None and ctx.partner is not None else None
    return amplitude(w, rng, partner=partner, **params)


def _plain(fn):
    return lambda w, rng, ctx, **params: fn(w, rng, **params)


def _a_law(w, rng, p: float = 1.0):
    return random_compand(w, rng, "a_law", p)


def _mu_law(w, rng, p: float = 1.0):
    return random_compand(w, rng, "mu_law", p)


# kind -> the public transform it wraps; used for parameter validation
TRANSFORMS: dict[str, Callable] = {
    "rir": apply_rir,
    "lnl": rawboost_lnl,
    "ssi": rawboost_ssi,
    "isd": rawboost_isd,
    "compand": random_compand,
    "a_law": _a_law,
    "mu_law": _mu_law,
    "time_mask": time_mask,
    "amplitude": amplitude,
    "add_color_noise": add_color_noise,
    "add_gaussian_noise": add_gaussian_noise,
    "add_gaussian_snr": add_gaussian_snr,
    "band_pass_filter": band_pass_filter,
    "band_stop_filter": band_stop_filter,
    "high_pass_filter": high_pass_filter,
    "high_shelf_filter": high_shelf_filter,
    "low_pass_filter": low_pass_filter,
    "low_shelf_filter": low_shelf_filter,
    "peaking_filter": peaking_filter,
    "air_absorption": air_absorption,
    "aliasing": aliasing,
    "shift": shift,
    "pitch_shift": pitch_shift,
    "polarity_inversion": polarity_inversion,
    "time_stretch": time_stretch,
    "tanh_distortion": tanh_distortion,
}

CATALOG: dict[str, Callable] = {
    "rir": _needs_bank(apply_rir),
    "lnl": _plain(rawboost_lnl),
    "ssi": _plain(rawboost_ssi),
    "isd": _plain(rawboost_isd),
    "compand": _plain(random_compand),
    "a_law": _plain(_a_law),
    "mu_law": _plain(_mu_law),
    "time_mask": _plain(time_mask),
    "amplitude": _with_partner,
    "add_color_noise": _plain(add_color_noise),
    "add_gaussian_noise": _plain(add_gaussian_noise),
    "add_gaussian_snr": _plain(add_gaussian_snr),
    "band_pass_filter": _plain(band_pass_filter),
    "band_stop_filter": _plain(band_stop_filter),
    "high_pass_filter": _plain(high_pass_filter),
    "high_shelf_filter": _plain(high_shelf_filter),
    "low_pass_filter": _plain(low_pass_filter),
    "low_shelf_filter": _plain(low_shelf_filter),
    "peaking_filter": _plain(peaking_filter),
    "air_absorption": _plain(air_absorption),
    "aliasing": _plain(aliasing),
    "shift": _plain(shift),
    "pitch_shift": _plain(pitch_shift),
    "polarity_inversion": _plain(polarity_inversion),
    "time_stretch": _plain(time_stretch),
    "tanh_distortion": _plain(tanh_distortion),
}
