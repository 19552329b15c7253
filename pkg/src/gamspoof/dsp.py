"""Signal kernels shared by the augmentation catalog.

All functions take and return plain float64 numpy arrays; callers wrap them
back into :class:`~gamspoof.waveio.Waveform` where needed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as _sig

BIQUAD_KINDS = (
    "lowpass",
    "highpass",
    "bandpass",
    "bandstop",
    "lowshelf",
    "highshelf",
    "peaking",
)


def is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


# -- FFT ---------------------------------------------------------------------

def fft(x, n_fft: int) -> np.ndarray:
    """Complex spectrum of ``x`` zero-extended to ``n_fft`` (power of two)."""
    if not is_pow2(n_fft):
        raise ValueError(f"n_fft must be a power of two, got {n_fft}")
    x = np.asarray(x, dtype=np.float64)
    if x.size > n_fft:
        raise ValueError(f"input length {x.size} exceeds n_fft {n_fft}")
    return np.fft.fft(x, n=n_fft)


def ifft(spectrum) -> np.ndarray:
    """Inverse of :func:`fft`; returns the real part, carrying the 1/N factor."""
    spectrum = np.asarray(spectrum, dtype=np.complex128)
    if not is_pow2(spectrum.size):
        raise ValueError(f"spectrum length must be a power of two, got {spectrum.size}")
    return np.fft.ifft(spectrum).real


# -- STFT --------------------------------------------------------------------

@dataclass(frozen=True)
class StftGrid:
    frames: np.ndarray  # (n_frames, n_fft // 2 + 1) complex
    n_fft: int
    hop: int
    length: int  # original signal length
    window: str = "hann"


def _hann(n: int) -> np.ndarray:
    # periodic Hann: satisfies COLA at hop = n/4 for analysis*synthesis
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def stft(x, n_fft: int = 512, hop: int | None = None) -> StftGrid:
    x = np.asarray(x, dtype=np.float64)
    hop = n_fft // 4 if hop is None else hop
    if not is_pow2(n_fft):
        raise ValueError("n_fft must be a power of two")
    if not 0 < hop <= n_fft:
        raise ValueError("hop must satisfy 0 < hop <= n_fft")
    pad = n_fft
    n_frames = -(-(x.size + pad) // hop) + 1
    total = (n_frames - 1) * hop + n_fft
    buf = np.zeros(total)
    buf[pad:pad + x.size] = x
    idx = np.arange(n_fft)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = np.fft.rfft(buf[idx] * _hann(n_fft), axis=1)
    return StftGrid(frames, n_fft, hop, x.size)


def istft(grid: StftGrid) -> np.ndarray:
    """Weighted overlap-add inverse of :func:`stft` (window-sum normalized)."""
    n_fft, hop = grid.n_fft, grid.hop
    win = _hann(n_fft)
    n_frames = grid.frames.shape[0]
    total = (n_frames - 1) * hop + n_fft
    out = np.zeros(total)
    norm = np.zeros(total)
    chunks = np.fft.irfft(grid.frames, n=n_fft, axis=1) * win
    for i in range(n_frames):
        s = i * hop
        out[s:s + n_fft] += chunks[i]
        norm[s:s + n_fft] += win * win
    pad = n_fft
    out = out[pad:pad + grid.length]
    norm = norm[pad:pad + grid.length]
    return out / np.maximum(norm, 1e-12)


# -- convolution -------------------------------------------------------------

def convolve_direct(x, h) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    return np.convolve(x, h)[: x.size]


def convolve(x, h) -> np.ndarray:
    """Linear convolution via FFT overlap-add, truncated to ``len(x)``."""
    x = np.asarray(x, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if x.size == 0 or h.size == 0:
        raise ValueError("convolve needs non-empty inputs")
    n = x.size
    h = h[:n]
    m = h.size
    block = max(256, next_pow2(m))
    n_fft = next_pow2(block + m - 1)
    H = np.fft.rfft(h, n=n_fft)
    out = np.zeros(n + n_fft)
    for start in range(0, n, block):
        seg = x[start:start + block]
        y = np.fft.irfft(np.fft.rfft(seg, n=n_fft) * H, n=n_fft)
        out[start:start + n_fft] += y
    return out[:n]


# -- biquads -----------------------------------------------------------------

@dataclass(frozen=True)
class BiquadCoeffs:
    b0: float
    b1: float
    b2: float
    a1: float
    a2: float

    def __post_init__(self):
        poles = np.roots([1.0, self.a1, self.a2])
        if np.any(np.abs(poles) >= 1.0):
            raise ValueError(f"unstable biquad: pole radius {np.max(np.abs(poles)):.6f}")

    @property
    def b(self) -> np.ndarray:
        return np.array([self.b0, self.b1, self.b2])

    @property
    def a(self) -> np.ndarray:
        return np.array([1.0, self.a1, self.a2])

    def response(self, freqs, sr: float) -> np.ndarray:
        """Complex frequency response at ``freqs`` Hz."""
        z = np.exp(-1j * 2.0 * np.pi * np.asarray(freqs, dtype=np.float64) / sr)
        num = self.b0 + self.b1 * z + self.b2 * z * z
        den = 1.0 + self.a1 * z + self.a2 * z * z
        return num / den


def biquad_design(kind: str, f_c: float, q: float = 0.7071067811865476,
                  gain_db: float = 0.0, sr: float = 16000) -> BiquadCoeffs:
    """RBJ audio-EQ-cookbook biquad, normalized so that a0 == 1."""
    if kind not in BIQUAD_KINDS:
        raise ValueError(f"unknown biquad kind {kind!r}")
    if not 0.0 < f_c < sr / 2.0:
        raise ValueError(f"f_c={f_c} must lie in (0, {sr / 2})")
    if q <= 0:
        raise ValueError("q must be positive")
    w0 = 2.0 * np.pi * f_c / sr
    cw, sw = np.cos(w0), np.sin(w0)
    alpha = sw / (2.0 * q)
    A = 10.0 ** (gain_db / 40.0)

    if kind == "lowpass":
        b = [(1 - cw) / 2, 1 - cw, (1 - cw) / 2]
        a = [1 + alpha, -2 * cw, 1 - alpha]
    elif kind == "highpass":
        b = [(1 + cw) / 2, -(1 + cw), (1 + cw) / 2]
        a = [1 + alpha, -2 * cw, 1 - alpha]
    elif kind == "bandpass":
        b = [alpha, 0.0, -alpha]
        a = [1 + alpha, -2 * cw, 1 - alpha]
    elif kind == "bandstop":
        b = [1.0, -2 * cw, 1.0]
        a = [1 + alpha, -2 * cw, 1 - alpha]
    elif kind == "peaking":
        b = [1 + alpha * A, -2 * cw, 1 - alpha * A]
        a = [1 + alpha / A, -2 * cw, 1 - alpha / A]
    elif kind == "lowshelf":
        k = 2 * np.sqrt(A) * alpha
        b = [A * ((A + 1) - (A - 1) * cw + k),
             2 * A * ((A - 1) - (A + 1) * cw),
             A * ((A + 1) - (A - 1) * cw - k)]
        a = [(A + 1) + (A - 1) * cw + k,
             -2 * ((A - 1) + (A + 1) * cw),
             (A + 1) + (A - 1) * cw - k]
    else:  # highshelf
        k = 2 * np.sqrt(A) * alpha
        b = [A * ((A + 1) + (A - 1) * cw + k),
             -2 * A * ((A - 1) + (A + 1) * cw),
             A * ((A + 1) + (A - 1) * cw - k)]
        a = [(A + 1) - (A - 1) * cw + k,
             2 * ((A - 1) - (A + 1) * cw),
             (A + 1) - (A - 1) * cw - k]
    a0 = a[0]
    return BiquadCoeffs(b[0] / a0, b[1] / a0, b[2] / a0, a[1] / a0, a[2] / a0)


def biquad_apply(coeffs: BiquadCoeffs, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return _sig.lfilter(coeffs.b, coeffs.a, x)


# -- resampling --------------------------------------------------------------

def resample_linear(x, sr: float, new_sr: float) -> np.ndarray:
    """Linear-interpolation resampling; output length ``round(len * new_sr / sr)``."""
    if new_sr <= 0 or sr <= 0:
        raise ValueError("sample rates must be positive")
    x = np.asarray(x, dtype=np.float64)
    if new_sr == sr:
        return x.copy()
    n_out = max(1, int(round(x.size * new_sr / sr)))
    pos = np.arange(n_out) * (sr / new_sr)
    return np.interp(pos, np.arange(x.size), x)
