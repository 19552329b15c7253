"""Deterministic spectral summary used in place of a pretrained front end."""
from __future__ import annotations

import numpy as np

from ..dsp import next_pow2
from ..waveio import Waveform

LOG_FLOOR = 1e-10
MIN_SAMPLES = 256


def band_edges(n_fft: int, n_bins: int) -> np.ndarray:
    """Boundaries (in rfft bin indices) of ``n_bins`` equal-width bands over [0, Nyquist]."""
    return np.round(np.linspace(0, n_fft // 2 + 1, n_bins + 1)).astype(int)


def featurize(w: Waveform | np.ndarray, n_bins: int = 64) -> np.ndarray:
    x = np.asarray(w.samples if isinstance(w, Waveform) else w, dtype=np.float64)
    if x.size < MIN_SAMPLES:
        raise ValueError(f"featurize needs at least {MIN_SAMPLES} samples, got {x.size}")
    n_fft = next_pow2(x.size)
    if n_bins < 1 or n_bins > n_fft // 2 + 1:
        raise ValueError(f"n_bins must be in [1, {n_fft // 2 + 1}]")
    mag = np.abs(np.fft.rfft(x, n=n_fft))
    # floor relative to the peak so that rescaling the input is a pure log shift
    logmag = np.log(np.maximum(mag, LOG_FLOOR * max(mag.max(), LOG_FLOOR)))
    edges = band_edges(n_fft, n_bins)
    csum = np.concatenate([[0.0], np.cumsum(logmag)])
    feats = (csum[edges[1:]] - csum[edges[:-1]]) / np.diff(edges)
    feats = feats - feats.mean()
    std = feats.std()
    # zero-variance vectors (e.g. silence) map to the zero vector
    if std < 1e-12:
        return np.zeros(n_bins)
    return feats / std
