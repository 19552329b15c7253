import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gamspoof.augment import (CATALOG, PRESETS, AugmentContext, AugmentPolicy, ConfigurationError,
                              RirBank, TransformSpec, amplitude_mix, apply_policy, apply_rir,
                              cascade, compand, compress, expand, mixup, random_set, rawboost,
                              single, time_mask, utterance_rng)
from gamspoof.augment import primitives as P
from gamspoof.synth import rir_kernels
from gamspoof.waveio import Waveform

SR = 16000
DELTA = RirBank((np.array([1.0]),))


def sine(f, n=SR, amp=0.5):
    return Waveform(amp * np.sin(2 * np.pi * f * np.arange(n) / SR))


def speechy(seed=0, n=4000):
    rng = np.random.default_rng(seed)
    x = np.convolve(rng.normal(size=n), np.ones(8) / 8, mode="same")
    return Waveform(0.8 * x / np.max(np.abs(x)))


def peak_hz(x):
    spec = np.abs(np.fft.rfft(x * np.hanning(x.size)))
    return np.fft.rfftfreq(x.size, 1 / SR)[np.argmax(spec)]


def snr_db(clean, noisy):
    return 10 * np.log10(np.mean(clean ** 2) / np.mean((noisy - clean) ** 2))


# -- time mask -------------------------------------------------------------------

def test_time_mask_forced():
    w = Waveform(np.ones(8))
    assert time_mask(w, np.random.default_rng(0), t=0) is w
    assert time_mask(w, np.random.default_rng(0), t0=2, t=3).samples.tolist() == [1, 1, 0, 0, 0, 1, 1, 1]


def test_time_mask_monte_carlo():
    x = np.random.default_rng(1).uniform(0.1, 1.0, 1000)
    w = Waveform(x)
    rng = np.random.default_rng(2)
    fracs = []
    for _ in range(10_000):
        y = time_mask(w, rng).samples
        masked = y == 0
        fracs.append(masked.mean())
        assert np.array_equal(y[~masked], x[~masked])
        idx = np.flatnonzero(masked)
        assert idx.size == 0 or idx[-1] - idx[0] + 1 == idx.size  # contiguous
    fracs = np.array(fracs)
    assert fracs.min() >= 0 and fracs.max() < 0.5
    assert fracs.mean() == pytest.approx(0.175, abs=0.02)


# -- companding ------------------------------------------------------------------

@pytest.mark.parametrize("law", ["a_law", "mu_law"])
def test_compand_shape(law):
    grid = np.linspace(-1, 1, 10_001)
    F = compress(grid, law)
    assert np.all(np.diff(F) >= 0)
    assert np.max(np.abs(compress(-grid, law) + F)) <= 1e-12
    assert compress(0.0, law) == 0 and compress(1.0, law) == pytest.approx(1.0, abs=1e-15)
    assert compress(-1.0, law) == pytest.approx(-1.0, abs=1e-15)
    assert np.max(np.abs(expand(F, law) - grid)) <= 1e-12


@pytest.mark.parametrize("law", ["a_law", "mu_law"])
def test_compand_round_trip_error(law):
    x = np.linspace(-1, 1, 10_001)
    y = compand(Waveform(x), law).samples
    step = 1 / P.COMPAND_LEVELS
    c = np.abs(compress(x, law))
    # rounding moves |F(x)| by at most half a step; map that through the expander
    hi = expand(np.minimum(c + step / 2, 1.0), law) - np.abs(x)
    lo = np.abs(x) - expand(np.maximum(c - step / 2, 0.0), law)
    assert np.all(np.abs(y - x) <= np.maximum(hi, lo) + 1e-12)
    assert compand(Waveform(np.array([0.0])), law).samples[0] == 0.0
    one = compand(Waveform(np.array([1.0])), law).samples[0]
    assert abs(one - 1.0) <= 1.0 - expand(1 - step, law)
    assert np.array_equal(compand(Waveform(-x), law).samples, -y)
    assert np.unique(y).size <= 2 * P.COMPAND_LEVELS + 1


def test_compand_errors():
    with pytest.raises(ValueError):
        compand(Waveform(np.array([1.5])), "mu_law")
    with pytest.raises(ConfigurationError):
        compress(0.1, "b_law")


def test_mu_law_high_precision():
    mpmath.mp.dps = 30
    ref = mpmath.log(1 + mpmath.mpf(127.5)) / mpmath.log(256)
    assert compress(0.5, "mu_law") == pytest.approx(float(ref), rel=1e-12)


def test_a_law_branches_meet():
    k = 1 / P.A_LAW
    assert compress(k * (1 - 1e-12), "a_law") == pytest.approx(compress(k, "a_law"), abs=1e-10)


# -- RIR ------------------------------------------------------------------------

def test_rir_delta_identity():
    w = speechy()
    for a in [(0.2, 0.2), (0.8, 0.8), (0.2, 0.8)]:
        assert np.array_equal(apply_rir(w, DELTA, np.random.default_rng(0), a).samples, w.samples)
    # trailing zeros do not change the kernel
    padded = RirBank((np.array([1.0, 0.0, 0.0]),))
    assert np.array_equal(apply_rir(w, padded, np.random.default_rng(0)).samples, w.samples)


@pytest.mark.parametrize("room", ["room_small", "room_medium"])
def test_rir_energy_bound(room):
    # a single sine sees |0.2 + 0.8 H(f)|^2, which depends on the room; a
    # wideband input averages over frequency and sits near 1
    h = rir_kernels(0)[room]
    noise = np.random.default_rng(1).standard_normal(SR)
    for x in (sine(440), Waveform(0.1 * noise.clip(-9, 9))):
        y = apply_rir(x, [h], np.random.default_rng(0), intensity=0.8).samples
        ratio = np.sum(y ** 2) / np.sum(x.samples ** 2)
        assert 0.5 <= ratio <= 2.0
        assert len(y) == len(x) and np.max(np.abs(y)) <= 1.0


def test_rir_mix_formula():
    rng = np.random.default_rng(4)
    h = rng.normal(size=32)
    w = speechy(n=1000)
    y = apply_rir(w, [h], np.random.default_rng(0), intensity=0.5).samples
    wet = np.convolve(w.samples, h / np.linalg.norm(h))[:1000]
    ref = 0.5 * w.samples + 0.5 * wet
    if np.max(np.abs(ref)) > 1:
        ref = ref / np.max(np.abs(ref))
    assert np.allclose(y, ref, atol=1e-10)


def test_rir_empty_bank(tmp_path):
    with pytest.raises(ConfigurationError):
        RirBank(())
    with pytest.raises(ConfigurationError):
        RirBank.from_dir(tmp_path)
    with pytest.raises(ConfigurationError):
        CATALOG["rir"](speechy(), np.random.default_rng(0), AugmentContext())


# -- RawBoost -------------------------------------------------------------------

def test_rawboost_forced_identities():
    w = speechy()
    rng = np.random.default_rng(0)
    assert np.array_equal(rawboost(w, "ssi", {"snr_db": float("inf")}, rng).samples, w.samples)
    assert rawboost(w, "isd", {"fraction": 0.0}, rng) is w
    assert np.array_equal(rawboost(w, "lnl", {"n_notches": 0, "order": 1}, rng).samples, w.samples)
    with pytest.raises(ConfigurationError):
        rawboost(w, "xyz", None, rng)


def test_ssi_snr():
    x = np.random.default_rng(7).standard_normal(SR)
    x /= np.sqrt(np.mean(x ** 2))
    w = Waveform(x)
    y = rawboost(w, "ssi", {"snr_db": 20.0}, np.random.default_rng(1)).samples
    assert snr_db(x, y) == pytest.approx(20.0, abs=0.5)


def test_isd_is_sparse_and_signal_dependent():
    w = speechy()
    y = rawboost(w, "isd", {"fraction": 0.1}, np.random.default_rng(3)).samples
    changed = y != w.samples
    assert changed.mean() <= 0.1
    assert np.all(np.abs(y - w.samples) <= 2.0 * np.abs(w.samples) + 1e-15)


def test_lnl_keeps_peak():
    w = speechy()
    y = rawboost(w, "lnl", None, np.random.default_rng(9)).samples
    assert np.max(np.abs(y)) == pytest.approx(np.max(np.abs(w.samples)))


# -- mixup / amplitude ---------------------------------------------------------

def test_mixup_forced():
    a, b = speechy(1), speechy(2)
    x, y = mixup(a, [1, 0], b, [0, 1], None, lam=1.0)
    assert np.array_equal(x.samples, a.samples) and y.tolist() == [1.0, 0.0]
    _, y = mixup(a, [1, 0], b, [0, 1], None, lam=0.5)
    assert y.tolist() == [0.5, 0.5]
    with pytest.raises(ValueError):
        mixup(a, [1, 0], speechy(3, n=10), [0, 1], None)


def test_mixup_beta_mean():
    rng = np.random.default_rng(0)
    one, zero = Waveform(np.ones(1)), Waveform(np.zeros(1))
    lams = [mixup(one, [1, 0], zero, [0, 1], rng)[0].samples[0] for _ in range(100_000)]
    assert np.mean(lams) == pytest.approx(0.5, abs=0.01)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_mixup_label_simplex(lam, p1, p2):
    y1, y2 = np.array([p1, 1 - p1]), np.array([p2, 1 - p2])
    w = Waveform(np.zeros(4))
    _, y = mixup(w, y1, w, y2, None, lam=lam)
    assert abs(y.sum() - 1) <= 1e-12
    assert np.all((y >= 0) & (y <= 1))


def test_amplitude_mix_identities():
    a, b = speechy(1), speechy(2)
    i = slice(512, -512)
    assert np.max(np.abs(amplitude_mix(a, b, 0.0).samples[i] - a.samples[i])) <= 1e-5
    assert np.max(np.abs(amplitude_mix(a, a, 0.37).samples[i] - a.samples[i])) <= 1e-5
    with pytest.raises(ValueError):
        amplitude_mix(a, speechy(3, n=100), 0.5)


def test_amplitude_mix_two_sines():
    a, b = sine(440), sine(880)
    y = amplitude_mix(a, b, 0.5, n_fft=None).samples
    win = np.hanning(SR)
    ref = np.abs(np.fft.rfft(a.samples * win))[440]
    spec = np.abs(np.fft.rfft(y * win))
    for f in (440, 880):
        assert abs(20 * np.log10(spec[f] / (0.5 * ref))) <= 3.0


def test_amplitude_without_partner_is_identity():
    w = speechy()
    assert CATALOG["amplitude"](w, np.random.default_rng(0), AugmentContext()) is w
    ctx = AugmentContext(partner=lambda rng: speechy(5))
    assert len(CATALOG["amplitude"](w, np.random.default_rng(0), ctx)) == len(w)


# -- noise / filter / mix extras -------------------------------------------------

def test_gaussian_noise_sigma():
    w = Waveform(np.zeros(SR))
    y = P.add_gaussian_noise(w, np.random.default_rng(0), sigma=0.01).samples
    assert np.std(y) == pytest.approx(0.01, rel=0.05)


def test_gaussian_snr():
    w = sine(300)
    y = P.add_gaussian_snr(w, np.random.default_rng(0), snr_db=15.0).samples
    assert snr_db(w.samples, y) == pytest.approx(15.0, abs=1e-9)


@pytest.mark.parametrize("beta", [0.0, 1.0, 2.0])
def test_color_noise_slope(beta):
    n = 1 << 16
    noise = P.color_noise(n, beta, np.random.default_rng(1))
    psd = np.abs(np.fft.rfft(noise)) ** 2
    f = np.fft.rfftfreq(n)
    band = (f > 1e-3) & (f < 0.4)
    slope = np.polyfit(np.log(f[band]), np.log(psd[band]), 1)[0]
    assert slope == pytest.approx(-beta, abs=0.1)
    w = sine(300)
    y = P.add_color_noise(w, np.random.default_rng(0), snr_db=25.0, exponent=beta).samples
    assert snr_db(w.samples, y) == pytest.approx(25.0, abs=1e-9)


def _gain(fn, f, **kw):
    x = sine(f)
    y = fn(x, np.random.default_rng(0), **kw).samples
    return 20 * np.log10(np.std(y[SR // 2:]) / np.std(x.samples[SR // 2:]))


def test_filter_set_spectral():
    assert _gain(P.low_pass_filter, 4000, cutoff=500.0) < -20
    assert _gain(P.high_pass_filter, 100, cutoff=2000.0) < -20
    assert _gain(P.band_pass_filter, 1000, center=1000.0, bandwidth_fraction=1.0) == pytest.approx(0, abs=0.2)
    assert _gain(P.band_stop_filter, 1000, center=1000.0, bandwidth_fraction=1.0) < -30
    assert _gain(P.low_shelf_filter, 50, center=1000.0, gain_db=12.0) == pytest.approx(12, abs=0.5)
    assert _gain(P.high_shelf_filter, 7000, center=1000.0, gain_db=-12.0) == pytest.approx(-12, abs=0.5)
    assert _gain(P.peaking_filter, 1000, center=1000.0, gain_db=6.0, q=1.0) == pytest.approx(6, abs=0.2)


def test_mix_extras_spectral():
    assert _gain(P.air_absorption, 7000, cutoff=3000.0) < -9
    assert _gain(P.air_absorption, 200, cutoff=3000.0) == pytest.approx(0, abs=0.5)
    # 3 kHz folds to 1 kHz at a 4 kHz intermediate rate
    y = P.aliasing(sine(3000), np.random.default_rng(0), target_sr=4000.0).samples
    assert peak_hz(y) == pytest.approx(1000, abs=2)
    w = speechy()
    assert np.array_equal(P.shift(w, None, fraction=0.25).samples, np.roll(w.samples, 1000))
    y = P.pitch_shift(sine(200), np.random.default_rng(0), semitones=12.0).samples
    assert peak_hz(y) == pytest.approx(400, abs=2)
    assert np.array_equal(P.polarity_inversion(w, None).samples, -w.samples)
    for rate in (0.9, 1.1):
        y = P.time_stretch(sine(500), np.random.default_rng(0), rate=rate).samples
        assert peak_hz(y) == pytest.approx(500, abs=3)
    y = P.tanh_distortion(Waveform(np.linspace(-1, 1, 101)), None, gain=4.0).samples
    assert y[-1] == pytest.approx(1.0) and np.allclose(y, -y[::-1]) and np.all(np.diff(y) > 0)


def test_ola_stretch_length():
    x = np.random.default_rng(0).normal(size=8000)
    for rate in (0.8, 0.9, 1.1, 1.25):
        assert P.ola_stretch(x, rate).size == pytest.approx(8000 / rate, abs=2)


# -- catalog-wide contracts -----------------------------------------------------

INF = float("inf")
NATURAL_IDENTITY = {
    "rir": {"intensity": (0.2, 0.2)},
    "lnl": {"n_notches": 0, "order": 1},
    "ssi": {"snr_db": INF},
    "isd": {"fraction": 0.0},
    "time_mask": {"max_fraction": 0.0},
    "amplitude": {},  # no partner available
    "add_color_noise": {"snr_db": INF},
    "add_gaussian_noise": {"sigma": 0.0},
    "add_gaussian_snr": {"snr_db": INF},
    "low_shelf_filter": {"gain_db": 0.0},
    "high_shelf_filter": {"gain_db": 0.0},
    "peaking_filter": {"gain_db": 0.0},
    "air_absorption": {"cutoff": 8000.0},
    "aliasing": {"target_sr": 16000.0},
    "shift": {"fraction": 0.0},
    "pitch_shift": {"semitones": 0.0},
    "time_stretch": {"rate": 1.0},
    "tanh_distortion": {"gain": 0.0},
}


def test_identity_table_covers_known_kinds():
    assert set(NATURAL_IDENTITY) <= set(CATALOG)


@pytest.mark.parametrize("kind", sorted(CATALOG))
def test_forced_identity_p0(kind):
    w = speechy()
    y = CATALOG[kind](w, np.random.default_rng(0), AugmentContext(DELTA), p=0.0)
    assert np.array_equal(y.samples, w.samples)


@pytest.mark.parametrize("kind", sorted(NATURAL_IDENTITY))
def test_forced_identity_natural(kind):
    w = speechy()
    y = CATALOG[kind](w, np.random.default_rng(0), AugmentContext(DELTA), **NATURAL_IDENTITY[kind])
    assert np.array_equal(y.samples, w.samples)


def _bank_ctx():
    return AugmentContext(RirBank(tuple(rir_kernels(0).values())), partner=lambda rng: speechy(11, 3000))


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(sorted(CATALOG)), st.integers(600, 5000), st.integers(0, 2**31))
def test_length_preserved_and_deterministic(kind, n, seed):
    w = speechy(seed % 97, n)
    y1 = CATALOG[kind](w, np.random.default_rng(seed), _bank_ctx())
    y2 = CATALOG[kind](w, np.random.default_rng(seed), _bank_ctx())
    assert len(y1) == n and y1.sample_rate == w.sample_rate
    assert np.array_equal(y1.samples, y2.samples)
    assert np.all(np.isfinite(y1.samples))


# -- specs and policies -------------------------------------------------------------

def test_transform_spec_validation():
    with pytest.raises(ConfigurationError):
        TransformSpec("reverb9000")
    with pytest.raises(ConfigurationError):
        TransformSpec("shift", {"amount": 3})
    with pytest.raises(ConfigurationError):
        TransformSpec("shift", {"fraction": (0.3, 0.1)})
    assert TransformSpec("shift", {"fraction": [0.0, 0.1]}).params["fraction"] == (0.0, 0.1)


def test_policy_validation():
    with pytest.raises(ConfigurationError):
        AugmentPolicy("cascade", (single("rir"),))
    with pytest.raises(ConfigurationError):
        AugmentPolicy("single", ())
    with pytest.raises(ConfigurationError):
        AugmentPolicy("cascade", (PRESETS["rir_timemask"], single("rir")))
    with pytest.raises(ConfigurationError):
        AugmentPolicy("sometimes", ())
    assert PRESETS["rir_timemask"].kinds == {"rir", "time_mask"}


def test_policy_identity_composition():
    w = speechy()
    pol = cascade(single("rir"), single("time_mask", t=0))
    assert np.array_equal(apply_policy(pol, w, np.random.default_rng(0), AugmentContext(DELTA)).samples,
                          w.samples)
    y = apply_policy(random_set("polarity_inversion"), w, np.random.default_rng(0))
    assert np.array_equal(y.samples, -w.samples)
    assert apply_policy(PRESETS["none"], w, np.random.default_rng(0)) is w


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 50))
def test_cascade_equals_manual_composition(seed, utt):
    bank = RirBank(tuple(rir_kernels(0).values()))
    w = speechy(utt, 2000)
    y = apply_policy(PRESETS["rir_timemask"], w, utterance_rng(seed, 1, utt), AugmentContext(bank))
    rng = utterance_rng(seed, 1, utt)
    ref = time_mask(apply_rir(w, bank, rng), rng)
    assert np.array_equal(y.samples, ref.samples)


def test_random_policy_uniform_choice():
    pol = random_set("polarity_inversion", "shift")
    w = Waveform(np.arange(1, 9, dtype=float) / 10)
    rng = np.random.default_rng(0)
    flips = sum(apply_policy(pol, w, rng).samples[0] < 0 for _ in range(4000))
    assert flips / 4000 == pytest.approx(0.5, abs=0.03)


def test_utterance_rng_independent_streams():
    a = utterance_rng(1, 2, 3).random(4)
    assert np.array_equal(a, utterance_rng(1, 2, 3).random(4))
    assert not np.array_equal(a, utterance_rng(1, 3, 2).random(4))
