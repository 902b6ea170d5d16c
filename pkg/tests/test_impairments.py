"""Each impairment against an independent signal-level oracle, then the chain."""

import hashlib

import numpy as np
import pytest

from rfdrift.errors import ValidationError
from rfdrift.impairments import (
    FLEET_PRIORS,
    PARAM_NAMES,
    ChannelProfile,
    DeviceFingerprint,
    ReceiverProfile,
    apply_cfo,
    apply_channel,
    apply_dc_offset,
    apply_device_chain,
    apply_iq_imbalance,
    apply_pa_nonlinearity,
    apply_phase_noise,
    apply_receiver_chain,
    draw_fingerprint,
    fingerprint_from_vector,
    fingerprint_to_vector,
    fleet_std_vector,
)
from rfdrift.oracles import spectrum_peak


def _tone(f_hz, fs_hz, n):
    return np.exp(2j * np.pi * f_hz * np.arange(n) / fs_hz)


# ---------------------------------------------------------------- dataclasses


def test_fingerprint_bounds():
    with pytest.raises(ValidationError):
        DeviceFingerprint(device_id=0, iq_gain_imbalance=0.6)
    with pytest.raises(ValidationError):
        DeviceFingerprint(device_id=0, iq_phase_imbalance_rad=-0.5)
    with pytest.raises(ValidationError):
        DeviceFingerprint(device_id=0, pa_a1=0.0)
    with pytest.raises(ValidationError):
        DeviceFingerprint(device_id=0, phase_noise_linewidth_hz=-1.0)


def test_channel_profile_invariants():
    with pytest.raises(ValidationError):
        ChannelProfile(kind="coax")
    with pytest.raises(ValidationError):
        ChannelProfile(kind="wired", multipath_taps=((0, 1.0),))
    with pytest.raises(ValidationError):
        ChannelProfile(kind="indoor", path_loss_exponent=1.5)
    with pytest.raises(ValidationError):
        ChannelProfile(kind="indoor", distance_m=0.0)


# ------------------------------------------------------------- IQ imbalance


def test_iq_imbalance_creates_image_tone():
    fs, f = 1e6, 50e3  # 10000-sample record puts the tone on an exact bin
    x = _tone(f, fs, 10_000)
    y = apply_iq_imbalance(x, eps=0.1, phi_rad=0.05)
    spectrum = np.abs(np.fft.fft(y)) / x.size
    freqs = np.fft.fftfreq(x.size, 1 / fs)
    sig = spectrum[np.argmin(np.abs(freqs - f))]
    img = spectrum[np.argmin(np.abs(freqs + f))]
    # Independent oracle: y = k1 x + k2 conj(x) with
    # k1 = ((1+eps/2) + (1-eps/2) e^{j phi}) / 2, k2 = y's conjugate weight.
    k1 = ((1 + 0.05) + (1 - 0.05) * np.exp(1j * 0.05)) / 2.0
    k2 = ((1 + 0.05) - (1 - 0.05) * np.exp(-1j * 0.05)) / 2.0
    assert sig == pytest.approx(abs(k1), rel=1e-6)
    assert img == pytest.approx(abs(k2), rel=1e-6)


def test_iq_imbalance_identity_at_zero():
    x = _tone(10e3, 1e6, 2048)
    np.testing.assert_allclose(apply_iq_imbalance(x, 0.0, 0.0), x, atol=1e-12)


def test_iq_imbalance_gain_only_scales_axes():
    x = np.array([1.0 + 1.0j])
    y = apply_iq_imbalance(x, eps=0.2, phi_rad=0.0)
    assert y[0].real == pytest.approx(1.1)
    assert y[0].imag == pytest.approx(0.9)


# ------------------------------------------------------------------ DC / CFO


def test_dc_offset_shifts_mean():
    rng = np.random.default_rng(0)
    x = rng.normal(size=4096) + 1j * rng.normal(size=4096)
    y = apply_dc_offset(x, 0.25 - 0.125j)
    assert np.mean(y - x) == pytest.approx(0.25 - 0.125j, abs=1e-12)


def test_cfo_shifts_spectrum_peak():
    fs = 1e6
    x = _tone(10e3, fs, 16384)
    y = apply_cfo(x, 30e3, fs)
    assert spectrum_peak(y, fs) == pytest.approx(40e3, abs=fs / x.size)


def test_cfo_preserves_envelope():
    x = _tone(0.0, 1e6, 2048)
    y = apply_cfo(x, -5e3, 1e6)
    np.testing.assert_allclose(np.abs(y), 1.0, atol=1e-12)


def test_cfo_rejects_undersampled_offset():
    with pytest.raises(ValidationError):
        apply_cfo(np.ones(8, dtype=complex), 600e3, 1e6)


# ---------------------------------------------------------------- phase noise


def test_phase_noise_preserves_envelope():
    rng = np.random.default_rng(1)
    x = rng.normal(size=4096) + 1j * rng.normal(size=4096)
    y = apply_phase_noise(x, 100.0, 1e6, seed=4)
    np.testing.assert_allclose(np.abs(y), np.abs(x), rtol=1e-12)


def test_phase_noise_increment_variance():
    # Wiener: recovered increments should have variance 2 pi L / fs.
    fs, lw, n = 1e6, 200.0, 200_000
    y = apply_phase_noise(np.ones(n, dtype=complex), lw, fs, seed=9)
    theta = np.unwrap(np.angle(y))
    increments = np.diff(theta)
    expected = 2 * np.pi * lw / fs
    assert np.var(increments) == pytest.approx(expected, rel=0.05)


def test_phase_noise_seeded():
    x = np.ones(512, dtype=complex)
    a = apply_phase_noise(x, 50.0, 1e6, seed=3)
    b = apply_phase_noise(x, 50.0, 1e6, seed=3)
    c = apply_phase_noise(x, 50.0, 1e6, seed=4)
    np.testing.assert_array_equal(a, b)
    assert np.any(a != c)


def test_zero_linewidth_is_identity():
    x = _tone(1e3, 1e6, 1024)
    np.testing.assert_allclose(apply_phase_noise(x, 0.0, 1e6, seed=0), x, atol=1e-12)


# ------------------------------------------------------------------------ PA


def test_pa_matches_cubic_formula():
    rng = np.random.default_rng(2)
    x = rng.normal(size=1000) + 1j * rng.normal(size=1000)
    y = apply_pa_nonlinearity(x, a1=0.97, a3=-0.08)
    np.testing.assert_allclose(y, 0.97 * x - 0.08 * np.abs(x) ** 2 * x, atol=1e-12)


def test_pa_two_tone_intermodulation():
    # A cubic PA puts third-order products at 2 f1 - f2 and 2 f2 - f1.
    # Bin-exact tones (bins 640 and 800 of 16384) keep the spectrum leak-free.
    fs, n = 1e6, 16384
    f1, f2 = 640 * fs / n, 800 * fs / n
    x = 0.5 * (_tone(f1, fs, n) + _tone(f2, fs, n))
    linear = np.abs(np.fft.fft(apply_pa_nonlinearity(x, 1.0, 0.0))) / n
    cubic = np.abs(np.fft.fft(apply_pa_nonlinearity(x, 1.0, -0.2))) / n
    imd_bin = 2 * 640 - 800
    assert linear[imd_bin] < 1e-9
    # Oracle: for x = A(t1 + t2), the a3 |x|^2 x term contributes A^3 a3
    # at frequency 2 f1 - f2.
    assert cubic[imd_bin] == pytest.approx(0.5**3 * 0.2, rel=1e-6)


# ----------------------------------------------------------------- the chain


def test_chain_equals_literal_composition():
    fp = DeviceFingerprint(
        device_id=1,
        cfo_hz=900.0,
        iq_gain_imbalance=0.03,
        iq_phase_imbalance_rad=0.02,
        dc_offset=0.005 + 0.001j,
        phase_noise_linewidth_hz=12.0,
        pa_a1=1.01,
        pa_a3=-0.04,
    )
    rng = np.random.default_rng(3)
    x = rng.normal(size=5000) + 1j * rng.normal(size=5000)
    y = apply_pa_nonlinearity(x, fp.pa_a1, fp.pa_a3)
    y = apply_iq_imbalance(y, fp.iq_gain_imbalance, fp.iq_phase_imbalance_rad)
    y = apply_dc_offset(y, fp.dc_offset)
    y = apply_cfo(y, fp.cfo_hz, 1e6)
    y = apply_phase_noise(y, fp.phase_noise_linewidth_hz, 1e6, seed=21)
    chained = apply_device_chain(x, fp, 1e6, seed=21, backend="numpy")
    np.testing.assert_array_equal(chained, y)


def test_chain_golden_hash():
    # Regression pin for the chain order PA -> IQ -> DC -> CFO -> phase noise.
    fp = DeviceFingerprint(
        device_id=3,
        cfo_hz=-2750.0,
        iq_gain_imbalance=0.06,
        iq_phase_imbalance_rad=-0.04,
        dc_offset=0.012 - 0.008j,
        phase_noise_linewidth_hz=30.0,
        pa_a1=1.02,
        pa_a3=-0.055,
    )
    rng = np.random.default_rng(12345)
    x = (rng.normal(size=4096) + 1j * rng.normal(size=4096)) / np.sqrt(2)
    out = apply_device_chain(x, fp, 1e6, seed=777, backend="numpy")
    assert hashlib.md5(out.tobytes()).hexdigest() == "ef24ffef412e7aa04b459a018de7df6e"


# -------------------------------------------------------------------- channel


def test_wired_channel_flat_attenuation_no_noise():
    x = _tone(10e3, 1e6, 2048)
    ch = ChannelProfile(kind="wired", attenuation_db=30.0)
    y = apply_channel(x, ch, seed=0, add_noise=False)
    np.testing.assert_allclose(y, x * 10 ** (-30 / 20), atol=1e-12)


def test_wireless_path_loss_at_reference_distance():
    x = _tone(10e3, 1e6, 2048)
    ch = ChannelProfile(kind="indoor", distance_m=5.0, path_loss_exponent=2.5)
    y = apply_channel(x, ch, seed=0, add_noise=False)
    np.testing.assert_allclose(y, x, atol=1e-12)


def test_wireless_path_loss_law():
    x = _tone(10e3, 1e6, 2048)
    ch = ChannelProfile(kind="outdoor", distance_m=20.0, path_loss_exponent=2.7)
    y = apply_channel(x, ch, seed=0, add_noise=False)
    expected_db = 10 * 2.7 * np.log10(20.0 / 5.0)
    assert np.mean(np.abs(y) ** 2) == pytest.approx(
        10 ** (-expected_db / 10), rel=1e-9
    )


def test_realized_snr_matches_log_distance_budget():
    rng = np.random.default_rng(4)
    x = rng.normal(size=200_000) + 1j * rng.normal(size=200_000)
    ch = ChannelProfile(
        kind="indoor", distance_m=10.0, path_loss_exponent=2.5, snr_db_at_5m=20.0
    )
    clean = apply_channel(x, ch, seed=8, add_noise=False)
    noisy = apply_channel(x, ch, seed=8, add_noise=True)
    noise = noisy - clean
    snr_db = 10 * np.log10(np.mean(np.abs(clean) ** 2) / np.mean(np.abs(noise) ** 2))
    expected = 20.0 - 10 * 2.5 * np.log10(10.0 / 5.0)
    assert snr_db == pytest.approx(expected, abs=0.1)


def test_noise_figure_lowers_snr():
    rng = np.random.default_rng(5)
    x = rng.normal(size=100_000) + 1j * rng.normal(size=100_000)
    ch = ChannelProfile(kind="wired", snr_db_at_5m=15.0)
    clean = apply_channel(x, ch, seed=2, add_noise=False)
    noisy = apply_channel(x, ch, seed=2, add_noise=True, noise_figure_db=6.0)
    noise = noisy - clean
    snr_db = 10 * np.log10(np.mean(np.abs(clean) ** 2) / np.mean(np.abs(noise) ** 2))
    assert snr_db == pytest.approx(9.0, abs=0.1)


def test_multipath_single_unit_tap_is_identity():
    x = _tone(10e3, 1e6, 1024)
    ch = ChannelProfile(kind="indoor", multipath_taps=((0, 1.0),))
    y = apply_channel(x, ch, seed=0, add_noise=False)
    np.testing.assert_allclose(y, x, atol=1e-12)


def test_multipath_delay_and_length():
    x = np.zeros(64, dtype=complex)
    x[0] = 1.0
    ch = ChannelProfile(kind="indoor", multipath_taps=((0, 1.0), (5, 0.25 + 0.1j)))
    y = apply_channel(x, ch, seed=0, add_noise=False)
    assert y.size == 64
    assert y[0] == pytest.approx(1.0)
    assert y[5] == pytest.approx(0.25 + 0.1j)


def test_channel_deterministic_by_seed():
    x = _tone(10e3, 1e6, 4096)
    ch = ChannelProfile(kind="indoor", snr_db_at_5m=10.0)
    np.testing.assert_array_equal(
        apply_channel(x, ch, seed=6), apply_channel(x, ch, seed=6)
    )


# ----------------------------------------------------------- receiver / fleet


def test_receiver_chain_is_cfo_then_imbalance_then_dc():
    rx = ReceiverProfile(
        receiver_id=0,
        cfo_hz=150.0,
        iq_gain_imbalance=0.02,
        iq_phase_imbalance_rad=-0.01,
        dc_offset=0.003j,
    )
    rng = np.random.default_rng(6)
    x = rng.normal(size=2000) + 1j * rng.normal(size=2000)
    manual = apply_dc_offset(
        apply_iq_imbalance(apply_cfo(x, 150.0, 1e6), 0.02, -0.01), 0.003j
    )
    np.testing.assert_allclose(apply_receiver_chain(x, rx, 1e6), manual, atol=1e-12)


def test_draw_fingerprint_deterministic():
    a = draw_fingerprint(0, np.random.default_rng(42))
    b = draw_fingerprint(0, np.random.default_rng(42))
    assert a == b


def test_fingerprint_vector_round_trip():
    fp = draw_fingerprint(7, np.random.default_rng(1))
    vec = fingerprint_to_vector(fp)
    assert vec.shape == (len(PARAM_NAMES),)
    assert fingerprint_from_vector(vec, 7) == fp


def test_fleet_std_vector_uniform_entries():
    stds = fleet_std_vector()
    idx = PARAM_NAMES.index("phase_noise_linewidth_hz")
    kind, lo, hi = FLEET_PRIORS["phase_noise_linewidth_hz"]
    assert kind == "uniform"
    assert stds[idx] == pytest.approx((hi - lo) / np.sqrt(12.0))
