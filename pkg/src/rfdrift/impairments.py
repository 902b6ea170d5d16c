"""Transmitter, channel, and receiver impairments: the synthetic fingerprint.

A device's identity is carried by five standard transmitter impairments (PA
nonlinearity, IQ imbalance, DC offset, CFO, oscillator phase noise), each
independently testable. The fixed chain order is PA -> IQ imbalance -> DC
offset -> CFO -> phase noise; reordering changes the output and is
regression-tested against a golden hash.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ValidationError


@dataclass(frozen=True)
class DeviceFingerprint:
    device_id: int
    cfo_hz: float = 0.0
    iq_gain_imbalance: float = 0.0
    iq_phase_imbalance_rad: float = 0.0
    dc_offset: complex = 0j
    phase_noise_linewidth_hz: float = 0.0
    pa_a1: float = 1.0
    pa_a3: float = 0.0

    def __post_init__(self) -> None:
        _check_impairment_bounds(self)
        if self.pa_a1 <= 0:
            raise ValidationError("pa_a1", "linear gain must be positive")
        if self.phase_noise_linewidth_hz < 0:
            raise ValidationError("phase_noise_linewidth_hz", "must be >= 0")


@dataclass(frozen=True)
class ReceiverProfile:
    receiver_id: int
    cfo_hz: float = 0.0
    iq_gain_imbalance: float = 0.0
    iq_phase_imbalance_rad: float = 0.0
    dc_offset: complex = 0j
    noise_figure_db: float = 0.0

    def __post_init__(self) -> None:
        _check_impairment_bounds(self)


def _check_impairment_bounds(obj) -> None:
    for field, bound in (
        ("iq_gain_imbalance", 0.5),
        ("iq_phase_imbalance_rad", 0.5),
    ):
        value = getattr(obj, field)
        if not math.isfinite(value) or abs(value) >= bound:
            raise ValidationError(field, f"|value| must be < {bound}")
    if not math.isfinite(obj.cfo_hz):
        raise ValidationError("cfo_hz", "must be finite")


_CHANNEL_KINDS = ("wired", "indoor", "outdoor")


@dataclass(frozen=True)
class ChannelProfile:
    kind: str
    distance_m: float = 5.0
    path_loss_exponent: float = 2.0
    snr_db_at_5m: float = 30.0
    multipath_taps: tuple = ()
    attenuation_db: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in _CHANNEL_KINDS:
            raise ValidationError("kind", f"must be one of {_CHANNEL_KINDS}")
        if self.distance_m <= 0:
            raise ValidationError("distance_m", "must be positive")
        if self.kind == "wired" and self.multipath_taps:
            raise ValidationError(
                "multipath_taps", "wired channels carry no multipath"
            )
        if self.kind != "wired" and self.path_loss_exponent < 2:
            raise ValidationError(
                "path_loss_exponent", "must be >= 2 for wireless channels"
            )


# Fleet parameter priors: per-device draws that make same-domain
# classification comfortably learnable while leaving cross-domain headroom.
# Tuples are (kind, a, b): normal(mean a, std b) or uniform(lo a, hi b).
# The CFO spread corresponds to a ~13 ppm crystal at 915 MHz.
FLEET_PRIORS = {
    "cfo_hz": ("normal", 0.0, 12000.0),
    "iq_gain_imbalance": ("normal", 0.0, 0.08),
    "iq_phase_imbalance_rad": ("normal", 0.0, 0.08),
    "dc_offset_re": ("normal", 0.0, 0.02),
    "dc_offset_im": ("normal", 0.0, 0.02),
    "phase_noise_linewidth_hz": ("uniform", 5.0, 50.0),
    "pa_a1": ("normal", 1.0, 0.04),
    "pa_a3": ("normal", -0.05, 0.02),
}

#: Canonical parameter ordering for vectorized drift arithmetic.
PARAM_NAMES = tuple(FLEET_PRIORS)


def fleet_std_vector() -> np.ndarray:
    """Per-parameter spread of the fleet priors, in PARAM_NAMES order.

    Uniform entries use the distribution's standard deviation,
    (hi - lo)/sqrt(12), so random-walk steps scale comparably.
    """
    stds = []
    for kind, a, b in FLEET_PRIORS.values():
        stds.append(b if kind == "normal" else (b - a) / math.sqrt(12.0))
    return np.array(stds)


def draw_parameter_vector(rng: np.random.Generator) -> np.ndarray:
    vec = np.empty(len(PARAM_NAMES))
    for i, (kind, a, b) in enumerate(FLEET_PRIORS.values()):
        vec[i] = rng.normal(a, b) if kind == "normal" else rng.uniform(a, b)
    return vec


def fingerprint_to_vector(fp: DeviceFingerprint) -> np.ndarray:
    return np.array(
        [
            fp.cfo_hz,
            fp.iq_gain_imbalance,
            fp.iq_phase_imbalance_rad,
            fp.dc_offset.real,
            fp.dc_offset.imag,
            fp.phase_noise_linewidth_hz,
            fp.pa_a1,
            fp.pa_a3,
        ]
    )


def fingerprint_from_vector(vec: np.ndarray, device_id: int) -> DeviceFingerprint:
    # Keep walked parameters inside the dataclass invariants.
    eps = float(np.clip(vec[1], -0.49, 0.49))
    phi = float(np.clip(vec[2], -0.49, 0.49))
    return DeviceFingerprint(
        device_id=device_id,
        cfo_hz=float(vec[0]),
        iq_gain_imbalance=eps,
        iq_phase_imbalance_rad=phi,
        dc_offset=complex(vec[3], vec[4]),
        phase_noise_linewidth_hz=float(max(vec[5], 0.0)),
        pa_a1=float(max(vec[6], 1e-3)),
        pa_a3=float(vec[7]),
    )


def draw_fingerprint(device_id: int, rng: np.random.Generator) -> DeviceFingerprint:
    return fingerprint_from_vector(draw_parameter_vector(rng), device_id)


def apply_iq_imbalance(iq: np.ndarray, eps: float, phi_rad: float) -> np.ndarray:
    """Gain/phase imbalance: I' = (1+eps/2) I, Q' = (1-eps/2)(Q cos phi + I sin phi)."""
    i = iq.real * (1.0 + eps / 2.0)
    q = (1.0 - eps / 2.0) * (iq.imag * np.cos(phi_rad) + iq.real * np.sin(phi_rad))
    return i + 1j * q


def apply_dc_offset(iq: np.ndarray, dc: complex) -> np.ndarray:
    return iq + dc


def apply_cfo(iq: np.ndarray, f_off_hz: float, fs_hz: float) -> np.ndarray:
    """Rotate sample n by exp(j 2 pi f_off n / fs)."""
    if fs_hz <= 2.0 * abs(f_off_hz):
        raise ValidationError("f_off_hz", "requires fs > 2|f_off|")
    n = np.arange(iq.size)
    return iq * np.exp(1j * 2.0 * np.pi * f_off_hz * n / fs_hz)


def _phase_increments(
    linewidth_hz: float, fs_hz: float, n: int, seed: int
) -> np.ndarray:
    """Wiener increments with variance 2 pi linewidth / fs, seeded.

    Both the numpy and compiled chain backends consume this exact stream, so
    backend choice never changes the realized noise.
    """
    std = math.sqrt(2.0 * math.pi * linewidth_hz / fs_hz)
    return np.random.default_rng(seed).normal(0.0, std, n)


def apply_phase_noise(
    iq: np.ndarray, linewidth_hz: float, fs_hz: float, seed: int
) -> np.ndarray:
    """Multiply by exp(j theta_n), theta a seeded Wiener process."""
    if linewidth_hz < 0:
        raise ValidationError("linewidth_hz", "must be >= 0")
    theta = np.cumsum(_phase_increments(linewidth_hz, fs_hz, iq.size, seed))
    return iq * np.exp(1j * theta)


def apply_pa_nonlinearity(iq: np.ndarray, a1: float, a3: float) -> np.ndarray:
    """Memoryless cubic amplifier: y = a1 x + a3 |x|^2 x."""
    return a1 * iq + a3 * np.abs(iq) ** 2 * iq


def apply_device_chain(
    iq: np.ndarray,
    fp: DeviceFingerprint,
    fs_hz: float,
    seed: int,
    backend: str | None = None,
) -> np.ndarray:
    """Full transmitter chain in the fixed order.

    The numpy path is the literal composition of the five public operations;
    the compiled path fuses them into one pass over the samples.
    """
    iq = np.ascontiguousarray(iq, dtype=np.complex128)
    if _kernels.resolve(backend) == _kernels.COMPILED:
        incr = _phase_increments(
            fp.phase_noise_linewidth_hz, fs_hz, iq.size, seed
        )
        return _kernels.core().device_chain(
            iq,
            fp.pa_a1,
            fp.pa_a3,
            fp.iq_gain_imbalance,
            fp.iq_phase_imbalance_rad,
            fp.dc_offset.real,
            fp.dc_offset.imag,
            fp.cfo_hz,
            fs_hz,
            incr,
        )
    y = apply_pa_nonlinearity(iq, fp.pa_a1, fp.pa_a3)
    y = apply_iq_imbalance(y, fp.iq_gain_imbalance, fp.iq_phase_imbalance_rad)
    y = apply_dc_offset(y, fp.dc_offset)
    y = apply_cfo(y, fp.cfo_hz, fs_hz)
    return apply_phase_noise(y, fp.phase_noise_linewidth_hz, fs_hz, seed)


def apply_channel(
    iq: np.ndarray,
    channel: ChannelProfile,
    seed: int,
    add_noise: bool = True,
    noise_figure_db: float = 0.0,
) -> np.ndarray:
    """Multipath + path loss + seeded AWGN at the log-distance SNR.

    Wireless: convolve with the profile's taps, attenuate by the log-distance
    law relative to 5 m, then add noise to hit
    SNR(d) = snr_db_at_5m - 10 n log10(d/5) - noise_figure_db.
    The implied noise floor is independent of distance. Wired: flat
    attenuation, no taps, SNR = snr_db_at_5m - noise_figure_db.
    """
    y = np.asarray(iq, dtype=np.complex128)
    if channel.multipath_taps:
        max_delay = max(d for d, _ in channel.multipath_taps)
        h = np.zeros(max_delay + 1, dtype=np.complex128)
        for delay, gain in channel.multipath_taps:
            h[delay] += gain
        y = np.convolve(y, h)[: y.size]

    if channel.kind == "wired":
        loss_db = channel.attenuation_db
        snr_db = channel.snr_db_at_5m - noise_figure_db
    else:
        loss_db = (
            10.0
            * channel.path_loss_exponent
            * np.log10(channel.distance_m / 5.0)
            + channel.attenuation_db
        )
        snr_db = channel.snr_db_at_5m - loss_db - noise_figure_db
    y = y * 10.0 ** (-loss_db / 20.0)

    if not add_noise:
        return y
    p_signal = np.mean(np.abs(y) ** 2)
    p_noise = p_signal / 10.0 ** (snr_db / 10.0)
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, np.sqrt(p_noise / 2.0), (y.size, 2))
    return y + noise[:, 0] + 1j * noise[:, 1]


def apply_receiver_chain(
    iq: np.ndarray, rx: ReceiverProfile, fs_hz: float
) -> np.ndarray:
    """Receiver-side impairments: CFO (LO mismatch), IQ imbalance, DC offset.

    The receiver's noise figure is consumed by apply_channel, not here.
    """
    y = apply_cfo(iq, rx.cfo_hz, fs_hz) if rx.cfo_hz else np.asarray(iq)
    y = apply_iq_imbalance(y, rx.iq_gain_imbalance, rx.iq_phase_imbalance_rad)
    return apply_dc_offset(y, rx.dc_offset)
