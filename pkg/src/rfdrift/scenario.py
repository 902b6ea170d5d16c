"""Compose waveform, fingerprint, drift, and channel into full experiments.

A setup mirrors one experimental arrangement: temporal setups record each
device repeatedly with 5-minute gaps (and optional day boundaries and
reboots); the others sweep distance, modem configuration, location, or
receiver. Everything is a pure function of the supplied seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import impairments, lora, wifi
from .errors import ValidationError
from .impairments import (
    ChannelProfile,
    DeviceFingerprint,
    ReceiverProfile,
    draw_fingerprint,
    draw_parameter_vector,
    fingerprint_from_vector,
    fingerprint_to_vector,
    fleet_std_vector,
)

LORA_CENTER_FREQUENCY_HZ = 915e6
WIFI_CENTER_FREQUENCY_HZ = 2.412e9

SETUP_NAMES = (
    "days_indoor",
    "days_outdoor",
    "days_wired",
    "distances",
    "configurations",
    "locations",
    "receivers",
)


@dataclass(frozen=True)
class DriftModel:
    """Random-walk drift of fingerprint parameters between captures.

    short_term_sigma scales one 5-minute step; day_jump_sigma one day
    boundary; both are fractions of the fleet prior spread, so a value of
    0.2 walks a parameter by 20% of its across-device std per step.

    common_mode is the fraction of each increment's variance drawn from a
    fleet-shared stream: co-located devices sit in the same thermal and
    supply environment, so their oscillators wander together. The split is
    variance-preserving, so each device's own walk keeps the same marginal
    law at any common_mode; only the cross-device correlation changes.
    Reboots stay private to the rebooting device.
    """

    short_term_sigma: float = 0.16
    day_jump_sigma: float = 0.8
    reboot_mix: float = 0.35
    common_mode: float = 0.0

    def __post_init__(self) -> None:
        if self.short_term_sigma < 0 or self.day_jump_sigma < 0:
            raise ValidationError("short_term_sigma", "sigmas must be >= 0")
        if not 0.0 <= self.reboot_mix <= 1.0:
            raise ValidationError("reboot_mix", "must be in [0, 1]")
        if not 0.0 <= self.common_mode <= 1.0:
            raise ValidationError("common_mode", "must be in [0, 1]")


@dataclass(frozen=True)
class CaptureSpec:
    device_id: int
    day_index: int
    capture_index: int
    duration_s: float
    setup: str
    channel: ChannelProfile
    receiver: ReceiverProfile
    seed: int
    gap_minutes: float = 5.0
    lora_config: lora.LoRaConfig | None = None
    wifi_config: wifi.WifiConfig | None = None

    def __post_init__(self) -> None:
        if self.duration_s <= 0:
            raise ValidationError("duration_s", "must be positive")
        if self.capture_index < 1:
            raise ValidationError("capture_index", "must be >= 1")
        if (self.lora_config is None) == (self.wifi_config is None):
            raise ValidationError(
                "lora_config", "exactly one of lora_config/wifi_config required"
            )

    @property
    def sample_rate_hz(self) -> float:
        if self.lora_config is not None:
            return self.lora_config.sample_rate_hz
        return self.wifi_config.sample_rate_hz

    @property
    def center_frequency_hz(self) -> float:
        if self.lora_config is not None:
            return LORA_CENTER_FREQUENCY_HZ
        return WIFI_CENTER_FREQUENCY_HZ

    @property
    def config_name(self) -> str:
        if self.lora_config is not None:
            return self.lora_config.name
        return self.wifi_config.name


@dataclass(frozen=True)
class CaptureRecording:
    spec: CaptureSpec
    iq: np.ndarray
    sample_rate_hz: float
    center_frequency_hz: float


@dataclass(frozen=True)
class SetupParams:
    """Knobs shared by generate_setup; defaults are desk-scale."""

    n_devices: int = 10
    n_days: int = 1
    captures_per_day: int = 4
    gap_minutes: float = 5.0
    duration_s: float = 0.2
    modem: str = "lora"
    spreading_factor: int = 7
    snr_db_at_5m: float = 30.0
    rebooted: bool = False
    distances_m: tuple = (5.0, 10.0, 15.0, 20.0)

    def __post_init__(self) -> None:
        if self.modem not in ("lora", "wifi"):
            raise ValidationError("modem", "must be 'lora' or 'wifi'")
        if self.n_devices < 2:
            raise ValidationError("n_devices", "need at least 2 devices")


def channel_preset(
    name: str, distance_m: float = 5.0, snr_db_at_5m: float = 30.0
) -> ChannelProfile:
    """Named channel environments used by the bundled setups."""
    presets = {
        "room": dict(
            kind="indoor",
            path_loss_exponent=2.4,
            multipath_taps=((0, 1.0 + 0j), (3, 0.22 + 0.14j), (7, 0.08 - 0.05j)),
        ),
        "office": dict(
            kind="indoor",
            path_loss_exponent=3.0,
            multipath_taps=(
                (0, 1.0 + 0j),
                (2, 0.30 - 0.10j),
                (5, -0.12 + 0.08j),
                (9, 0.05 + 0.04j),
            ),
        ),
        "outdoor": dict(
            kind="outdoor",
            path_loss_exponent=3.2,
            multipath_taps=((0, 1.0 + 0j), (12, 0.18 + 0.09j)),
        ),
        "wired": dict(kind="wired", attenuation_db=30.0),
    }
    if name not in presets:
        raise ValidationError("channel", f"unknown preset {name!r}")
    return ChannelProfile(
        distance_m=distance_m, snr_db_at_5m=snr_db_at_5m, **presets[name]
    )


#: The two bench receivers; receiver 0 is used unless a setup sweeps them.
RECEIVER_PROFILES = (
    ReceiverProfile(
        receiver_id=0,
        cfo_hz=150.0,
        iq_gain_imbalance=0.010,
        iq_phase_imbalance_rad=0.006,
        dc_offset=0.0020 + 0.0010j,
        noise_figure_db=5.0,
    ),
    ReceiverProfile(
        receiver_id=1,
        cfo_hz=-220.0,
        iq_gain_imbalance=-0.014,
        iq_phase_imbalance_rad=0.012,
        dc_offset=-0.0015 + 0.0022j,
        noise_figure_db=6.0,
    ),
)


def payload_symbols(seed: int, n_symbols: int, alphabet: int) -> np.ndarray:
    """The shared seeded message: every device transmits the same payload."""
    rng = np.random.default_rng(seed)
    return rng.integers(0, alphabet, size=n_symbols, dtype=np.int64)


def payload_bits(seed: int, n_bits: int) -> np.ndarray:
    return payload_symbols(seed, n_bits, 2)


def draw_fleet(n_devices: int, seed: int) -> list[DeviceFingerprint]:
    """Seeded per-device draws from the fleet priors, device_ids 0..n-1."""
    if n_devices < 2:
        raise ValidationError("n_devices", "need at least 2 devices")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return [draw_fingerprint(dev, rng) for dev in range(n_devices)]


def evolve_fingerprint(
    fp: DeviceFingerprint,
    n_steps: int,
    day_boundary: bool,
    rebooted: bool,
    drift: DriftModel,
    seed: int,
    shared_seed: int | None = None,
) -> DeviceFingerprint:
    """Advance a fingerprint in time: walk steps, day jump, then reboot mix.

    Each of the n_steps adds a Gaussian increment of std
    short_term_sigma x fleet_std per parameter; a day boundary adds one
    day_jump_sigma draw; a reboot blends toward a fresh fleet draw.

    shared_seed feeds the common_mode portion of the walk and day jump.
    Every device evolved across the same transition must receive the same
    shared_seed for the shared component to actually be shared; without
    one the full increment is drawn privately, which leaves the marginal
    walk identical and only drops the cross-device correlation.
    """
    if n_steps < 0:
        raise ValidationError("n_steps", "must be >= 0")
    vec = fingerprint_to_vector(fp)
    std = fleet_std_vector()
    rng = np.random.default_rng(seed)
    mix = drift.common_mode if shared_seed is not None else 0.0
    w_private, w_shared = math.sqrt(1.0 - mix), math.sqrt(mix)
    shared_rng = np.random.default_rng(shared_seed)
    if n_steps:
        steps = w_private * rng.normal(0.0, 1.0, size=(n_steps, vec.size))
        if w_shared:
            steps = steps + w_shared * shared_rng.normal(
                0.0, 1.0, size=(n_steps, vec.size)
            )
        vec = vec + drift.short_term_sigma * (steps * std).sum(axis=0)
    if day_boundary:
        jump = w_private * rng.normal(0.0, 1.0, vec.size)
        if w_shared:
            jump = jump + w_shared * shared_rng.normal(0.0, 1.0, vec.size)
        vec = vec + drift.day_jump_sigma * jump * std
    if rebooted and drift.reboot_mix > 0.0:
        fresh = draw_parameter_vector(rng)
        vec = (1.0 - drift.reboot_mix) * vec + drift.reboot_mix * fresh
    return fingerprint_from_vector(vec, fp.device_id)


def generate_capture(
    spec: CaptureSpec,
    fp: DeviceFingerprint,
    payload_seed: int,
    backend: str | None = None,
) -> CaptureRecording:
    """One recording: modulate, device chain, channel, receiver chain.

    The payload is drawn from payload_seed alone, so all devices and
    captures of an experiment share the same message. Output length is
    exactly round(duration_s * sample_rate_hz); the tail of the last symbol
    is cut if the duration is not a whole number of symbols.
    """
    fs = spec.sample_rate_hz
    n_target = round(spec.duration_s * fs)

    if spec.lora_config is not None:
        cfg = spec.lora_config
        sps = lora.samples_per_symbol(cfg)
        n_payload = math.ceil(
            max(n_target - cfg.n_preamble_upchirps * sps, sps) / sps
        )
        symbols = payload_symbols(payload_seed, n_payload, cfg.n_symbols)
        clean = lora.modulate(symbols, cfg, backend=backend)
    else:
        cfg = spec.wifi_config
        spb = 11 * cfg.samples_per_chip
        bits = payload_bits(payload_seed, math.ceil(n_target / spb))
        clean = wifi.modulate_dsss(bits, cfg)
    clean = clean[:n_target]

    ss = np.random.SeedSequence(spec.seed)
    chain_seed, channel_seed = (int(c.generate_state(1)[0]) for c in ss.spawn(2))
    y = impairments.apply_device_chain(clean, fp, fs, chain_seed, backend=backend)
    y = impairments.apply_channel(
        y,
        spec.channel,
        channel_seed,
        noise_figure_db=spec.receiver.noise_figure_db,
    )
    y = impairments.apply_receiver_chain(y, spec.receiver, fs)
    return CaptureRecording(
        spec=spec,
        iq=y,
        sample_rate_hz=fs,
        center_frequency_hz=spec.center_frequency_hz,
    )


def _modem_config(params: SetupParams, sf: int | None = None):
    if params.modem == "lora":
        return lora.LoRaConfig(spreading_factor=sf or params.spreading_factor)
    return wifi.WifiConfig()


def _capture_channels(setup_name: str, params: SetupParams, capture_index: int):
    """Channel (and receiver) for one capture of a setup."""
    snr = params.snr_db_at_5m
    receiver = RECEIVER_PROFILES[0]
    if setup_name in ("days_indoor", "configurations"):
        channel = channel_preset("room", snr_db_at_5m=snr)
    elif setup_name == "days_outdoor":
        channel = channel_preset("outdoor", snr_db_at_5m=snr)
    elif setup_name == "days_wired":
        channel = channel_preset("wired", snr_db_at_5m=snr)
    elif setup_name == "distances":
        d = params.distances_m[capture_index - 1]
        channel = channel_preset("room", distance_m=d, snr_db_at_5m=snr)
    elif setup_name == "locations":
        preset = ("room", "office", "outdoor")[capture_index - 1]
        channel = channel_preset(preset, snr_db_at_5m=snr)
    else:  # receivers
        channel = channel_preset("room", snr_db_at_5m=snr)
        receiver = RECEIVER_PROFILES[capture_index - 1]
    return channel, receiver


def _captures_per_day(setup_name: str, params: SetupParams) -> int:
    if setup_name == "distances":
        return len(params.distances_m)
    if setup_name == "configurations":
        return 4
    if setup_name == "locations":
        return 3
    if setup_name == "receivers":
        return len(RECEIVER_PROFILES)
    return params.captures_per_day


def generate_setup(
    setup_name: str,
    fleet: list[DeviceFingerprint],
    params: SetupParams,
    drift: DriftModel,
    seed: int,
    backend: str | None = None,
) -> list[CaptureRecording]:
    """All recordings of one setup, ordered by (device, day, capture).

    Temporal setups evolve each device's fingerprint between captures
    (round(gap/5) walk steps, a day jump at day boundaries, a reboot when
    params.rebooted); sweep setups reuse the same sequencing with one 5-min
    step between positions.
    """
    if setup_name not in SETUP_NAMES:
        raise ValidationError("setup", f"unknown setup {setup_name!r}")
    sf_rows = tuple(lora.TABLE_CONFIGS)
    n_caps = _captures_per_day(setup_name, params)
    n_days = params.n_days if setup_name.startswith("days_") else 1

    ss = np.random.SeedSequence(seed)
    payload_seed, drift_root, capture_root, shared_root = (
        int(c.generate_state(1)[0]) for c in ss.spawn(4)
    )
    drift_rng = np.random.SeedSequence(drift_root)
    capture_rng = np.random.SeedSequence(capture_root)
    # One child per (device, transition/capture), in a fixed order; the
    # shared stream has one child per transition, reused by every device.
    drift_seeds = drift_rng.spawn(len(fleet) * n_days * n_caps)
    capture_seeds = capture_rng.spawn(len(fleet) * n_days * n_caps)
    shared_seeds = np.random.SeedSequence(shared_root).spawn(n_days * n_caps)

    recordings = []
    flat = 0
    for fp0 in fleet:
        fp = fp0
        for day in range(1, n_days + 1):
            for cap in range(1, n_caps + 1):
                first = day == 1 and cap == 1
                if not first:
                    transition = (day - 1) * n_caps + (cap - 1)
                    fp = evolve_fingerprint(
                        fp,
                        n_steps=max(1, round(params.gap_minutes / 5.0)),
                        day_boundary=cap == 1,
                        rebooted=params.rebooted,
                        drift=drift,
                        seed=int(drift_seeds[flat].generate_state(1)[0]),
                        shared_seed=int(shared_seeds[transition].generate_state(1)[0]),
                    )
                channel, receiver = _capture_channels(setup_name, params, cap)
                if setup_name == "configurations":
                    modem_cfg = _modem_config(params, sf=sf_rows[cap - 1])
                else:
                    modem_cfg = _modem_config(params)
                spec = CaptureSpec(
                    device_id=fp0.device_id,
                    day_index=day,
                    capture_index=cap,
                    duration_s=params.duration_s,
                    setup=setup_name,
                    channel=channel,
                    receiver=receiver,
                    seed=int(capture_seeds[flat].generate_state(1)[0]),
                    gap_minutes=params.gap_minutes,
                    lora_config=modem_cfg if params.modem == "lora" else None,
                    wifi_config=modem_cfg if params.modem == "wifi" else None,
                )
                recordings.append(
                    generate_capture(spec, fp, payload_seed, backend=backend)
                )
                flat += 1
    return recordings
