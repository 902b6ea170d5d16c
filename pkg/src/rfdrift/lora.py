"""Chirp spread spectrum baseband: modulation, demodulation, rate math."""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import FramingError, ValidationError

_CODING_RATE_RE = re.compile(r"^4/([5-8])$")


@dataclass(frozen=True)
class LoRaConfig:
    spreading_factor: int
    bandwidth_hz: float = 125_000.0
    coding_rate: str = "4/5"
    tx_power_dbm: float = 20.0
    sample_rate_hz: float = 1_000_000.0
    n_preamble_upchirps: int = 8

    def __post_init__(self) -> None:
        if not 7 <= self.spreading_factor <= 12:
            raise ValidationError(
                "spreading_factor",
                f"must be in [7, 12], got {self.spreading_factor}",
            )
        if self.bandwidth_hz <= 0:
            raise ValidationError("bandwidth_hz", "must be positive")
        if self.sample_rate_hz < self.bandwidth_hz:
            raise ValidationError(
                "sample_rate_hz",
                f"must be >= bandwidth_hz ({self.bandwidth_hz})",
            )
        if _CODING_RATE_RE.match(self.coding_rate) is None:
            raise ValidationError(
                "coding_rate", f"expected '4/5'..'4/8', got {self.coding_rate!r}"
            )
        if self.n_preamble_upchirps < 0:
            raise ValidationError("n_preamble_upchirps", "must be >= 0")

    @property
    def n_symbols(self) -> int:
        """Alphabet size, 2**SF."""
        return 1 << self.spreading_factor

    @property
    def coding_rate_fraction(self) -> float:
        denom = int(self.coding_rate.split("/")[1])
        return 4.0 / denom

    @property
    def name(self) -> str:
        return f"sf{self.spreading_factor}_bw{int(self.bandwidth_hz)}"


#: The four configurations exercised by the bundled experiments.
TABLE_CONFIGS = {sf: LoRaConfig(spreading_factor=sf) for sf in (7, 8, 11, 12)}


def symbol_duration(config: LoRaConfig) -> float:
    """Seconds per symbol: 2**SF / BW."""
    return config.n_symbols / config.bandwidth_hz


def bit_rate(config: LoRaConfig) -> float:
    """Useful bit rate in bits/s: SF * (BW / 2**SF) * CR."""
    return (
        config.spreading_factor
        * (config.bandwidth_hz / config.n_symbols)
        * config.coding_rate_fraction
    )


def samples_per_symbol(config: LoRaConfig) -> int:
    return round(config.sample_rate_hz * config.n_symbols / config.bandwidth_hz)


def _modulate_numpy(
    symbols: np.ndarray, config: LoRaConfig, n_preamble: int
) -> np.ndarray:
    bw = config.bandwidth_hz
    fs = config.sample_rate_hz
    m = config.n_symbols
    sps = samples_per_symbol(config)
    slope = bw * bw / m
    t = np.arange(sps) / fs

    all_syms = np.concatenate([np.zeros(n_preamble, dtype=np.int64), symbols])
    out = np.empty(all_syms.size * sps, dtype=np.complex128)

    # Block over symbols so the phase intermediate stays modest even at SF12.
    block = max(1, (1 << 22) // sps)
    for start in range(0, all_syms.size, block):
        k = all_syms[start : start + block, None].astype(np.float64)
        f0 = (k / m) * bw - bw / 2.0
        t_wrap = (m - k) / bw
        phase = 2.0 * np.pi * (
            f0 * t + 0.5 * slope * t * t - bw * np.maximum(0.0, t - t_wrap)
        )
        out[start * sps : start * sps + phase.size] = np.exp(1j * phase).ravel()
    return out


def modulate(
    symbols: np.ndarray, config: LoRaConfig, backend: str | None = None
) -> np.ndarray:
    """Synthesize the chirp train for ``symbols``, preceded by base upchirps.

    Each symbol k yields one chirp whose instantaneous frequency starts at
    (k/M)*BW - BW/2, rises at BW**2/M Hz/s, and wraps from +BW/2 back to
    -BW/2. Phase is continuous within a chirp and resets to zero at every
    symbol boundary, so the waveform is a pure function of the symbols.
    """
    symbols = np.asarray(symbols, dtype=np.int64)
    if symbols.ndim != 1:
        raise ValidationError("symbols", "expected a 1-D array")
    if symbols.size and (symbols.min() < 0 or symbols.max() >= config.n_symbols):
        raise ValidationError(
            "symbols", f"values must be in [0, {config.n_symbols})"
        )

    if _kernels.resolve(backend) == _kernels.COMPILED:
        return _kernels.core().css_modulate(
            np.ascontiguousarray(symbols),
            config.spreading_factor,
            config.bandwidth_hz,
            config.sample_rate_hz,
            config.n_preamble_upchirps,
        )
    return _modulate_numpy(symbols, config, config.n_preamble_upchirps)


def demodulate(iq: np.ndarray, config: LoRaConfig) -> np.ndarray:
    """Recover payload symbols by dechirping and peak-picking an M-point FFT.

    Multiplies each symbol period by the conjugate base upchirp, keeps every
    os-th sample (os = fs/BW, which must be an integer), and returns the
    argmax of the magnitude FFT. The config's preamble periods are dropped.
    """
    os_ratio = config.sample_rate_hz / config.bandwidth_hz
    if abs(os_ratio - round(os_ratio)) > 1e-9:
        raise ValidationError(
            "sample_rate_hz",
            f"demodulation needs an integer fs/BW ratio, got {os_ratio:.6f}",
        )
    os = round(os_ratio)
    sps = samples_per_symbol(config)
    iq = np.asarray(iq)
    if iq.ndim != 1 or iq.size % sps != 0:
        raise FramingError(
            f"iq length {iq.size} is not a multiple of {sps} samples per symbol"
        )

    base = _modulate_numpy(np.zeros(1, dtype=np.int64), config, n_preamble=0)
    periods = iq.reshape(-1, sps)[config.n_preamble_upchirps :]
    dechirped = (periods * base.conj())[:, ::os]
    spectra = np.fft.fft(dechirped, axis=1)
    return np.argmax(np.abs(spectra), axis=1).astype(np.int64)
