"""Minimal 802.11b 1 Mbps HR/DSSS baseband: DBPSK + Barker-11 spreading."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.signal import resample_poly

from .errors import ValidationError

#: The 11-chip Barker spreading sequence.
BARKER11 = np.array([+1, -1, +1, +1, -1, +1, +1, +1, -1, -1, -1], dtype=np.float64)


@dataclass(frozen=True)
class WifiConfig:
    bit_rate_bps: float = 1_000_000.0
    chip_rate_hz: float = 11_000_000.0
    samples_per_chip: int = 2
    half_sine: bool = False
    resample_rate_hz: float | None = None

    def __post_init__(self) -> None:
        if self.bit_rate_bps != 1_000_000.0:
            raise ValidationError("bit_rate_bps", "only 1 Mbps is supported")
        if self.chip_rate_hz != 11 * self.bit_rate_bps:
            raise ValidationError(
                "chip_rate_hz", "must be 11x the bit rate (Barker spreading)"
            )
        if self.samples_per_chip < 1:
            raise ValidationError("samples_per_chip", "must be >= 1")
        if self.resample_rate_hz is not None and self.resample_rate_hz <= 0:
            raise ValidationError("resample_rate_hz", "must be positive")

    @property
    def native_rate_hz(self) -> float:
        return self.chip_rate_hz * self.samples_per_chip

    @property
    def sample_rate_hz(self) -> float:
        """Output rate: native chip-repeat rate unless resampling is on."""
        if self.resample_rate_hz is not None:
            return self.resample_rate_hz
        return self.native_rate_hz

    @property
    def name(self) -> str:
        return "dsss1m"


def modulate_dsss(bits: np.ndarray, config: WifiConfig) -> np.ndarray:
    """DBPSK-modulate and Barker-spread a bit sequence, unit amplitude.

    Differential encoding starts from reference phase +1 and flips on each
    1 bit. Each encoded bit spans 11 chips, each chip held for
    samples_per_chip samples (rectangular by default; half-sine pulse
    shaping and rational resampling to a receiver rate sit behind config
    flags and are off by default so length and chip values stay exact).
    """
    bits = np.asarray(bits, dtype=np.int64)
    if bits.ndim != 1 or bits.size == 0:
        raise ValidationError("bits", "expected a non-empty 1-D bit sequence")
    if np.any((bits != 0) & (bits != 1)):
        raise ValidationError("bits", "values must be 0 or 1")

    # Phase flip on 1: cumulative parity relative to the +1 reference.
    levels = 1.0 - 2.0 * (np.cumsum(bits) % 2)
    chips = (levels[:, None] * BARKER11).ravel()
    samples = np.repeat(chips, config.samples_per_chip).astype(np.complex128)

    if config.half_sine:
        n = np.arange(config.samples_per_chip)
        pulse = np.sin(np.pi * (n + 0.5) / config.samples_per_chip)
        samples *= np.tile(pulse, chips.size)

    if config.resample_rate_hz is not None:
        ratio = Fraction(config.resample_rate_hz / config.native_rate_hz)
        ratio = ratio.limit_denominator(1000)
        samples = resample_poly(samples, ratio.numerator, ratio.denominator)
    return samples
