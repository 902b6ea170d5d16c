"""Slow, simple reference computations used by the test suite.

Deliberately shares no code with the modules it checks: plain finite
differences, two-pass variance, and a raw periodogram peak.
"""

from __future__ import annotations

import numpy as np


def fd_gradient(func, point: np.ndarray, step: float = 1e-4) -> np.ndarray:
    """Central-difference gradient of a scalar function, one coordinate at a time."""
    point = np.asarray(point, dtype=np.float64)
    grad = np.zeros_like(point)
    flat = grad.ravel()
    for i in range(point.size):
        shift = np.zeros_like(point).ravel()
        shift[i] = step
        shift = shift.reshape(point.shape)
        flat[i] = (func(point + shift) - func(point - shift)) / (2.0 * step)
    return grad


def variance_oracle(residual: np.ndarray) -> float:
    """Two-pass population variance."""
    residual = np.asarray(residual, dtype=np.float64).ravel()
    if residual.size == 0:
        raise ValueError("residual must be non-empty")
    mean = residual.sum() / residual.size
    return float(((residual - mean) ** 2).sum() / residual.size)


def spectrum_peak(iq: np.ndarray, fs_hz: float) -> float:
    """Frequency (Hz) of the max-magnitude FFT bin of the whole record."""
    iq = np.asarray(iq)
    if iq.size < 1024:
        raise ValueError("need at least 1024 samples for a stable peak")
    spectrum = np.fft.fft(iq)
    freqs = np.fft.fftfreq(iq.size, d=1.0 / fs_hz)
    return float(freqs[np.argmax(np.abs(spectrum))])
