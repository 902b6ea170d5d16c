"""Benchmark the compiled kernels against the pure-numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeats N] [--symbols N]

Both backends produce identical results (see tests/test_kernels.py); this
script only measures speed, so the numbers are what you trade by running
without the extension built.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from rfdrift import _kernels
from rfdrift.impairments import DeviceFingerprint, apply_device_chain
from rfdrift.lora import LoRaConfig, modulate


def _report(label: str, numpy_s: float, compiled_s: float | None) -> None:
    if compiled_s is None:
        print(f"{label:<44} numpy {numpy_s * 1e3:8.2f} ms   compiled: not built")
        return
    print(
        f"{label:<44} numpy {numpy_s * 1e3:8.2f} ms   "
        f"compiled {compiled_s * 1e3:8.2f} ms   x{numpy_s / compiled_s:.1f}"
    )


def _time(func, repeats: int) -> float:
    return min(timeit.repeat(func, number=1, repeat=repeats))


def bench_modulate(n_symbols: int, repeats: int, has_compiled: bool) -> None:
    rng = np.random.default_rng(0)
    for sf in (7, 12):
        cfg = LoRaConfig(spreading_factor=sf)
        symbols = rng.integers(0, cfg.n_symbols, size=n_symbols)
        base = _time(lambda: modulate(symbols, cfg, backend=_kernels.NUMPY), repeats)
        fast = (
            _time(lambda: modulate(symbols, cfg, backend=_kernels.COMPILED), repeats)
            if has_compiled
            else None
        )
        _report(f"chirp modulate SF{sf}, {n_symbols} symbols", base, fast)


def bench_device_chain(n_samples: int, repeats: int, has_compiled: bool) -> None:
    rng = np.random.default_rng(1)
    iq = (rng.normal(size=n_samples) + 1j * rng.normal(size=n_samples)) / np.sqrt(2)
    fp = DeviceFingerprint(
        device_id=0,
        cfo_hz=-1800.0,
        iq_gain_imbalance=0.05,
        iq_phase_imbalance_rad=-0.03,
        dc_offset=0.01 - 0.006j,
        phase_noise_linewidth_hz=30.0,
        pa_a1=1.01,
        pa_a3=-0.05,
    )
    base = _time(
        lambda: apply_device_chain(iq, fp, 1e6, seed=7, backend=_kernels.NUMPY), repeats
    )
    fast = (
        _time(
            lambda: apply_device_chain(iq, fp, 1e6, seed=7, backend=_kernels.COMPILED),
            repeats,
        )
        if has_compiled
        else None
    )
    _report(f"device impairment chain, {n_samples} samples", base, fast)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5, help="timing repeats (best-of)")
    parser.add_argument("--symbols", type=int, default=200, help="symbols per modulate call")
    args = parser.parse_args()

    has_compiled = _kernels.compiled_available()
    if not has_compiled:
        print("compiled extension not built; showing numpy-only timings\n")

    bench_modulate(args.symbols, args.repeats, has_compiled)
    for n in (100_000, 1_000_000):
        bench_device_chain(n, args.repeats, has_compiled)


if __name__ == "__main__":
    main()
