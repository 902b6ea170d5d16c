"""Backend selection for the sample-level synthesis kernels.

Two implementations exist for the hot loops (chirp synthesis and the fused
device-impairment chain): a compiled Cython core and a vectorized numpy
fallback. The compiled core is picked automatically when the extension was
built; ``RFDRIFT_KERNELS=numpy`` or ``=compiled`` forces a choice, and every
dispatching function also accepts an explicit ``backend=`` argument.

Both backends consume the same pre-generated random streams, so outputs agree
to floating-point rounding; ``benchmarks/bench_kernels.py`` compares speed.
"""

import os

try:
    from . import _core
except ImportError:  # extension not built; numpy fallback still works
    _core = None

NUMPY = "numpy"
COMPILED = "compiled"


def compiled_available():
    return _core is not None


def core():
    """The compiled extension module, or None when not built."""
    return _core


def resolve(backend=None):
    """Map a requested backend (or None) to the one that will run."""
    choice = backend or os.environ.get("RFDRIFT_KERNELS", "").strip().lower() or None
    if choice is None:
        choice = COMPILED if _core is not None else NUMPY
    if choice not in (NUMPY, COMPILED):
        raise ValueError(f"unknown kernel backend {choice!r}")
    if choice == COMPILED and _core is None:
        raise RuntimeError(
            "compiled kernel backend requested but rfdrift._kernels._core is not built"
        )
    return choice
