"""Turn recordings into labeled 2x1024 frame tensors for the networks."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, FramingError, ValidationError

FRAME_LEN = 1024

SPLIT_NAMES = ("train", "val", "test")
REPRESENTATIONS = ("iq", "fft")


@dataclass(frozen=True)
class LabeledRecording:
    """Minimal input to build_dataset: samples plus the two labels."""

    iq: np.ndarray
    device_id: int
    domain_index: int


def slice_frames(
    iq: np.ndarray, frame_len: int = FRAME_LEN, stride: int | None = None
) -> np.ndarray:
    """Window a complex record into (n, 2, frame_len) real frames.

    Row 0 carries I, row 1 carries Q. Windows are non-overlapping by default;
    remainder samples are dropped. Too-short input yields an empty result and
    a warning rather than an error.
    """
    if stride is None:
        stride = frame_len
    if frame_len < 1 or stride < 1:
        raise ValidationError("frame_len", "frame_len and stride must be >= 1")
    iq = np.asarray(iq)
    if iq.size < frame_len:
        warnings.warn(
            f"record of {iq.size} samples is shorter than one {frame_len}-sample "
            "frame; returning no frames",
            stacklevel=2,
        )
        return np.empty((0, 2, frame_len))
    n = (iq.size - frame_len) // stride + 1
    starts = np.arange(n) * stride
    idx = starts[:, None] + np.arange(frame_len)
    windows = iq[idx]
    return np.stack([windows.real, windows.imag], axis=1)


def fft_blocks(iq: np.ndarray, block_len: int = FRAME_LEN) -> np.ndarray:
    """Per-block FFT of a complex stream, DC-centered, remainder dropped."""
    iq = np.asarray(iq)
    n = iq.size // block_len
    blocks = iq[: n * block_len].reshape(n, block_len)
    return np.fft.fftshift(np.fft.fft(blocks, axis=1), axes=1).ravel()


def fft_representation(frame: np.ndarray) -> np.ndarray:
    """1024-point FFT of an I/Q frame; row 0 real, row 1 imaginary, DC centered."""
    frame = np.asarray(frame)
    if frame.shape != (2, FRAME_LEN):
        raise ValidationError("frame", f"expected shape (2, {FRAME_LEN})")
    spectrum = np.fft.fftshift(np.fft.fft(frame[0] + 1j * frame[1]))
    return np.stack([spectrum.real, spectrum.imag])


def energy_gate(frames: np.ndarray, threshold_fraction: float) -> np.ndarray:
    """Drop frames whose mean power falls below a fraction of the median."""
    if not 0.0 < threshold_fraction < 1.0:
        raise ValidationError("threshold_fraction", "must be in (0, 1)")
    if frames.shape[0] == 0:
        return frames
    power = np.mean(frames[:, 0] ** 2 + frames[:, 1] ** 2, axis=1)
    return frames[power >= threshold_fraction * np.median(power)]


def _normalize_frames(frames: np.ndarray) -> np.ndarray:
    power = np.mean(frames[:, 0] ** 2 + frames[:, 1] ** 2, axis=1)
    scale = np.ones_like(power)
    nonzero = power > 0
    scale[nonzero] = 1.0 / np.sqrt(power[nonzero])
    return frames * scale[:, None, None]


@dataclass
class FrameDataset:
    """Frames plus labels plus a frozen train/val/test assignment.

    device_labels are contiguous class indices 0..K-1; device_ids maps them
    back to the original identifiers. domain_labels keep the raw capture or
    day index they were built from.
    """

    frames: np.ndarray
    device_labels: np.ndarray
    domain_labels: np.ndarray
    split_codes: np.ndarray
    device_ids: tuple
    representation: str
    split_fractions: tuple = (0.70, 0.15, 0.15)
    domains: tuple = field(default=())

    def __post_init__(self) -> None:
        if not self.domains:
            self.domains = tuple(sorted(set(self.domain_labels.tolist())))

    @property
    def n_devices(self) -> int:
        return len(self.device_ids)

    def indices(self, split: str | None = None, domain: int | None = None) -> np.ndarray:
        mask = np.ones(self.frames.shape[0], dtype=bool)
        if split is not None:
            if split not in SPLIT_NAMES:
                raise ValidationError("split", f"must be one of {SPLIT_NAMES}")
            mask &= self.split_codes == SPLIT_NAMES.index(split)
        if domain is not None:
            mask &= self.domain_labels == domain
        return np.nonzero(mask)[0]

    def subset(self, split: str | None = None, domain: int | None = None):
        idx = self.indices(split, domain)
        return self.frames[idx], self.device_labels[idx]

    def restrict(self, domain: int) -> "FrameDataset":
        """A single-domain view; the device-id mapping stays global."""
        idx = self.indices(domain=domain)
        if idx.size == 0:
            raise ValidationError("domain", f"no frames for domain {domain}")
        return FrameDataset(
            frames=self.frames[idx],
            device_labels=self.device_labels[idx],
            domain_labels=self.domain_labels[idx],
            split_codes=self.split_codes[idx],
            device_ids=self.device_ids,
            representation=self.representation,
            split_fractions=self.split_fractions,
        )


def _split_counts(n: int, fractions) -> tuple[int, int, int]:
    n_val = round(fractions[1] * n)
    n_test = round(fractions[2] * n)
    return n - n_val - n_test, n_val, n_test


def build_dataset(
    recordings,
    frames_per_device: int,
    representation: str = "iq",
    split: tuple = (0.70, 0.15, 0.15),
    seed: int = 0,
    stride: int | None = None,
    gate_threshold: float | None = None,
) -> FrameDataset:
    """Assemble a balanced, normalized, split dataset from recordings.

    frames_per_device is enforced per (device, domain) cell so every domain
    stays balanced. Frames are unit-mean-power normalized after the optional
    FFT representation; the split is stratified per cell with a seeded
    shuffle, so identical seeds give identical assignments.
    """
    if representation not in REPRESENTATIONS:
        raise ValidationError(
            "representation", f"must be one of {REPRESENTATIONS}"
        )
    if abs(sum(split) - 1.0) > 1e-9 or len(split) != 3:
        raise ValidationError("split", "three fractions summing to 1 required")
    if frames_per_device < 1:
        raise ValidationError("frames_per_device", "must be >= 1")

    cells: dict[tuple[int, int], list[np.ndarray]] = {}
    for rec in recordings:
        frames = slice_frames(rec.iq, FRAME_LEN, stride)
        if gate_threshold is not None:
            frames = energy_gate(frames, gate_threshold)
        cells.setdefault((rec.device_id, rec.domain_index), []).append(frames)
    if not cells:
        raise FramingError("no recordings supplied")

    rng = np.random.default_rng(seed)
    all_frames, dev_labels, dom_labels, codes = [], [], [], []
    device_ids = tuple(sorted({dev for dev, _ in cells}))
    dev_to_class = {dev: i for i, dev in enumerate(device_ids)}
    n_train, n_val, n_test = _split_counts(frames_per_device, split)

    for (dev, dom) in sorted(cells):
        frames = np.concatenate(cells[(dev, dom)], axis=0)
        if frames.shape[0] < frames_per_device:
            raise CapacityError(dev, frames_per_device, frames.shape[0])
        frames = frames[:frames_per_device]
        if representation == "fft":
            spectra = np.fft.fftshift(
                np.fft.fft(frames[:, 0] + 1j * frames[:, 1], axis=1), axes=1
            )
            frames = np.stack([spectra.real, spectra.imag], axis=1)
        frames = _normalize_frames(frames)

        order = rng.permutation(frames_per_device)
        cell_codes = np.empty(frames_per_device, dtype=np.int8)
        cell_codes[order[:n_train]] = 0
        cell_codes[order[n_train : n_train + n_val]] = 1
        cell_codes[order[n_train + n_val :]] = 2

        all_frames.append(frames.astype(np.float32))
        dev_labels.append(np.full(frames_per_device, dev_to_class[dev], dtype=np.int64))
        dom_labels.append(np.full(frames_per_device, dom, dtype=np.int64))
        codes.append(cell_codes)

    return FrameDataset(
        frames=np.concatenate(all_frames),
        device_labels=np.concatenate(dev_labels),
        domain_labels=np.concatenate(dom_labels),
        split_codes=np.concatenate(codes),
        device_ids=device_ids,
        representation=representation,
        split_fractions=tuple(split),
    )


def save_dataset(ds: FrameDataset, prefix) -> tuple[str, str]:
    """Export as `<prefix>.bin` + `<prefix>.json`.

    Layout: the .bin file is the raw little-endian float32 frame tensor in C
    order, shape (n, 2, 1024) as recorded in the sidecar; the .json sidecar
    holds shape, labels, split codes, device ids, and representation.
    """
    bin_path = f"{prefix}.bin"
    json_path = f"{prefix}.json"
    ds.frames.astype("<f4").tofile(bin_path)
    sidecar = {
        "shape": list(ds.frames.shape),
        "dtype": "float32_le",
        "device_labels": ds.device_labels.tolist(),
        "domain_labels": ds.domain_labels.tolist(),
        "split_codes": ds.split_codes.tolist(),
        "device_ids": list(ds.device_ids),
        "representation": ds.representation,
        "split_fractions": list(ds.split_fractions),
    }
    with open(json_path, "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
    return bin_path, json_path


def load_dataset(prefix) -> FrameDataset:
    with open(f"{prefix}.json") as fh:
        sidecar = json.load(fh)
    frames = np.fromfile(f"{prefix}.bin", dtype="<f4").reshape(sidecar["shape"])
    return FrameDataset(
        frames=frames.astype(np.float32),
        device_labels=np.asarray(sidecar["device_labels"], dtype=np.int64),
        domain_labels=np.asarray(sidecar["domain_labels"], dtype=np.int64),
        split_codes=np.asarray(sidecar["split_codes"], dtype=np.int8),
        device_ids=tuple(sidecar["device_ids"]),
        representation=sidecar["representation"],
        split_fractions=tuple(sidecar["split_fractions"]),
    )
