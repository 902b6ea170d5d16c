"""SigMF-style persistence: binary cf32 I/Q files + JSON metadata sidecars.

Data files are interleaved little-endian float32 I,Q pairs. Meta files hold
a "global" object with the core fields plus every experiment label under a
single custom extension key, so the layout stays SigMF-core compatible.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .errors import (
    StorageError,
    TruncatedDataError,
    UnsupportedDatatypeError,
    ValidationError,
)
from .framing import REPRESENTATIONS, fft_blocks

DATATYPE = "cf32_le"
EXTENSION_KEY = "rfdrift:capture"

#: Synthetic timeline origin; capture timestamps are derived from
#: (day_index, capture_index, gap_minutes) so reruns are reproducible.
BASE_DATETIME = datetime(2024, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class SigmfMeta:
    datatype: str
    sample_rate_hz: float
    center_frequency_hz: float
    datetime_iso: str
    device_id: int
    day_index: int
    capture_index: int
    setup: str
    distance_m: float
    config_name: str
    receiver_id: int
    representation: str


@dataclass(frozen=True)
class LoadedCapture:
    meta: SigmfMeta
    iq: np.ndarray
    meta_path: str


def _capture_datetime(day_index: int, capture_index: int, gap_minutes: float) -> str:
    stamp = BASE_DATETIME + timedelta(
        days=day_index - 1, minutes=(capture_index - 1) * gap_minutes
    )
    return stamp.strftime("%Y-%m-%dT%H:%M:%SZ")


def _stem(setup: str, device_id: int, day_index: int, capture_index: int) -> str:
    return f"{setup}_dev{device_id}_day{day_index}_cap{capture_index}"


def write_capture(rec, representation: str = "iq", directory=".") -> tuple[str, str]:
    """Persist a recording; returns (data path, meta path).

    ``rec`` is a scenario CaptureRecording (anything with .iq,
    .sample_rate_hz, .center_frequency_hz and a .spec carrying the labels
    works). representation="fft" stores the per-1024-block DC-centered FFT
    of the stream instead of raw I/Q.
    """
    if representation not in REPRESENTATIONS:
        raise ValidationError("representation", f"must be one of {REPRESENTATIONS}")
    spec = rec.spec
    directory = Path(directory)
    stem = _stem(spec.setup, spec.device_id, spec.day_index, spec.capture_index)
    data_path = directory / f"{stem}.sigmf-data"
    meta_path = directory / f"{stem}.sigmf-meta"

    samples = rec.iq if representation == "iq" else fft_blocks(rec.iq)
    meta = SigmfMeta(
        datatype=DATATYPE,
        sample_rate_hz=float(rec.sample_rate_hz),
        center_frequency_hz=float(rec.center_frequency_hz),
        datetime_iso=_capture_datetime(
            spec.day_index, spec.capture_index, spec.gap_minutes
        ),
        device_id=spec.device_id,
        day_index=spec.day_index,
        capture_index=spec.capture_index,
        setup=spec.setup,
        distance_m=float(spec.channel.distance_m),
        config_name=spec.config_name,
        receiver_id=spec.receiver.receiver_id,
        representation=representation,
    )
    fields = asdict(meta)
    doc = {
        "global": {
            "core:datatype": fields.pop("datatype"),
            "core:sample_rate": fields.pop("sample_rate_hz"),
            "core:frequency": fields.pop("center_frequency_hz"),
            "core:datetime": fields.pop("datetime_iso"),
            EXTENSION_KEY: fields,
        }
    }
    try:
        np.ascontiguousarray(samples, dtype="<c8").tofile(data_path)
        with open(meta_path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
    except OSError as exc:
        raise StorageError(f"failed writing capture to {directory}: {exc}") from exc
    return str(data_path), str(meta_path)


def read_meta(meta_path) -> SigmfMeta:
    meta_path = Path(meta_path)
    try:
        with open(meta_path) as fh:
            doc = json.load(fh)
        glob = doc["global"]
        ext = glob[EXTENSION_KEY]
        return SigmfMeta(
            datatype=glob["core:datatype"],
            sample_rate_hz=float(glob["core:sample_rate"]),
            center_frequency_hz=float(glob["core:frequency"]),
            datetime_iso=glob["core:datetime"],
            device_id=int(ext["device_id"]),
            day_index=int(ext["day_index"]),
            capture_index=int(ext["capture_index"]),
            setup=ext["setup"],
            distance_m=float(ext["distance_m"]),
            config_name=ext["config_name"],
            receiver_id=int(ext["receiver_id"]),
            representation=ext["representation"],
        )
    except OSError as exc:
        raise StorageError(f"cannot open metadata {meta_path}: {exc}") from exc
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise StorageError(f"malformed metadata {meta_path}: {exc}") from exc


def read_capture(meta_path) -> LoadedCapture:
    """Load one recording; raises distinct errors for each failure mode."""
    meta_path = Path(meta_path)
    meta = read_meta(meta_path)
    if meta.datatype != DATATYPE:
        raise UnsupportedDatatypeError(
            f"{meta_path}: datatype {meta.datatype!r} is not supported "
            f"(expected {DATATYPE!r})"
        )
    data_path = meta_path.with_suffix(".sigmf-data")
    if not data_path.exists():
        raise StorageError(f"missing data file {data_path}")
    n_bytes = data_path.stat().st_size
    if n_bytes % 8 != 0:
        raise TruncatedDataError(
            f"{data_path}: {n_bytes} bytes is not a whole number of cf32 "
            f"samples; trailing data starts at byte offset {n_bytes - n_bytes % 8}"
        )
    iq = np.fromfile(data_path, dtype="<c8")
    return LoadedCapture(meta=meta, iq=iq, meta_path=str(meta_path))


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple
    paths: tuple
    diagnostics: tuple


def list_dataset(directory) -> DatasetManifest:
    """Parse every .sigmf-meta under a directory.

    Unparseable files land in diagnostics instead of raising, so one corrupt
    recording cannot hide the rest of a dataset.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise StorageError(f"not a directory: {directory}")
    rows, diags = [], []
    for meta_path in sorted(directory.glob("*.sigmf-meta")):
        try:
            rows.append((read_meta(meta_path), str(meta_path)))
        except StorageError as exc:
            diags.append(str(exc))
    rows.sort(
        key=lambda r: (r[0].setup, r[0].device_id, r[0].day_index, r[0].capture_index)
    )
    return DatasetManifest(
        entries=tuple(r[0] for r in rows),
        paths=tuple(r[1] for r in rows),
        diagnostics=tuple(diags),
    )
