"""Capture persistence: byte-exact round trips and explicit failure modes."""

import json

import numpy as np
import pytest

from rfdrift.errors import StorageError, TruncatedDataError, UnsupportedDatatypeError
from rfdrift.impairments import ChannelProfile, ReceiverProfile
from rfdrift.lora import LoRaConfig
from rfdrift.scenario import CaptureRecording, CaptureSpec
from rfdrift.sigmf_io import (
    EXTENSION_KEY,
    list_dataset,
    read_capture,
    read_meta,
    write_capture,
)


def _recording(rng, device_id=4, day=2, cap=3, setup="days_indoor", n=4096):
    spec = CaptureSpec(
        device_id=device_id,
        day_index=day,
        capture_index=cap,
        duration_s=n / 1e6,
        setup=setup,
        channel=ChannelProfile(kind="indoor", distance_m=10.0),
        receiver=ReceiverProfile(receiver_id=1),
        seed=0,
        lora_config=LoRaConfig(spreading_factor=7),
    )
    iq = (rng.normal(size=n) + 1j * rng.normal(size=n)).astype(np.complex64)
    return CaptureRecording(
        spec=spec, iq=iq, sample_rate_hz=1e6, center_frequency_hz=915e6
    )


def test_write_read_byte_exact(tmp_path):
    rng = np.random.default_rng(0)
    rec = _recording(rng)
    data_path, meta_path = write_capture(rec, directory=tmp_path)
    loaded = read_capture(meta_path)
    assert loaded.iq.dtype == np.complex64
    np.testing.assert_array_equal(loaded.iq, rec.iq.astype(np.complex64))
    assert loaded.iq.tobytes() == rec.iq.astype("<c8").tobytes()


def test_metadata_fields_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    rec = _recording(rng, device_id=9, day=3, cap=1)
    _, meta_path = write_capture(rec, directory=tmp_path)
    meta = read_meta(meta_path)
    assert meta.device_id == 9
    assert meta.day_index == 3
    assert meta.capture_index == 1
    assert meta.setup == "days_indoor"
    assert meta.sample_rate_hz == 1e6
    assert meta.center_frequency_hz == 915e6
    assert meta.distance_m == 10.0
    assert meta.receiver_id == 1
    assert meta.representation == "iq"
    assert meta.datatype == "cf32_le"
    assert meta.config_name == rec.spec.config_name


def test_filename_pattern(tmp_path):
    rng = np.random.default_rng(2)
    data_path, meta_path = write_capture(_recording(rng), directory=tmp_path)
    assert data_path.endswith("days_indoor_dev4_day2_cap3.sigmf-data")
    assert meta_path.endswith("days_indoor_dev4_day2_cap3.sigmf-meta")


def test_timeline_derivation(tmp_path):
    # day 2, capture 3, 5-minute gaps -> 2024-01-02T00:10:00Z.
    rng = np.random.default_rng(3)
    _, meta_path = write_capture(_recording(rng, day=2, cap=3), directory=tmp_path)
    assert read_meta(meta_path).datetime_iso == "2024-01-02T00:10:00Z"


def test_meta_json_is_sigmf_core_shaped(tmp_path):
    rng = np.random.default_rng(4)
    _, meta_path = write_capture(_recording(rng), directory=tmp_path)
    with open(meta_path) as fh:
        doc = json.load(fh)
    glob = doc["global"]
    assert glob["core:datatype"] == "cf32_le"
    assert glob["core:sample_rate"] == 1e6
    assert EXTENSION_KEY in glob
    assert glob[EXTENSION_KEY]["device_id"] == 4


def test_fft_representation_storage(tmp_path):
    rng = np.random.default_rng(5)
    rec = _recording(rng, n=2048)
    _, meta_path = write_capture(rec, representation="fft", directory=tmp_path)
    loaded = read_capture(meta_path)
    assert loaded.meta.representation == "fft"
    expected = np.fft.fftshift(
        np.fft.fft(rec.iq.astype(np.complex128).reshape(2, 1024), axis=1), axes=1
    ).ravel()
    np.testing.assert_allclose(loaded.iq, expected.astype(np.complex64), rtol=1e-6)


def test_read_capture_rejects_foreign_datatype(tmp_path):
    rng = np.random.default_rng(6)
    _, meta_path = write_capture(_recording(rng), directory=tmp_path)
    with open(meta_path) as fh:
        doc = json.load(fh)
    doc["global"]["core:datatype"] = "ci16_le"
    with open(meta_path, "w") as fh:
        json.dump(doc, fh)
    with pytest.raises(UnsupportedDatatypeError):
        read_capture(meta_path)


def test_read_capture_missing_data_file(tmp_path):
    rng = np.random.default_rng(7)
    data_path, meta_path = write_capture(_recording(rng), directory=tmp_path)
    import os

    os.remove(data_path)
    with pytest.raises(StorageError):
        read_capture(meta_path)


def test_read_capture_truncated_data(tmp_path):
    rng = np.random.default_rng(8)
    data_path, meta_path = write_capture(_recording(rng), directory=tmp_path)
    with open(data_path, "ab") as fh:
        fh.write(b"\x00\x00\x00")  # 3 stray bytes
    with pytest.raises(TruncatedDataError) as err:
        read_capture(meta_path)
    assert "byte offset" in str(err.value)


def test_read_meta_malformed_json(tmp_path):
    bad = tmp_path / "x.sigmf-meta"
    bad.write_text("{not json")
    with pytest.raises(StorageError):
        read_meta(bad)


def test_read_meta_missing_keys(tmp_path):
    bad = tmp_path / "y.sigmf-meta"
    bad.write_text(json.dumps({"global": {"core:datatype": "cf32_le"}}))
    with pytest.raises(StorageError):
        read_meta(bad)


def test_list_dataset_sorted_and_diagnostics(tmp_path):
    rng = np.random.default_rng(9)
    for dev, cap in ((3, 2), (1, 1), (3, 1)):
        write_capture(_recording(rng, device_id=dev, cap=cap, n=1024),
                      directory=tmp_path)
    (tmp_path / "broken.sigmf-meta").write_text("???")
    manifest = list_dataset(tmp_path)
    keys = [(m.device_id, m.capture_index) for m in manifest.entries]
    assert keys == [(1, 1), (3, 1), (3, 2)]
    assert len(manifest.diagnostics) == 1
    assert "broken" in manifest.diagnostics[0]


def test_list_dataset_rejects_missing_directory(tmp_path):
    with pytest.raises(StorageError):
        list_dataset(tmp_path / "nope")
