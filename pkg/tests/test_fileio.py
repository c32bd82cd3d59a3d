import gzip
import struct

import numpy as np
import pytest

from batseg import read_array, read_field, read_volume, write_volume
from batseg.errors import FormatError, IoError, UnsupportedError
from batseg.volume import DistanceField, LabelVolume, Volume3D


def ramp(dims):
    return np.arange(np.prod(dims), dtype=np.float64).reshape(dims)


@pytest.mark.parametrize("ext", [".nii", ".nii.gz", ".rawvol"])
@pytest.mark.parametrize("dtype", [np.uint8, np.int16, np.float32, np.float64])
def test_round_trip_all_dtypes(tmp_path, ext, dtype):
    v = Volume3D(ramp((8, 8, 8)) % 100, spacing=(0.5, 1.25, 2.0))
    path = tmp_path / f"vol{ext}"
    write_volume(v, path, dtype=dtype)
    back = read_volume(path)
    assert back.dims == v.dims
    assert np.array_equal(back.data, v.data)
    if ext == ".rawvol":
        assert back.spacing == v.spacing  # exact float64 round trip
    else:
        assert back.spacing == tuple(np.float32(s) for s in v.spacing)


def test_round_trip_is_byte_stable(tmp_path):
    v = Volume3D(ramp((6, 5, 4)), spacing=(0.47, 0.47, 3.3))
    a = tmp_path / "a.nii"
    b = tmp_path / "b.nii"
    write_volume(v, a, dtype=np.float32)
    write_volume(read_volume(a), b, dtype=np.float32)
    assert a.read_bytes() == b.read_bytes()


def test_labels_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    lv = LabelVolume(rng.integers(0, 5, size=(7, 6, 5)).astype(np.uint8),
                     spacing=(1.0, 1.0, 3.3), num_classes=5)
    path = tmp_path / "labels.nii.gz"
    write_volume(lv, path)
    back = read_volume(path, labels=True, num_classes=5)
    assert isinstance(back, LabelVolume)
    assert np.array_equal(back.labels, lv.labels)
    assert back.num_classes == 5


def test_labels_hint_requires_integral_payload(tmp_path):
    v = Volume3D(ramp((4, 4, 4)))
    path = tmp_path / "float.nii"
    write_volume(v, path, dtype=np.float32)
    with pytest.raises(UnsupportedError):
        read_volume(path, labels=True)


def test_spinal_spacing_from_header(tmp_path):
    v = Volume3D(ramp((4, 4, 4)), spacing=(0.47, 0.47, 3.3))
    path = tmp_path / "spinal.nii"
    write_volume(v, path, dtype=np.float32)
    back = read_volume(path)
    assert back.spacing == tuple(np.float32(s) for s in (0.47, 0.47, 3.3))


def test_field_round_trip_4d(tmp_path):
    rng = np.random.default_rng(5)
    f = DistanceField(rng.random((4, 5, 6, 4)), spacing=(1, 1, 2))
    path = tmp_path / "field.nii"
    write_volume(f, path, dtype=np.float64)
    back = read_field(path)
    assert back.values.shape == (4, 5, 6, 4)
    assert np.array_equal(back.values, f.values)
    data, _, nchannels = read_array(path)
    assert nchannels == 4


def test_read_volume_rejects_4d(tmp_path):
    f = DistanceField(np.zeros((2, 2, 2, 3)))
    path = tmp_path / "field.nii"
    write_volume(f, path)
    with pytest.raises(FormatError):
        read_volume(path)


def test_read_field_rejects_3d(tmp_path):
    v = Volume3D(np.zeros((2, 2, 2)))
    path = tmp_path / "vol.nii"
    write_volume(v, path)
    with pytest.raises(FormatError):
        read_field(path)


def test_truncated_header_only(tmp_path):
    v = Volume3D(ramp((4, 4, 4)))
    path = tmp_path / "whole.nii"
    write_volume(v, path)
    stub = tmp_path / "stub.nii"
    stub.write_bytes(path.read_bytes()[:348])
    with pytest.raises(FormatError):
        read_volume(stub)


def test_truncated_payload(tmp_path):
    v = Volume3D(ramp((4, 4, 4)))
    path = tmp_path / "whole.nii"
    write_volume(v, path)
    cut = tmp_path / "cut.nii"
    cut.write_bytes(path.read_bytes()[:-10])
    with pytest.raises(FormatError):
        read_volume(cut)


def test_bad_magic(tmp_path):
    v = Volume3D(ramp((4, 4, 4)))
    path = tmp_path / "vol.nii"
    write_volume(v, path)
    blob = bytearray(path.read_bytes())
    blob[344:348] = b"abc\x00"
    bad = tmp_path / "bad.nii"
    bad.write_bytes(bytes(blob))
    with pytest.raises(FormatError):
        read_volume(bad)


def test_unsupported_datatype_code(tmp_path):
    v = Volume3D(ramp((4, 4, 4)))
    path = tmp_path / "vol.nii"
    write_volume(v, path, dtype=np.float32)
    blob = bytearray(path.read_bytes())
    struct.pack_into("<h", blob, 70, 8)  # int32: valid NIfTI, outside our support
    bad = tmp_path / "bad.nii"
    bad.write_bytes(bytes(blob))
    with pytest.raises(UnsupportedError):
        read_volume(bad)


def test_write_to_unwritable_path(tmp_path):
    # parent "directory" is a plain file, so the OS refuses the write
    v = Volume3D(ramp((4, 4, 4)))
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    with pytest.raises(IoError):
        write_volume(v, blocker / "vol.nii")


def test_gzip_detected_by_magic(tmp_path):
    # misnamed .nii that is actually gzipped still reads
    v = Volume3D(ramp((3, 3, 3)))
    plain = tmp_path / "plain.nii"
    write_volume(v, plain)
    disguised = tmp_path / "disguised.nii"
    disguised.write_bytes(gzip.compress(plain.read_bytes()))
    back = read_volume(disguised)
    assert np.array_equal(back.data, v.data)


def test_payload_layout_x_fastest(tmp_path):
    H, W, D = 3, 4, 2
    coded = np.empty((H, W, D))
    for x in range(H):
        for y in range(W):
            for z in range(D):
                coded[x, y, z] = x + H * (y + W * z)
    for name in ("coded.nii", "coded.rawvol"):
        path = tmp_path / name
        write_volume(Volume3D(coded), path, dtype=np.float64)
        blob = path.read_bytes()
        offset = len(blob) - H * W * D * 8
        flat = np.frombuffer(blob, dtype="<f8", offset=offset)
        assert np.array_equal(flat, np.arange(H * W * D, dtype=np.float64)), name


def test_rawvol_header_is_json_line(tmp_path):
    v = Volume3D(ramp((2, 3, 4)), spacing=(0.47, 0.47, 3.3))
    path = tmp_path / "v.rawvol"
    write_volume(v, path, dtype=np.float32)
    import json

    header = json.loads(path.read_bytes().split(b"\n", 1)[0])
    assert header == {
        "dims": [2, 3, 4],
        "spacing": [0.47, 0.47, 3.3],
        "dtype": "float32",
        "channels": 0,
    }


def test_rawvol_bad_header(tmp_path):
    path = tmp_path / "bad.rawvol"
    path.write_bytes(b"not json\n\x00\x00")
    with pytest.raises(FormatError):
        read_volume(path)
