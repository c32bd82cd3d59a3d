"""NIfTI-1 and raw-format readers/writers.

Two on-disk formats are supported:

* NIfTI-1 single-file (``.nii`` / ``.nii.gz``): 348-byte header, magic
  ``n+1``. Only ``pixdim`` spacing is honored from the header; orientation
  codes are ignored. Supported payload dtypes: uint8, int16, float32,
  float64.
* Raw (``.rawvol``): one JSON header line with keys ``dims``, ``spacing``,
  ``dtype`` and ``channels`` (0 for plain 3D volumes), followed by the
  little-endian payload. Trivial to hand-write in any language, and it
  round-trips float64 spacing exactly (NIfTI stores pixdim as float32).

Both formats use the package-wide flat layout: x fastest, i.e. linear index
``x + H*(y + W*z)`` with the channel axis slowest for 4D payloads.
"""

from __future__ import annotations

import gzip
import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError, IoError, UnsupportedError
from .volume import DistanceField, LabelVolume, Volume3D

_HDR_FMT = "<i10s18sihcB8h3f4h8f3fh2b4f2i80s24s2h6f12f16s4s"
_HDR_SIZE = struct.calcsize(_HDR_FMT)
assert _HDR_SIZE == 348

_DTYPE_CODES = {
    2: np.dtype(np.uint8),
    4: np.dtype(np.int16),
    16: np.dtype(np.float32),
    64: np.dtype(np.float64),
}
_CODE_FOR_DTYPE = {v.name: k for k, v in _DTYPE_CODES.items()}

_RAW_DTYPES = {"uint8", "int16", "float32", "float64"}


def _is_gzip(path: Path) -> bool:
    with open(path, "rb") as fh:
        return fh.read(2) == b"\x1f\x8b"


def _read_bytes(path: Path) -> bytes:
    if _is_gzip(path):
        with gzip.open(path, "rb") as fh:
            return fh.read()
    return path.read_bytes()


def _write_bytes(path: Path, blob: bytes) -> None:
    try:
        if str(path).endswith(".gz"):
            with gzip.open(path, "wb") as fh:
                fh.write(blob)
        else:
            path.write_bytes(blob)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _pack_nifti_header(dims, spacing, dtype: np.dtype, nchannels: int) -> bytes:
    ndim = 3 if nchannels == 0 else 4
    dim = [ndim, dims[0], dims[1], dims[2], max(1, nchannels), 1, 1, 1]
    pixdim = [1.0, spacing[0], spacing[1], spacing[2], 0.0, 0.0, 0.0, 0.0]
    code = _CODE_FOR_DTYPE[dtype.name]
    return struct.pack(
        _HDR_FMT,
        348,                      # sizeof_hdr
        b"", b"",                 # data_type, db_name (unused)
        0, 0, b"r", 0,            # extents, session_error, regular, dim_info
        *dim,
        0.0, 0.0, 0.0,            # intent_p1..p3
        0,                        # intent_code
        code,
        dtype.itemsize * 8,       # bitpix
        0,                        # slice_start
        *pixdim,
        352.0,                    # vox_offset
        1.0, 0.0,                 # scl_slope, scl_inter
        0, 0, 2,                  # slice_end, slice_code, xyzt_units (mm)
        0.0, 0.0, 0.0, 0.0,       # cal_max, cal_min, slice_duration, toffset
        0, 0,                     # glmax, glmin
        b"batseg", b"",           # descrip, aux_file
        0, 0,                     # qform_code, sform_code
        0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        *([0.0] * 12),            # srow_x/y/z
        b"",
        b"n+1\x00",
    )


def _parse_nifti(blob: bytes, path: Path):
    if len(blob) < 352:
        raise FormatError(f"{path}: truncated NIfTI file ({len(blob)} bytes)")
    endian = "<"
    (sizeof_hdr,) = struct.unpack_from("<i", blob, 0)
    if sizeof_hdr != 348:
        (sizeof_hdr,) = struct.unpack_from(">i", blob, 0)
        if sizeof_hdr != 348:
            raise FormatError(f"{path}: bad sizeof_hdr, not a NIfTI-1 file")
        endian = ">"
    magic = blob[344:348]
    if magic != b"n+1\x00":
        raise FormatError(f"{path}: unsupported magic {magic!r} (need single-file n+1)")
    dim = struct.unpack_from(endian + "8h", blob, 40)
    (datatype,) = struct.unpack_from(endian + "h", blob, 70)
    pixdim = struct.unpack_from(endian + "8f", blob, 76)
    (vox_offset,) = struct.unpack_from(endian + "f", blob, 108)
    scl_slope, scl_inter = struct.unpack_from(endian + "2f", blob, 112)

    ndim = dim[0]
    if ndim not in (3, 4):
        raise FormatError(f"{path}: unsupported dimensionality dim[0]={dim[0]}")
    dims = tuple(int(d) for d in dim[1:4])
    nchannels = int(dim[4]) if ndim == 4 else 0
    if min(dims) < 1 or (ndim == 4 and nchannels < 1):
        raise FormatError(f"{path}: nonpositive dimensions {dim[:5]}")
    spacing = tuple(float(p) for p in pixdim[1:4])
    if any(not np.isfinite(s) or s <= 0 for s in spacing):
        raise FormatError(f"{path}: nonpositive pixdim {spacing}")

    if datatype not in _DTYPE_CODES:
        raise UnsupportedError(f"{path}: unsupported NIfTI datatype code {datatype}")
    dt = _DTYPE_CODES[datatype].newbyteorder(endian)

    offset = int(round(vox_offset))
    if offset < 348:
        raise FormatError(f"{path}: bad vox_offset {vox_offset}")
    count = dims[0] * dims[1] * dims[2] * max(1, nchannels)
    need = offset + count * dt.itemsize
    if len(blob) < need:
        raise FormatError(
            f"{path}: truncated payload, need {need} bytes, have {len(blob)}"
        )
    flat = np.frombuffer(blob, dtype=dt, count=count, offset=offset)
    shape = dims if nchannels == 0 else dims + (nchannels,)
    data = flat.reshape(shape, order="F")
    if not (scl_slope in (0.0, 1.0) and scl_inter == 0.0):
        data = data.astype(np.float64) * scl_slope + scl_inter
    return data, spacing, nchannels


def _parse_raw(blob: bytes, path: Path):
    nl = blob.find(b"\n", 0, 4096)
    if nl < 0:
        raise FormatError(f"{path}: missing raw-format header line")
    try:
        hdr = json.loads(blob[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: bad raw-format header: {exc}") from exc
    for key in ("dims", "spacing", "dtype"):
        if key not in hdr:
            raise FormatError(f"{path}: raw header missing {key!r}")
    dims = tuple(int(d) for d in hdr["dims"])
    if len(dims) != 3 or min(dims) < 1:
        raise FormatError(f"{path}: bad dims {hdr['dims']}")
    spacing = tuple(float(s) for s in hdr["spacing"])
    if hdr["dtype"] not in _RAW_DTYPES:
        raise UnsupportedError(f"{path}: unsupported raw dtype {hdr['dtype']!r}")
    nchannels = int(hdr.get("channels", 0))
    dt = np.dtype(hdr["dtype"]).newbyteorder("<")
    count = dims[0] * dims[1] * dims[2] * max(1, nchannels)
    need = nl + 1 + count * dt.itemsize
    if len(blob) < need:
        raise FormatError(
            f"{path}: truncated payload, need {need} bytes, have {len(blob)}"
        )
    flat = np.frombuffer(blob, dtype=dt, count=count, offset=nl + 1)
    shape = dims if nchannels == 0 else dims + (nchannels,)
    return flat.reshape(shape, order="F"), spacing, nchannels


def _is_raw(path: Path) -> bool:
    name = path.name
    return name.endswith(".rawvol") or name.endswith(".rawvol.gz")


def read_array(path) -> tuple[np.ndarray, tuple[float, float, float], int]:
    """Low-level read: (data, spacing, nchannels). nchannels==0 means 3D."""
    path = Path(path)
    blob = _read_bytes(path)
    if _is_raw(path):
        return _parse_raw(blob, path)
    return _parse_nifti(blob, path)


def write_array(path, data: np.ndarray, spacing, dtype=None) -> None:
    """Low-level write of a 3D or 4D array in the format chosen by extension."""
    path = Path(path)
    data = np.asarray(data)
    if data.ndim not in (3, 4):
        raise UnsupportedError(f"can only write 3D/4D arrays, got {data.ndim}D")
    nchannels = data.shape[3] if data.ndim == 4 else 0
    dt = np.dtype(dtype) if dtype is not None else data.dtype
    if dt.name not in _RAW_DTYPES:
        raise UnsupportedError(f"unsupported payload dtype {dt.name}")
    payload = np.ascontiguousarray(data).astype(dt.newbyteorder("<"))
    blob = payload.ravel(order="F").tobytes()
    spacing = tuple(float(s) for s in spacing)
    if _is_raw(path):
        hdr = {
            "dims": list(data.shape[:3]),
            "spacing": list(spacing),
            "dtype": dt.name,
            "channels": nchannels,
        }
        _write_bytes(path, json.dumps(hdr).encode("utf-8") + b"\n" + blob)
    else:
        header = _pack_nifti_header(data.shape[:3], spacing, np.dtype(dt.name), nchannels)
        _write_bytes(path, header + b"\x00\x00\x00\x00" + blob)


def write_volume(v, path, dtype=None) -> None:
    """Write a volume, label volume, or distance field.

    Default payload dtypes: float32 for scalar volumes and fields, uint8 for
    labels (int16 when the label range requires it).
    """
    if isinstance(v, Volume3D):
        write_array(path, v.data, v.spacing, dtype or np.float32)
    elif isinstance(v, LabelVolume):
        if dtype is None:
            dtype = np.uint8 if v.num_classes <= 256 else np.int16
        write_array(path, v.labels, v.spacing, dtype)
    elif isinstance(v, DistanceField):
        write_array(path, v.values, v.spacing, dtype or np.float32)
    else:
        raise UnsupportedError(f"cannot write object of type {type(v).__name__}")


def read_volume(path, labels: bool = False, num_classes: int = 0):
    """Read a 3D file as a :class:`Volume3D`, or a :class:`LabelVolume` when
    ``labels=True`` and the payload dtype is integral."""
    data, spacing, nchannels = read_array(path)
    if nchannels != 0:
        raise FormatError(f"{path}: expected a 3D volume, file has {nchannels} channels")
    if labels:
        if not np.issubdtype(data.dtype, np.integer):
            raise UnsupportedError(
                f"{path}: label volume requires an integral payload, got {data.dtype}"
            )
        return LabelVolume(
            np.ascontiguousarray(data), spacing=spacing, num_classes=num_classes
        )
    return Volume3D(np.ascontiguousarray(data, dtype=np.float64), spacing=spacing)


def read_field(path) -> DistanceField:
    """Read a 4D file as a :class:`DistanceField` (values validated to [0, 1])."""
    data, spacing, nchannels = read_array(path)
    if nchannels == 0:
        raise FormatError(f"{path}: expected a 4D field, file is 3D")
    return DistanceField(np.ascontiguousarray(data, dtype=np.float64), spacing=spacing)
