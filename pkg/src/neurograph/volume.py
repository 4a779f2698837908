"""3D scalar volumes with anisotropic spacing and bit-exact raw file I/O.

A volume on disk is a pair of files: a small text header (one ``key: value``
per line) and a raw payload of little-endian scalars in x-fastest linear
order, i.e. flat index ``x + nx*(y + ny*z)``.  Header keys::

    dims: nx ny nz
    spacing_um: sx sy sz
    data_file: <payload filename, relative to the header>
    dtype: f32le | u8 | i32le
    bands: k            (optional; payload is nx*ny*nz*k, band slowest)

The format is deliberately minimal: loading after saving reproduces dims,
spacing and every payload byte exactly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, ValidationError

_DTYPES = {
    "f32le": np.dtype("<f4"),
    "u8": np.dtype("u1"),
    "i32le": np.dtype("<i4"),
}


def _as_triple(values, name, numeric=float):
    vals = tuple(numeric(v) for v in values)
    if len(vals) != 3:
        raise ValidationError(f"{name} must have exactly 3 components, got {len(vals)}")
    return vals


@dataclass(frozen=True)
class Volume3D:
    """Immutable 3D scalar image stack.

    ``data`` is indexed ``[x, y, z]`` and carries float32 intensities;
    ``spacing`` is micrometers per voxel along each axis.  Physical
    coordinates are ``index * spacing``.
    """

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        dims = _as_triple(self.dims, "dims", int)
        spacing = _as_triple(self.spacing, "spacing")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", spacing)
        if any(n <= 0 for n in dims):
            raise ValidationError(f"dims must be positive, got {dims}")
        if any(s <= 0 for s in spacing):
            raise ValidationError(f"spacing must be strictly positive, got {spacing}")
        data = np.asarray(self.data, dtype=np.float32)
        if data.shape != dims:
            if data.size != dims[0] * dims[1] * dims[2]:
                raise ValidationError(
                    f"data size {data.size} does not match dims product {np.prod(dims)}"
                )
            data = data.reshape(dims, order="F")
        if not np.all(np.isfinite(data)):
            raise ValidationError("volume intensities must be finite")
        data = data.copy()
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def voxel_count(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    def physical_extent(self) -> tuple[float, float, float]:
        return tuple(n * s for n, s in zip(self.dims, self.spacing))

    def __eq__(self, other):
        if not isinstance(other, Volume3D):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.spacing == other.spacing
            and np.array_equal(self.data, other.data)
        )


def save_array(header_path, arr, spacing, dtype="f32le", extra_header=None):
    """Write an (nx, ny, nz) or (nx, ny, nz, k) array as header + raw payload.

    Returns the header path.  The payload is written next to the header as
    ``<stem>.raw``, x-fastest, band slowest.
    """
    arr = np.asarray(arr)
    if arr.ndim == 3:
        bands = None
    elif arr.ndim == 4:
        bands = arr.shape[3]
    else:
        raise ValidationError(f"expected a 3D or 4D array, got shape {arr.shape}")
    if dtype not in _DTYPES:
        raise ValidationError(f"unknown dtype {dtype!r}; expected one of {sorted(_DTYPES)}")
    spacing = _as_triple(spacing, "spacing")
    if any(s <= 0 for s in spacing):
        raise ValidationError(f"spacing must be strictly positive, got {spacing}")

    header_path = os.fspath(header_path)
    stem = os.path.splitext(os.path.basename(header_path))[0]
    data_name = stem + ".raw"
    payload = np.ravel(arr.astype(_DTYPES[dtype], copy=False), order="F")

    lines = [
        "dims: {} {} {}".format(*arr.shape[:3]),
        "spacing_um: {!r} {!r} {!r}".format(*spacing),
        f"data_file: {data_name}",
        f"dtype: {dtype}",
    ]
    if bands is not None:
        lines.append(f"bands: {bands}")
    for key, value in (extra_header or {}).items():
        lines.append(f"{key}: {value}")
    with open(os.path.join(os.path.dirname(header_path) or ".", data_name), "wb") as fh:
        fh.write(payload.tobytes())
    with open(header_path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
    return header_path


def read_array(header_path):
    """Read header + payload; returns (array, spacing, header dict).

    The array comes back shaped (nx, ny, nz) or (nx, ny, nz, bands) in the
    same x-fastest layout it was written with.
    """
    header_path = os.fspath(header_path)
    header = {}
    with open(header_path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise FormatError(f"malformed header line: {line!r}")
            key, value = line.split(":", 1)
            header[key.strip()] = value.strip()

    for key in ("dims", "spacing_um", "data_file", "dtype"):
        if key not in header:
            raise FormatError(f"header missing required key {key!r}")
    try:
        dims = _as_triple(header["dims"].split(), "dims", int)
        spacing = _as_triple(header["spacing_um"].split(), "spacing_um")
    except ValidationError as exc:
        raise FormatError(str(exc)) from None
    if any(n <= 0 for n in dims):
        raise FormatError(f"non-positive dims in header: {dims}")
    if any(s <= 0 for s in spacing):
        raise FormatError(f"non-positive spacing in header: {spacing}")
    dtype_key = header["dtype"]
    if dtype_key not in _DTYPES:
        raise FormatError(f"unknown dtype {dtype_key!r}")
    dtype = _DTYPES[dtype_key]
    bands = int(header["bands"]) if "bands" in header else None

    data_path = os.path.join(os.path.dirname(header_path) or ".", header["data_file"])
    if not os.path.exists(data_path):
        raise FormatError(f"payload file {data_path!r} does not exist")
    payload = np.fromfile(data_path, dtype=dtype)
    expected = dims[0] * dims[1] * dims[2] * (bands or 1)
    if payload.size != expected:
        raise FormatError(
            f"payload holds {payload.size} scalars but header implies {expected}"
        )
    shape = dims if bands is None else dims + (bands,)
    return payload.reshape(shape, order="F"), spacing, header


def save_volume(volume: Volume3D, header_path) -> str:
    """Save a volume; round-trips bit-exactly through :func:`load_volume`."""
    return save_array(header_path, volume.data, volume.spacing, dtype="f32le")


def load_volume(header_path) -> Volume3D:
    arr, spacing, header = read_array(header_path)
    if header["dtype"] != "f32le" or arr.ndim != 3:
        raise FormatError("not a scalar f32le volume")
    return Volume3D(dims=arr.shape, spacing=spacing, data=arr)


def save_labels(header_path, labels, spacing, dtype=None) -> str:
    """Save an integer label map (u8 for classes, i32le for supervoxel ids)."""
    labels = np.asarray(labels)
    if dtype is None:
        dtype = "u8" if labels.dtype.itemsize == 1 else "i32le"
    return save_array(header_path, labels, spacing, dtype=dtype)


def load_labels(header_path):
    arr, spacing, header = read_array(header_path)
    if header["dtype"] not in ("u8", "i32le"):
        raise FormatError(f"expected an integer label volume, got dtype {header['dtype']}")
    return arr, spacing
