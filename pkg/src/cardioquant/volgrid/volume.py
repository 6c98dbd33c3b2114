"""Volume container and the ``cqvol`` file format.

A ``cqvol`` volume is a pair of files: ``<name>.json`` holding the header and
``<name>.raw`` holding the little-endian payload in x-fastest order.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

SCALAR = "scalar"
LABEL = "label"

_DTYPES = {"f32": np.dtype("<f4"), "u8": np.dtype("u1")}
_KIND_DTYPE = {SCALAR: "f32", LABEL: "u8"}


class VolumeFormatError(ValueError):
    """Raised when a cqvol header or payload is malformed."""


@dataclass(frozen=True)
class Volume:
    """Regular 3-D grid with physical spacing.

    ``data`` is indexed ``data[x, y, z]``. Voxel ``(i, j, k)`` has its
    center at ``(i * sx, j * sy, k * sz)`` mm.
    """

    data: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    kind: str = SCALAR

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3 or min(data.shape) < 1:
            raise ValueError(f"volume data must be a non-empty 3-D array, got shape {data.shape}")
        spacing = tuple(float(s) for s in self.spacing)
        if len(spacing) != 3 or not all(np.isfinite(s) and s > 0 for s in spacing):
            raise ValueError(f"spacing must be 3 positive reals, got {self.spacing}")
        if self.kind not in (SCALAR, LABEL):
            raise ValueError(f"unknown volume kind {self.kind!r}")
        if self.kind == LABEL:
            if data.dtype.kind == "f":
                if not np.all(data == np.round(data)):
                    raise ValueError("label volume contains non-integer values")
            elif data.dtype.kind not in "uib":
                raise ValueError(f"label volume has unsupported dtype {data.dtype}")
            if data.size and data.min() < 0:
                raise ValueError("label volume contains negative values")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "spacing", spacing)

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(d) for d in self.data.shape)

    def with_data(self, data, kind=None) -> "Volume":
        """Same grid, new payload."""
        return Volume(np.asarray(data), self.spacing, kind or self.kind)


def as_array(vol) -> np.ndarray:
    """Payload of a Volume, or the argument itself as an array."""
    if isinstance(vol, Volume):
        return vol.data
    return np.asarray(vol)


def spacing_of(vol, spacing=None) -> tuple[float, float, float]:
    if spacing is not None:
        return tuple(float(s) for s in spacing)
    if isinstance(vol, Volume):
        return vol.spacing
    return (1.0, 1.0, 1.0)


def _paths(path):
    base = os.fspath(path)
    if base.endswith(".json"):
        base = base[:-5]
    return base + ".json", base + ".raw"


def write_volume(path, vol: Volume) -> None:
    """Write ``vol`` as ``<path>.json`` + ``<path>.raw``.

    Scalar data is stored as float32 and label data as uint8, so a round trip
    is bit-exact for volumes already holding those types.
    """
    header_path, raw_path = _paths(path)
    dtype_name = _KIND_DTYPE[vol.kind]
    dtype = _DTYPES[dtype_name]
    if vol.kind == LABEL and vol.data.size and vol.data.max() > 255:
        raise VolumeFormatError("label values above 255 do not fit the u8 payload")
    payload = np.asarray(vol.data).astype(dtype, copy=False).ravel(order="F")
    header = {
        "dims": list(vol.dims),
        "spacing": list(vol.spacing),
        "kind": vol.kind,
        "dtype": dtype_name,
        "data": os.path.basename(raw_path),
    }
    with open(header_path, "w") as fh:
        json.dump(header, fh)
    with open(raw_path, "wb") as fh:
        fh.write(payload.tobytes())


def read_volume(path) -> Volume:
    """Read a cqvol volume. Raises VolumeFormatError on malformed input."""
    header_path, _ = _paths(path)
    try:
        with open(header_path) as fh:
            header = json.load(fh)
    except json.JSONDecodeError as exc:
        raise VolumeFormatError(f"{header_path}: invalid JSON header ({exc})") from exc
    try:
        dims = [int(d) for d in header["dims"]]
        spacing = [float(s) for s in header["spacing"]]
        kind = header["kind"]
        dtype_name = header["dtype"]
        data_name = header["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise VolumeFormatError(f"{header_path}: bad header field ({exc})") from exc
    if len(dims) != 3 or min(dims) < 1:
        raise VolumeFormatError(f"dims must be 3 positive integers, got {dims}")
    if len(spacing) != 3 or not all(np.isfinite(s) and s > 0 for s in spacing):
        raise VolumeFormatError(f"spacing must be 3 positive reals, got {spacing}")
    if kind not in _KIND_DTYPE:
        raise VolumeFormatError(f"unknown kind {kind!r}")
    if dtype_name != _KIND_DTYPE[kind]:
        raise VolumeFormatError(f"kind {kind!r} requires dtype {_KIND_DTYPE[kind]!r}, got {dtype_name!r}")
    raw_path = os.path.join(os.path.dirname(header_path), data_name)
    with open(raw_path, "rb") as fh:
        raw = fh.read()
    dtype = _DTYPES[dtype_name]
    n = int(np.prod(dims))
    if len(raw) != n * dtype.itemsize:
        raise VolumeFormatError(
            f"payload holds {len(raw) // dtype.itemsize} values, header dims {dims} need {n}"
        )
    data = np.frombuffer(raw, dtype=dtype).reshape(dims, order="F").copy()
    return Volume(data, tuple(spacing), kind)
