"""Pre- and post-processing of image and label volumes."""
from __future__ import annotations

import numpy as np
from scipy import ndimage

from .volume import SCALAR, Volume

_STRUCTURES = {
    6: ndimage.generate_binary_structure(3, 1),
    26: ndimage.generate_binary_structure(3, 3),
}


def zscore_normalize(vol: Volume) -> Volume:
    """Standardize a scalar volume to zero mean and unit population std."""
    if vol.kind != SCALAR:
        raise ValueError("z-score normalization needs a scalar volume")
    data = np.asarray(vol.data, dtype=np.float64)
    std = data.std()
    if not std > 0:
        raise ValueError("cannot z-score a constant volume (std = 0)")
    return vol.with_data((data - data.mean()) / std)


def crop_roi(vol: Volume, center, size) -> Volume:
    """Crop a box of ``size`` voxels centered on ``center``.

    The box starts at ``center - size // 2``. Parts of the box outside the
    grid are zero-padded.
    """
    center = np.asarray(center, dtype=int)
    size = np.asarray(size, dtype=int)
    if size.shape != (3,) or center.shape != (3,):
        raise ValueError("center and size must each hold 3 integers")
    if np.any(size <= 0):
        raise ValueError(f"ROI size must be positive, got {size.tolist()}")
    start = center - size // 2
    stop = start + size
    out = np.zeros(tuple(size), dtype=vol.data.dtype)
    src_lo = np.maximum(start, 0)
    src_hi = np.minimum(stop, vol.dims)
    if np.all(src_hi > src_lo):
        dst_lo = src_lo - start
        dst_hi = dst_lo + (src_hi - src_lo)
        out[tuple(slice(a, b) for a, b in zip(dst_lo, dst_hi))] = vol.data[
            tuple(slice(a, b) for a, b in zip(src_lo, src_hi))
        ]
    return vol.with_data(out)


def _linear_index(shape):
    # x-fastest, same order as the cqvol payload
    return np.arange(int(np.prod(shape))).reshape(shape, order="F")


def largest_component(mask: Volume, label: int = 1, connectivity: int = 6) -> Volume:
    """Keep only the largest connected component of ``label``.

    Other labels are left untouched. Equal-size components are resolved in
    favor of the one containing the smallest x-fastest linear index.
    """
    if connectivity not in _STRUCTURES:
        raise ValueError("connectivity must be 6 or 26")
    data = mask.data
    fg = data == label
    comps, n = ndimage.label(fg, structure=_STRUCTURES[connectivity])
    if n <= 1:
        return mask.with_data(data.copy())
    ids = comps.ravel()
    sizes = np.bincount(ids, minlength=n + 1)[1:]
    seeds = np.full(n + 1, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(seeds, ids, _linear_index(data.shape).ravel())
    seeds = seeds[1:]
    # largest size first, then smallest seed
    keep = np.lexsort((seeds, -sizes))[0] + 1
    out = data.copy()
    out[fg & (comps != keep)] = 0
    return mask.with_data(out)


def fill_holes(mask: Volume) -> Volume:
    """Fill background cavities not 6-connected to the grid border."""
    data = mask.data
    filled = ndimage.binary_fill_holes(data != 0, structure=_STRUCTURES[6])
    out = data.copy()
    fg_value = data[data != 0].max() if np.any(data != 0) else 1
    out[filled & (data == 0)] = fg_value
    return mask.with_data(out)
