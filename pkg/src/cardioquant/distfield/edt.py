"""Exact Euclidean distance transforms and signed distance maps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..volgrid.volume import SCALAR, Volume, as_array, spacing_of


def _envelope_1d(f: np.ndarray, w: float) -> np.ndarray:
    """min_p w*(q - p)^2 + f[p] for every q, via the lower envelope of parabolas."""
    n = len(f)
    finite = np.flatnonzero(np.isfinite(f))
    out = np.full(n, np.inf)
    if len(finite) == 0:
        return out
    v = np.empty(len(finite), dtype=np.int64)
    z = np.empty(len(finite) + 1)
    k = 0
    v[0] = finite[0]
    z[0], z[1] = -np.inf, np.inf
    for q in finite[1:]:
        fq = f[q] + w * q * q
        while True:
            p = v[k]
            s = (fq - (f[p] + w * p * p)) / (2.0 * w * (q - p))
            if s <= z[k]:
                k -= 1
            else:
                break
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = np.inf
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        d = q - v[k]
        out[q] = w * d * d + f[v[k]]
    return out


def squared_edt(sites: np.ndarray, spacing=None) -> np.ndarray:
    """Squared physical distance from every voxel to the nearest ``True`` site.

    Separable: one 1-D lower-envelope pass per axis. Returns inf everywhere
    if there are no sites.
    """
    sites = np.asarray(sites, dtype=bool)
    if spacing is None:
        spacing = (1.0,) * sites.ndim
    dist = np.where(sites, 0.0, np.inf)
    for axis, sp in enumerate(spacing):
        moved = np.moveaxis(dist, axis, -1)
        lines = moved.reshape(-1, moved.shape[-1])
        w = float(sp) ** 2
        result = np.empty_like(lines)
        for i, line in enumerate(lines):
            if np.isfinite(line).any():
                result[i] = _envelope_1d(line, w)
            else:
                result[i] = np.inf
        dist = np.moveaxis(result.reshape(moved.shape), -1, axis)
    return dist


def surface_voxels(fg: np.ndarray) -> np.ndarray:
    """Foreground voxels with a background 6-neighbor (grid edge is background)."""
    fg = np.asarray(fg, dtype=bool)
    inner = ndimage.binary_erosion(fg, structure=ndimage.generate_binary_structure(fg.ndim, 1),
                                   border_value=0)
    return fg & ~inner


@dataclass(frozen=True)
class DistanceField:
    """Signed distance map: negative inside, zero on the surface, positive outside."""

    values: np.ndarray
    spacing: tuple[float, ...]
    beta: float = 1.0

    @property
    def grid(self) -> Volume:
        return Volume(self.values, self.spacing, SCALAR)


def signed_dtm(mask, beta: float = 1.0, spacing=None) -> DistanceField:
    """Signed distance transform map of a binary mask (1-D to 3-D).

    Distances are measured in mm between voxel centers, to the nearest
    surface voxel (a foreground voxel with a background 6-neighbor, the grid
    edge counting as background), and raised to the power ``beta``.
    """
    fg = as_array(mask) != 0
    if fg.ndim not in (1, 2, 3):
        raise ValueError("mask must be 1-D, 2-D or 3-D")
    if fg.all() or not fg.any():
        raise ValueError("signed DTM needs both foreground and background voxels")
    if not beta > 0:
        raise ValueError("beta must be positive")
    if spacing is None and not isinstance(mask, Volume):
        spacing = (1.0,) * fg.ndim
    spacing = tuple(float(s) for s in spacing_of(mask, spacing))
    if len(spacing) != fg.ndim:
        raise ValueError("spacing length must match mask dimensionality")
    surf = surface_voxels(fg)
    d = np.sqrt(squared_edt(surf, spacing))
    if beta != 1.0:
        d = d ** beta
    phi = np.where(surf, 0.0, np.where(fg, -d, d))
    return DistanceField(phi, spacing, float(beta))


def _phi(phi) -> np.ndarray:
    if isinstance(phi, DistanceField):
        return phi.values
    return as_array(phi)


def prob_from_dtm(phi) -> np.ndarray:
    """Pointwise exp(-|phi|); 1 on the surface, decaying away from it."""
    return np.exp(-np.abs(_phi(phi)))
