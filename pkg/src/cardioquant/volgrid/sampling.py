"""Sampling volumes along surface normals."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .mesh import SurfaceMesh
from .volume import as_array, spacing_of


@dataclass(frozen=True)
class Profile:
    """Multi-scale intensity profile of one surface node.

    ``samples[s]`` holds ``2 * half_width + 1`` values taken along the node
    normal with spacing ``scales[s]`` mm, centered on the node.
    """

    node_index: int
    scales: tuple[float, ...]
    samples: np.ndarray

    @property
    def center(self) -> float:
        return float(self.samples[0, self.samples.shape[1] // 2])

    def features(self) -> np.ndarray:
        return self.samples.ravel()


def trilinear(vol, points_mm, spacing=None) -> np.ndarray:
    """Trilinear interpolation at physical points; outside the grid reads 0."""
    data = np.asarray(as_array(vol), dtype=np.float64)
    spacing = np.asarray(spacing_of(vol, spacing))
    coords = (np.asarray(points_mm, dtype=np.float64).reshape(-1, 3) / spacing).T
    return ndimage.map_coordinates(data, coords, order=1, mode="grid-constant", cval=0.0)


def _check_scales(scales):
    scales = tuple(float(s) for s in scales)
    if not scales or any(s <= 0 for s in scales):
        raise ValueError("scales must be positive")
    if any(b <= a for a, b in zip(scales, scales[1:])):
        raise ValueError("scales must be strictly increasing")
    return scales


def sample_msp(vol, mesh: SurfaceMesh, node: int, scales=(1.0,), half_width: int = 3) -> Profile:
    """Sample the multi-scale profile of vertex ``node``."""
    if mesh.normals is None:
        raise ValueError("mesh has no normals; call vertex_normals first")
    if not 0 <= node < mesh.n_vertices:
        raise IndexError(f"node {node} out of range for {mesh.n_vertices} vertices")
    scales = _check_scales(scales)
    k = np.arange(-half_width, half_width + 1, dtype=np.float64)
    offsets = np.asarray(scales)[:, None, None] * k[None, :, None] * mesh.normals[node]
    pts = mesh.vertices[node] + offsets
    values = trilinear(vol, pts.reshape(-1, 3)).reshape(len(scales), len(k))
    return Profile(int(node), scales, values)


def sample_all_msp(vol, mesh: SurfaceMesh, scales=(1.0,), half_width: int = 3) -> np.ndarray:
    """Profiles of every vertex at once, shape ``(n_vertices, n_scales, 2*half_width+1)``."""
    if mesh.normals is None:
        raise ValueError("mesh has no normals; call vertex_normals first")
    scales = _check_scales(scales)
    k = np.arange(-half_width, half_width + 1, dtype=np.float64)
    steps = np.asarray(scales)[:, None] * k[None, :]
    pts = mesh.vertices[:, None, None, :] + steps[None, :, :, None] * mesh.normals[:, None, None, :]
    return trilinear(vol, pts.reshape(-1, 3)).reshape(mesh.n_vertices, len(scales), len(k))


def project_labels_to_surface(mask, mesh: SurfaceMesh, radius: float = 3.0, step: float | None = None) -> np.ndarray:
    """Give each vertex the label of the nearest labeled voxel along its normal.

    The normal line is walked outward from the vertex in both directions up
    to ``radius`` mm; at each offset the voxel whose center is nearest to the
    sample point is read. The first non-zero label wins, with the outward
    (+normal) side taking precedence at equal offsets. Vertices with no
    labeled voxel in range get 0.
    """
    if mesh.normals is None:
        raise ValueError("mesh has no normals; call vertex_normals first")
    labels = as_array(mask)
    spacing = np.asarray(spacing_of(mask))
    if step is None:
        step = 0.25 * float(spacing.min())
    n_steps = int(np.floor(radius / step + 1e-9))
    offsets = [0.0]
    for i in range(1, n_steps + 1):
        offsets += [i * step, -i * step]
    out = np.zeros(mesh.n_vertices, dtype=labels.dtype)
    pending = np.ones(mesh.n_vertices, dtype=bool)
    shape = np.asarray(labels.shape)
    for t in offsets:
        if not pending.any():
            break
        idx = np.flatnonzero(pending)
        pts = mesh.vertices[idx] + t * mesh.normals[idx]
        vox = np.rint(pts / spacing).astype(np.int64)
        inside = np.all((vox >= 0) & (vox < shape), axis=1)
        hit_idx, vox = idx[inside], vox[inside]
        vals = labels[vox[:, 0], vox[:, 1], vox[:, 2]]
        found = vals != 0
        out[hit_idx[found]] = vals[found]
        pending[hit_idx[found]] = False
    return out
