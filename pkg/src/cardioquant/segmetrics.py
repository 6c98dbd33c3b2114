"""Segmentation evaluation metrics: Dice, generalized Dice, accuracy, HD, ASD."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .volgrid.volume import as_array, spacing_of


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @classmethod
    def from_masks(cls, pred, truth) -> "ConfusionCounts":
        p = as_array(pred) != 0
        t = as_array(truth) != 0
        if p.shape != t.shape:
            raise ValueError(f"shape mismatch: {p.shape} vs {t.shape}")
        return cls(int((p & t).sum()), int((~p & ~t).sum()), int((p & ~t).sum()), int((~p & t).sum()))


def _pair(a, b):
    a, b = as_array(a), as_array(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def boundary_points(mask, spacing=None) -> np.ndarray:
    """Physical centers of foreground voxels with a background 6-neighbor.

    Voxels on the grid border count as touching background.
    """
    fg = as_array(mask) != 0
    if not fg.any():
        raise ValueError("boundary of an empty mask is undefined")
    interior = ndimage.binary_erosion(fg, structure=ndimage.generate_binary_structure(fg.ndim, 1),
                                      border_value=0)
    return np.argwhere(fg & ~interior) * np.asarray(spacing_of(mask, spacing))


def dice(seg, gd) -> float:
    """2|A and B| / (|A| + |B|) over non-zero voxels."""
    a, b = _pair(seg, gd)
    a, b = a != 0, b != 0
    denom = int(a.sum()) + int(b.sum())
    if denom == 0:
        raise ValueError("Dice is undefined when both masks are empty")
    return 2.0 * int((a & b).sum()) / denom


def gdice(seg, gd, labels) -> float:
    """Generalized Dice pooled over ``labels``."""
    a, b = _pair(seg, gd)
    inter = total = 0
    for k in labels:
        ak, bk = a == k, b == k
        inter += int((ak & bk).sum())
        total += int(ak.sum()) + int(bk.sum())
    if total == 0:
        raise ValueError("generalized Dice is undefined when every class is empty")
    return 2.0 * inter / total


def accuracy(c: ConfusionCounts) -> float:
    total = c.tp + c.tn + c.fp + c.fn
    if total == 0:
        raise ValueError("accuracy needs at least one counted element")
    return (c.tp + c.tn) / total


def _points(X):
    X = np.asarray(X, dtype=np.float64).reshape(-1, 3)
    if len(X) == 0:
        raise ValueError("point set is empty")
    if not np.all(np.isfinite(X)):
        raise ValueError("point set has non-finite coordinates")
    return X


def directed_distances(X, Y) -> np.ndarray:
    """Distance from each point of X to its nearest neighbor in Y (exact)."""
    X, Y = _points(X), _points(Y)
    d, _ = cKDTree(Y).query(X, k=1)
    return d


def hausdorff(X, Y) -> float:
    """Symmetric Hausdorff distance, the plain maximum (no percentile)."""
    return float(max(directed_distances(X, Y).max(), directed_distances(Y, X).max()))


def asd(X, Y) -> float:
    """Average surface distance: mean of the two directed mean distances."""
    return float(0.5 * (directed_distances(X, Y).mean() + directed_distances(Y, X).mean()))
