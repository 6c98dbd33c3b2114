"""Intensity thresholds used by the comparison scar providers."""
from __future__ import annotations

import numpy as np


def two_sd_threshold(normal_wall_intensities) -> float:
    """Mean plus two population standard deviations of reference intensities."""
    x = np.asarray(normal_wall_intensities, dtype=np.float64).ravel()
    if x.size < 2:
        raise ValueError("need at least two reference intensities")
    return float(x.mean() + 2.0 * x.std())


def otsu_threshold(intensities, bins: int = 256) -> float:
    """Histogram bin edge that maximizes the between-class variance.

    The histogram spans ``[min, max]`` with ``bins`` equal bins. Candidates
    are the interior edges; values at or above the returned edge form the
    upper class. Ties resolve to the lowest edge.
    """
    x = np.asarray(intensities, dtype=np.float64).ravel()
    if bins < 2:
        raise ValueError("bins must be >= 2")
    if x.size == 0 or x.min() == x.max():
        raise ValueError("Otsu needs at least two distinct values")
    counts, edges = np.histogram(x, bins=bins, range=(x.min(), x.max()))
    centers = 0.5 * (edges[:-1] + edges[1:])
    w = counts / counts.sum()
    w0 = np.cumsum(w)[:-1]
    m0 = np.cumsum(w * centers)[:-1]
    mt = float(np.sum(w * centers))
    w1 = 1.0 - w0
    with np.errstate(divide="ignore", invalid="ignore"):
        between = np.where((w0 > 0) & (w1 > 0), (mt * w0 - m0) ** 2 / (w0 * w1), -np.inf)
    best = between.max()
    k = int(np.flatnonzero(between >= best - 1e-12 * abs(best))[0])
    return float(edges[k + 1])
