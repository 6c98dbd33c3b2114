"""Central finite-difference check of analytic gradients."""
from __future__ import annotations

import numpy as np


def numerical_gradient(loss, point, h: float = 1e-4) -> np.ndarray:
    """Central difference of a scalar ``loss`` at ``point``, one coordinate at a time."""
    x = np.array(point, dtype=np.float64)
    g = np.empty_like(x)
    flat, gflat = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = loss(x)
        flat[i] = orig - h
        down = loss(x)
        flat[i] = orig
        gflat[i] = (up - down) / (2.0 * h)
    return g


def grad_check(loss, point, analytic_grad, h: float = 1e-4) -> float:
    """Max over coordinates of |g_fd - g_an| / max(1, |g_fd|).

    ``loss`` maps an array shaped like ``point`` to a float. Keep ``point``
    away from clamps and kinks (for L1, |a - b| > 10 h).
    """
    point = np.asarray(point, dtype=np.float64)
    analytic = np.asarray(analytic_grad, dtype=np.float64)
    if analytic.shape != point.shape:
        raise ValueError(f"gradient shape {analytic.shape} does not match point {point.shape}")
    if not (np.all(np.isfinite(point)) and np.all(np.isfinite(analytic))):
        raise ValueError("point and gradient must be finite")
    fd = numerical_gradient(loss, point, h)
    if not np.all(np.isfinite(fd)):
        raise ValueError("loss produced non-finite values near the point")
    return float(np.max(np.abs(fd - analytic) / np.maximum(1.0, np.abs(fd))))
