"""Closed-form segmentation losses and their analytic gradients.

Spatial-encoding and shape-attention losses are sums over voxels; the
cross-entropy family is averaged. Every ``*_grad`` function returns the
gradient with respect to the prediction argument(s).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..volgrid.volume import as_array
from .edt import DistanceField, prob_from_dtm, signed_dtm

PROB_EPS = 1e-7
DICE_EPS = 1e-6


@dataclass(frozen=True)
class ProbPair:
    """Normal-wall and scar probability maps, each in (0, 1]."""

    p_normal: np.ndarray
    p_scar: np.ndarray

    def __post_init__(self):
        n, s = np.asarray(self.p_normal, float), np.asarray(self.p_scar, float)
        if n.shape != s.shape:
            raise ValueError("probability maps must share a shape")
        object.__setattr__(self, "p_normal", n)
        object.__setattr__(self, "p_scar", s)

    @classmethod
    def from_masks(cls, normal_mask, scar_mask, beta: float = 1.0, spacing=None) -> "ProbPair":
        """Target maps exp(-|phi|) built from the two class masks."""
        return cls(
            prob_from_dtm(signed_dtm(normal_mask, beta, spacing)),
            prob_from_dtm(signed_dtm(scar_mask, beta, spacing)),
        )

    def stacked(self) -> np.ndarray:
        return np.stack([self.p_normal, self.p_scar])


@dataclass(frozen=True)
class LossWeights:
    lambda_LA: float = 1.0
    lambda_scar: float = 1.0
    lambda_M1: float = 1.0
    lambda_M2: float = 1.0
    T_LA: float = 0.5
    alpha: float = 1.0

    def __post_init__(self):
        values = (self.lambda_LA, self.lambda_scar, self.lambda_M1, self.lambda_M2, self.T_LA, self.alpha)
        if not all(math.isfinite(v) for v in values):
            raise ValueError("loss weights must be finite")
        if not 0 < self.T_LA < 1:
            raise ValueError("T_LA must lie in (0, 1)")


def _same(a, b, what="inputs"):
    a = np.asarray(as_array(a), dtype=np.float64)
    b = np.asarray(as_array(b), dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"{what} shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def _phi_values(phi):
    return phi.values if isinstance(phi, DistanceField) else phi


def _pair_array(p):
    if isinstance(p, ProbPair):
        return p.stacked()
    arr = np.asarray(p, dtype=np.float64)
    if arr.shape[0] != 2:
        raise ValueError("probability pair must have a leading axis of length 2 (normal, scar)")
    return arr


# -- spatial encoding --------------------------------------------------------

def se_loss_la(pred, phi, T_LA: float = 0.5) -> float:
    """Sum of (pred - T_LA) * phi; negative when confident and correct."""
    y, d = _same(pred, _phi_values(phi))
    return float(np.sum((y - T_LA) * d))


def se_loss_la_grad(pred, phi, T_LA: float = 0.5) -> np.ndarray:
    _, d = _same(pred, _phi_values(phi))
    return d


def se_loss_scar(pred_pair, target_pair) -> float:
    """Sum over voxels of the squared L2 gap between predicted and target pairs."""
    p, t = _same(_pair_array(pred_pair), _pair_array(target_pair))
    return float(np.sum((p - t) ** 2))


def se_loss_scar_grad(pred_pair, target_pair) -> np.ndarray:
    p, t = _same(_pair_array(pred_pair), _pair_array(target_pair))
    return 2.0 * (p - t)


def sa_loss(pred_pair, target_pair, mask) -> float:
    """Masked squared error of the normal-minus-scar channel difference."""
    p, t = _same(_pair_array(pred_pair), _pair_array(target_pair))
    m, _ = _same(mask, p[0], "mask")
    r = m * ((p[0] - p[1]) - (t[0] - t[1]))
    return float(np.sum(r * r))


def sa_loss_grad(pred_pair, target_pair, mask) -> np.ndarray:
    p, t = _same(_pair_array(pred_pair), _pair_array(target_pair))
    m, _ = _same(mask, p[0], "mask")
    g = 2.0 * m * m * ((p[0] - p[1]) - (t[0] - t[1]))
    return np.stack([g, -g])


# -- cross entropy / Dice ----------------------------------------------------

def bce_loss(pred, target) -> float:
    p, y = _same(pred, target)
    p = np.clip(p, PROB_EPS, 1 - PROB_EPS)
    return float(np.mean(-(y * np.log(p) + (1 - y) * np.log1p(-p))))


def bce_loss_grad(pred, target) -> np.ndarray:
    """Gradient inside the clamp range; zero where the clamp is active."""
    p, y = _same(pred, target)
    inside = (p > PROB_EPS) & (p < 1 - PROB_EPS)
    pc = np.clip(p, PROB_EPS, 1 - PROB_EPS)
    return np.where(inside, (-y / pc + (1 - y) / (1 - pc)) / p.size, 0.0)


def soft_dice_loss(pred, target) -> float:
    p, y = _same(pred, target)
    num = 2.0 * np.sum(p * y) + DICE_EPS
    den = np.sum(p) + np.sum(y) + DICE_EPS
    return float(1.0 - num / den)


def soft_dice_loss_grad(pred, target) -> np.ndarray:
    p, y = _same(pred, target)
    num = 2.0 * np.sum(p * y) + DICE_EPS
    den = np.sum(p) + np.sum(y) + DICE_EPS
    return -(2.0 * y * den - num) / (den * den)


def _class_probs(pred, target):
    p = np.asarray(pred, dtype=np.float64)
    y = np.asarray(as_array(target))
    if p.shape[1:] != y.shape:
        raise ValueError(f"class-probability shape {p.shape} does not match labels {y.shape}")
    if np.any(np.abs(p.sum(axis=0) - 1.0) > 1e-5):
        raise ValueError("class probabilities must sum to 1 per voxel")
    if y.min() < 0 or y.max() >= p.shape[0]:
        raise ValueError("label out of range for the given number of classes")
    return p, y.astype(np.int64)


def cross_entropy_loss(pred, target) -> float:
    """Mean of -log p(true class). ``pred`` has the class axis first."""
    p, y = _class_probs(pred, target)
    true_p = np.take_along_axis(p, y[None], axis=0)[0]
    return float(np.mean(-np.log(np.clip(true_p, PROB_EPS, 1.0))))


def cross_entropy_loss_grad(pred, target) -> np.ndarray:
    p, y = _class_probs(pred, target)
    onehot = np.zeros_like(p)
    np.put_along_axis(onehot, y[None], 1.0, axis=0)
    return np.where(onehot > 0, -1.0 / (np.clip(p, PROB_EPS, None) * y.size), 0.0)


def ddfseg_seg_loss(pred, target, alpha: float = 1.0) -> float:
    """Cross entropy plus ``alpha`` times the class-averaged soft Dice loss."""
    p, y = _class_probs(pred, target)
    dice_terms = [soft_dice_loss(p[c], (y == c).astype(float)) for c in range(p.shape[0])]
    return cross_entropy_loss(p, y) + alpha * float(np.mean(dice_terms))


def ddfseg_seg_loss_grad(pred, target, alpha: float = 1.0) -> np.ndarray:
    p, y = _class_probs(pred, target)
    g = cross_entropy_loss_grad(p, y)
    for c in range(p.shape[0]):
        g[c] += alpha * soft_dice_loss_grad(p[c], (y == c).astype(float)) / p.shape[0]
    return g


# -- L1 ----------------------------------------------------------------------

def l1_mean_loss(a, b=None) -> float:
    """Mean |a - b| (cycle reconstruction) or mean |a| when ``b`` is omitted (zero loss)."""
    a = np.asarray(a, dtype=np.float64)
    if b is None:
        return float(np.mean(np.abs(a)))
    a, b = _same(a, b)
    return float(np.mean(np.abs(a - b)))


def l1_mean_loss_grad(a, b=None) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if b is not None:
        a, b = _same(a, b)
        a = a - b
    return np.sign(a) / a.size


# -- totals ------------------------------------------------------------------

def atrialjsqnet_total(components: dict, w: LossWeights = LossWeights()) -> float:
    """Weighted total of the joint LA / scar objective.

    ``components`` keys: ``bce_la``, ``se_la``, ``se_scar``, ``sa_m1``,
    ``sa_m2``; missing keys count as 0.
    """
    keys = ("bce_la", "se_la", "se_scar", "sa_m1", "sa_m2")
    unknown = set(components) - set(keys)
    if unknown:
        raise KeyError(f"unknown loss components: {sorted(unknown)}")
    c = {k: float(components.get(k, 0.0)) for k in keys}
    if not all(math.isfinite(v) for v in c.values()):
        raise ValueError("loss components must be finite")
    l_la = c["bce_la"] + w.lambda_LA * c["se_la"]
    return l_la + w.lambda_scar * c["se_scar"] + w.lambda_M1 * c["sa_m1"] + w.lambda_M2 * c["sa_m2"]
