"""Explicit distribution-discrepancy measures between latent feature batches.

A feature batch is an ``M x n`` array: ``M`` samples of an ``n``-dimensional
latent code. Self terms are normalized by ``1/M_d^2`` and cross terms by
``1/(M_S M_T)``, which reduces to the usual ``1/M^2`` form for equal batches.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

_SINC_SWITCH = 1e-10
_TAYLOR_SWITCH = 1e-3
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianBatch:
    """Per-sample diagonal Gaussians: ``means`` and ``vars`` are both ``M x n``."""

    means: np.ndarray
    vars: np.ndarray

    def __post_init__(self):
        m = as_batch(self.means)
        v = as_batch(self.vars)
        if m.shape != v.shape:
            raise ValueError(f"means {m.shape} and vars {v.shape} differ in shape")
        if np.any(v <= 0):
            raise ValueError("variances must be strictly positive")
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "vars", v)

    @property
    def dim(self) -> int:
        return self.means.shape[1]


@dataclass(frozen=True)
class DiscrepancyWeights:
    beta1: float = 1.0
    beta2: float = 1.0
    alpha1: float = 1.0
    alpha2: float = 1.0
    alpha3: float = 1.0
    alpha4: float = 1.0
    varda_alpha1: float = 1.0
    varda_alpha2: float = 1.0
    varda_alpha3: float = 1.0
    a: float = 1.0

    def __post_init__(self):
        for name, value in vars(self).items():
            if not math.isfinite(value):
                raise ValueError(f"weight {name} must be finite")
        if not self.a > 0:
            raise ValueError("the characteristic-function box half-width a must be positive")


def as_batch(Z) -> np.ndarray:
    """Validate and return an ``M x n`` float array (1-D input is one column)."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.ndim != 2 or Z.shape[0] < 1 or Z.shape[1] < 1:
        raise ValueError(f"a feature batch must be a non-empty M x n array, got shape {Z.shape}")
    if not np.all(np.isfinite(Z)):
        raise ValueError("feature batch has non-finite entries")
    return Z


def _pair(ZS, ZT):
    ZS, ZT = as_batch(ZS), as_batch(ZT)
    if ZS.shape[1] != ZT.shape[1]:
        raise ValueError(f"dimension mismatch: {ZS.shape[1]} vs {ZT.shape[1]}")
    return ZS, ZT


# -- characteristic-function distance ----------------------------------------

def _sinc_factor(d, a):
    """2 sin(a d) / d with the limit 2a near d = 0."""
    small = np.abs(d) < _SINC_SWITCH
    safe = np.where(small, 1.0, d)
    return np.where(small, 2.0 * a, 2.0 * np.sin(a * safe) / safe)


def _sinc_factor_deriv(d, a):
    """d/dd of 2 sin(a d) / d; Taylor series near 0 to avoid cancellation."""
    ad = a * d
    small = np.abs(ad) < _TAYLOR_SWITCH
    safe = np.where(small, 1.0, d)
    exact = 2.0 * (a * safe * np.cos(a * safe) - np.sin(a * safe)) / (safe * safe)
    series = 2.0 * a * (-(a * a) * d / 3.0 + a ** 4 * d ** 3 / 30.0)
    return np.where(small, series, exact)


def cf_kernel_matrix(U, V, a: float = 1.0) -> np.ndarray:
    """Matrix of ``cf_kernel(U[p], V[q], a)``."""
    U, V = _pair(U, V)
    diff = U[:, None, :] - V[None, :, :]
    return np.prod(_sinc_factor(diff, a), axis=2)


def cf_kernel(u, v, a: float = 1.0) -> float:
    """prod_k 2 sin(a (u_k - v_k)) / (u_k - v_k); the integral of cos(t.(u-v)) over [-a, a]^n."""
    if not a > 0:
        raise ValueError("a must be positive")
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    v = np.atleast_1d(np.asarray(v, dtype=np.float64))
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return float(np.prod(_sinc_factor(u - v, a)))


def cfd_point(ZS, ZT, a: float = 1.0, kernel=None) -> float:
    """Integral over [-a, a]^n of |ecf_S - ecf_T|^2 for the two empirical CFs.

    ``kernel`` overrides the pairwise kernel-matrix function (same signature
    as :func:`cf_kernel_matrix`); used for fault injection in self-checks.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    ZS, ZT = _pair(ZS, ZT)
    km = kernel or cf_kernel_matrix
    return float(km(ZS, ZS, a).mean() + km(ZT, ZT, a).mean() - 2.0 * km(ZS, ZT, a).mean())


def _cf_kernel_grad_u(U, V, a):
    """d k(U[p], V[q]) / d U[p] as a ``P x Q x n`` array."""
    diff = U[:, None, :] - V[None, :, :]
    g = _sinc_factor(diff, a)
    dg = _sinc_factor_deriv(diff, a)
    n = U.shape[1]
    out = np.empty_like(diff)
    for k in range(n):
        others = np.prod(np.delete(g, k, axis=2), axis=2) if n > 1 else 1.0
        out[:, :, k] = dg[:, :, k] * others
    return out


def cfd_point_grad(ZS, ZT, a: float = 1.0) -> np.ndarray:
    """Gradient of :func:`cfd_point` with respect to the source batch."""
    ZS, ZT = _pair(ZS, ZT)
    ms, mt = len(ZS), len(ZT)
    self_term = _cf_kernel_grad_u(ZS, ZS, a).sum(axis=1) * (2.0 / ms ** 2)
    cross_term = _cf_kernel_grad_u(ZS, ZT, a).sum(axis=1) * (2.0 / (ms * mt))
    return self_term - cross_term


def sliced_cfd(ZS, ZT, a: float = 1.0) -> float:
    """Average over coordinates of the one-dimensional CF distance."""
    ZS, ZT = _pair(ZS, ZT)
    n = ZS.shape[1]
    return float(sum(cfd_point(ZS[:, [i]], ZT[:, [i]], a) for i in range(n)) / n)


def sliced_cfd_grad(ZS, ZT, a: float = 1.0) -> np.ndarray:
    ZS, ZT = _pair(ZS, ZT)
    n = ZS.shape[1]
    return np.hstack([cfd_point_grad(ZS[:, [i]], ZT[:, [i]], a) for i in range(n)]) / n


def mean_loss(ZS, ZT) -> float:
    """Squared distance between the source and target batch means."""
    ZS, ZT = _pair(ZS, ZT)
    d = ZS.mean(axis=0) - ZT.mean(axis=0)
    return float(d @ d)


def mean_loss_grad(ZS, ZT) -> np.ndarray:
    ZS, ZT = _pair(ZS, ZT)
    d = ZS.mean(axis=0) - ZT.mean(axis=0)
    return np.tile(2.0 * d / len(ZS), (len(ZS), 1))


def cfd_loss(ZS, ZT, w: DiscrepancyWeights = DiscrepancyWeights()) -> float:
    """beta1 * sliced CF distance + beta2 * mean loss."""
    if w.beta1 < 0 or w.beta2 < 0:
        raise ValueError("beta1 and beta2 must be non-negative")
    return w.beta1 * sliced_cfd(ZS, ZT, w.a) + w.beta2 * mean_loss(ZS, ZT)


# -- MMD / CORAL -------------------------------------------------------------

def median_bandwidth(ZS, ZT) -> float:
    """Median pairwise distance of the pooled samples (1.0 if degenerate)."""
    ZS, ZT = _pair(ZS, ZT)
    pooled = np.vstack([ZS, ZT])
    if len(pooled) < 2:
        return 1.0
    med = float(np.median(pdist(pooled)))
    return med if med > 0 else 1.0


def _rbf(U, V, sigma):
    d2 = ((U[:, None, :] - V[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-d2 / (2.0 * sigma * sigma))


def mmd_gaussian(ZS, ZT, sigma: float | None = None) -> float:
    """Biased (V-statistic) squared MMD with a Gaussian kernel.

    ``sigma`` defaults to the median pairwise distance of the pooled batches.
    """
    ZS, ZT = _pair(ZS, ZT)
    if sigma is None:
        sigma = median_bandwidth(ZS, ZT)
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    value = _rbf(ZS, ZS, sigma).mean() + _rbf(ZT, ZT, sigma).mean() - 2.0 * _rbf(ZS, ZT, sigma).mean()
    return float(max(value, 0.0))


def mmd_gaussian_grad(ZS, ZT, sigma: float) -> np.ndarray:
    """Gradient with respect to the source batch at fixed ``sigma``."""
    ZS, ZT = _pair(ZS, ZT)
    ms, mt = len(ZS), len(ZT)

    def pull(V):
        diff = ZS[:, None, :] - V[None, :, :]
        k = _rbf(ZS, V, sigma)
        return -(k[:, :, None] * diff).sum(axis=1) / (sigma * sigma)

    return pull(ZS) * (2.0 / ms ** 2) - pull(ZT) * (2.0 / (ms * mt))


def coral_distance(ZS, ZT) -> float:
    """||C_S - C_T||_F^2 / (4 n^2) with unbiased sample covariances."""
    ZS, ZT = _pair(ZS, ZT)
    if len(ZS) < 2 or len(ZT) < 2:
        raise ValueError("CORAL needs at least two samples per batch")
    n = ZS.shape[1]
    cs = np.atleast_2d(np.cov(ZS, rowvar=False, ddof=1))
    ct = np.atleast_2d(np.cov(ZT, rowvar=False, ddof=1))
    return float(np.sum((cs - ct) ** 2) / (4.0 * n * n))


# -- Gaussian posteriors -----------------------------------------------------

def _gaussian(q) -> GaussianBatch:
    if isinstance(q, GaussianBatch):
        return q
    means, variances = q
    return GaussianBatch(means, variances)


def kl_diag_to_std(q) -> float:
    """Mean over samples of KL(N(u, diag(var)) || N(0, I))."""
    q = _gaussian(q)
    u, lam = q.means, q.vars
    return float(np.mean(0.5 * np.sum(u * u + lam - 1.0 - np.log(lam), axis=1)))


def kl_diag_to_std_grad(q) -> tuple[np.ndarray, np.ndarray]:
    """Gradients with respect to (means, vars)."""
    q = _gaussian(q)
    m = len(q.means)
    return q.means / m, 0.5 * (1.0 - 1.0 / q.vars) / m


def _log_overlap_matrix(uS, lS, uT, lT):
    s = lS[:, None, :] + lT[None, :, :]
    d = uS[:, None, :] - uT[None, :, :]
    n = uS.shape[1]
    return -0.5 * np.sum(d * d / s, axis=2) - 0.5 * n * _LOG_2PI - 0.5 * np.sum(np.log(s), axis=2)


def varda_kernel(uS, lS, uT, lT) -> float:
    """Overlap integral of N(uS, diag(lS)) and N(uT, diag(lT)), in closed form."""
    uS, lS, uT, lT = (np.atleast_1d(np.asarray(x, dtype=np.float64)) for x in (uS, lS, uT, lT))
    if not (uS.shape == lS.shape == uT.shape == lT.shape):
        raise ValueError("means and variances must share one dimension")
    if np.any(lS <= 0) or np.any(lT <= 0):
        raise ValueError("variances must be strictly positive")
    return float(np.exp(_log_overlap_matrix(uS[None], lS[None], uT[None], lT[None]))[0, 0])


def varda_kernel_matrix(QS, QT) -> np.ndarray:
    QS, QT = _gaussian(QS), _gaussian(QT)
    if QS.dim != QT.dim:
        raise ValueError(f"dimension mismatch: {QS.dim} vs {QT.dim}")
    return np.exp(_log_overlap_matrix(QS.means, QS.vars, QT.means, QT.vars))


def varda_distance(QS, QT) -> float:
    """Squared L2 distance between the two Gaussian-mixture posterior averages."""
    QS, QT = _gaussian(QS), _gaussian(QT)
    value = (varda_kernel_matrix(QS, QS).mean() + varda_kernel_matrix(QT, QT).mean()
             - 2.0 * varda_kernel_matrix(QS, QT).mean())
    return float(max(value, 0.0))


def varda_marginal_distance(QS, QT) -> float:
    """Sum over coordinates of the one-dimensional mixture distances."""
    QS, QT = _gaussian(QS), _gaussian(QT)
    if QS.dim != QT.dim:
        raise ValueError(f"dimension mismatch: {QS.dim} vs {QT.dim}")
    return float(sum(
        varda_distance(GaussianBatch(QS.means[:, [i]], QS.vars[:, [i]]),
                       GaussianBatch(QT.means[:, [i]], QT.vars[:, [i]]))
        for i in range(QS.dim)
    ))


# -- totals ------------------------------------------------------------------

_SCHEMES = {
    "cfdnet": ("seg", "prior", "recon", "explicit"),
    "varda": ("lb_source", "lb_target", "discrepancy"),
}


def compose_total(components: dict, weights: DiscrepancyWeights = DiscrepancyWeights(),
                  scheme: str = "cfdnet") -> float:
    """Weighted combination of externally computed loss terms.

    ``cfdnet`` keys: seg, prior, recon, explicit. ``varda`` keys: lb_source,
    lb_target (the two variational lower bounds, entered with a minus sign)
    and discrepancy. Missing keys count as 0.
    """
    if scheme not in _SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    keys = _SCHEMES[scheme]
    unknown = set(components) - set(keys)
    if unknown:
        raise KeyError(f"unknown components for {scheme}: {sorted(unknown)}")
    c = [float(components.get(k, 0.0)) for k in keys]
    if not all(math.isfinite(x) for x in c):
        raise ValueError("components must be finite")
    w = weights
    if scheme == "cfdnet":
        return w.alpha1 * c[0] + w.alpha2 * c[1] + w.alpha3 * c[2] + w.alpha4 * c[3]
    return -w.varda_alpha1 * c[0] - w.varda_alpha2 * c[1] + w.varda_alpha3 * c[2]


# -- CSV ---------------------------------------------------------------------

def read_batch_csv(path) -> np.ndarray:
    """One sample per row. A leading non-numeric row is taken as a header."""
    rows = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                if i == 0 and not rows:
                    continue
                raise ValueError(f"{path}: non-numeric value in row {i + 1}") from None
    if not rows:
        raise ValueError(f"{path}: no samples")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError(f"{path}: ragged rows")
    return as_batch(np.array(rows))


def write_batch_csv(path, Z) -> None:
    Z = as_batch(Z)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in Z:
            writer.writerow([repr(float(x)) for x in row])


def read_gaussian_csv(means_path, vars_path) -> GaussianBatch:
    return GaussianBatch(read_batch_csv(means_path), read_batch_csv(vars_path))
