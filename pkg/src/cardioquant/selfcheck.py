"""Embedded oracle suite: the library checked against brute force.

Each family compares a fast implementation with an independent slow one
(exhaustive enumeration, adaptive quadrature, O(n^2) scans, central
finite differences) on seeded random inputs.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import softmax

from . import discrepancy as disc
from . import segmetrics as sm
from .distfield import edt, gradcheck, losses
from .scargraph import from_arrays, min_cut_solve

FAULTS = ("cf-kernel",)


@dataclass(frozen=True)
class CheckResult:
    family: str
    passed: bool
    cases: int
    max_error: float
    seconds: float
    notes: dict = field(default_factory=dict)


# -- min-cut -----------------------------------------------------------------

def _enumerate(tl, edges, nl, lam):
    n = len(tl)
    bits = ((np.arange(2**n)[:, None] >> np.arange(n)) & 1).astype(float)
    e = bits @ tl[:, 0] + (1 - bits) @ tl[:, 1]
    if len(edges):
        e = e + lam * (bits[:, edges[:, 0]] != bits[:, edges[:, 1]]) @ nl
    return e.min()


def check_mincut(rng, trials=200, max_nodes=12):
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(trials):
        n = int(rng.integers(1, max_nodes + 1))
        pairs = np.array([p for p in itertools.combinations(range(n), 2) if rng.random() < 0.35],
                         dtype=np.int64).reshape(-1, 2)
        tl = rng.uniform(0, 5, (n, 2))
        nl = rng.uniform(0, 5, len(pairs))
        lam = float(rng.uniform(0, 2))
        got = min_cut_solve(from_arrays(tl, pairs, nl, lam)).energy
        best = _enumerate(tl, pairs, nl, lam)
        worst = max(worst, abs(got - best) / max(1.0, abs(best)))
    secs = time.perf_counter() - t0
    return worst <= 1e-12 and secs < 5.0, trials, worst, {"solver_seconds": secs}


# -- characteristic-function distance ----------------------------------------

def _ecf_quad(zs, zt, a):
    def f(t):
        re = np.cos(t * zs).mean() - np.cos(t * zt).mean()
        im = np.sin(t * zs).mean() - np.sin(t * zt).mean()
        return re * re + im * im
    return integrate.quad(f, -a, a, epsabs=1e-12, epsrel=1e-12, limit=500)[0]


def check_cfd(rng, trials=50, fault=None):
    kernel = None
    if fault == "cf-kernel":
        def kernel(U, V, a):
            return 2.0 * disc.cf_kernel_matrix(U, V, a)
    worst = 0.0
    for _ in range(trials):
        zs = rng.normal(size=int(rng.integers(1, 21))) * rng.uniform(0.2, 3)
        zt = rng.normal(size=int(rng.integers(1, 21))) + rng.uniform(-1, 1)
        a = float(rng.uniform(0.2, 3))
        worst = max(worst, abs(disc.cfd_point(zs, zt, a, kernel=kernel) - _ecf_quad(zs, zt, a)))
    worked = abs(disc.cfd_point([[0.0]], [[math.pi / 2]], 1.0, kernel=kernel) - (4 - 8 / math.pi))
    return worst <= 1e-6 and worked <= 1e-9, trials + 1, max(worst, worked), {"worked_error": worked}


# -- VarDA closed forms ------------------------------------------------------

def _pdf(z, m, v):
    return np.exp(-0.5 * (z - m) ** 2 / v) / np.sqrt(2 * np.pi * v)


def _mixture_quad(ms, vs, mt, vt):
    centers = np.concatenate([ms, mt])
    sd = np.sqrt(np.concatenate([vs, vt]))
    lo, hi = (centers - 12 * sd).min(), (centers + 12 * sd).max()
    return integrate.quad(lambda z: (_pdf(z, ms, vs).mean() - _pdf(z, mt, vt).mean()) ** 2, lo, hi,
                          epsabs=1e-13, epsrel=1e-12, limit=1000, points=sorted(centers))[0]


def check_varda(rng, trials=25):
    worst = 0.0
    for _ in range(trials):
        ms, mt = rng.normal(size=2)
        vs, vt = rng.uniform(0.1, 2, size=2)
        lo = min(ms - 12 * math.sqrt(vs), mt - 12 * math.sqrt(vt))
        hi = max(ms + 12 * math.sqrt(vs), mt + 12 * math.sqrt(vt))
        ref = integrate.quad(lambda z: _pdf(z, ms, vs) * _pdf(z, mt, vt), lo, hi, epsabs=1e-13, epsrel=1e-12)[0]
        worst = max(worst, abs(disc.varda_kernel([ms], [vs], [mt], [vt]) - ref))
        m1, m2 = (int(k) for k in rng.integers(1, 6, size=2))
        QS = disc.GaussianBatch(rng.normal(size=(m1, 1)), rng.uniform(0.1, 2, (m1, 1)))
        QT = disc.GaussianBatch(rng.normal(size=(m2, 1)) + 0.5, rng.uniform(0.1, 2, (m2, 1)))
        ref = _mixture_quad(QS.means.ravel(), QS.vars.ravel(), QT.means.ravel(), QT.vars.ravel())
        worst = max(worst, abs(disc.varda_distance(QS, QT) - ref))
    example = disc.varda_distance(disc.GaussianBatch([[0.0]], [[0.5]]), disc.GaussianBatch([[1.0]], [[0.5]]))
    ex_err = abs(example - 0.313943)
    return worst <= 1e-6 and ex_err <= 1e-6, 2 * trials + 1, max(worst, ex_err), {"example": example}


# -- distance transform ------------------------------------------------------

def _surface_brute(fg):
    pad = np.pad(fg, 1, constant_values=False)
    touches_bg = np.zeros_like(fg)
    for axis in range(3):
        for step in (-1, 1):
            touches_bg |= ~np.roll(pad, step, axis=axis)[1:-1, 1:-1, 1:-1]
    return fg & touches_bg


def check_dtm(rng, trials=30, max_side=16):
    worst = lip = cross = 0.0
    for _ in range(trials):
        shape = tuple(int(s) for s in rng.integers(2, max_side + 1, size=3))
        fg = rng.random(shape) < rng.uniform(0.2, 0.8)
        if fg.all() or not fg.any():
            fg.flat[0] = not fg.flat[0]
        sp = rng.uniform(0.5, 2.0, size=3)
        phi = edt.signed_dtm(fg.astype(np.uint8), 1.0, tuple(sp)).values.ravel()
        pts = np.indices(shape).reshape(3, -1).T * sp
        surf = pts[_surface_brute(fg).ravel()]
        inside = fg.ravel()
        for s in range(0, len(pts), 1024):
            chunk = pts[s:s + 1024]
            d = np.sqrt(((chunk[:, None] - surf[None]) ** 2).sum(-1)).min(axis=1)
            ref = np.where(inside[s:s + 1024], -d, d)
            worst = max(worst, float(np.abs(phi[s:s + 1024] - ref).max()))
            u, v = phi[s:s + 1024, None], phi[None]
            dist = np.sqrt(((chunk[:, None] - pts[None]) ** 2).sum(-1))
            same = (u * v) >= 0
            lip = max(lip, float((np.abs(u - v) - dist)[same].max()),
                      float((np.abs(np.abs(u) - np.abs(v)) - dist).max()))
            cross = max(cross, float((np.abs(u - v) - dist).max()))
    # Opposite-sign pairs are excluded: an interior voxel diagonal to a
    # background voxel sits at -1 and +1 while only sqrt(2) apart.
    notes = {"lipschitz_excess": lip, "cross_interface_excess": cross}
    return worst < 1e-6 and lip <= 1e-9, trials, worst, notes


# -- gradients ---------------------------------------------------------------

def _softmax_chain(grad_p, p):
    return p * (grad_p - np.sum(grad_p * p, axis=0, keepdims=True))


def check_gradients(rng, trials=3):
    errs = {}

    def record(name, value):
        errs[name] = max(errs.get(name, 0.0), value)

    gc = gradcheck.grad_check
    for _ in range(trials):
        shape = (3, 4)
        pred = rng.uniform(0.1, 0.9, shape)
        phi = rng.normal(size=shape)
        target = rng.uniform(0.1, 0.9, shape)
        pair, tpair = rng.uniform(0.1, 0.9, (2, *shape)), rng.uniform(0.1, 0.9, (2, *shape))
        mask = rng.uniform(0.0, 1.0, shape)
        record("se_loss_la", gc(lambda v: losses.se_loss_la(v, phi), pred, losses.se_loss_la_grad(pred, phi)))
        record("se_loss_scar", gc(lambda v: losses.se_loss_scar(v, tpair), pair, losses.se_loss_scar_grad(pair, tpair)))
        record("sa_loss", gc(lambda v: losses.sa_loss(v, tpair, mask), pair, losses.sa_loss_grad(pair, tpair, mask)))
        record("bce", gc(lambda v: losses.bce_loss(v, target), pred, losses.bce_loss_grad(pred, target)))
        record("soft_dice", gc(lambda v: losses.soft_dice_loss(v, target), pred, losses.soft_dice_loss_grad(pred, target)))
        z = rng.normal(size=(3, *shape))
        y = rng.integers(0, 3, size=shape)
        p = softmax(z, axis=0)
        record("cross_entropy", gc(lambda v: losses.cross_entropy_loss(softmax(v, axis=0), y), z,
                                   _softmax_chain(losses.cross_entropy_loss_grad(p, y), p)))
        a = rng.normal(size=shape)
        b = a + rng.choice([-1, 1], size=shape) * rng.uniform(0.01, 1, size=shape)
        record("l1", gc(lambda v: losses.l1_mean_loss(v, b), a, losses.l1_mean_loss_grad(a, b)))
        ZS, ZT = rng.normal(size=(4, 3)), rng.normal(size=(5, 3)) + 0.3
        record("cfd_point", gc(lambda v: disc.cfd_point(v, ZT, 1.3), ZS, disc.cfd_point_grad(ZS, ZT, 1.3)))
        record("mean_loss", gc(lambda v: disc.mean_loss(v, ZT), ZS, disc.mean_loss_grad(ZS, ZT)))
        record("mmd", gc(lambda v: disc.mmd_gaussian(v, ZT, 1.1), ZS, disc.mmd_gaussian_grad(ZS, ZT, 1.1)))
        u, lam = rng.normal(size=(3, 2)), rng.uniform(0.3, 2, (3, 2))
        gu, gl = disc.kl_diag_to_std_grad((u, lam))
        record("kl_means", gc(lambda v: disc.kl_diag_to_std((v, lam)), u, gu))
        record("kl_vars", gc(lambda v: disc.kl_diag_to_std((u, v)), lam, gl))
    worst = max(errs.values())
    return worst < 1e-5, trials * len(errs), worst, {k: errs[k] for k in sorted(errs)}


# -- segmentation metrics ----------------------------------------------------

def _directed_brute(X, Y):
    return np.sqrt(((X[:, None] - Y[None]) ** 2).sum(-1)).min(axis=1)


def check_metrics(rng, trials=100):
    worst = 0.0
    ordered = True
    for _ in range(trials):
        shape = tuple(int(s) for s in rng.integers(2, 9, size=3))
        a = rng.integers(0, 3, shape)
        b = rng.integers(0, 3, shape)
        a.flat[0], b.flat[-1] = 1, 1
        inter = sum(1 for x, y in zip(a.ravel(), b.ravel()) if x and y)
        ref = 2 * inter / (np.count_nonzero(a) + np.count_nonzero(b))
        worst = max(worst, abs(sm.dice(a, b) - ref))
        num = sum(2 * sum(1 for x, y in zip(a.ravel(), b.ravel()) if x == k and y == k) for k in (1, 2))
        den = sum(int(np.sum(a == k)) + int(np.sum(b == k)) for k in (1, 2))
        worst = max(worst, abs(sm.gdice(a, b, [1, 2]) - num / den))
        X = rng.normal(size=(int(rng.integers(1, 40)), 3)) * rng.uniform(0.5, 5)
        Y = rng.normal(size=(int(rng.integers(1, 40)), 3)) + rng.normal(size=3)
        dxy, dyx = _directed_brute(X, Y), _directed_brute(Y, X)
        hd, asd = sm.hausdorff(X, Y), sm.asd(X, Y)
        worst = max(worst, abs(hd - max(dxy.max(), dyx.max())), abs(asd - 0.5 * (dxy.mean() + dyx.mean())))
        ordered &= asd <= hd
    return worst <= 1e-9 and ordered, 4 * trials, worst, {"asd_le_hd": bool(ordered)}


FAMILIES = {
    "mincut_enumeration": check_mincut,
    "cfd_quadrature": check_cfd,
    "varda_quadrature": check_varda,
    "dtm_brute_force": check_dtm,
    "gradient_fd": check_gradients,
    "metric_oracles": check_metrics,
}


def run_selfcheck(seed: int = 0, fault: str | None = None) -> list[CheckResult]:
    """Run every oracle family; a family that raises counts as failed.

    ``fault="cf-kernel"`` doubles the CF kernel inside the CFD family to
    confirm that the detector fires.
    """
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}")
    results = []
    for k, (name, fn) in enumerate(FAMILIES.items()):
        rng = np.random.default_rng([seed, k])
        t0 = time.perf_counter()
        try:
            passed, cases, err, notes = fn(rng, fault=fault) if name == "cfd_quadrature" else fn(rng)
        except Exception as exc:  # noqa: BLE001 - report, don't crash the suite
            passed, cases, err, notes = False, 0, math.inf, {"error": f"{type(exc).__name__}: {exc}"}
        results.append(CheckResult(name, bool(passed), cases, float(err), time.perf_counter() - t0, notes))
    return results
