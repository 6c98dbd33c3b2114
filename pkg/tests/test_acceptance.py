"""Acceptance suite: one pass/fail line per criterion, at the stated tolerances.

Run with ``pytest tests/test_acceptance.py -s``; the lines are also
repeated in the terminal summary.
"""
import itertools
import json
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy.special import softmax

from cardioquant import discrepancy as disc
from cardioquant import segmetrics as sm
from cardioquant.discrepancy import GaussianBatch, write_batch_csv
from cardioquant.distfield import grad_check, losses, signed_dtm
from cardioquant.scargraph import energy, from_arrays, make_cap_phantom, min_cut_solve, quantify_scar
from cardioquant.volgrid import LABEL, Volume, write_volume

from oracles import (
    asd_oracle,
    dice_oracle,
    ecf_quadrature,
    enumerate_min_energy,
    gaussian_overlap_quadrature,
    hausdorff_oracle,
    mixture_l2_quadrature,
    signed_dtm_oracle,
)


def report(log, number, passed, detail):
    log.append((number, bool(passed), detail))
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
    return passed


def test_criterion_1_min_cut_optimality(acceptance_log):
    rng = np.random.default_rng(1001)
    worst, mismatched, inexact, solve_time = 0.0, 0, 0, 0.0
    for _ in range(200):
        n = int(rng.integers(1, 13))
        pairs = [p for p in itertools.combinations(range(n), 2) if rng.random() < 0.35]
        tl, nl, lam = rng.uniform(0, 5, (n, 2)), rng.uniform(0, 5, len(pairs)), float(rng.uniform(0, 2))
        g = from_arrays(tl, pairs, nl, lam)
        t0 = time.perf_counter()
        res = min_cut_solve(g)
        solve_time += time.perf_counter() - t0
        best, best_l = enumerate_min_energy(tl, pairs, nl, lam)
        worst = max(worst, abs(res.energy - best))
        mismatched += not np.array_equal(res.labels, best_l)
        inexact += res.energy != energy(g, best_l)
    ok = worst <= 1e-12 and mismatched == 0 and inexact == 0 and solve_time < 5.0
    assert report(acceptance_log, 1, ok,
                  f"200 graphs, argmin mismatches={mismatched}, bit-inexact energies={inexact}, "
                  f"oracle summation-order gap={worst:.1e}, solver {solve_time:.2f}s")


def test_criterion_2_cfd_exactness(acceptance_log):
    rng = np.random.default_rng(1002)
    worst = 0.0
    for _ in range(50):
        zs = rng.normal(size=int(rng.integers(1, 21))) * rng.uniform(0.2, 3)
        zt = rng.normal(size=int(rng.integers(1, 21))) + rng.uniform(-1, 1)
        a = float(rng.uniform(0.2, 3))
        worst = max(worst, abs(disc.cfd_point(zs, zt, a) - ecf_quadrature(zs, zt, a)))
    worked = abs(disc.cfd_point([[0.0]], [[math.pi / 2]], 1.0) - (4 - 8 / math.pi))
    ok = worst <= 1e-6 and worked <= 1e-9
    assert report(acceptance_log, 2, ok, f"max quad err={worst:.2e} (tol 1e-6), worked 4-8/pi err={worked:.1e} (tol 1e-9)")


def test_criterion_3_varda_exactness(acceptance_log):
    rng = np.random.default_rng(1003)
    worst = 0.0
    for _ in range(30):
        ms, mt = rng.normal(size=2)
        vs, vt = rng.uniform(0.1, 2, size=2)
        worst = max(worst, abs(disc.varda_kernel([ms], [vs], [mt], [vt]) - gaussian_overlap_quadrature(ms, vs, mt, vt)))
        m1, m2 = (int(k) for k in rng.integers(1, 6, size=2))
        QS = GaussianBatch(rng.normal(size=(m1, 1)), rng.uniform(0.1, 2, (m1, 1)))
        QT = GaussianBatch(rng.normal(size=(m2, 1)), rng.uniform(0.1, 2, (m2, 1)))
        worst = max(worst, abs(disc.varda_distance(QS, QT) - mixture_l2_quadrature(QS.means, QS.vars, QT.means, QT.vars)))
    ex = disc.varda_distance(GaussianBatch([[0.0]], [[0.5]]), GaussianBatch([[1.0]], [[0.5]]))
    ok = worst <= 1e-6 and abs(ex - 0.313943) <= 1e-6
    assert report(acceptance_log, 3, ok, f"max quad err={worst:.2e} (tol 1e-6), example={ex:.6f}")


def _dtm_cases():
    rng = np.random.default_rng(1004)
    for _ in range(30):
        shape = tuple(int(s) for s in rng.integers(2, 17, size=3))
        fg = rng.random(shape) < rng.uniform(0.2, 0.8)
        if fg.all() or not fg.any():
            fg.flat[0] = not fg.flat[0]
        sp = tuple(rng.uniform(0.5, 2.0, size=3))
        yield fg, sp


def _lipschitz_excess(phi, shape, sp):
    pts = np.indices(shape).reshape(3, -1).T * np.asarray(sp)
    phi = phi.ravel()
    same_side = unsigned = signed = 0.0
    for s in range(0, len(pts), 1024):
        dist = np.sqrt(((pts[s:s + 1024, None] - pts[None]) ** 2).sum(-1))
        u, v = phi[s:s + 1024, None], phi[None]
        gap = np.abs(u - v) - dist
        signed = max(signed, float(gap.max()))
        same_side = max(same_side, float(gap[u * v >= 0].max()))
        unsigned = max(unsigned, float((np.abs(np.abs(u) - np.abs(v)) - dist).max()))
    return signed, same_side, unsigned


@pytest.fixture(scope="module")
def dtm_stats():
    err = signed = same = unsigned = 0.0
    for fg, sp in _dtm_cases():
        phi = signed_dtm(Volume(fg.astype(np.uint8), sp, LABEL)).values
        err = max(err, float(np.abs(phi - signed_dtm_oracle(fg, sp)).max()))
        s, a, u = _lipschitz_excess(phi, fg.shape, sp)
        signed, same, unsigned = max(signed, s), max(same, a), max(unsigned, u)
    return err, signed, same, unsigned


def test_criterion_4_dtm_exactness(dtm_stats, acceptance_log):
    err, signed, same, unsigned = dtm_stats
    literal = err < 1e-6 and signed <= 1e-9
    report(acceptance_log, 4, literal,
           f"30 masks, max err={err:.1e} (tol 1e-6); Lipschitz excess: all pairs {signed:.3f}, "
           f"same-sign pairs {same:.1e}, unsigned {unsigned:.1e}")
    # The achievable part: exact distances, 1-Lipschitz within each side and for |phi|.
    assert err < 1e-6 and same <= 1e-9 and unsigned <= 1e-9


@pytest.mark.xfail(strict=True, reason="signed field jumps by up to 2 voxels across the interface "
                                       "(interior -1 vs diagonal background +1); see decisions ledger")
def test_criterion_4_lipschitz_on_all_voxel_pairs(dtm_stats):
    assert dtm_stats[1] <= 1e-9


def _softmax_chain(grad_p, p):
    return p * (grad_p - np.sum(grad_p * p, axis=0, keepdims=True))


def test_criterion_5_gradient_suite(acceptance_log):
    rng = np.random.default_rng(1005)
    errs = {}
    for _ in range(3):
        shape = (2, 3, 3)
        pred, target = rng.uniform(0.1, 0.9, shape), rng.uniform(0.1, 0.9, shape)
        phi, mask = rng.normal(size=shape), rng.uniform(0, 1, shape)
        pair, tpair = rng.uniform(0.1, 0.9, (2, *shape)), rng.uniform(0.1, 0.9, (2, *shape))
        ybin = (rng.random(shape) < 0.5).astype(float)
        z, ylab = rng.normal(size=(3, *shape)), rng.integers(0, 3, shape)
        p = softmax(z, axis=0)
        a = rng.normal(size=shape)
        b = a + rng.choice([-1, 1], size=shape) * rng.uniform(0.01, 1, size=shape)
        ZS, ZT = rng.normal(size=(4, 3)), rng.normal(size=(5, 3)) + 0.3
        u, lam = rng.normal(size=(3, 2)), rng.uniform(0.3, 2, (3, 2))
        gu, gl = disc.kl_diag_to_std_grad((u, lam))
        cases = {
            "se_loss_la": (lambda v: losses.se_loss_la(v, phi), pred, losses.se_loss_la_grad(pred, phi)),
            "se_loss_scar": (lambda v: losses.se_loss_scar(v, tpair), pair, losses.se_loss_scar_grad(pair, tpair)),
            "sa_loss": (lambda v: losses.sa_loss(v, tpair, mask), pair, losses.sa_loss_grad(pair, tpair, mask)),
            "bce": (lambda v: losses.bce_loss(v, ybin), pred, losses.bce_loss_grad(pred, ybin)),
            "soft_dice": (lambda v: losses.soft_dice_loss(v, target), pred, losses.soft_dice_loss_grad(pred, target)),
            "cross_entropy": (lambda v: losses.cross_entropy_loss(softmax(v, axis=0), ylab), z,
                              _softmax_chain(losses.cross_entropy_loss_grad(p, ylab), p)),
            "l1": (lambda v: losses.l1_mean_loss(v, b), a, losses.l1_mean_loss_grad(a, b)),
            "cfd_point": (lambda v: disc.cfd_point(v, ZT), ZS, disc.cfd_point_grad(ZS, ZT)),
            "mean_loss": (lambda v: disc.mean_loss(v, ZT), ZS, disc.mean_loss_grad(ZS, ZT)),
            "mmd": (lambda v: disc.mmd_gaussian(v, ZT, 1.2), ZS, disc.mmd_gaussian_grad(ZS, ZT, 1.2)),
            "kl_means": (lambda v: disc.kl_diag_to_std((v, lam)), u, gu),
            "kl_vars": (lambda v: disc.kl_diag_to_std((u, v)), lam, gl),
        }
        for name, (f, x, g) in cases.items():
            errs[name] = max(errs.get(name, 0.0), grad_check(f, x, g, h=1e-4))
    worst_name = max(errs, key=errs.get)
    ok = errs[worst_name] < 1e-5
    assert report(acceptance_log, 5, ok, f"{len(errs)} gradients, worst {worst_name}={errs[worst_name]:.1e} (tol 1e-5)")


def test_criterion_6_metric_oracles(acceptance_log):
    rng = np.random.default_rng(1006)
    dice_err = dist_err = 0.0
    ordered = True
    for _ in range(100):
        shape = tuple(int(s) for s in rng.integers(2, 7, size=3))
        a, b = rng.integers(0, 3, shape), rng.integers(0, 3, shape)
        a.flat[0] = b.flat[-1] = 1
        dice_err = max(dice_err, abs(sm.dice(a, b) - dice_oracle(a, b)))
        num = sum(2 * int(np.sum((a == k) & (b == k))) for k in (1, 2))
        den = sum(int(np.sum(a == k) + np.sum(b == k)) for k in (1, 2))
        dice_err = max(dice_err, abs(sm.gdice(a, b, [1, 2]) - num / den))
        X = rng.normal(size=(int(rng.integers(1, 30)), 3)) * rng.uniform(0.5, 4)
        Y = rng.normal(size=(int(rng.integers(1, 30)), 3)) + rng.normal(size=3)
        hd, asd = sm.hausdorff(X, Y), sm.asd(X, Y)
        dist_err = max(dist_err, abs(hd - hausdorff_oracle(X, Y)), abs(asd - asd_oracle(X, Y)))
        ordered &= asd <= hd
    ok = dice_err == 0.0 and dist_err <= 1e-9 and ordered
    assert report(acceptance_log, 6, ok,
                  f"100 cases, dice/gdice err={dice_err:.1e}, HD/ASD err={dist_err:.1e} (tol 1e-9), asd<=hd={ordered}")


def test_criterion_7_phantom_quantification(acceptance_log):
    t0 = time.perf_counter()
    ph = make_cap_phantom()
    runs = {lam: quantify_scar(ph.image, ph.la_mask, "two_sd", lam) for lam in (0.0, 0.4, 5.0)}
    elapsed = time.perf_counter() - t0
    d = sm.dice(runs[0.4].labels, ph.truth(runs[0.4].mesh))
    lengths = [runs[lam].boundary_length for lam in (0.0, 0.4, 5.0)]
    monotone = lengths[0] >= lengths[1] >= lengths[2]
    ok = d >= 0.95 and monotone and elapsed < 10.0
    assert report(acceptance_log, 7, ok,
                  f"Dice={d:.4f} (>=0.95), boundary {', '.join(f'{x:.3f}' for x in lengths)}, {elapsed:.2f}s")


def _cli(args, threads):
    env = dict(os.environ)
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        env[var] = str(threads)
    out = subprocess.run([sys.executable, "-m", "cardioquant", *map(str, args)],
                         capture_output=True, text=True, env=env, check=True).stdout
    rep = json.loads(out)
    rep.pop("wall_time_ms")
    return json.dumps(rep, sort_keys=True)


def test_criterion_8_determinism(tmp_path, acceptance_log):
    rng = np.random.default_rng(1008)
    a = (rng.random((12, 10, 8)) < 0.4).astype(np.uint8)
    b = (rng.random((12, 10, 8)) < 0.4).astype(np.uint8)
    write_volume(tmp_path / "seg", Volume(a, (0.8, 1.0, 1.5), LABEL))
    write_volume(tmp_path / "gd", Volume(b, (0.8, 1.0, 1.5), LABEL))
    write_batch_csv(tmp_path / "zs.csv", rng.normal(size=(40, 16)))
    write_batch_csv(tmp_path / "zt.csv", rng.normal(size=(35, 16)))
    distinct = {}
    for name, args in {"metrics": ["metrics", tmp_path / "seg.json", tmp_path / "gd.json"],
                       "discrepancy": ["discrepancy", tmp_path / "zs.csv", tmp_path / "zt.csv", "--all"]}.items():
        distinct[name] = len({_cli(args, t) for t in (1, 1, 1, 4)})
    ok = all(v == 1 for v in distinct.values())
    assert report(acceptance_log, 8, ok, f"distinct reports over 3 runs + 4 threads: {distinct}")


def test_criterion_9_selfcheck(acceptance_log):
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "cardioquant", "selfcheck"], capture_output=True, text=True)
    elapsed = time.perf_counter() - t0
    results = json.loads(proc.stdout)["results"]
    families = [k for k, v in results.items() if isinstance(v, dict)]
    ok = proc.returncode == 0 and elapsed < 60.0 and len(families) >= 5
    assert report(acceptance_log, 9, ok, f"exit={proc.returncode}, {len(families)} families, {elapsed:.1f}s")
