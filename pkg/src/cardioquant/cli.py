"""Command-line front end.

Every subcommand prints one JSON report on stdout; diagnostics go to
stderr. Exit codes: 0 ok, 1 self-check failure, 2 unreadable or malformed
input, 3 shape mismatch, 4 empty input.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import discrepancy as disc
from . import segmetrics as sm
from .scargraph import DEFAULT_LAMBDA, make_cap_phantom, quantify_scar, read_probability_csv, write_labeling_csv
from .selfcheck import FAULTS, run_selfcheck
from .volgrid import VolumeFormatError, read_volume, write_obj, write_volume

EXIT_OK, EXIT_SELFCHECK, EXIT_FORMAT, EXIT_SHAPE, EXIT_EMPTY = 0, 1, 2, 3, 4
METRICS = ("cfd", "sliced-cfd", "mean", "mmd", "coral", "varda", "varda-marginal")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _num(x):
    """Round to 9 significant digits so reports are stable to compare."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return float(f"{x:.9g}") if math.isfinite(x) else None
    if isinstance(x, dict):
        return {str(k): _num(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_num(v) for v in x]
    return x


def _digest(path) -> str:
    h = hashlib.sha256()
    p = Path(path)
    files = [p]
    if p.suffix in (".json", ".raw", "") and p.with_suffix(".raw").exists():
        files = [p.with_suffix(".json"), p.with_suffix(".raw")]
    for f in files:
        h.update(f.read_bytes())
    return h.hexdigest()


def _report(command, inputs, params, results, t0):
    return {
        "command": command,
        "inputs": {k: _digest(v) for k, v in inputs.items()},
        "parameters": _num(params),
        "results": _num(results),
        "version": __version__,
        "wall_time_ms": round((time.perf_counter() - t0) * 1000.0, 3),
    }


def _load_volume(path):
    try:
        return read_volume(path)
    except FileNotFoundError as exc:
        raise CliError(EXIT_FORMAT, f"missing file: {exc.filename or path}") from None
    except (VolumeFormatError, ValueError, OSError) as exc:
        raise CliError(EXIT_FORMAT, f"{path}: {exc}") from None


def _load_batch(path):
    try:
        return disc.read_batch_csv(path)
    except FileNotFoundError:
        raise CliError(EXIT_FORMAT, f"missing file: {path}") from None
    except (ValueError, OSError) as exc:
        raise CliError(EXIT_FORMAT, str(exc)) from None


def _same_grid(a, b, what):
    if a.dims != b.dims:
        raise CliError(EXIT_SHAPE, f"{what}: dims {a.dims} vs {b.dims}")
    if not np.allclose(a.spacing, b.spacing, rtol=1e-6, atol=0):
        raise CliError(EXIT_SHAPE, f"{what}: spacing {a.spacing} vs {b.spacing}")


# -- metrics -----------------------------------------------------------------

def cmd_metrics(args):
    t0 = time.perf_counter()
    seg, gd = _load_volume(args.seg), _load_volume(args.gd)
    _same_grid(seg, gd, "seg/gd")
    s, g = seg.data, gd.data
    if not (np.any(s != 0) or np.any(g != 0)):
        raise CliError(EXIT_EMPTY, "both volumes are empty")
    labels = args.labels or sorted(int(v) for v in np.union1d(np.unique(s), np.unique(g)) if v != 0)
    per_label = {}
    for k in labels:
        sk, gk = s == k, g == k
        entry = {"dice": sm.dice(sk, gk) if (sk.any() or gk.any()) else None, "hd": None, "asd": None}
        if sk.any() and gk.any():
            X, Y = sm.boundary_points(sk, seg.spacing), sm.boundary_points(gk, gd.spacing)
            entry["hd"], entry["asd"] = sm.hausdorff(X, Y), sm.asd(X, Y)
        per_label[str(k)] = entry
    results = {"labels": per_label, "gdice": sm.gdice(s, g, labels) if labels else None}
    if set(np.unique(s)) <= {0, 1} and set(np.unique(g)) <= {0, 1}:
        results["accuracy"] = sm.accuracy(sm.ConfusionCounts.from_masks(s, g))
    return _report("metrics", {"seg": args.seg, "gd": args.gd}, {"labels": labels}, results, t0)


# -- quantify ----------------------------------------------------------------

def cmd_quantify(args):
    t0 = time.perf_counter()
    image, mask = _load_volume(args.image), _load_volume(args.la_mask)
    _same_grid(image, mask, "image/la_mask")
    if not np.any(mask.data != 0):
        raise CliError(EXIT_EMPTY, "LA mask is empty")
    provider = args.provider
    inputs = {"image": args.image, "la_mask": args.la_mask}
    if args.probs:
        inputs["probs"] = args.probs
        provider = "external"
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if args.probs:
            from .volgrid import extract_isosurface

            n = extract_isosurface(mask).n_vertices
            probs = read_probability_csv(args.probs, n)
        res = quantify_scar(image, mask, probs if args.probs else provider, args.lam)
    except FileNotFoundError:
        raise CliError(EXIT_FORMAT, f"missing file: {args.probs}") from None
    except ValueError as exc:
        raise CliError(EXIT_FORMAT, str(exc)) from None
    write_obj(out / "surface.obj", res.mesh)
    write_labeling_csv(out / "labels.csv", res.labels)
    results = {
        "scar_fraction": res.scar_fraction,
        "n_vertices": res.mesh.n_vertices,
        "n_scar": int(res.labels.sum()),
        "threshold": res.threshold,
        "energy": res.energy,
        "boundary_length": res.boundary_length,
        "mesh": str(out / "surface.obj"),
        "labeling": str(out / "labels.csv"),
    }
    return _report("quantify", inputs, {"provider": provider, "lambda": args.lam}, results, t0)


# -- discrepancy -------------------------------------------------------------

def _discrepancy_value(metric, ZS, ZT, args, QS, QT):
    if metric == "cfd":
        return disc.cfd_point(ZS, ZT, args.a)
    if metric == "sliced-cfd":
        return disc.sliced_cfd(ZS, ZT, args.a)
    if metric == "mean":
        return disc.mean_loss(ZS, ZT)
    if metric == "mmd":
        return disc.mmd_gaussian(ZS, ZT, args.sigma)
    if metric == "coral":
        return disc.coral_distance(ZS, ZT)
    if QS is None:
        raise CliError(EXIT_FORMAT, f"{metric} needs --zs-vars and --zt-vars")
    if metric == "varda":
        return disc.varda_distance(QS, QT)
    return disc.varda_marginal_distance(QS, QT)


def cmd_discrepancy(args):
    t0 = time.perf_counter()
    ZS, ZT = _load_batch(args.zs), _load_batch(args.zt)
    if ZS.shape[1] != ZT.shape[1]:
        raise CliError(EXIT_SHAPE, f"feature dims differ: {ZS.shape[1]} vs {ZT.shape[1]}")
    inputs = {"zs": args.zs, "zt": args.zt}
    QS = QT = None
    if args.zs_vars or args.zt_vars:
        if not (args.zs_vars and args.zt_vars):
            raise CliError(EXIT_FORMAT, "give both --zs-vars and --zt-vars")
        VS, VT = _load_batch(args.zs_vars), _load_batch(args.zt_vars)
        if VS.shape != ZS.shape or VT.shape != ZT.shape:
            raise CliError(EXIT_SHAPE, "variance files must match their mean files in shape")
        try:
            QS, QT = disc.GaussianBatch(ZS, VS), disc.GaussianBatch(ZT, VT)
        except ValueError as exc:
            raise CliError(EXIT_FORMAT, str(exc)) from None
        inputs.update(zs_vars=args.zs_vars, zt_vars=args.zt_vars)
    if args.all:
        metrics = [m for m in METRICS if QS is not None or not m.startswith("varda")]
    else:
        metrics = [args.metric]
    results = {}
    for m in metrics:
        try:
            results[m] = _discrepancy_value(m, ZS, ZT, args, QS, QT)
        except ValueError as exc:
            if args.all:
                results[m] = None
                print(f"{m}: {exc}", file=sys.stderr)
            else:
                raise CliError(EXIT_EMPTY if "at least" in str(exc) else EXIT_FORMAT, str(exc)) from None
    params = {"metrics": metrics, "a": args.a, "sigma": args.sigma}
    return _report("discrepancy", inputs, params, results, t0)


# -- selfcheck / phantom -----------------------------------------------------

def cmd_selfcheck(args):
    t0 = time.perf_counter()
    checks = run_selfcheck(seed=args.seed, fault=args.inject_fault)
    results = {
        c.family: {"passed": c.passed, "cases": c.cases, "max_error": c.max_error, "notes": c.notes}
        for c in checks
    }
    results["all_passed"] = all(c.passed for c in checks)
    params = {"seed": args.seed, "fault": args.inject_fault}
    return _report("selfcheck", {}, params, results, t0)


def cmd_phantom(args):
    t0 = time.perf_counter()
    ph = make_cap_phantom(radius=args.radius, cap_fraction=args.cap_fraction, noise=args.noise,
                          seed=args.seed, uniform=args.uniform)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_volume(out / "image", ph.image)
    write_volume(out / "la_mask", ph.la_mask)
    params = {"radius": args.radius, "cap_fraction": args.cap_fraction, "noise": args.noise,
              "seed": args.seed, "uniform": args.uniform}
    results = {"image": str(out / "image.json"), "la_mask": str(out / "la_mask.json"),
               "dims": list(ph.image.dims), "cap_z": ph.cap_z}
    return _report("phantom", {}, params, results, t0)


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="also write the report here (quantify/phantom: output directory)")
    common.add_argument("--json", action="store_true", help="JSON report (the only format; kept for scripts)")

    p = argparse.ArgumentParser(prog="cardioquant", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("metrics", parents=[common], help="Dice, GDice, HD, ASD between two label volumes")
    m.add_argument("seg")
    m.add_argument("gd")
    m.add_argument("--labels", type=int, nargs="+", help="labels to score (default: all non-zero)")
    m.set_defaults(func=cmd_metrics)

    q = sub.add_parser("quantify", parents=[common], help="graph-cut scar labeling of the LA surface")
    q.add_argument("image")
    q.add_argument("la_mask")
    q.add_argument("--provider", choices=("two_sd", "otsu"), default="two_sd")
    q.add_argument("--probs", help="CSV node_index,p_scar; overrides --provider")
    q.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    q.set_defaults(func=cmd_quantify, out_required=True)

    d = sub.add_parser("discrepancy", parents=[common], help="distance between two feature batches")
    d.add_argument("zs")
    d.add_argument("zt")
    d.add_argument("--metric", choices=METRICS, default="cfd")
    d.add_argument("--all", action="store_true", help="report every applicable metric")
    d.add_argument("--a", type=float, default=1.0, help="CF integration half-width")
    d.add_argument("--sigma", type=float, default=None, help="MMD bandwidth (default: median heuristic)")
    d.add_argument("--zs-vars", help="per-sample variances for the varda metrics")
    d.add_argument("--zt-vars")
    d.set_defaults(func=cmd_discrepancy)

    s = sub.add_parser("selfcheck", parents=[common], help="run the embedded oracle suite")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--inject-fault", choices=FAULTS, default=None, help=argparse.SUPPRESS)
    s.set_defaults(func=cmd_selfcheck)

    ph = sub.add_parser("phantom", parents=[common], help="write a synthetic bright-cap phantom")
    ph.add_argument("--seed", type=int, default=0)
    ph.add_argument("--radius", type=float, default=12.0)
    ph.add_argument("--cap-fraction", type=float, default=0.3)
    ph.add_argument("--noise", type=float, default=0.0)
    ph.add_argument("--uniform", action="store_true")
    ph.set_defaults(func=cmd_phantom, out_required=True)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "out_required", False) and not args.out:
        print(f"cardioquant {args.command}: --out is required", file=sys.stderr)
        return EXIT_FORMAT
    try:
        report = args.func(args)
    except CliError as exc:
        print(f"cardioquant {args.command}: {exc}", file=sys.stderr)
        return exc.code
    text = json.dumps(report, sort_keys=True, indent=2 if args.json else None)
    print(text)
    if args.out and args.command in ("metrics", "discrepancy", "selfcheck"):
        Path(args.out).write_text(text + "\n")
    if args.command == "selfcheck" and not report["results"]["all_passed"]:
        return EXIT_SELFCHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
