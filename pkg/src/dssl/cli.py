"""Command-line harness: ``dssl {gen,fit,cv,sweep,dist}``.

Settings come from three layers, highest priority first: command-line
flags, an INI file given with ``--config`` (keys may sit in any section),
and built-in defaults.  Output files go to ``--output-dir``, else to
``$DSSL_OUTPUT_DIR``, else to the working directory.

Exit codes: 0 success, 2 usage or configuration, 3 data validation,
4 runtime failure (uncovered query under the strict fallback, failed
selection).
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import math
import os
import sys
import time

import numpy as np
from joblib import Parallel, delayed

from . import adapt, synth
from .core import (
    DatasetError,
    EstimatorSpec,
    Fallback,
    ValidationError,
    load_dataset,
    save_dataset,
)
from .density import SCHEMA_VERSION, GridSpec, fit_kde
from .geodesic import build_graph, dump_edges, pairwise_distances
from .regress import UncoveredQueryError, fit

log = logging.getLogger("dssl")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 2, 3, 4
OUTPUT_ENV = "DSSL_OUTPUT_DIR"
SWEEP_METHODS = ("ss_cv", "ss_fixed", "euclidean_cv")
SWEEP_COLUMNS = (
    "seed", "method", "n", "m", "alpha", "h", "excess_risk",
    "uncovered_fraction", "wall_ms", "status", "schema_version",
)


class ConfigError(ValueError):
    pass


def _floats(s):
    if s is None or (isinstance(s, str) and not s.strip()):
        return None
    if isinstance(s, (list, tuple)):
        return [float(v) for v in s]
    return [float(v) for v in str(s).replace(",", " ").split()]


def _ints(s):
    return [int(v) for v in _floats(s) or []]


def _params(s):
    if s is None or s == "":
        return {}
    if isinstance(s, dict):
        return s
    try:
        obj = json.loads(s)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"params must be a JSON object: {exc}") from None
    if not isinstance(obj, dict):
        raise ConfigError("params must be a JSON object")
    return obj


# name -> (parser, default)
OPTIONS = {
    "resolution": (int, 100),
    "pad": (float, 0.05),
    "c1": (float, 1.0),
    "c2": (float, 0.3),
    "connectivity": (int, 16),
    "fallback": (str, "labeled_mean"),
    "snap": (str, "strict"),
    "alphas": (_floats, None),
    "bandwidths": (_floats, None),
    "split": (float, 0.5),
    "seed": (int, 0),
    "threads": (int, 1),
    "generator": (str, "smooth"),
    "params": (_params, {}),
    "n": (_ints, [20]),
    "m": (_ints, [2000]),
    "seeds": (_ints, [0]),
    "methods": (str, ",".join(SWEEP_METHODS)),
    "alpha": (float, None),
    "h": (float, None),
    "n_mc": (int, 2000),
}


def resolve(args) -> dict:
    """Merge defaults, config file and command-line flags."""
    cfg = {k: v for k, (_, v) in OPTIONS.items()}
    path = getattr(args, "config", None)
    if path:
        cp = configparser.ConfigParser()
        if not cp.read(path):
            raise ConfigError(f"cannot read config file {path}")
        for section in cp.sections():
            for key, raw in cp.items(section):
                key = key.replace("-", "_")
                if key not in OPTIONS:
                    raise ConfigError(f"unknown config key {key!r} in [{section}]")
                try:
                    cfg[key] = OPTIONS[key][0](raw)
                except ValueError as exc:
                    raise ConfigError(f"bad value for {key}: {exc}") from None
    for key, (conv, _) in OPTIONS.items():
        val = getattr(args, key, None)
        if val is not None:
            try:
                cfg[key] = conv(val)
            except ValueError as exc:
                raise ConfigError(f"bad value for --{key}: {exc}") from None
    try:
        cfg["fallback"] = Fallback(cfg["fallback"])
    except ValueError:
        raise ConfigError(f"unknown fallback {cfg['fallback']!r}") from None
    if cfg["snap"] not in ("strict", "interior"):
        raise ConfigError("snap must be 'strict' or 'interior'")
    if cfg["alpha"] is not None and not cfg["alpha"] >= 0:
        raise ConfigError("alpha must be >= 0")
    if cfg["h"] is not None and not cfg["h"] > 0:
        raise ConfigError("h must be > 0")
    if not cfg["seeds"]:
        raise ConfigError("seeds must be nonempty")
    if cfg["generator"] not in synth.GENERATORS:
        raise ConfigError(
            f"unknown generator {cfg['generator']!r}; choose from {sorted(synth.GENERATORS)}"
        )
    cfg["output_dir"] = getattr(args, "output_dir", None) or os.environ.get(OUTPUT_ENV) or "."
    return cfg


def _write_json(obj, path):
    text = json.dumps(obj, indent=2, allow_nan=False)
    if path in (None, "-"):
        sys.stdout.write(text + "\n")
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _finite_or_none(v):
    return float(v) if math.isfinite(v) else None


def _density(cfg, labeled, unlabeled):
    """KDE on a padded bounding box of all observed points."""
    pts = unlabeled.points if labeled is None else np.vstack([labeled.points, unlabeled.points])
    grid = GridSpec.around(pts, cfg["pad"], cfg["resolution"])
    return fit_kde(unlabeled, grid, c1=cfg["c1"], c2=cfg["c2"])


def _emit_side_files(args, model, graph=None):
    if getattr(args, "emit_grid", None):
        model.save_json(args.emit_grid)
    if graph is not None and getattr(args, "dump_graph", None):
        dump_edges(graph, args.dump_graph)


def _load_queries(path, d):
    try:
        return load_dataset(path, "unlabeled").points
    except ValidationError as exc:
        if "no data rows" in str(exc):
            return np.zeros((0, d))
        raise


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def build_instance(cfg):
    gen = synth.GENERATORS[cfg["generator"]]
    params = dict(cfg["params"])
    if cfg["generator"] == "smooth":
        params.setdefault("alpha_true", 1.0)
        params.setdefault("seed", cfg["seed"])
    if cfg["generator"] == "lower_bound":
        params.setdefault("n_design", cfg["n"][0])
    try:
        return gen(**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {cfg['generator']}: {exc}") from None


def cmd_gen(args, cfg):
    inst = build_instance(cfg)
    out = cfg["output_dir"]
    os.makedirs(out, exist_ok=True)
    n, m = cfg["n"][0], cfg["m"][0]
    lab = inst.sample_labeled(n, synth.worker_rng(cfg["seed"], 0))
    unl = inst.sample_unlabeled(m, synth.worker_rng(cfg["seed"], 1))
    save_dataset(lab, os.path.join(out, "labeled.csv"))
    save_dataset(unl, os.path.join(out, "unlabeled.csv"))
    meta = inst.describe()
    meta.update({"n": n, "m": m, "seed": cfg["seed"]})
    _write_json(meta, os.path.join(out, "instance.json"))
    log.info("wrote %d labeled and %d unlabeled rows to %s", n, m, out)
    return EXIT_OK


def cmd_fit(args, cfg):
    if cfg["alpha"] is None or cfg["h"] is None:
        raise ConfigError("fit needs --alpha and --h")
    lab = load_dataset(args.labeled, "labeled")
    unl = load_dataset(args.unlabeled, "unlabeled")
    model = _density(cfg, lab, unl)
    g = build_graph(model, cfg["alpha"], cfg["connectivity"])
    _emit_side_files(args, model, g)
    reg = fit(lab, g, EstimatorSpec(cfg["alpha"], cfg["h"], cfg["fallback"]), snap=cfg["snap"])
    q = _load_queries(args.queries, lab.d) if args.queries else lab.points
    if q.shape[0]:
        yhat, covered = reg.predict_many(q)
    else:
        yhat, covered = np.zeros(0), np.zeros(0, dtype=bool)
    rows = [
        {"x": x.tolist(), "yhat": float(y), "covered": bool(c)}
        for x, y, c in zip(q, yhat, covered)
    ]
    _write_json(rows, args.out)
    return EXIT_OK


def cmd_cv(args, cfg):
    lab = load_dataset(args.labeled, "labeled")
    unl = load_dataset(args.unlabeled, "unlabeled")
    model = _density(cfg, lab, unl)
    _emit_side_files(args, model)
    alphas = cfg["alphas"] or adapt.default_alphas(unl.m)
    grid = adapt.CandidateGrid(alphas, cfg["bandwidths"], cfg["split"], cfg["seed"])
    rep = adapt.select(
        lab, model, grid, connectivity=cfg["connectivity"], fallback=cfg["fallback"],
        snap=cfg["snap"], n_jobs=cfg["threads"],
    )
    _write_json(rep.to_dict(), args.out)
    return EXIT_OK


def cmd_dist(args, cfg):
    if cfg["alpha"] is None:
        raise ConfigError("dist needs --alpha")
    unl = load_dataset(args.unlabeled, "unlabeled")
    pts = _load_queries(args.points, unl.d)
    grid = GridSpec.around(np.vstack([unl.points, pts]), cfg["pad"], cfg["resolution"])
    model = fit_kde(unl, grid, c1=cfg["c1"], c2=cfg["c2"])
    g = build_graph(model, cfg["alpha"], cfg["connectivity"])
    _emit_side_files(args, model, g)
    dist = pairwise_distances(g, pts, cfg["snap"]) if pts.shape[0] else np.zeros((0, 0))
    _write_json(
        {
            "schema_version": SCHEMA_VERSION,
            "alpha": cfg["alpha"],
            "points": pts.tolist(),
            "distances": [[_finite_or_none(v) for v in row] for row in dist],
        },
        args.out,
    )
    return EXIT_OK


def run_cell(cfg, seed, n, m, method):
    """One sweep row: draw data for ``(seed, n, m)`` and evaluate ``method``."""
    t0 = time.perf_counter()
    row = {"seed": seed, "method": method, "n": n, "m": m, "alpha": math.nan, "h": math.nan,
           "excess_risk": math.nan, "uncovered_fraction": math.nan, "status": "ok",
           "schema_version": SCHEMA_VERSION}
    try:
        inst = build_instance(dict(cfg, seed=seed, n=[n]))
        lab = inst.sample_labeled(n, synth.worker_rng(seed, 0))
        unl = inst.sample_unlabeled(m, synth.worker_rng(seed, 1))
        x_mc = inst.sample_x(cfg["n_mc"], synth.worker_rng(seed, 2))
        if method == "euclidean_cv":
            rep = adapt.select_euclidean(
                lab, cfg["bandwidths"], cfg["split"], seed, fallback=cfg["fallback"]
            )
            pred, cov = rep.predict_many(x_mc)
            alpha, h = rep.chosen.alpha, rep.chosen.h
        else:
            lo, hi = inst.bounding_box()
            grid = GridSpec(lo - cfg["pad"], hi + cfg["pad"], cfg["resolution"])
            model = fit_kde(unl, grid, c1=cfg["c1"], c2=cfg["c2"])
            if method == "ss_cv":
                alphas = cfg["alphas"] or adapt.default_alphas(m)
                grid_c = adapt.CandidateGrid(alphas, cfg["bandwidths"], cfg["split"], seed)
                rep = adapt.select(
                    lab, model, grid_c, connectivity=cfg["connectivity"],
                    fallback=cfg["fallback"], snap=cfg["snap"],
                )
                pred, cov = rep.predict_many(x_mc)
                alpha, h = rep.chosen.alpha, rep.chosen.h
            elif method == "ss_fixed":
                if cfg["alpha"] is None or cfg["h"] is None:
                    raise ConfigError("ss_fixed needs alpha and h")
                alpha, h = cfg["alpha"], cfg["h"]
                g = build_graph(model, alpha, cfg["connectivity"])
                reg = fit(lab, g, EstimatorSpec(alpha, h, cfg["fallback"]), snap=cfg["snap"])
                pred, cov = reg.predict_many(x_mc)
            else:
                raise ConfigError(f"unknown method {method!r}")
        diff = pred - inst.f_star(x_mc)
        row.update(
            alpha=alpha,
            h=h,
            excess_risk=math.fsum((diff**2).tolist()) / diff.shape[0],
            uncovered_fraction=float(np.count_nonzero(~cov)) / cov.shape[0],
        )
    except Exception as exc:  # recorded per row, the sweep carries on
        row["status"] = f"error: {type(exc).__name__}: {exc}"
    row["wall_ms"] = (time.perf_counter() - t0) * 1000.0
    return row


def cmd_sweep(args, cfg):
    methods = [s.strip() for s in cfg["methods"].split(",") if s.strip()]
    bad = [s for s in methods if s not in SWEEP_METHODS]
    if bad:
        raise ConfigError(f"unknown sweep method(s): {bad}")
    cells = [
        (seed, n, m, meth)
        for seed in cfg["seeds"]
        for n in cfg["n"]
        for m in cfg["m"]
        for meth in methods
    ]
    rows = Parallel(n_jobs=cfg["threads"])(delayed(run_cell)(cfg, *c) for c in cells)
    out = args.out or os.path.join(cfg["output_dir"], "sweep.csv")
    if out != "-":
        os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
    fh = sys.stdout if out == "-" else open(out, "w", newline="")
    try:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    finally:
        if fh is not sys.stdout:
            fh.close()
    failed = sum(r["status"] != "ok" for r in rows)
    if failed:
        log.warning("%d of %d sweep cells failed", failed, len(rows))
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _nonneg_float(s):
    v = float(s)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {s}")
    return v


def _pos_float(s):
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {s}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with settings (any section)")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help="joblib workers")
    common.add_argument("--output-dir", help=f"default output directory (else ${OUTPUT_ENV})")
    common.add_argument("--resolution", type=int, help="grid cells per axis")
    common.add_argument("--pad", type=float, help="padding around the data bounding box")
    common.add_argument("--c1", type=float)
    common.add_argument("--c2", type=float)
    common.add_argument("--connectivity", type=int, choices=(4, 8, 16))
    common.add_argument("--fallback", choices=[f.value for f in Fallback])
    common.add_argument("--snap", choices=("strict", "interior"))
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="dssl", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="draw a synthetic dataset")
    g.add_argument("--generator")
    g.add_argument("--params", help="JSON object of generator keyword arguments")
    g.add_argument("--n", help="labeled sample size")
    g.add_argument("--m", help="unlabeled sample size")
    g.set_defaults(func=cmd_gen)

    def data_args(q):
        q.add_argument("--labeled", required=True)
        q.add_argument("--unlabeled", required=True)
        q.add_argument("--out", help="output file (default stdout)")
        q.add_argument("--emit-grid", help="write the density model (phat, masks) as JSON")

    f = sub.add_parser("fit", parents=[common], help="fit and predict at query points")
    data_args(f)
    f.add_argument("--alpha", type=_nonneg_float)
    f.add_argument("--h", type=_pos_float)
    f.add_argument("--queries", help="CSV of query points (default: labeled points)")
    f.add_argument("--dump-graph", help="write graph edges as 'u v weight' lines")
    f.set_defaults(func=cmd_fit)

    c = sub.add_parser("cv", parents=[common], help="select (alpha, h) on a hold-out split")
    data_args(c)
    c.add_argument("--alphas", help="candidate alphas, comma separated (must include 0)")
    c.add_argument("--bandwidths", help="candidate bandwidths, comma separated")
    c.add_argument("--split", type=float, help="training fraction")
    c.set_defaults(func=cmd_cv)

    s = sub.add_parser("sweep", parents=[common], help="seeds x methods x sizes experiment")
    s.add_argument("--generator")
    s.add_argument("--params")
    s.add_argument("--n", help="labeled sizes, comma separated")
    s.add_argument("--m", help="unlabeled sizes, comma separated")
    s.add_argument("--seeds", help="seeds, comma separated")
    s.add_argument("--methods", help=f"subset of {','.join(SWEEP_METHODS)}")
    s.add_argument("--alphas")
    s.add_argument("--bandwidths")
    s.add_argument("--split", type=float)
    s.add_argument("--alpha", type=_nonneg_float, help="alpha for ss_fixed")
    s.add_argument("--h", type=_pos_float, help="bandwidth for ss_fixed")
    s.add_argument("--n-mc", type=int, help="Monte-Carlo points for excess risk")
    s.add_argument("--out", help="CSV path (default <output-dir>/sweep.csv, '-' for stdout)")
    s.set_defaults(func=cmd_sweep)

    dcmd = sub.add_parser("dist", parents=[common], help="pairwise plug-in distances")
    dcmd.add_argument("--unlabeled", required=True)
    dcmd.add_argument("--points", required=True, help="CSV of points")
    dcmd.add_argument("--alpha", type=_nonneg_float)
    dcmd.add_argument("--out")
    dcmd.add_argument("--emit-grid")
    dcmd.add_argument("--dump-graph")
    dcmd.set_defaults(func=cmd_dist)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = resolve(args)
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"dssl: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"dssl: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (UncoveredQueryError, adapt.SelectionError) as exc:
        print(f"dssl: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"dssl: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
