"""``gfsc`` command line: cluster, sweep, ablate, gen, embed.

Exit codes: 0 success, 1 usage error, 2 I/O or data-format error,
3 numerical failure. Diagnostics go to stderr; results only to files.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import data as data_mod
from .errors import ContractError, DataFormatError, NumericalError, ParameterError
from .experiment import (ALGORITHMS, ExperimentConfig, UsageError, build_affinity,
                         evaluate, fmt, format_report, labels_path_for, load_config,
                         merge_config, resolve_g, run_once, validate)
from .graph import GraphFilterSpec, apply_filter, knn_affinity, normalized_laplacian
from .metrics import mean_image_scores, mean_pairwise_fisher
from .numerics import SeededRng
from .selfexpress import LsrConfig, lsr_affinity
from .spectral import cluster

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERICAL = 0, 1, 2, 3

SWEEP_HEADER = ["alpha", "k", "acc", "nmi", "pur", "iterations", "converged", "status"]
ABLATE_HEADER = ["k", "psnr", "ssim", "fisher", "acc", "nmi", "pur"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _float_list(text):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("grid is empty")
    return vals


def _int_list(text):
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("list is empty")
    return vals


def _add_experiment_flags(p):
    p.add_argument("--config", help="key = value config file (a report also works)")
    p.add_argument("--data", help="features: CSV or SMCL1 binary")
    p.add_argument("--labels", help="labels file, one integer per line")
    p.add_argument("--label-column", dest="label_column", action=argparse.BooleanOptionalAction,
                   default=None, help="last CSV column holds labels")
    p.add_argument("--algo", choices=ALGORITHMS)
    p.add_argument("--alpha", type=float)
    p.add_argument("--k", type=int, help="filter order")
    p.add_argument("--p", type=int, help="entries kept per row (trr, ftrr)")
    p.add_argument("--g", type=int, help="number of clusters (default: from labels)")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--refilter", choices=("raw", "previous"))
    p.add_argument("--zero-diag", dest="zero_diag", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--standardize", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--out")


_CONFIG_FLAGS = ("data", "labels", "label_column", "algo", "alpha", "k", "p", "g", "epsilon",
                 "max_iter", "seed", "restarts", "refilter", "zero_diag", "standardize", "out")


def _experiment_config(args, extra=()):
    file_values = load_config(args.config) if args.config else {}
    overrides = {name: getattr(args, name) for name in _CONFIG_FLAGS + tuple(extra)}
    return merge_config(file_values, overrides)


def _load(cfg):
    return data_mod.load_dataset(cfg.data, cfg.labels, cfg.label_column, cfg.standardize)


def cmd_cluster(args):
    t_start = time.perf_counter()
    cfg = _experiment_config(args, ("repeat",))
    validate(cfg)
    t0 = time.perf_counter()
    ds = _load(cfg)
    load_s = time.perf_counter() - t0
    g = resolve_g(cfg, ds.labels)
    runs = [run_once(ds.features, ds.labels, cfg, g, cfg.seed + r) for r in range(cfg.repeat)]
    out = Path(cfg.out)
    labels_file = labels_path_for(out)
    data_mod.save_labels(labels_file, runs[0].labels)
    report = format_report(cfg, ds.features.shape, g, runs, labels_file.name, load_s,
                           time.perf_counter() - t_start)
    out.write_text(report)
    trace = runs[0].trace
    if trace is not None and not trace.converged:
        print(f"warning: not converged after {trace.iterations} iterations", file=sys.stderr)
    return EXIT_OK


def sweep_rows(X, truth, cfg, alphas, ks, g):
    """One row per (alpha, k), alpha-major; cell ``i`` uses seed ``seed + i``."""
    rows = []
    for i, (alpha, k) in enumerate((a, k) for a in alphas for k in ks):
        cell = replace(cfg, alpha=alpha, k=k)
        try:
            validate(cell, need_out=False)
            res = run_once(X, truth, cell, g, cfg.seed + i)
        except (ParameterError, ContractError, NumericalError) as exc:
            rows.append([fmt(alpha), str(k), "", "", "", "", "", f"error: {exc}"])
            continue
        m = res.metrics or {}
        trace = res.trace
        rows.append([fmt(alpha), str(k)] + [fmt(m[key]) if m else "" for key in ("acc", "nmi", "pur")]
                    + [str(trace.iterations if trace else 1), fmt(trace.converged if trace else True), "ok"])
    return rows


def cmd_sweep(args):
    cfg = _experiment_config(args)
    # grid values are checked per cell, so a bad cell does not stop the sweep
    validate(replace(cfg, alpha=1.0, k=0))
    ds = _load(cfg)
    g = resolve_g(cfg, ds.labels)
    rows = sweep_rows(ds.features, ds.labels, cfg, args.alpha_grid, args.k_grid, g)
    _write_csv(cfg.out, SWEEP_HEADER, rows)
    return EXIT_OK


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def ablation_rows(clean, labels, height, width, noise_mean, noise_sigma, k_max, knn, alpha,
                  seed, restarts=20, keep_noise_mean=False, g=None):
    """Filter-order ablation on a fixed kNN prior graph.

    The clean features are corrupted with ``N(noise_mean, noise_sigma^2)``.
    Unless ``keep_noise_mean`` is set, the known noise mean is subtracted
    again before filtering, so PSNR/SSIM track the random part of the
    corruption. Row ``k`` reports mean PSNR/SSIM of the filtered images
    against the clean ones, the mean pairwise Fisher score, and LSR +
    spectral clustering metrics on the filtered features.
    """
    if labels is None:
        raise UsageError("labels required for the ablation (Fisher score needs classes)")
    refs = data_mod.as_images(clean, height, width)
    noisy = data_mod.add_gaussian_noise(clean, noise_mean, noise_sigma, seed)
    if not keep_noise_mean:
        noisy = noisy - noise_mean
    data_range = float(clean.max() - clean.min())
    L = normalized_laplacian(knn_affinity(noisy, knn))
    g = g or int(np.unique(labels).size)
    rows = []
    for k in range(k_max + 1):
        Xk = apply_filter(GraphFilterSpec(k, L), noisy)
        p, s = mean_image_scores(refs, data_mod.as_images(Xk, height, width), data_range)
        fisher = mean_pairwise_fisher(Xk, labels)
        assignment = cluster(lsr_affinity(Xk, LsrConfig(alpha)), g, SeededRng(seed), restarts)
        m = evaluate(assignment.labels, labels)
        rows.append([str(k), fmt(p), fmt(s), fmt(fisher), fmt(m["acc"]), fmt(m["nmi"]), fmt(m["pur"])])
    return rows


def cmd_ablate(args):
    if args.data is None:
        raise UsageError("data required")
    if args.out is None:
        raise UsageError("out required")
    if args.k_max < 0:
        raise UsageError("k-max must be >= 0")
    if not args.alpha > 0:
        raise UsageError("alpha must be > 0")
    ds = data_mod.load_dataset(args.data, args.labels, args.label_column, False)
    rows = ablation_rows(ds.features, ds.labels, args.height, args.width, args.noise_mean,
                         args.noise_sigma, args.k_max, args.knn, args.alpha, args.seed,
                         args.restarts, args.keep_noise_mean, args.g)
    _write_csv(args.out, ABLATE_HEADER, rows)
    return EXIT_OK


def cmd_gen(args):
    if args.kind == "subspaces":
        spec = data_mod.SubspaceSpec(args.ambient_dim, args.subspace_dim, args.clusters,
                                     args.per_cluster, args.noise, args.seed, args.orthogonal)
        try:
            ds = data_mod.gen_subspaces(spec)
        except ParameterError as exc:
            raise UsageError(str(exc)) from None
    else:
        spec = data_mod.ImageSpec(args.height, args.width, args.clusters, args.per_cluster, args.seed)
        ds = data_mod.gen_images(spec)
    prefix = Path(args.out)
    if args.binary:
        data_mod.save_binary(prefix.with_name(prefix.name + ".smcl"), ds.features)
    else:
        data_mod.save_csv(prefix.with_name(prefix.name + ".csv"), ds.features)
    data_mod.save_labels(prefix.with_name(prefix.name + ".labels.csv"), ds.labels)
    return EXIT_OK


def cmd_embed(args):
    cfg = _experiment_config(args)
    validate(cfg)
    ds = _load(cfg)
    wanted = sorted(set(args.iterations))
    if wanted[0] < 1:
        raise UsageError("iterations must be >= 1")
    captured = {}

    def keep(t, W, Xbar):
        if t in wanted:
            captured[t] = Xbar.copy()
        captured["last"] = Xbar
        return None

    if cfg.algo in ("flsr", "ftrr"):
        build_affinity(ds.features, cfg, on_iteration=keep)
    else:
        captured["last"] = ds.features
    prefix = Path(cfg.out)
    for t in wanted:
        Xt = captured.get(t, captured["last"])
        data_mod.save_csv(prefix.with_name(f"{prefix.name}.iter{t}.csv"), Xt)
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="gfsc", description="Subspace clustering on graph-filtered representations")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("cluster", help="run one clustering experiment and write a report")
    _add_experiment_flags(p)
    p.add_argument("--repeat", type=int, help="runs with seeds seed..seed+repeat-1; metrics averaged")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("sweep", help="grid over alpha and k, one CSV row per cell")
    _add_experiment_flags(p)
    p.add_argument("--alpha-grid", dest="alpha_grid", type=_float_list, required=True)
    p.add_argument("--k-grid", dest="k_grid", type=_int_list, required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ablate", help="filter-order ablation on a kNN prior graph")
    p.add_argument("--data")
    p.add_argument("--labels")
    p.add_argument("--label-column", dest="label_column", action="store_true")
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--noise-mean", dest="noise_mean", type=float, default=1.0)
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float, default=0.05)
    p.add_argument("--keep-noise-mean", dest="keep_noise_mean", action="store_true",
                   help="do not subtract the known noise mean before filtering")
    p.add_argument("--k-max", dest="k_max", type=int, default=10)
    p.add_argument("--knn", type=int, default=20)
    p.add_argument("--alpha", type=float, default=1.0, help="LSR weight for the clustering columns")
    p.add_argument("--g", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("gen", help="write a synthetic dataset (features + labels)")
    p.add_argument("--kind", choices=("subspaces", "images"), default="subspaces")
    p.add_argument("--ambient-dim", dest="ambient_dim", type=int, default=30)
    p.add_argument("--subspace-dim", dest="subspace_dim", type=int, default=3)
    p.add_argument("--clusters", type=int, default=None)
    p.add_argument("--per-cluster", dest="per_cluster", type=int, default=None)
    p.add_argument("--noise", type=float, default=0.01)
    p.add_argument("--orthogonal", action="store_true")
    p.add_argument("--height", type=int, default=16)
    p.add_argument("--width", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--binary", action="store_true", help="write SMCL1 instead of CSV features")
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("embed", help="export filtered features at chosen iterations")
    _add_experiment_flags(p)
    p.add_argument("--iterations", type=_int_list, default=[1])
    p.set_defaults(func=cmd_embed)
    return parser


def _gen_defaults(args):
    if getattr(args, "command", None) == "gen":
        if args.clusters is None:
            args.clusters = 3 if args.kind == "subspaces" else 4
        if args.per_cluster is None:
            args.per_cluster = 50 if args.kind == "subspaces" else 150


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        _gen_defaults(args)
        return args.func(args)
    except (UsageError, ParameterError, ContractError) as exc:
        print(f"gfsc: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, DataFormatError) as exc:
        print(f"gfsc: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"gfsc: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
