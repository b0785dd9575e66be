"""Experiment configuration, the end-to-end pipeline and report I/O.

Configs and reports share one line-oriented ``key = value`` syntax (see
docs/formats.md). Config keys may carry a ``config.`` prefix, so a report
can be fed back as a config file; keys outside the config set are ignored.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ParameterError
from .metrics import accuracy, nmi, purity
from .numerics import SeededRng
from .selfexpress import (IterationConfig, LsrConfig, TrrConfig, lsr_affinity,
                          run_flsr, run_ftrr, trr_affinity)
from .spectral import DEFAULT_RESTARTS, cluster

ALGORITHMS = ("lsr", "trr", "flsr", "ftrr")
REPORT_FORMAT = "gfsc-report/1"
_REPORT_KEYS = ("format", "command")


class UsageError(ParameterError):
    """Invalid or missing configuration field."""


@dataclass
class ExperimentConfig:
    data: Optional[str] = None
    labels: Optional[str] = None
    label_column: bool = False
    algo: Optional[str] = None
    alpha: Optional[float] = None
    k: Optional[int] = None
    p: Optional[int] = None
    g: Optional[int] = None
    epsilon: float = 1e-5
    max_iter: int = 50
    seed: int = 0
    restarts: int = DEFAULT_RESTARTS
    repeat: int = 1
    refilter: str = "raw"
    zero_diag: bool = False
    standardize: bool = False
    out: Optional[str] = None


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(text)


def _coerce(key, text):
    kind = _FIELD_TYPES[key]
    try:
        if "bool" in kind:
            return _parse_bool(text)
        if "int" in kind:
            return int(text)
        if "float" in kind:
            return float(text)
    except ValueError:
        raise UsageError(f"{key}: cannot parse {text!r}") from None
    return text


def parse_keyvalue(text):
    """Parse ``key = value`` lines; ``#`` starts a comment line."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def load_config(path):
    """Read config values from a key/value file (a report works too)."""
    values = {}
    for key, value in parse_keyvalue(Path(path).read_text()).items():
        if key.startswith("config."):
            key = key[len("config."):]
        elif "." in key or key in _REPORT_KEYS:
            continue  # result.*, run.*, trace.*, timing.* and report headers
        name = key.replace("-", "_")
        if name not in _FIELD_TYPES:
            raise UsageError(f"{path}: unknown config key {key!r}")
        values[name] = _coerce(name, value)
    return values


def merge_config(file_values, overrides):
    """Defaults, then file values, then non-None command-line overrides."""
    cfg = ExperimentConfig()
    cfg = replace(cfg, **file_values)
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})


def validate(cfg: ExperimentConfig, need_out=True):
    if cfg.data is None:
        raise UsageError("data required")
    if cfg.algo is None:
        raise UsageError("algo required")
    if cfg.algo not in ALGORITHMS:
        raise UsageError(f"algo must be one of {', '.join(ALGORITHMS)}, got {cfg.algo!r}")
    if cfg.alpha is None:
        raise UsageError("alpha required")
    if not cfg.alpha > 0:
        raise UsageError("alpha must be > 0")
    if cfg.algo in ("flsr", "ftrr"):
        if cfg.k is None:
            raise UsageError("k required")
        if cfg.k < 0:
            raise UsageError("k must be >= 0")
    if cfg.algo in ("trr", "ftrr"):
        if cfg.p is None:
            raise UsageError("p required")
        if cfg.p < 1:
            raise UsageError("p must be >= 1")
    if cfg.g is not None and cfg.g < 1:
        raise UsageError("g must be >= 1")
    if not cfg.epsilon > 0:
        raise UsageError("epsilon must be > 0")
    if cfg.max_iter < 1:
        raise UsageError("max_iter must be >= 1")
    if cfg.restarts < 1:
        raise UsageError("restarts must be >= 1")
    if cfg.repeat < 1:
        raise UsageError("repeat must be >= 1")
    if cfg.refilter not in ("raw", "previous"):
        raise UsageError("refilter must be 'raw' or 'previous'")
    if need_out and cfg.out is None:
        raise UsageError("out required")


def resolve_g(cfg, labels):
    if cfg.g is not None:
        return cfg.g
    if labels is None:
        raise UsageError("g required (no labels to infer it from)")
    return int(np.unique(labels).size)


@dataclass
class RunResult:
    labels: np.ndarray
    W: np.ndarray
    trace: object  # IterationTrace or None for one-shot algorithms
    timings: dict
    metrics: Optional[dict] = None


def build_affinity(X, cfg: ExperimentConfig, on_iteration=None):
    """Affinity for the configured algorithm; returns ``(W, trace or None)``."""
    lsr = LsrConfig(cfg.alpha, cfg.zero_diag)
    if cfg.algo == "lsr":
        return lsr_affinity(X, lsr), None
    if cfg.algo == "trr":
        return trr_affinity(X, TrrConfig(lsr, cfg.p)), None
    it = IterationConfig(cfg.k, cfg.epsilon, cfg.max_iter, cfg.refilter)
    if cfg.algo == "flsr":
        return run_flsr(X, lsr, it, on_iteration)
    return run_ftrr(X, TrrConfig(lsr, cfg.p), it, on_iteration)


def evaluate(pred, truth):
    return {"acc": float(accuracy(pred, truth)), "nmi": float(nmi(pred, truth)),
            "pur": float(purity(pred, truth))}


def run_once(X, truth, cfg: ExperimentConfig, g, seed):
    t0 = time.perf_counter()
    W, trace = build_affinity(X, cfg)
    t1 = time.perf_counter()
    assignment = cluster(W, g, SeededRng(seed), restarts=cfg.restarts)
    t2 = time.perf_counter()
    metrics = evaluate(assignment.labels, truth) if truth is not None else None
    return RunResult(assignment.labels, W, trace,
                     {"affinity_s": t1 - t0, "spectral_s": t2 - t1}, metrics)


def fmt(value):
    """Deterministic text for report values."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def config_lines(cfg: ExperimentConfig):
    lines = []
    for f in fields(ExperimentConfig):
        v = getattr(cfg, f.name)
        if v is not None:
            lines.append(f"config.{f.name} = {fmt(v)}")
    return lines


def labels_path_for(report_path):
    return Path(report_path).with_suffix(".labels.csv")


def format_report(cfg, shape, g, runs, labels_file, load_s, total_s):
    """Render a cluster report. ``timing.*`` lines are the only
    non-deterministic ones."""
    first = runs[0]
    lines = ["# gfsc cluster report", f"format = {REPORT_FORMAT}", "command = cluster"]
    lines += config_lines(cfg)
    lines += [f"result.n_samples = {shape[0]}", f"result.n_features = {shape[1]}",
              f"result.g = {g}", f"result.runs = {len(runs)}"]
    if first.metrics is not None:
        for key in ("acc", "nmi", "pur"):
            vals = [r.metrics[key] for r in runs]
            lines.append(f"result.{key} = {fmt(float(np.mean(vals)))}")
            if len(runs) > 1:
                lines.append(f"result.{key}_std = {fmt(float(np.std(vals)))}")
    trace = first.trace
    lines.append(f"result.iterations = {trace.iterations if trace else 1}")
    lines.append(f"result.converged = {fmt(trace.converged if trace else True)}")
    if trace is not None:
        lines.append(f"result.selected_iteration = {trace.selected_iteration}")
    lines.append(f"result.labels_file = {labels_file}")
    if len(runs) > 1 and first.metrics is not None:
        for i, r in enumerate(runs, start=1):
            for key in ("acc", "nmi", "pur"):
                lines.append(f"run.{i}.{key} = {fmt(r.metrics[key])}")
    if trace is not None:
        for rec in trace.records:
            lines.append(f"trace.residual.{rec.iteration} = {fmt(rec.residual)}")
    lines.append(f"timing.load_s = {fmt(load_s)}")
    for key in ("affinity_s", "spectral_s"):
        lines.append(f"timing.{key} = {fmt(float(sum(r.timings[key] for r in runs)))}")
    if trace is not None:
        for rec in trace.records:
            lines.append(f"timing.iteration_s.{rec.iteration} = {fmt(rec.seconds)}")
    lines.append(f"timing.total_s = {fmt(total_s)}")
    return "\n".join(lines) + "\n"


def read_report(path):
    """Parse a report into a flat ``{key: text}`` dict."""
    return parse_keyvalue(Path(path).read_text())
