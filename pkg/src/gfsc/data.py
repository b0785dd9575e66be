"""Datasets: CSV / SMCL1 binary I/O, synthetic fixtures, noise injection.

File formats (see docs/formats.md):

* features CSV: one sample per line, comma-separated reals, no header; with
  ``has_labels_column`` the last cell of each line is an integer label;
* labels file: one integer per line, aligned with the feature rows;
* SMCL1 binary: ``b"SMCL1"``, rows and cols as little-endian uint64, then
  rows*cols little-endian float64 values in row-major order.
"""
from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DataFormatError, ParameterError
from .numerics import SeededRng

BINARY_MAGIC = b"SMCL1"
_DIMS = struct.Struct("<QQ")


@dataclass
class LabeledDataset:
    features: np.ndarray
    labels: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.features.shape[0],):
                raise DataFormatError(
                    f"{self.labels.size} labels for {self.features.shape[0]} samples")

    @property
    def n_classes(self):
        return 0 if self.labels is None else int(np.unique(self.labels).size)


def canonical_labels(values):
    """Relabel to 0..g-1 in order of first occurrence."""
    mapping = {}
    out = np.empty(len(values), dtype=np.int64)
    for i, v in enumerate(values):
        out[i] = mapping.setdefault(v, len(mapping))
    return out


def _parse_float(cell, path, row, col):
    try:
        v = float(cell)
    except ValueError:
        raise DataFormatError(f"{path}: row {row}, column {col}: not a number: {cell!r}") from None
    if not math.isfinite(v):
        raise DataFormatError(f"{path}: row {row}, column {col}: non-finite value {cell!r}")
    return v


def _parse_int(cell, path, row, col):
    try:
        return int(cell)
    except ValueError:
        v = _parse_float(cell, path, row, col)
        if v != int(v):
            raise DataFormatError(f"{path}: row {row}, column {col}: label {cell!r} is not an integer") from None
        return int(v)


def load_csv(path, has_labels_column=False, name=None):
    """Read a features CSV (optionally with a trailing label column)."""
    path = Path(path)
    rows, raw_labels = [], []
    width = None
    with open(path, newline="") as fh:
        for r, cells in enumerate(csv.reader(fh), start=1):
            if not cells or all(not c.strip() for c in cells):
                continue
            if width is None:
                width = len(cells)
                if has_labels_column and width < 2:
                    raise DataFormatError(f"{path}: row {r}: need at least one feature and a label")
            elif len(cells) != width:
                raise DataFormatError(f"{path}: row {r}: expected {width} cells, got {len(cells)}")
            feats = cells[:-1] if has_labels_column else cells
            rows.append([_parse_float(c.strip(), path, r, j) for j, c in enumerate(feats, start=1)])
            if has_labels_column:
                raw_labels.append(_parse_int(cells[-1].strip(), path, r, width))
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    labels = canonical_labels(raw_labels) if has_labels_column else None
    return LabeledDataset(np.array(rows), labels, name or path.stem)


def save_csv(path, X, labels=None):
    """Write features (and optionally a label column) with round-trip exact reals."""
    X = np.asarray(X, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        for i, row in enumerate(X):
            cells = [repr(float(v)) for v in row]
            if labels is not None:
                cells.append(str(int(labels[i])))
            fh.write(",".join(cells) + "\n")


def load_labels(path):
    path = Path(path)
    values = []
    with open(path) as fh:
        for r, line in enumerate(fh, start=1):
            line = line.strip()
            if line:
                values.append(_parse_int(line, path, r, 1))
    return canonical_labels(values)


def save_labels(path, labels):
    with open(path, "w") as fh:
        fh.writelines(f"{int(v)}\n" for v in labels)


def save_binary(path, X):
    X = np.ascontiguousarray(X, dtype="<f8")
    if X.ndim != 2:
        raise ParameterError(f"expected a 2-D matrix, got shape {X.shape}")
    with open(path, "wb") as fh:
        fh.write(BINARY_MAGIC)
        fh.write(_DIMS.pack(*X.shape))
        fh.write(X.tobytes())


def load_binary(path):
    with open(path, "rb") as fh:
        if fh.read(len(BINARY_MAGIC)) != BINARY_MAGIC:
            raise DataFormatError(f"{path}: missing SMCL1 magic")
        head = fh.read(_DIMS.size)
        if len(head) != _DIMS.size:
            raise DataFormatError(f"{path}: truncated header")
        rows, cols = _DIMS.unpack(head)
        body = fh.read()
    if len(body) != rows * cols * 8:
        raise DataFormatError(f"{path}: expected {rows * cols * 8} payload bytes, got {len(body)}")
    X = np.frombuffer(body, dtype="<f8").reshape(rows, cols).astype(np.float64)
    if not np.all(np.isfinite(X)):
        raise DataFormatError(f"{path}: non-finite values in payload")
    return X


def is_binary(path):
    with open(path, "rb") as fh:
        return fh.read(len(BINARY_MAGIC)) == BINARY_MAGIC


def standardize(X):
    """Per-feature zero mean / unit variance; constant features are only centered."""
    X = np.asarray(X, dtype=np.float64)
    sd = X.std(axis=0)
    return (X - X.mean(axis=0)) / np.where(sd > 0, sd, 1.0)


def load_dataset(path, labels_path=None, label_column=False, standardize_features=False):
    """Load features from CSV or SMCL1 (sniffed by magic), plus optional labels."""
    path = Path(path)
    if is_binary(path):
        if label_column:
            raise DataFormatError(f"{path}: binary files carry no label column")
        ds = LabeledDataset(load_binary(path), None, path.stem)
    else:
        ds = load_csv(path, has_labels_column=label_column)
    if labels_path is not None:
        ds = LabeledDataset(ds.features, load_labels(labels_path), ds.name)
    if standardize_features:
        ds.features = standardize(ds.features)
    return ds


@dataclass(frozen=True)
class SubspaceSpec:
    ambient_dim: int = 30
    subspace_dim: int = 3
    clusters: int = 3
    samples_per_cluster: int = 50
    noise_sigma: float = 0.01
    seed: int = 0
    orthogonal: bool = False

    def validate(self):
        if self.subspace_dim < 1 or self.subspace_dim >= self.ambient_dim:
            raise ParameterError(
                f"subspace_dim must be in [1, ambient_dim), got d={self.subspace_dim}, m={self.ambient_dim}")
        if self.clusters < 2:
            raise ParameterError(f"need at least 2 clusters, got {self.clusters}")
        if self.samples_per_cluster < 1:
            raise ParameterError("samples_per_cluster must be >= 1")
        if self.noise_sigma < 0:
            raise ParameterError("noise_sigma must be >= 0")
        if self.orthogonal and self.clusters * self.subspace_dim > self.ambient_dim:
            raise ParameterError("orthogonal subspaces need clusters * subspace_dim <= ambient_dim")


def gen_subspaces(spec: SubspaceSpec):
    """Samples from a union of random linear subspaces, cluster-major order.

    Cluster ``c`` draws ``B_c @ coeffs + noise_sigma * N(0, I)`` with ``B_c``
    an orthonormal ``m x d`` basis (QR of a Gaussian matrix). With
    ``orthogonal`` all bases come from one QR and are mutually orthogonal.
    """
    spec.validate()
    gen = SeededRng(spec.seed).generator
    m, d, g = spec.ambient_dim, spec.subspace_dim, spec.clusters
    if spec.orthogonal:
        Q, _ = np.linalg.qr(gen.standard_normal((m, g * d)))
        bases = [Q[:, c * d:(c + 1) * d] for c in range(g)]
    else:
        bases = [np.linalg.qr(gen.standard_normal((m, d)))[0] for _ in range(g)]
    blocks = []
    for B in bases:
        coeffs = gen.standard_normal((spec.samples_per_cluster, d))
        block = coeffs @ B.T
        if spec.noise_sigma > 0:
            block = block + spec.noise_sigma * gen.standard_normal(block.shape)
        blocks.append(block)
    labels = np.repeat(np.arange(g), spec.samples_per_cluster)
    return LabeledDataset(np.vstack(blocks), labels, f"subspaces-m{m}-d{d}-g{g}")


@dataclass(frozen=True)
class ImageSpec:
    height: int = 16
    width: int = 16
    classes: int = 4
    per_class: int = 150
    seed: int = 0
    shift: int = 1
    contrast_jitter: float = 0.1


def _prototype(gen, h, w):
    yy, xx = np.mgrid[0:h, 0:w] / max(h, w)
    angle = gen.uniform(0, 2 * np.pi)
    base = 0.15 + 0.1 * gen.random()
    ramp = 0.15 * (np.cos(angle) * xx + np.sin(angle) * yy)
    shapes = []
    for _ in range(3):
        kind = gen.integers(2)
        cy, cx = gen.uniform(0.2, 0.8, size=2) * (h, w)
        size = gen.uniform(0.15, 0.3) * min(h, w)
        level = gen.uniform(0.45, 0.85)
        shapes.append((kind, cy, cx, size, level))
    return base, ramp, shapes


def _render(proto, h, w, dy, dx, gain):
    base, ramp, shapes = proto
    img = base + ramp
    yy, xx = np.mgrid[0:h, 0:w]
    for kind, cy, cx, size, level in shapes:
        cy, cx = cy + dy, cx + dx
        if kind == 0:
            mask = (np.abs(yy - cy) <= size) & (np.abs(xx - cx) <= size)
        else:
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= size ** 2
        img = np.where(mask, level * gain + 0.5 * ramp, img)
    return np.clip(img, 0.0, 1.0)


def gen_images(spec: ImageSpec = ImageSpec()):
    """Piecewise-smooth grey images in [0, 1], one flattened image per row.

    Each class is a smooth ramp background with three flat shapes; every
    sample jitters the shapes by up to ``shift`` pixels and their contrast
    by ``contrast_jitter``.
    """
    if spec.classes < 2 or spec.per_class < 1:
        raise ParameterError("need >= 2 classes with >= 1 sample each")
    gen = SeededRng(spec.seed).generator
    h, w = spec.height, spec.width
    protos = [_prototype(gen, h, w) for _ in range(spec.classes)]
    rows = []
    for proto in protos:
        for _ in range(spec.per_class):
            dy, dx = gen.integers(-spec.shift, spec.shift + 1, size=2)
            gain = 1.0 + spec.contrast_jitter * gen.uniform(-1, 1)
            rows.append(_render(proto, h, w, dy, dx, gain).ravel())
    labels = np.repeat(np.arange(spec.classes), spec.per_class)
    return LabeledDataset(np.array(rows), labels, f"images-{h}x{w}-g{spec.classes}")


def add_gaussian_noise(X, mean, sigma, seed):
    """``X + N(mean, sigma^2)`` elementwise (``sigma`` is a standard deviation)."""
    if sigma < 0:
        raise ParameterError(f"sigma must be >= 0, got {sigma}")
    X = np.asarray(X, dtype=np.float64)
    gen = SeededRng(seed).generator
    return X + gen.normal(mean, sigma, size=X.shape)


def as_images(X, height, width):
    """Reshape each sample row into a ``height x width`` image (row-major)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if height * width != X.shape[1]:
        raise ParameterError(f"{height}x{width} images need {height * width} features, got {X.shape[1]}")
    return X.reshape(X.shape[0], height, width)
