"""Spectral clustering of an affinity matrix (Ng-Jordan-Weiss style).

Embedding: the ``g`` eigenvectors of the symmetric normalized Laplacian with
the smallest eigenvalues, rows scaled to unit length. Partition: k-means++
seeded Lloyd iterations, best of several restarts.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ParameterError
from .graph import normalized_laplacian
from .numerics import SeededRng, sym_eig

DEFAULT_RESTARTS = 20
DEFAULT_MAX_ITER = 300
DEFAULT_TOL = 1e-9


@dataclass
class ClusterAssignment:
    labels: np.ndarray
    g: int
    inertia: float = 0.0
    n_iter: int = 0
    inertia_history: list = field(default_factory=list)


def canonicalize_signs(U, rtol=1e-10):
    """Flip each column so its first non-negligible entry is positive."""
    U = np.array(U, dtype=np.float64, copy=True)
    for j in range(U.shape[1]):
        col = U[:, j]
        scale = np.max(np.abs(col)) if col.size else 0.0
        nz = np.flatnonzero(np.abs(col) > rtol * scale)
        if nz.size and col[nz[0]] < 0:
            U[:, j] = -col
    return U


def spectral_embed(W, g):
    """Row-normalized eigenvector embedding, one row per node.

    Rows that are exactly zero stay zero.
    """
    n = W.shape[0]
    if int(g) != g or not 1 <= g <= n:
        raise ParameterError(f"g must be in [1, {n}], got {g!r}")
    L = normalized_laplacian(W, sparse=False)
    eig = sym_eig(L.matrix, subset=(0, g - 1))
    U = canonicalize_signs(eig.eigenvectors)
    norms = np.linalg.norm(U, axis=1)
    nz = norms > 0
    U[nz] /= norms[nz, None]
    return U


def _kmeanspp(P, g, gen):
    n = P.shape[0]
    centers = np.empty((g, P.shape[1]))
    first = int(gen.integers(n))
    centers[0] = P[first]
    d2 = np.sum((P - P[first]) ** 2, axis=1)
    for c in range(1, g):
        total = d2.sum()
        if total > 0:
            idx = int(np.searchsorted(np.cumsum(d2), gen.random() * total, side="right"))
            idx = min(idx, n - 1)
        else:
            idx = int(gen.integers(n))
        centers[c] = P[idx]
        d2 = np.minimum(d2, np.sum((P - P[idx]) ** 2, axis=1))
    return centers


def _update_centers(P, centers, sums, counts, dist2):
    new = centers.copy()
    filled = counts > 0
    new[filled] = sums[filled] / counts[filled, None]
    empty = np.flatnonzero(~filled)
    if empty.size:
        far = np.argsort(-dist2, kind="stable")
        for c, idx in zip(empty, far):
            new[c] = P[idx]
    return new, bool(empty.size)


def _lloyd(P, g, gen, max_iter, tol):
    centers = _kmeanspp(P, g, gen)
    labels, d2, sums, counts = kernels.lloyd_step(P, centers)
    inertia = float(d2.sum())
    history = [inertia]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        centers, repaired = _update_centers(P, centers, sums, counts, d2)
        new_labels, d2, sums, counts = kernels.lloyd_step(P, centers)
        new_inertia = float(d2.sum())
        history.append(new_inertia)
        fixpoint = np.array_equal(new_labels, labels)
        stalled = inertia - new_inertia <= tol * inertia
        labels, inertia = new_labels, new_inertia
        if not repaired and np.all(counts > 0) and (fixpoint or stalled):
            break
    return labels, inertia, n_iter, history


def kmeans(points, g, rng: SeededRng, restarts=DEFAULT_RESTARTS,
           max_iter=DEFAULT_MAX_ITER, tol=DEFAULT_TOL):
    """Best-of-``restarts`` k-means; restart ``r`` draws from ``rng.child(r)``."""
    P = np.ascontiguousarray(points, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] == 0:
        raise ParameterError("k-means needs a non-empty 2-D point set")
    if int(g) != g or g < 1:
        raise ParameterError(f"g must be >= 1, got {g!r}")
    if restarts < 1:
        raise ParameterError(f"restarts must be >= 1, got {restarts!r}")
    g = min(int(g), P.shape[0])
    best = None
    for r in range(restarts):
        gen = rng.child(r).generator
        labels, inertia, n_iter, history = _lloyd(P, g, gen, max_iter, tol)
        if best is None or inertia < best.inertia:
            best = ClusterAssignment(labels.astype(np.int64), g, inertia, n_iter, history)
    return best


def cluster(W, g, rng: SeededRng, restarts=DEFAULT_RESTARTS):
    """Spectral clustering of ``W`` into ``g`` groups."""
    return kmeans(spectral_embed(W, g), g, rng, restarts=restarts)
