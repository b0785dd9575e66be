"""Graph side: normalized Laplacians, the k-order low-pass filter, signal
smoothness and the Gaussian kNN prior graph.

Columns of a feature matrix (one row per sample / node) are treated as graph
signals. The filter ``(I - L_s/2)^k`` is always applied by ``k`` successive
products; for graphs with at least 90% zero weights the Laplacian is stored
in CSR form and the product runs through :func:`gfsc.kernels.lowpass_csr`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse
from scipy.spatial.distance import cdist

from . import kernels
from .errors import ContractError, ParameterError
from .numerics import sym_eig

SPARSE_ZERO_FRACTION = 0.9
SPECTRUM_TOL = 1e-8


def _is_sparse(M):
    return scipy.sparse.issparse(M)


def _zero_fraction(M):
    n = M.shape[0] * M.shape[1]
    if n == 0:
        return 0.0
    nnz = M.nnz if _is_sparse(M) else np.count_nonzero(M)
    return 1.0 - nnz / n


def check_affinity(W):
    """Validate an affinity matrix and return it as float64 (dense or CSR)."""
    if _is_sparse(W):
        W = scipy.sparse.csr_matrix(W, dtype=np.float64)
        vals = W.data
        diff = abs(W - W.T)
        asym = diff.max() if diff.nnz else 0.0
    else:
        W = np.asarray(W, dtype=np.float64)
        if W.ndim != 2:
            raise ContractError(f"affinity must be 2-D, got shape {W.shape}")
        vals = W
        asym = np.max(np.abs(W - W.T)) if W.size else 0.0
    if W.shape[0] != W.shape[1]:
        raise ContractError(f"affinity must be square, got shape {W.shape}")
    if not np.all(np.isfinite(vals)):
        raise ContractError("affinity has non-finite weights")
    if np.any(vals < 0):
        raise ContractError("affinity has negative weights")
    if asym > 1e-10:
        raise ContractError(f"affinity is not symmetric (max |w_ij - w_ji| = {asym:.3e})")
    return W


@dataclass(frozen=True)
class NormalizedLaplacian:
    """``L_s = I - D^{-1/2} W D^{-1/2}`` together with the degree vector.

    ``matrix`` is a dense ndarray or a ``scipy.sparse.csr_matrix``. Isolated
    nodes (degree 0) get ``d^{-1/2} = 0``, so their row is the identity row.
    """

    matrix: object
    degree: np.ndarray

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def is_sparse(self):
        return _is_sparse(self.matrix)

    def dense(self):
        return self.matrix.toarray() if self.is_sparse else self.matrix


def normalized_laplacian(W, sparse=None):
    """Symmetric normalized Laplacian of an affinity matrix.

    ``sparse=None`` picks CSR storage when at least 90% of the weights are
    zero; ``True``/``False`` force the choice.
    """
    W = check_affinity(W)
    n = W.shape[0]
    if sparse is None:
        sparse = _zero_fraction(W) >= SPARSE_ZERO_FRACTION
    degree = np.asarray(W.sum(axis=1)).ravel()
    with np.errstate(divide="ignore"):
        inv_sqrt = np.where(degree > 0, 1.0 / np.sqrt(degree), 0.0)
    if sparse:
        Dm = scipy.sparse.diags(inv_sqrt)
        S = Dm @ scipy.sparse.csr_matrix(W) @ Dm
        L = (scipy.sparse.identity(n, format="csr") - S).tocsr()
        L.sum_duplicates()
        L.sort_indices()
        L = (L + L.T) * 0.5
        L = scipy.sparse.csr_matrix(L)
    else:
        W = W.toarray() if _is_sparse(W) else W
        S = inv_sqrt[:, None] * W * inv_sqrt[None, :]
        L = np.eye(n) - S
        # exact symmetry, independent of the rounding in the scaling above
        L = 0.5 * (L + L.T)
    return NormalizedLaplacian(L, degree)


@dataclass(frozen=True)
class GraphFilterSpec:
    """Filter ``(I - L_s/2)^order``; order 0 is the identity."""

    order: int
    laplacian: NormalizedLaplacian

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 0:
            raise ParameterError(f"filter order must be a non-negative integer, got {self.order!r}")


def apply_filter(spec: GraphFilterSpec, X):
    """Smooth the columns of ``X``: ``(I - L_s/2)^k X`` by ``k`` products."""
    X = np.asarray(X, dtype=np.float64)
    vector = X.ndim == 1
    if vector:
        X = X[:, None]
    L = spec.laplacian.matrix
    if X.shape[0] != L.shape[0]:
        raise ContractError(f"signal has {X.shape[0]} rows but the graph has {L.shape[0]} nodes")
    k = int(spec.order)
    if k == 0:
        out = X.copy()
    elif spec.laplacian.is_sparse:
        out = kernels.lowpass_csr(
            np.ascontiguousarray(L.indptr, dtype=np.int32),
            np.ascontiguousarray(L.indices, dtype=np.int32),
            np.ascontiguousarray(L.data, dtype=np.float64),
            X,
            k,
        )
    else:
        # (I - L/2) formed once; k dense products follow
        P = np.eye(L.shape[0]) - 0.5 * L
        out = X
        for _ in range(k):
            out = P @ out
    return out[:, 0] if vector else out


def apply_filter_spectral(spec: GraphFilterSpec, X):
    """Diagnostics path: the same filter through the eigenbasis of ``L_s``."""
    X = np.asarray(X, dtype=np.float64)
    eig = sym_eig(spec.laplacian.dense())
    lam = np.clip(eig.eigenvalues, 0.0, 2.0)
    h = frequency_response(spec.order, lam)
    U = eig.eigenvectors
    return U @ (h[:, None] * (U.T @ X)) if X.ndim == 2 else U @ (h * (U.T @ X))


def smoothness_energy(L: NormalizedLaplacian, f):
    """``f^T L_s f``: zero for the smoothest signal, larger for rough ones.

    A 2-D ``f`` returns one energy per column.
    """
    f = np.asarray(f, dtype=np.float64)
    if f.shape[0] != L.n:
        raise ContractError(f"signal has {f.shape[0]} entries but the graph has {L.n} nodes")
    Lf = L.matrix @ f
    return np.sum(f * Lf, axis=0) if f.ndim == 2 else float(f @ Lf)


def frequency_response(k, lam):
    """Low-pass response ``(1 - lam/2)^k`` on the normalized spectrum [0, 2]."""
    lam_arr = np.asarray(lam, dtype=np.float64)
    if k < 0:
        raise ParameterError(f"filter order must be >= 0, got {k}")
    if np.any(lam_arr < -SPECTRUM_TOL) or np.any(lam_arr > 2 + SPECTRUM_TOL):
        raise ContractError("eigenvalue outside the normalized spectrum [0, 2]")
    out = np.clip(1.0 - np.clip(lam_arr, 0.0, 2.0) / 2.0, 0.0, 1.0) ** k
    return float(out) if np.ndim(lam) == 0 else out


def knn_affinity(X, neighbors, scale_neighbor=7, sparse=None):
    """Gaussian kNN graph with self-tuning bandwidths.

    Each sample links to its ``neighbors`` nearest samples with weight
    ``exp(-||x_i - x_j||^2 / (sigma_i sigma_j))``, ``sigma_i`` being the
    distance to its ``scale_neighbor``-th neighbor. The union of the
    directed links is symmetrized by elementwise maximum; the diagonal is
    zero. Ties in distance go to the lower sample index.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= neighbors < n:
        raise ParameterError(f"neighbors must be in [1, {n - 1}], got {neighbors}")
    D2 = cdist(X, X, "sqeuclidean")
    np.fill_diagonal(D2, np.inf)
    order = np.argsort(D2, axis=1, kind="stable")
    rows = np.arange(n)
    scale_idx = min(scale_neighbor, n - 1) - 1
    sigma = np.sqrt(D2[rows, order[:, scale_idx]])
    positive = sigma[sigma > 0]
    floor = positive.min() * 1e-6 if positive.size else 1.0
    sigma = np.maximum(sigma, floor)

    nbr = order[:, :neighbors]
    r = np.repeat(rows, neighbors)
    c = nbr.ravel()
    d2 = D2[r, c]
    w = np.exp(-d2 / (sigma[r] * sigma[c]))
    # selected edges stay edges even if the kernel underflows
    w = np.maximum(w, np.finfo(np.float64).tiny)

    A = scipy.sparse.csr_matrix((w, (r, c)), shape=(n, n))
    W = A.maximum(A.T).tocsr()
    W.sort_indices()
    if sparse is None:
        sparse = _zero_fraction(W) >= SPARSE_ZERO_FRACTION
    return W if sparse else W.toarray()
