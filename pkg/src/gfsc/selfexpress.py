"""Self-expressive coefficients (LSR / TRR) and the FLSR / FTRR loop.

The loop alternates between a least-squares self-representation of the
current smoothed features and re-filtering the raw features on the graph
that representation defines, until consecutive graphs agree.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ContractError, ParameterError
from .graph import GraphFilterSpec, apply_filter, normalized_laplacian
from .numerics import as_dense, solve_spd


@dataclass(frozen=True)
class LsrConfig:
    alpha: float
    zero_diag: bool = False

    def __post_init__(self):
        if not self.alpha > 0:
            raise ParameterError(f"alpha must be > 0, got {self.alpha!r}")


@dataclass(frozen=True)
class TrrConfig:
    base: LsrConfig
    p: int

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise ParameterError(f"p must be a positive integer, got {self.p!r}")


@dataclass(frozen=True)
class IterationConfig:
    """Settings of the alternating loop.

    ``refilter`` selects what each pass filters: ``"raw"`` re-filters the
    input features (so the filter order never compounds), ``"previous"``
    filters the previous pass's smoothed features instead.
    """

    filter_order: int
    epsilon: float = 1e-5
    max_iter: int = 50
    refilter: str = "raw"

    def __post_init__(self):
        if int(self.filter_order) != self.filter_order or self.filter_order < 0:
            raise ParameterError(f"filter order must be a non-negative integer, got {self.filter_order!r}")
        if not self.epsilon > 0:
            raise ParameterError(f"epsilon must be > 0, got {self.epsilon!r}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ParameterError(f"max_iter must be >= 1, got {self.max_iter!r}")
        if self.refilter not in ("raw", "previous"):
            raise ParameterError(f"refilter must be 'raw' or 'previous', got {self.refilter!r}")


@dataclass
class IterationRecord:
    iteration: int
    residual: float  # ||W_t - W_{t-1}||_F^2
    seconds: float
    snapshot: Optional[dict] = None


@dataclass
class IterationTrace:
    records: list = field(default_factory=list)
    converged: bool = False
    selected_iteration: int = 0

    @property
    def iterations(self):
        return len(self.records)

    @property
    def residuals(self):
        return [r.residual for r in self.records]


def lsr_coefficients(Xbar, cfg: LsrConfig):
    """Closed-form LSR coefficients ``Z = (X X^T + alpha I)^{-1} X X^T``.

    ``Xbar`` holds one sample per row. When there are fewer features than
    samples the identical matrix ``X (X^T X + alpha I)^{-1} X^T`` is
    computed instead, which only factors an m-by-m system.
    """
    X = as_dense(Xbar, "Xbar")
    n, m = X.shape
    if n < 2:
        raise ParameterError(f"need at least 2 samples, got {n}")
    if m < n:
        A = X.T @ X
        A[np.diag_indices_from(A)] += cfg.alpha
        Z = X @ solve_spd(A, X.T)
    else:
        G = X @ X.T
        A = G.copy()
        A[np.diag_indices_from(A)] += cfg.alpha
        Z = solve_spd(A, G)
    if cfg.zero_diag:
        np.fill_diagonal(Z, 0.0)
    return Z


def affinity_from_coefficients(Z):
    """``W = (|Z^T| + |Z|) / 2`` (exactly symmetric, nonnegative)."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[0] != Z.shape[1]:
        raise ContractError(f"coefficient matrix must be square, got shape {Z.shape}")
    A = np.abs(Z)
    return (A.T + A) / 2.0


def trr_threshold(W, p):
    """Keep the ``p`` largest-magnitude entries of every row, zero the rest.

    Ties go to the lowest column index. Signs of kept entries are preserved.
    """
    W = np.asarray(W.toarray() if hasattr(W, "toarray") else W, dtype=np.float64)
    if W.ndim != 2:
        raise ContractError(f"expected a 2-D matrix, got shape {W.shape}")
    n = W.shape[1]
    if int(p) != p or not 1 <= p <= n:
        raise ParameterError(f"p must be in [1, {n}], got {p!r}")
    if p == n:
        return W.copy()
    keep = np.argsort(-np.abs(W), axis=1, kind="stable")[:, :p]
    out = np.zeros_like(W)
    rows = np.arange(W.shape[0])[:, None]
    out[rows, keep] = W[rows, keep]
    return out


def lsr_affinity(X, cfg: LsrConfig):
    """One-shot LSR on unfiltered features, post-processed into an affinity."""
    return affinity_from_coefficients(lsr_coefficients(X, cfg))


def trr_affinity(X, cfg: TrrConfig):
    return affinity_from_coefficients(trr_threshold(lsr_affinity(X, cfg.base), cfg.p))


def run_flsr(X, lsr: LsrConfig, it: IterationConfig,
             on_iteration: Optional[Callable] = None):
    """Alternate LSR and graph filtering until the affinity settles.

    Pass ``t`` computes ``Z_t`` from the smoothed features ``Xbar_t``
    (``Xbar_1 = X``), takes ``W_t = |Z_t|`` and stops once
    ``||W_t - W_{t-1}||_F^2 < epsilon`` (``W_0 = 0``). Otherwise the raw
    features are filtered with order ``k`` on the normalized Laplacian of
    ``W_t`` to give ``Xbar_{t+1}``.

    ``on_iteration(t, W_t, Xbar_t)`` is called every pass; a dict it returns
    is stored as that pass's snapshot.

    Returns ``(W, trace)``. If ``max_iter`` passes do not converge, the
    graph with the smallest residual is returned and ``trace.converged`` is
    False.
    """
    X = as_dense(X, "X")
    Xbar = X
    W_prev = np.zeros((X.shape[0], X.shape[0]))
    trace = IterationTrace()
    best_W, best_res = None, np.inf
    for t in range(1, it.max_iter + 1):
        t0 = time.perf_counter()
        Z = lsr_coefficients(Xbar, lsr)
        # |Z| symmetrized: Z is symmetric up to rounding, and the Laplacian
        # needs exact symmetry
        W = affinity_from_coefficients(Z)
        residual = float(np.sum((W - W_prev) ** 2))
        snapshot = on_iteration(t, W, Xbar) if on_iteration is not None else None
        if residual < best_res:
            best_W, best_res = W, residual
            trace.selected_iteration = t
        done = residual < it.epsilon
        if not done and t < it.max_iter:
            spec = GraphFilterSpec(it.filter_order, normalized_laplacian(W))
            Xbar = apply_filter(spec, X if it.refilter == "raw" else Xbar)
            W_prev = W
        trace.records.append(IterationRecord(t, residual, time.perf_counter() - t0, snapshot))
        if done:
            trace.converged = True
            trace.selected_iteration = t
            return W, trace
    return best_W, trace


def run_ftrr(X, trr: TrrConfig, it: IterationConfig,
             on_iteration: Optional[Callable] = None):
    """:func:`run_flsr`, then top-``p`` thresholding of the final graph."""
    W, trace = run_flsr(X, trr.base, it, on_iteration)
    return affinity_from_coefficients(trr_threshold(W, trr.p)), trace
