"""Small linear-algebra layer: symmetric eigensolver, SPD solve, seeded RNG.

Everything here is a thin, contract-checked wrapper over LAPACK (through
numpy/scipy). Tolerances are relative to the Frobenius norm of the input.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ContractError, NumericalError

SYMMETRY_RTOL = 1e-10


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenpairs of a symmetric matrix, eigenvalues ascending.

    ``eigenvectors[:, i]`` belongs to ``eigenvalues[i]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_dense(A, name="matrix"):
    """Return ``A`` as a finite float64 2-D array."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ContractError(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ContractError(f"{name} has non-finite entries")
    return A


def check_symmetric(A, name="matrix", rtol=SYMMETRY_RTOL):
    A = as_dense(A, name)
    if A.shape[0] != A.shape[1]:
        raise ContractError(f"{name} must be square, got shape {A.shape}")
    scale = np.linalg.norm(A)
    if np.linalg.norm(A - A.T) > rtol * max(scale, np.finfo(float).tiny):
        raise ContractError(f"{name} is not symmetric")
    return A


def sym_eig(A, subset=None) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix.

    Parameters
    ----------
    A : (n, n) array_like
        Symmetric within 1e-10 relative Frobenius tolerance.
    subset : (lo, hi), optional
        Inclusive index range of the ascending eigenvalues to return. All
        eigenpairs are computed when omitted.
    """
    A = check_symmetric(A, "A")
    if A.shape[0] == 0:
        return EigenDecomposition(np.empty(0), np.empty((0, 0)))
    # LAPACK reads one triangle only; symmetrizing makes the result
    # independent of which one.
    A = 0.5 * (A + A.T)
    try:
        w, U = scipy.linalg.eigh(A, subset_by_index=subset, driver="evr" if subset else "evd")
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    return EigenDecomposition(w, U)


def solve_spd(A, B):
    """Solve ``A X = B`` for symmetric positive-definite ``A`` via Cholesky.

    Raises :class:`NumericalError` (with a condition estimate where one can
    be had) when ``A`` is singular or indefinite.
    """
    A = check_symmetric(A, "A", rtol=1e-8)
    B = np.asarray(B, dtype=np.float64)
    vector_rhs = B.ndim == 1
    if vector_rhs:
        B = B[:, None]
    if B.ndim != 2 or B.shape[0] != A.shape[0]:
        raise ContractError(f"B with shape {B.shape} is not row-compatible with A {A.shape}")
    if not np.all(np.isfinite(B)):
        raise ContractError("B has non-finite entries")
    try:
        factor = scipy.linalg.cho_factor(A, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        w = np.linalg.eigvalsh(A)
        if w[0] <= 0:
            diag = f"smallest eigenvalue {w[0]:.3e} (not positive definite)"
        else:
            diag = f"condition number {w[-1] / w[0]:.3e}"
        raise NumericalError(f"Cholesky factorization failed: {diag}") from exc
    X = scipy.linalg.cho_solve(factor, B, check_finite=False)
    return X[:, 0] if vector_rhs else X


class SeededRng:
    """Reproducible random stream: numpy ``Generator`` over PCG64.

    Two instances built from the same seed produce bit-identical draws.
    :meth:`child` derives independent streams keyed by an integer, so
    restart ``r`` always sees the same numbers whatever ran before it.
    """

    algorithm = "PCG64"

    def __init__(self, seed=0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.generator = np.random.Generator(np.random.PCG64(self.seed))

    def child(self, key):
        ss = np.random.SeedSequence([self.seed, int(key)])
        rng = SeededRng.__new__(SeededRng)
        rng.seed = self.seed
        rng.generator = np.random.Generator(np.random.PCG64(ss))
        return rng

    def __getattr__(self, name):
        return getattr(self.generator, name)

    def __repr__(self):
        return f"SeededRng(seed={self.seed}, algorithm={self.algorithm!r})"
