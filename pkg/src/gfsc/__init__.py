"""Subspace clustering on graph-filtered ("clustering-friendly") features.

Submodules: :mod:`numerics`, :mod:`graph`, :mod:`selfexpress`,
:mod:`spectral`, :mod:`metrics`, :mod:`data`, :mod:`cli`.
"""
from .kernels import BACKEND
from .selfexpress import (IterationConfig, LsrConfig, TrrConfig, lsr_coefficients,
                          run_flsr, run_ftrr)
from .spectral import cluster

__version__ = "0.1.0"

__all__ = ["BACKEND", "IterationConfig", "LsrConfig", "TrrConfig", "cluster",
           "lsr_coefficients", "run_flsr", "run_ftrr"]
