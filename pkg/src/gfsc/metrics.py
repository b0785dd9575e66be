"""Evaluation: clustering ACC / NMI / purity, Fisher separability, PSNR, SSIM."""
from __future__ import annotations

import math
from itertools import combinations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import kernels
from .errors import ContractError, NumericalError, ParameterError
from .numerics import solve_spd

SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
FISHER_RIDGE = 1e-9


def _labels_pair(pred, truth):
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.shape != truth.shape:
        raise ParameterError(f"label vectors differ in length: {pred.size} vs {truth.size}")
    if pred.size == 0:
        raise ParameterError("label vectors are empty")
    return pred, truth


def contingency(pred, truth):
    """Counts ``C[i, j] = |{s : pred_s = i-th cluster, truth_s = j-th class}|``.

    Clusters and classes are indexed in sorted order of their label values.
    """
    pred, truth = _labels_pair(pred, truth)
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(truth, return_inverse=True)
    C = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(C, (pi, ti), 1)
    return C


def hungarian_assign(cost):
    """Optimal assignment for a square cost matrix (Kuhn-Munkres).

    Returns ``perm`` with row ``i`` matched to column ``perm[i]``.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ParameterError(f"cost matrix must be square, got shape {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise ParameterError("cost matrix has non-finite entries")
    if cost.shape[0] == 0:
        return np.empty(0, dtype=np.intp)
    return kernels.hungarian(cost)


def accuracy(pred, truth):
    """Fraction of samples correct under the best cluster-to-class mapping."""
    C = contingency(pred, truth)
    s = max(C.shape)
    padded = np.zeros((s, s), dtype=np.int64)
    padded[: C.shape[0], : C.shape[1]] = C
    perm = hungarian_assign(padded.max() - padded)
    return padded[np.arange(s), perm].sum() / C.sum()


def _entropy(counts, n):
    p = counts[counts > 0] / n
    return -math.fsum(p * np.log(p))


def nmi(pred, truth):
    """``I(Y, L) / sqrt(H(Y) H(L))`` with natural logarithms.

    Two identical single-cluster partitions score 1; otherwise a zero
    entropy on either side scores 0.
    """
    C = contingency(pred, truth)
    n = C.sum()
    rows, cols = C.sum(axis=1), C.sum(axis=0)
    h_pred, h_truth = _entropy(rows, n), _entropy(cols, n)
    if h_pred == 0.0 or h_truth == 0.0:
        return 1.0 if C.shape == (1, 1) else 0.0
    i, j = np.nonzero(C)
    pij = C[i, j] / n
    # fsum is order-independent, so nmi(a, b) == nmi(b, a) bit for bit
    mi = math.fsum(pij * np.log(C[i, j] * n / (rows[i] * cols[j])))
    return float(min(max(mi / math.sqrt(h_pred * h_truth), 0.0), 1.0))


def purity(pred, truth):
    """Share of samples that belong to their cluster's majority class."""
    C = contingency(pred, truth)
    return C.max(axis=1).sum() / C.sum()


def fisher_score(Xi, Xj, ridge=FISHER_RIDGE):
    """Fisher separability of two sample sets under the best projection:
    ``(mu_i - mu_j)^T (S_i + S_j)^{-1} (mu_i - mu_j)``.

    Covariances use the 1/n estimator; ``ridge * trace / m`` is added to the
    pooled covariance before the solve.
    """
    Xi = np.atleast_2d(np.asarray(Xi, dtype=np.float64))
    Xj = np.atleast_2d(np.asarray(Xj, dtype=np.float64))
    if Xi.shape[0] == 0 or Xj.shape[0] == 0:
        raise ParameterError("both classes need at least one sample")
    if Xi.shape[1] != Xj.shape[1]:
        raise ContractError(f"feature dimensions differ: {Xi.shape[1]} vs {Xj.shape[1]}")
    m = Xi.shape[1]
    diff = Xi.mean(axis=0) - Xj.mean(axis=0)
    if not np.any(diff):
        return 0.0
    Ci = Xi - Xi.mean(axis=0)
    Cj = Xj - Xj.mean(axis=0)
    S = Ci.T @ Ci / Xi.shape[0] + Cj.T @ Cj / Xj.shape[0]
    S[np.diag_indices(m)] += ridge * np.trace(S) / m
    return float(diff @ solve_spd(S, diff))


def mean_pairwise_fisher(X, labels, ridge=FISHER_RIDGE):
    """Average of :func:`fisher_score` over all unordered class pairs."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if classes.size < 2:
        raise ParameterError("need at least two classes")
    groups = [X[labels == c] for c in classes]
    scores = [fisher_score(a, b, ridge) for a, b in combinations(groups, 2)]
    return float(np.mean(scores))


def _image_pair(reference, candidate, data_range):
    ref = np.asarray(reference, dtype=np.float64)
    cand = np.asarray(candidate, dtype=np.float64)
    if ref.shape != cand.shape:
        raise ParameterError(f"image shapes differ: {ref.shape} vs {cand.shape}")
    if data_range is None:
        data_range = float(ref.max() - ref.min())
    if not data_range > 0:
        raise ParameterError("dynamic range must be > 0 (pass data_range for constant references)")
    return ref, cand, float(data_range)


def psnr(reference, candidate, data_range=None):
    """Peak signal-to-noise ratio in dB; ``inf`` for identical images."""
    ref, cand, peak = _image_pair(reference, candidate, data_range)
    mse = float(np.mean((ref - cand) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def _gaussian_window(size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    x = np.arange(size) - (size - 1) / 2.0
    w = np.exp(-(x ** 2) / (2.0 * sigma ** 2))
    return w / w.sum()


def _filter_valid(img, w):
    out = sliding_window_view(img, w.size, axis=0) @ w
    return sliding_window_view(out, w.size, axis=1) @ w


def ssim(reference, candidate, data_range=None):
    """Mean structural similarity over 11x11 Gaussian windows (sigma 1.5).

    Images smaller than the window are compared as a single global window.
    """
    x, y, L = _image_pair(reference, candidate, data_range)
    if x.ndim != 2:
        raise ParameterError(f"SSIM expects 2-D images, got shape {x.shape}")
    C1 = (SSIM_K1 * L) ** 2
    C2 = (SSIM_K2 * L) ** 2
    if min(x.shape) < SSIM_WINDOW:
        mx, my = x.mean(), y.mean()
        vx, vy = x.var(), y.var()
        cxy = np.mean((x - mx) * (y - my))
    else:
        w = _gaussian_window()
        mx, my = _filter_valid(x, w), _filter_valid(y, w)
        vx = _filter_valid(x * x, w) - mx * mx
        vy = _filter_valid(y * y, w) - my * my
        cxy = _filter_valid(x * y, w) - mx * my
    num = (2 * mx * my + C1) * (2 * cxy + C2)
    den = (mx * mx + my * my + C1) * (vx + vy + C2)
    return float(np.mean(num / den))


def mean_image_scores(references, candidates, data_range):
    """Mean PSNR (infinite values excluded) and mean SSIM over image pairs."""
    ps, ss = [], []
    for r, c in zip(references, candidates):
        ps.append(psnr(r, c, data_range))
        ss.append(ssim(r, c, data_range))
    finite = [p for p in ps if math.isfinite(p)]
    mean_psnr = float(np.mean(finite)) if finite else math.inf
    return mean_psnr, float(np.mean(ss))
