"""Reference (numpy/scipy) implementations of the hot kernels.

Each function has a twin with the same signature in ``_ckernels.pyx``.
"""
import numpy as np
import scipy.sparse


def lowpass_csr(indptr, indices, data, X, k):
    """Return ``(I - L/2)^k X`` for ``L`` stored as CSR arrays.

    ``k`` successive sparse products; the matrix power is never formed.
    """
    n = len(indptr) - 1
    L = scipy.sparse.csr_matrix((data, indices, indptr), shape=(n, n))
    out = np.array(X, dtype=np.float64, order="C", copy=True)
    for _ in range(k):
        out = out - 0.5 * (L @ out)
    return out


def hungarian(cost):
    """Minimum-cost perfect matching of a square cost matrix.

    Shortest augmenting paths with dual potentials, O(n^3). Returns ``col``
    with row ``i`` assigned to column ``col[i]``.
    """
    a = np.asarray(cost, dtype=np.float64)
    n = a.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.intp)  # p[j]: row matched to column j (1-based, 0 = none)
    way = np.zeros(n + 1, dtype=np.intp)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[1:]
            cur = a[i0 - 1] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            masked = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(masked)) + 1
            delta = masked[j1 - 1]
            u[p[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    col = np.empty(n, dtype=np.intp)
    col[p[1:] - 1] = np.arange(n)
    return col


def lloyd_step(points, centers):
    """Assign points to their nearest center and accumulate cluster sums.

    Returns ``(labels, dist2, sums, counts)``; ties go to the lowest center
    index.
    """
    P = np.asarray(points, dtype=np.float64)
    C = np.asarray(centers, dtype=np.float64)
    g = C.shape[0]
    d2 = ((P[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1).astype(np.intp)
    dist2 = d2[np.arange(P.shape[0]), labels]
    sums = np.zeros_like(C)
    np.add.at(sums, labels, P)
    counts = np.bincount(labels, minlength=g).astype(np.intp)
    return labels, dist2, sums, counts
