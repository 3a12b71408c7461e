"""Pure-NumPy kernel implementations.

These mirror the compiled Cython kernels in pitchclust._kernels._core; the
package selects one backend at import time. Semantics that matter for
reproducibility (tie-breaking by lowest index, visit order, update order)
are identical across backends.
"""

import numpy as np

BACKEND = "python"


def _first_within(values, best, tol, mask=None):
    """Lowest index whose value is within tol of the best value."""
    ok = values <= best + tol
    if mask is not None:
        ok &= mask
    return int(np.flatnonzero(ok)[0])


def pam_build(D, k):
    """Greedy medoid initialization: most central point first, then the
    point with the largest total dissimilarity decrease, k times.

    Near-ties (relative 1e-9) break toward the lowest index so that the
    compiled backend, which sums in a different order, picks identically.
    """
    n = D.shape[0]
    totals = D.sum(axis=0)
    best = float(totals.min())
    first = _first_within(totals, best, 1e-9 * (1.0 + abs(best)))
    medoids = np.empty(k, dtype=np.int64)
    medoids[0] = first
    ndist = D[:, first].copy()
    chosen = np.zeros(n, dtype=bool)
    chosen[first] = True
    for t in range(1, k):
        gains = np.where(ndist[:, None] > D, ndist[:, None] - D, 0.0).sum(axis=0)
        best_gain = float(gains[~chosen].max())
        j = _first_within(
            -gains, -best_gain, 1e-9 * (1.0 + abs(best_gain)), mask=~chosen
        )
        medoids[t] = j
        chosen[j] = True
        np.minimum(ndist, D[:, j], out=ndist)
    return medoids


def pam_swap(D, medoids):
    """Steepest-descent swap phase.

    Repeatedly evaluates every (medoid, non-medoid) exchange and applies the
    best strict decrease of the total dissimilarity to the nearest medoid;
    stops when no exchange improves. Near-ties (relative 1e-9) break toward
    the lowest medoid (in sorted order), then the lowest candidate index.

    Returns (sorted medoid indices, objective).
    """
    n = D.shape[0]
    meds = np.sort(np.asarray(medoids, dtype=np.int64))
    rows = np.arange(n)
    while True:
        Dm = D[:, meds]
        order = np.argsort(Dm, axis=1, kind="stable")
        npos = order[:, 0]
        ndist = Dm[rows, npos]
        sdist = Dm[rows, order[:, 1]] if meds.size > 1 else np.full(n, np.inf)
        objective = float(ndist.sum())
        if meds.size == n:
            return meds, objective
        nonmed = np.setdiff1d(rows, meds)
        Dh = D[:, nonmed]
        deltas = np.empty((meds.size, nonmed.size))
        for mi in range(meds.size):
            base = np.where(npos == mi, sdist, ndist)
            deltas[mi] = np.minimum(Dh, base[:, None]).sum(axis=0) - objective
        tol = 1e-9 * (1.0 + objective)
        best_delta = float(deltas.min())
        if best_delta >= -tol:
            return meds, objective
        flat = _first_within(deltas.ravel(), best_delta, tol)
        mi, h = divmod(flat, nonmed.size)
        meds = np.sort(np.concatenate([np.delete(meds, mi), [nonmed[h]]]))


def attach_sequential(D, seeds, order, mode):
    """Grow k clusters from seed points by visiting ``order`` and attaching
    each point to the cluster minimizing its linkage statistic.

    mode 0: minimum dissimilarity to members; mode 1: maximum; mode 2:
    average. Ties break toward the lowest cluster id. Returns labels 1..k.
    """
    n = D.shape[0]
    k = len(seeds)
    labels = np.zeros(n, dtype=np.int64)
    stat = D[np.asarray(seeds)].copy()
    counts = np.ones(k, dtype=np.int64)
    for c, s in enumerate(seeds):
        labels[s] = c + 1
    for p in order:
        vals = stat[:, p] / counts if mode == 2 else stat[:, p]
        c = int(np.argmin(vals))
        labels[p] = c + 1
        if mode == 0:
            np.minimum(stat[c], D[p], out=stat[c])
        elif mode == 1:
            np.maximum(stat[c], D[p], out=stat[c])
        else:
            stat[c] += D[p]
            counts[c] += 1
    return labels


def comembership_diff(labels1, labels2):
    """Number of ordered point pairs whose co-membership status differs
    between the two labelings (the diagonal never differs)."""
    a = labels1[:, None] == labels1[None, :]
    b = labels2[:, None] == labels2[None, :]
    return int(np.count_nonzero(a != b))
