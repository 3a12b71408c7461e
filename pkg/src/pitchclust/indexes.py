"""Clustering validity indexes on (dissimilarity matrix, partition).

Five aspect indexes drive the composite quality score: average
within-cluster dissimilarity, separation of cluster borders, correlation of
the dissimilarities with the partition (pearson_gamma), entropy of the
cluster sizes, and bootstrap instability (bootstab). The remaining indexes
(asw, ch, dunn, cvnn, ari) are classical references for comparison.

Every index is invariant under relabeling of clusters and reordering of
points. Indexes undefined for a partition (e.g. separation at K=1) raise
UndefinedIndexError rather than returning a value.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .clusterers import as_square, get_method
from .errors import InvalidInputError, NumericError, UndefinedIndexError
from .rng import derive_rng

SMALLER_BETTER = "smaller_better"
LARGER_BETTER = "larger_better"

#: Fixed orientation per index id.
ORIENTATIONS = {
    "ave_within": SMALLER_BETTER,
    "sep": LARGER_BETTER,
    "pearson_gamma": LARGER_BETTER,
    "entropy": LARGER_BETTER,
    "bootstab": SMALLER_BETTER,
    "asw": LARGER_BETTER,
    "ch": LARGER_BETTER,
    "dunn": LARGER_BETTER,
    "cvnn": SMALLER_BETTER,
    "ari": LARGER_BETTER,
}

ASPECT_INDEXES = ("ave_within", "sep", "pearson_gamma", "entropy", "bootstab")


@dataclass(frozen=True)
class IndexValue:
    index_id: str
    value: float
    orientation: str

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise NumericError(f"{self.index_id} produced a non-finite value")


def make_index_value(index_id, value):
    return IndexValue(index_id, float(value), ORIENTATIONS[index_id])


def _checked_labels(sq, labels):
    labels = np.asarray(labels, dtype=np.int64)
    n = sq.shape[0]
    if labels.shape != (n,):
        raise InvalidInputError("labels must match the matrix size")
    k = int(labels.max(initial=0))
    if np.unique(labels).size != k or labels.min(initial=1) < 1:
        raise InvalidInputError("labels must cover 1..K with no empty cluster")
    return labels, k


def _cluster_indices(labels, k):
    return [np.flatnonzero(labels == c) for c in range(1, k + 1)]


def ave_within(D, labels):
    """Mean of per-cluster average dissimilarities, over ordered pairs.

    A cluster whose dissimilarities all equal d scores exactly d;
    singletons contribute zero.
    """
    sq = as_square(D)
    labels, k = _checked_labels(sq, labels)
    total = 0.0
    for members in _cluster_indices(labels, k):
        if members.size < 2:
            continue
        total += sq[np.ix_(members, members)].sum() / (members.size - 1)
    return total / sq.shape[0]


def separation_index(D, labels, p=0.1):
    """Average dissimilarity from cluster-border points to other clusters.

    Per cluster, the floor(p*n_k) smallest point-to-other-cluster distances
    (at least one) enter a pooled mean.
    """
    if not 0.0 < p <= 1.0:
        raise InvalidInputError("p must be in (0, 1]")
    sq = as_square(D)
    labels, k = _checked_labels(sq, labels)
    if k < 2:
        raise UndefinedIndexError("separation needs at least 2 clusters")
    other = labels[:, None] != labels[None, :]
    nearest_other = np.where(other, sq, np.inf).min(axis=1)
    total = 0.0
    count = 0
    for members in _cluster_indices(labels, k):
        take = max(1, int(math.floor(p * members.size)))
        vals = np.sort(nearest_other[members])[:take]
        total += float(vals.sum())
        count += take
    return total / count


def pearson_gamma(D, labels):
    """Pearson correlation between pairwise dissimilarities and the
    different-cluster indicator over pairs."""
    sq = as_square(D)
    labels, k = _checked_labels(sq, labels)
    iu = np.triu_indices(sq.shape[0], 1)
    d = sq[iu]
    c = (labels[:, None] != labels[None, :])[iu].astype(float)
    dc = d - d.mean()
    cc = c - c.mean()
    denom = math.sqrt(float(dc @ dc) * float(cc @ cc))
    if denom == 0.0:
        raise UndefinedIndexError(
            "pearson_gamma undefined for constant dissimilarities or K in {1, n}"
        )
    return float(dc @ cc) / denom


def entropy(labels):
    """Shannon entropy of the cluster size proportions (natural log)."""
    labels = np.asarray(labels, dtype=np.int64)
    sizes = np.bincount(labels)[1:]
    sizes = sizes[sizes > 0]
    p = sizes / labels.size
    return float(-(p * np.log(p)).sum())


def asw(D, labels):
    """Average silhouette width."""
    sq = as_square(D)
    labels, k = _checked_labels(sq, labels)
    n = sq.shape[0]
    if not 2 <= k < n:
        raise UndefinedIndexError("asw needs 2 <= K < n")
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels - 1] = 1.0
    sums = sq @ onehot
    counts = onehot.sum(axis=0)
    total = 0.0
    for i in range(n):
        own = labels[i] - 1
        if counts[own] == 1:
            continue  # silhouette of a singleton is 0
        a = sums[i, own] / (counts[own] - 1)
        b = np.inf
        for c in range(k):
            if c != own:
                b = min(b, sums[i, c] / counts[c])
        m = max(a, b)
        if m > 0:
            total += (b - a) / m
    return total / n


def ch(D, labels):
    """Calinski-Harabasz ratio generalized through squared dissimilarities."""
    sq = as_square(D)
    labels, k = _checked_labels(sq, labels)
    n = sq.shape[0]
    if not 2 <= k < n:
        raise UndefinedIndexError("ch needs 2 <= K < n")
    d2 = sq**2
    total = d2.sum() / 2.0 / n
    within = 0.0
    for members in _cluster_indices(labels, k):
        if members.size < 2:
            continue
        within += d2[np.ix_(members, members)].sum() / 2.0 / members.size
    between = total - within
    if within == 0.0:
        raise UndefinedIndexError("ch undefined for zero within-cluster scatter")
    return (between / (k - 1)) / (within / (n - k))


def dunn(D, labels):
    """Smallest between-cluster dissimilarity over the largest diameter."""
    sq = as_square(D)
    labels, k = _checked_labels(sq, labels)
    n = sq.shape[0]
    if not 2 <= k < n:
        raise UndefinedIndexError("dunn needs 2 <= K < n")
    different = labels[:, None] != labels[None, :]
    min_between = float(sq[different].min())
    same = ~different & ~np.eye(n, dtype=bool)
    max_diameter = float(sq[same].max()) if same.any() else 0.0
    if max_diameter == 0.0:
        raise UndefinedIndexError("dunn undefined for zero cluster diameters")
    return min_between / max_diameter


def cvnn(D, labelings, kappa=10):
    """Nearest-neighbour validity, normalized jointly over a candidate set.

    Separation is the worst per-cluster average fraction of each point's
    kappa nearest neighbours lying outside the point's cluster; compactness
    sums the average within-cluster dissimilarities. Both components are
    divided by their maximum across the candidate set and added, so values
    are only comparable within the set they were computed for.
    """
    sq = as_square(D)
    n = sq.shape[0]
    if not labelings:
        raise InvalidInputError("cvnn needs at least one clustering")
    kappa_eff = min(int(kappa), n - 1)
    if kappa_eff < 1:
        raise InvalidInputError("cvnn needs at least 2 points")
    order = np.argsort(sq + np.diag(np.full(n, np.inf)), axis=1, kind="stable")
    neighbors = order[:, :kappa_eff]
    seps = []
    coms = []
    for labels in labelings:
        labels, k = _checked_labels(sq, labels)
        outside = labels[neighbors] != labels[:, None]
        frac = outside.mean(axis=1)
        sep = 0.0
        com = 0.0
        for members in _cluster_indices(labels, k):
            sep = max(sep, float(frac[members].mean()))
            if members.size > 1:
                block = sq[np.ix_(members, members)].sum() / 2.0
                com += 2.0 * block / (members.size * (members.size - 1))
        seps.append(sep)
        coms.append(com)
    seps = np.asarray(seps)
    coms = np.asarray(coms)
    sep_norm = seps / seps.max() if seps.max() > 0 else np.zeros_like(seps)
    com_norm = coms / coms.max() if coms.max() > 0 else np.zeros_like(coms)
    return list(sep_norm + com_norm)


def ari(labels1, labels2):
    """Adjusted Rand index between two partitions of the same points."""
    l1 = np.asarray(labels1, dtype=np.int64)
    l2 = np.asarray(labels2, dtype=np.int64)
    if l1.shape != l2.shape:
        raise InvalidInputError("partitions must cover the same points")
    n = l1.size
    _, i1 = np.unique(l1, return_inverse=True)
    _, i2 = np.unique(l2, return_inverse=True)
    table = np.zeros((i1.max() + 1, i2.max() + 1), dtype=np.int64)
    np.add.at(table, (i1, i2), 1)

    def comb2(x):
        return x * (x - 1) / 2.0

    sum_ij = comb2(table.astype(float)).sum()
    sum_a = comb2(table.sum(axis=1).astype(float)).sum()
    sum_b = comb2(table.sum(axis=0).astype(float)).sum()
    expected = sum_a * sum_b / comb2(float(n))
    maximum = 0.5 * (sum_a + sum_b)
    if maximum == expected:
        return 1.0
    return float((sum_ij - expected) / (maximum - expected))


def bootstab(D, method, k, b=50, seed=0, classifier=None, max_redraws=100):
    """Bootstrap instability of a clustering method at a given K.

    Each iteration draws two with-replacement resamples, clusters the
    distinct points of each, classifies the points left out (nearest medoid
    for pam, otherwise smallest average dissimilarity to a cluster), and
    scores the fraction of point pairs whose co-membership differs between
    the two sides. Smaller is more stable; the value lies in [0, 1].
    """
    if b < 1:
        raise InvalidInputError("b must be at least 1")
    sq = as_square(D)
    n = sq.shape[0]
    if isinstance(method, str):
        method = get_method(method)
    if not 1 <= k <= n:
        raise InvalidInputError(f"k={k} outside 1..{n}")
    classify = classifier if classifier is not None else method.classify
    all_idx = np.arange(n)
    total = 0.0
    for it in range(b):
        rng = derive_rng(seed, "bootstab", method.name, k, it)
        for _ in range(max_redraws):
            s1 = np.unique(rng.integers(0, n, size=n))
            s2 = np.unique(rng.integers(0, n, size=n))
            if s1.size >= k and s2.size >= k:
                break
        else:
            raise NumericError(
                f"could not draw bootstrap samples with {k} distinct points"
            )
        pair = []
        for sample in (s1, s2):
            sub = sq[np.ix_(sample, sample)]
            fit = method.fit(sub, k, rng)
            out = np.setdiff1d(all_idx, sample, assume_unique=False)
            full = np.empty(n, dtype=np.int64)
            full[sample] = fit.labels
            full[out] = classify(sq, sample, fit, out)
            pair.append(full)
        total += _kernels.comembership_diff(pair[0], pair[1]) / float(n * n)
    return total / b
