"""Dissimilarity-based clusterers and the candidate grid.

Six regular methods (PAM, single/average/complete linkage, a squared-update
generalization of Ward's method, spectral clustering) plus four random
clustering generators used for index calibration. Every clusterer returns a
partition with labels 1..K and no empty cluster, and is deterministic given
its random stream. Ties break toward the lowest index throughout.
"""

from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import linkage as _scipy_linkage
from scipy.spatial.distance import squareform

from . import _kernels
from .distmatrix import DissimilarityMatrix
from .errors import InvalidInputError, NumericError
from .rng import derive_rng

METHOD_NAMES = ("pam", "single", "average", "complete", "ward", "spectral")
RANDOM_SCHEMES = ("kcentroid", "nn", "fn", "avg")
_ATTACH_MODE = {"nn": 0, "fn": 1, "avg": 2}


def as_square(D):
    if isinstance(D, DissimilarityMatrix):
        return D.square()
    return np.asarray(D, dtype=np.float64)


@dataclass
class Clustering:
    """A partition with provenance."""

    labels: np.ndarray  # ids 1..k, every id present
    k: int
    method: str
    seed: int = None

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        present = np.unique(self.labels)
        if present.size != self.k or present[0] != 1 or present[-1] != self.k:
            raise InvalidInputError(
                f"labels must cover 1..{self.k} with no empty cluster"
            )

    @property
    def n(self):
        return self.labels.size

    def sizes(self):
        return np.bincount(self.labels, minlength=self.k + 1)[1:]


def relabel_by_first_occurrence(raw_labels):
    """Canonical 1..K ids in order of first appearance."""
    raw_labels = np.asarray(raw_labels)
    mapping = {}
    out = np.empty(raw_labels.size, dtype=np.int64)
    for i, lab in enumerate(raw_labels):
        if lab not in mapping:
            mapping[lab] = len(mapping) + 1
        out[i] = mapping[lab]
    return out


# ---------------------------------------------------------------------------
# PAM


@dataclass
class PamResult:
    labels: np.ndarray
    medoids: np.ndarray  # sorted point indices
    objective: float


def pam(D, k, seed=None):
    """Partitioning around medoids: greedy build, then steepest-descent swaps.

    The algorithm is deterministic; ``seed`` is carried for provenance only.
    """
    sq = as_square(D)
    n = sq.shape[0]
    if not 1 <= k <= n:
        raise InvalidInputError(f"k={k} outside 1..{n}")
    medoids = _kernels.pam_build(sq, k)
    medoids, objective = _kernels.pam_swap(sq, medoids)
    labels = np.argmin(sq[:, medoids], axis=1) + 1
    labels[medoids] = np.arange(1, k + 1)
    return PamResult(labels=labels, medoids=medoids, objective=float(objective))


# ---------------------------------------------------------------------------
# agglomerative hierarchy


@dataclass
class Dendrogram:
    """Merge sequence in scipy convention: step t joins ids merges[t] into n+t."""

    n: int
    merges: np.ndarray  # (n-1, 2) int
    heights: np.ndarray  # (n-1,)
    linkage: str


def hierarchical(D, linkage):
    """Agglomerate with single/average/complete linkage or squared-form Ward."""
    if linkage not in ("single", "average", "complete", "ward"):
        raise InvalidInputError(f"unknown linkage {linkage!r}")
    sq = as_square(D)
    n = sq.shape[0]
    if n < 2:
        raise InvalidInputError("need at least 2 points")
    condensed = squareform(sq, checks=False)
    Z = _scipy_linkage(condensed, method=linkage)
    return Dendrogram(
        n=n,
        merges=Z[:, :2].astype(np.int64),
        heights=Z[:, 2].copy(),
        linkage=linkage,
    )


def cut(dendrogram, k):
    """Partition into exactly k clusters by undoing the last k-1 merges."""
    n = dendrogram.n
    if not 1 <= k <= n:
        raise InvalidInputError(f"k={k} outside 1..{n}")
    members = {i: [i] for i in range(n)}
    for t in range(n - k):
        a, b = dendrogram.merges[t]
        members[n + t] = members.pop(int(a)) + members.pop(int(b))
    raw = np.empty(n, dtype=np.int64)
    for cid, pts in members.items():
        raw[pts] = cid
    return relabel_by_first_occurrence(raw)


# ---------------------------------------------------------------------------
# spectral


def _kmeans_pp_init(X, k, rng):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[int(rng.integers(n))]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total))
            idx = min(idx, n - 1)
        centers[c] = X[idx]
        np.minimum(d2, ((X - centers[c]) ** 2).sum(axis=1), out=d2)
    return centers


def _force_nonempty(labels, k, d2):
    """Give every missing cluster id one point, taken from the largest cluster."""
    for c in range(k):
        if (labels == c).any():
            continue
        sizes = np.bincount(labels, minlength=k)
        big = int(np.argmax(sizes))
        candidates = np.flatnonzero(labels == big)
        far = candidates[int(np.argmax(d2[candidates, big]))]
        labels[far] = c
    return labels


def _kmeans(X, k, rng, restarts=10, max_iter=100):
    n = X.shape[0]
    best_labels = None
    best_inertia = np.inf
    for _ in range(restarts):
        centers = _kmeans_pp_init(X, k, rng)
        labels = None
        for _ in range(max_iter):
            d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            new = d2.argmin(axis=1)
            new = _force_nonempty(new, k, d2)
            if labels is not None and np.array_equal(new, labels):
                break
            labels = new
            for c in range(k):
                centers[c] = X[labels == c].mean(axis=0)
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        inertia = float(d2[np.arange(n), labels].sum())
        if inertia < best_inertia:
            best_inertia = inertia
            best_labels = labels
    return best_labels + 1


def spectral(D, k, seed=None, rng=None, restarts=10):
    """Spectral clustering on a Gaussian similarity of the dissimilarities.

    Bandwidth is the median off-diagonal dissimilarity; the top-k
    eigenvectors of the symmetrically normalized similarity are
    row-normalized and clustered by seeded k-means with restarts.
    """
    sq = as_square(D)
    n = sq.shape[0]
    if not 1 <= k <= n:
        raise InvalidInputError(f"k={k} outside 1..{n}")
    if k == n:
        return np.arange(1, n + 1, dtype=np.int64)
    if k == 1:
        return np.ones(n, dtype=np.int64)
    if rng is None:
        rng = np.random.default_rng(seed)
    sigma = float(np.median(sq[~np.eye(n, dtype=bool)]))
    if sigma <= 0.0:
        sigma = 1.0
    S = np.exp(-(sq**2) / (2.0 * sigma**2))
    deg = S.sum(axis=1)
    dinv = 1.0 / np.sqrt(deg)
    L = S * dinv[:, None] * dinv[None, :]
    try:
        _, vectors = np.linalg.eigh(L)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"spectral embedding failed (n={n}, k={k}): {exc}") from exc
    emb = vectors[:, -k:]
    norms = np.linalg.norm(emb, axis=1)
    norms[norms == 0.0] = 1.0
    emb = emb / norms[:, None]
    return _kmeans(emb, k, rng, restarts=restarts)


# ---------------------------------------------------------------------------
# random clusterings (calibration material)


def random_clustering(D, k, scheme, seed=None, rng=None):
    """One random clustering: k seed points, then scheme-specific growth.

    kcentroid assigns every point to its nearest seed point; nn/fn/avg visit
    the remaining points in random order and attach each to the cluster with
    the smallest minimum / maximum / average dissimilarity to its members.
    """
    sq = as_square(D)
    n = sq.shape[0]
    if not 1 <= k <= n:
        raise InvalidInputError(f"k={k} outside 1..{n}")
    if scheme not in RANDOM_SCHEMES:
        raise InvalidInputError(f"unknown random scheme {scheme!r}")
    if rng is None:
        rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    seeds = perm[:k]
    if scheme == "kcentroid":
        labels = np.argmin(sq[:, seeds], axis=1).astype(np.int64) + 1
        labels[seeds] = np.arange(1, k + 1)
        return labels
    return _kernels.attach_sequential(sq, seeds, perm[k:], _ATTACH_MODE[scheme])


# ---------------------------------------------------------------------------
# method objects (uniform fit/classify interface, used by stability runs)


@dataclass
class FitResult:
    labels: np.ndarray
    medoids: np.ndarray = None


class ClusterMethod:
    """A re-runnable clusterer with an out-of-sample classification rule."""

    name = None

    def fit(self, sq, k, rng):
        raise NotImplementedError

    def fit_grid(self, sq, ks, rng_for_k):
        return {k: self.fit(sq, k, rng_for_k(k)) for k in ks}

    def classify(self, sq, sample_idx, fit_result, out_idx):
        """Assign out-of-sample points to the nearest cluster by average
        dissimilarity to its members."""
        if len(out_idx) == 0:
            return np.empty(0, dtype=np.int64)
        k = int(fit_result.labels.max())
        cross = sq[np.ix_(out_idx, sample_idx)]
        means = np.empty((len(out_idx), k))
        for c in range(1, k + 1):
            members = fit_result.labels == c
            means[:, c - 1] = cross[:, members].mean(axis=1)
        return means.argmin(axis=1).astype(np.int64) + 1


class PamMethod(ClusterMethod):
    name = "pam"

    def fit(self, sq, k, rng):
        result = pam(sq, k)
        return FitResult(labels=result.labels, medoids=result.medoids)

    def classify(self, sq, sample_idx, fit_result, out_idx):
        if len(out_idx) == 0:
            return np.empty(0, dtype=np.int64)
        # medoids are positions within the subsample, sorted ascending, and
        # carry labels 1..k in that order; map them to full-matrix indices
        full_medoids = np.asarray(sample_idx)[fit_result.medoids]
        return sq[np.ix_(out_idx, full_medoids)].argmin(axis=1).astype(np.int64) + 1


class LinkageMethod(ClusterMethod):
    def __init__(self, linkage):
        self.name = linkage

    def fit(self, sq, k, rng):
        return FitResult(labels=cut(hierarchical(sq, self.name), k))

    def fit_grid(self, sq, ks, rng_for_k):
        tree = hierarchical(sq, self.name)
        return {k: FitResult(labels=cut(tree, k)) for k in ks}


class SpectralMethod(ClusterMethod):
    name = "spectral"

    def fit(self, sq, k, rng):
        return FitResult(labels=spectral(sq, k, rng=rng))


class RandomSchemeMethod(ClusterMethod):
    def __init__(self, scheme):
        self.scheme = scheme
        self.name = f"random_{scheme}"

    def fit(self, sq, k, rng):
        return FitResult(labels=random_clustering(sq, k, self.scheme, rng=rng))


def get_method(name):
    if name == "pam":
        return PamMethod()
    if name in ("single", "average", "complete", "ward"):
        return LinkageMethod(name)
    if name == "spectral":
        return SpectralMethod()
    if name.startswith("random_") and name[7:] in RANDOM_SCHEMES:
        return RandomSchemeMethod(name[7:])
    raise InvalidInputError(f"unknown clustering method {name!r}")


def cluster_grid(D, methods, ks, master_seed):
    """All (method, k) candidates; each job draws its own derived stream."""
    sq = as_square(D)
    ks = sorted(set(int(k) for k in ks))
    for k in ks:
        if not 1 <= k <= sq.shape[0]:
            raise InvalidInputError(f"k={k} outside 1..{sq.shape[0]}")
    out = []
    for name in methods:
        method = get_method(name)
        fits = method.fit_grid(
            sq, ks, lambda k, _n=name: derive_rng(master_seed, "method", _n, k)
        )
        for k in ks:
            out.append(
                Clustering(
                    labels=fits[k].labels,
                    k=k,
                    method=name,
                    seed=master_seed,
                )
            )
    return out
