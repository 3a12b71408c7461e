"""Calibration of validity indexes against random clusterings, and the
weighted composite quality score.

Raw index values are not comparable across indexes. They are standardized
against a pool holding both the method-produced candidate clusterings and a
large family of random clusterings (four schemes, many replicates per K):
subtract the pool mean, divide by the pool standard deviation. Two modes:
C1 pools across all K; C2 standardizes each K stratum separately. Oriented,
calibrated values are then averaged with user weights into one score per
candidate clustering.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import indexes as idx
from .clusterers import RANDOM_SCHEMES, as_square, random_clustering
from .errors import (
    DegenerateCalibrationError,
    InvalidInputError,
    UndefinedIndexError,
)
from .indexes import ASPECT_INDEXES, LARGER_BETTER, ORIENTATIONS
from .rng import derive_rng, derive_seed

CALIBRATION_MODES = ("C1", "C2")
DEFAULT_B_CALIBRATION = 100
DEFAULT_B_BOOTSTAB = 50


@dataclass(frozen=True)
class WeightProfile:
    """Nonnegative weights over the aspect indexes; at least one positive."""

    name: str
    weights: dict

    def __post_init__(self):
        unknown = set(self.weights) - set(ASPECT_INDEXES)
        if unknown:
            raise InvalidInputError(f"unknown indexes in profile: {sorted(unknown)}")
        vals = [self.weights.get(i, 0.0) for i in ASPECT_INDEXES]
        if any(w < 0 for w in vals):
            raise InvalidInputError("weights must be nonnegative")
        if sum(vals) <= 0:
            raise InvalidInputError("at least one weight must be positive")

    def vector(self):
        return np.array([self.weights.get(i, 0.0) for i in ASPECT_INDEXES])


#: All aspects weighted equally.
PROFILE_UNIFORM = WeightProfile(
    "uniform", {i: 1.0 for i in ASPECT_INDEXES}
)
#: Separation half-weighted: favours homogeneous, balanced, stable clusters.
PROFILE_BALANCED = WeightProfile(
    "balanced",
    {"ave_within": 1.0, "sep": 0.5, "pearson_gamma": 1.0, "entropy": 1.0,
     "bootstab": 1.0},
)
#: Stability-led profile for fine-grained clusterings.
PROFILE_STABILITY = WeightProfile(
    "stability",
    {"entropy": 0.5, "bootstab": 1.0},
)

DEFAULT_PROFILES = (PROFILE_UNIFORM, PROFILE_BALANCED)


def orient(values, index_id):
    """Flip smaller-is-better values so that larger is always better."""
    sign = 1.0 if ORIENTATIONS[index_id] == LARGER_BETTER else -1.0
    if np.isscalar(values):
        return sign * values
    return sign * np.asarray(values, dtype=float)


@dataclass
class PoolEntry:
    """One clustering to be scored: a grid candidate or a random clustering."""

    method: str
    k: int
    labels: np.ndarray
    tag: tuple  # ("panel",) or ("pool", replicate); part of the seed stream


def random_pool(D, ks, b, master_seed):
    """Random clusterings for calibration: b replicates per scheme per K."""
    if b < 1:
        raise InvalidInputError("b must be at least 1")
    sq = as_square(D)
    entries = []
    for scheme in RANDOM_SCHEMES:
        for k in ks:
            for r in range(b):
                rng = derive_rng(master_seed, "random", scheme, k, r)
                labels = random_clustering(sq, k, scheme, rng=rng)
                entries.append(
                    PoolEntry(f"random_{scheme}", k, labels, ("pool", r))
                )
    return entries


def evaluate_indexes(D, entries, index_ids, master_seed, *, sep_p=0.1,
                     bootstab_b=DEFAULT_B_BOOTSTAB, threads=1):
    """Raw index values for every entry; NaN marks undefined combinations."""
    sq = as_square(D)

    def one(entry):
        row = {}
        for index_id in index_ids:
            try:
                if index_id == "ave_within":
                    value = idx.ave_within(sq, entry.labels)
                elif index_id == "sep":
                    value = idx.separation_index(sq, entry.labels, p=sep_p)
                elif index_id == "pearson_gamma":
                    value = idx.pearson_gamma(sq, entry.labels)
                elif index_id == "entropy":
                    value = idx.entropy(entry.labels)
                elif index_id == "bootstab":
                    value = idx.bootstab(
                        sq, entry.method, entry.k, b=bootstab_b,
                        seed=derive_seed(master_seed, "bootstab-run", *entry.tag),
                    )
                elif index_id == "asw":
                    value = idx.asw(sq, entry.labels)
                elif index_id == "ch":
                    value = idx.ch(sq, entry.labels)
                elif index_id == "dunn":
                    value = idx.dunn(sq, entry.labels)
                else:
                    raise InvalidInputError(f"unknown index {index_id!r}")
            except UndefinedIndexError:
                value = np.nan
            row[index_id] = value
        return row

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, entries))
    else:
        rows = [one(e) for e in entries]
    return {
        index_id: np.array([r[index_id] for r in rows], dtype=float)
        for index_id in index_ids
    }


def calibrate(values, ks, mode, index_id=""):
    """Standardize values against their own pool (all entries given).

    C1 uses one pool across all K; C2 standardizes each K stratum on its
    own. NaN entries are excluded from pool statistics and stay NaN. The
    standard deviation uses denominator (pool size - 1).
    """
    if mode not in CALIBRATION_MODES:
        raise InvalidInputError(f"mode must be one of {CALIBRATION_MODES}")
    values = np.asarray(values, dtype=float)
    ks = np.asarray(ks, dtype=np.int64)
    if values.shape != ks.shape:
        raise InvalidInputError("values and ks must align")
    out = np.full(values.shape, np.nan)
    strata = [slice(None)] if mode == "C1" else [ks == k for k in np.unique(ks)]
    for stratum in strata:
        vals = values[stratum]
        defined = ~np.isnan(vals)
        pool = vals[defined]
        if pool.size < 2:
            raise DegenerateCalibrationError(
                f"index {index_id or '?'}: calibration pool too small"
            )
        sd = float(np.std(pool, ddof=1))
        if sd == 0.0:
            raise DegenerateCalibrationError(
                f"index {index_id or '?'}: zero pooled standard deviation"
            )
        standardized = np.full(vals.shape, np.nan)
        standardized[defined] = (pool - pool.mean()) / sd
        out[stratum] = standardized
    return out


def composite(star_matrix, profile):
    """Weighted mean of calibrated index values per candidate."""
    star = np.asarray(star_matrix, dtype=float)
    w = profile.vector() if isinstance(profile, WeightProfile) else np.asarray(profile, float)
    if star.ndim != 2 or star.shape[1] != w.size:
        raise InvalidInputError("star matrix and weights must align")
    active = w > 0
    if np.isnan(star[:, active]).any():
        raise InvalidInputError(
            "a positively weighted index is missing for some candidate"
        )
    filled = np.where(np.isnan(star), 0.0, star)
    return (filled @ w) / w.sum()


@dataclass
class RankedCandidate:
    method: str
    k: int
    value: float


def rank_candidates(candidates, values):
    """Descending by value; ties prefer smaller K, then method name."""
    if len(candidates) != len(values):
        raise InvalidInputError("candidates and values must align")
    rows = [
        RankedCandidate(c.method, int(c.k), float(v))
        for c, v in zip(candidates, values)
    ]
    return sorted(rows, key=lambda r: (-r.value, r.k, r.method))


@dataclass
class CalibratedPanel:
    """Everything needed to rank candidates and audit the calibration."""

    candidates: list
    mode: str
    raw: dict = field(default_factory=dict)  # index -> values over candidates
    star: dict = field(default_factory=dict)  # oriented calibrated values
    pool_raw: dict = field(default_factory=dict)
    pool_star: dict = field(default_factory=dict)
    pool_ks: np.ndarray = None

    def star_matrix(self, index_ids=ASPECT_INDEXES):
        return np.column_stack([self.star[i] for i in index_ids])

    def composites(self, profiles):
        return {p.name: composite(self.star_matrix(), p) for p in profiles}


def calibrate_panel(D, candidates, ks, master_seed, *, mode="C1",
                    b_calibration=DEFAULT_B_CALIBRATION,
                    b_bootstab=DEFAULT_B_BOOTSTAB, sep_p=0.1, threads=1,
                    index_ids=ASPECT_INDEXES):
    """Build the random pool, evaluate raw indexes, and calibrate.

    ``candidates`` are grid clusterings (Clustering objects). Random
    clusterings enter the pool statistics but are never ranked.
    """
    panel_entries = [
        PoolEntry(c.method, c.k, c.labels, ("panel",)) for c in candidates
    ]
    pool_entries = random_pool(D, ks, b_calibration, master_seed)
    raw_panel = evaluate_indexes(
        D, panel_entries, index_ids, master_seed,
        sep_p=sep_p, bootstab_b=b_bootstab, threads=threads,
    )
    raw_pool = evaluate_indexes(
        D, pool_entries, index_ids, master_seed,
        sep_p=sep_p, bootstab_b=b_bootstab, threads=threads,
    )
    panel = CalibratedPanel(candidates=list(candidates), mode=mode)
    panel.pool_ks = np.array([e.k for e in pool_entries], dtype=np.int64)
    all_ks = np.concatenate([np.array([c.k for c in candidates]), panel.pool_ks])
    n_panel = len(candidates)
    for index_id in index_ids:
        panel.raw[index_id] = raw_panel[index_id]
        panel.pool_raw[index_id] = raw_pool[index_id]
        oriented = orient(
            np.concatenate([raw_panel[index_id], raw_pool[index_id]]), index_id
        )
        star = calibrate(oriented, all_ks, mode, index_id=index_id)
        panel.star[index_id] = star[:n_panel]
        panel.pool_star[index_id] = star[n_panel:]
    return panel
