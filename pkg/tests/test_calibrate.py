import math

import numpy as np
import pytest

from pitchclust.calibrate import (
    PROFILE_BALANCED,
    PROFILE_UNIFORM,
    WeightProfile,
    calibrate,
    calibrate_panel,
    composite,
    orient,
    random_pool,
    rank_candidates,
)
from pitchclust.clusterers import cluster_grid
from pitchclust.errors import (
    DegenerateCalibrationError,
    InvalidInputError,
)
from pitchclust.indexes import ASPECT_INDEXES

from naive import random_euclidean_dissim, two_group_dissim


class TestOrient:
    def test_smaller_better_is_negated(self):
        assert orient(0.4, "ave_within") == -0.4
        assert orient(0.02, "bootstab") == -0.02

    def test_larger_better_unchanged(self):
        assert orient(0.7, "pearson_gamma") == 0.7

    def test_vector(self):
        np.testing.assert_allclose(
            orient(np.array([1.0, -2.0]), "cvnn"), [-1.0, 2.0]
        )


class TestCalibrate:
    def test_pool_mean_maps_to_zero(self):
        values = np.array([3.0, 5.0, 7.0, 5.0])
        ks = np.full(4, 3)
        star = calibrate(values, ks, "C1")
        assert star[1] == pytest.approx(0.0)
        assert star[3] == pytest.approx(0.0)

    def test_two_value_pool(self):
        star = calibrate(np.array([0.0, 2.0]), np.array([2, 2]), "C1")
        np.testing.assert_allclose(
            star, [-1 / math.sqrt(2), 1 / math.sqrt(2)]
        )

    def test_c1_pool_is_standardized(self):
        rng = np.random.default_rng(0)
        values = rng.normal(5, 2, 400)
        ks = rng.integers(2, 9, 400)
        star = calibrate(values, ks, "C1")
        assert abs(star.mean()) < 1e-9
        assert abs(star.std(ddof=1) - 1.0) < 1e-9

    def test_c2_strata_are_standardized_independently(self):
        rng = np.random.default_rng(1)
        values = rng.normal(0, 1, 300)
        ks = rng.integers(2, 6, 300)
        star = calibrate(values, ks, "C2")
        for k in np.unique(ks):
            stratum = star[ks == k]
            assert abs(stratum.mean()) < 1e-9
            assert abs(stratum.std(ddof=1) - 1.0) < 1e-9

    def test_c2_stratum_isolation(self):
        values = np.array([1.0, 2.0, 10.0, 20.0])
        ks = np.array([2, 2, 3, 3])
        star = calibrate(values, ks, "C2")
        values2 = values.copy()
        values2[2:] = [100.0, -50.0]
        star2 = calibrate(values2, ks, "C2")
        np.testing.assert_allclose(star[:2], star2[:2])

    def test_nan_excluded_and_preserved(self):
        values = np.array([1.0, np.nan, 3.0, 5.0])
        star = calibrate(values, np.full(4, 2), "C1")
        assert np.isnan(star[1])
        assert abs(np.nanmean(star)) < 1e-12

    def test_zero_sd_degenerate(self):
        with pytest.raises(DegenerateCalibrationError):
            calibrate(np.array([2.0, 2.0, 2.0]), np.full(3, 2), "C1")

    def test_unknown_mode(self):
        with pytest.raises(InvalidInputError):
            calibrate(np.array([1.0, 2.0]), np.array([2, 2]), "C3")


class TestComposite:
    def test_equal_weights_all_ones(self):
        star = np.ones((1, 5))
        assert composite(star, PROFILE_UNIFORM)[0] == pytest.approx(1.0)

    def test_balanced_profile_weighted_mean(self):
        star = np.array([[1.0, 2.0, 3.0, 4.0, 5.0]])
        assert composite(star, PROFILE_BALANCED)[0] == pytest.approx(14 / 4.5)

    def test_zero_weight_index_ignored(self):
        profile = WeightProfile("p", {"ave_within": 1.0, "entropy": 1.0})
        a = composite(np.array([[1.0, 9.0, -4.0, 2.0, 0.0]]), profile)
        b = composite(np.array([[1.0, -3.0, 17.0, 2.0, 9.0]]), profile)
        assert a[0] == pytest.approx(b[0])

    def test_weight_rescaling_invariance(self):
        star = np.array([[0.3, -0.7, 1.1, 0.2, -0.4]])
        w = np.array([1.0, 0.5, 1.0, 1.0, 1.0])
        assert composite(star, w)[0] == pytest.approx(composite(star, 3.7 * w)[0])

    def test_monotone_in_each_weighted_index(self):
        star = np.array([[0.0, 0.0, 0.0, 0.0, 0.0]])
        bumped = star.copy()
        bumped[0, 2] = 0.5
        assert composite(bumped, PROFILE_UNIFORM)[0] > composite(
            star, PROFILE_UNIFORM
        )[0]

    def test_missing_weighted_index_rejected(self):
        star = np.array([[1.0, np.nan, 0.0, 0.0, 0.0]])
        with pytest.raises(InvalidInputError):
            composite(star, PROFILE_UNIFORM)

    def test_profile_validation(self):
        with pytest.raises(InvalidInputError):
            WeightProfile("bad", {"ave_within": -1.0})
        with pytest.raises(InvalidInputError):
            WeightProfile("bad", {"ave_within": 0.0})
        with pytest.raises(InvalidInputError):
            WeightProfile("bad", {"nope": 1.0})


def _build_panel():
    D, _ = two_group_dissim(np.random.default_rng(4), 24)
    ks = (2, 3, 4)
    candidates = cluster_grid(D, ("pam", "average", "ward"), ks, 7)
    return calibrate_panel(
        D, candidates, ks, 7, mode="C2", b_calibration=20, b_bootstab=4
    )


class _Cand:
    def __init__(self, method, k):
        self.method = method
        self.k = k


class TestRankCandidates:
    def test_descending_with_fixture_values(self):
        cands = [_Cand("ward", 6), _Cand("ward", 5)]
        ranked = rank_candidates(cands, [1.336, 1.386])
        assert [(r.method, r.k, r.value) for r in ranked] == [
            ("ward", 5, 1.386),
            ("ward", 6, 1.336),
        ]

    def test_single_candidate(self):
        ranked = rank_candidates([_Cand("pam", 3)], [0.5])
        assert ranked[0].method == "pam"

    def test_tie_prefers_smaller_k_then_name(self):
        cands = [_Cand("ward", 7), _Cand("pam", 3), _Cand("average", 3)]
        ranked = rank_candidates(cands, [1.0, 1.0, 1.0])
        assert [(r.method, r.k) for r in ranked] == [
            ("average", 3), ("pam", 3), ("ward", 7),
        ]

    def test_input_order_irrelevant(self):
        cands = [_Cand("pam", 2), _Cand("ward", 4), _Cand("single", 3)]
        values = [0.3, 0.9, 0.5]
        ranked = rank_candidates(cands, values)
        reranked = rank_candidates(cands[::-1], values[::-1])
        assert [(r.method, r.k) for r in ranked] == [
            (r.method, r.k) for r in reranked
        ]


class TestRandomPool:
    def test_pool_size_and_membership(self):
        D = random_euclidean_dissim(np.random.default_rng(2), 20)
        ks = (2, 3, 4)
        pool = random_pool(D, ks, b=5, master_seed=1)
        assert len(pool) == 4 * 5 * len(ks)
        methods = {e.method for e in pool}
        assert methods == {
            "random_kcentroid", "random_nn", "random_fn", "random_avg"
        }

    def test_deterministic(self):
        D = random_euclidean_dissim(np.random.default_rng(3), 15)
        a = random_pool(D, (2, 3), b=3, master_seed=9)
        b = random_pool(D, (2, 3), b=3, master_seed=9)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.labels, y.labels)


@pytest.fixture(scope="module")
def panel():
    return _build_panel()


class TestCalibratePanelEndToEnd:

    def test_pool_statistics_per_stratum(self, panel):
        for index_id in ASPECT_INDEXES:
            star_all = np.concatenate(
                [panel.star[index_id], panel.pool_star[index_id]]
            )
            ks_all = np.concatenate(
                [np.array([c.k for c in panel.candidates]), panel.pool_ks]
            )
            for k in np.unique(ks_all):
                stratum = star_all[ks_all == k]
                stratum = stratum[~np.isnan(stratum)]
                assert abs(stratum.mean()) < 1e-9
                assert abs(stratum.std(ddof=1) - 1.0) < 1e-9

    def test_random_pool_never_ranked(self, panel):
        ranked = rank_candidates(
            panel.candidates, panel.composites([PROFILE_BALANCED])["balanced"]
        )
        assert len(ranked) == len(panel.candidates)
        assert all(not r.method.startswith("random_") for r in ranked)

    def test_true_structure_wins(self, panel):
        ranked = rank_candidates(
            panel.candidates, panel.composites([PROFILE_BALANCED])["balanced"]
        )
        assert ranked[0].k == 2


class TestThreadedEvaluation:
    def test_threads_do_not_change_results(self):
        from pitchclust.calibrate import PoolEntry, evaluate_indexes

        D, _ = two_group_dissim(np.random.default_rng(12), 20)
        grid = cluster_grid(D, ("pam", "average"), (2, 3), 3)
        entries = [PoolEntry(c.method, c.k, c.labels, ("panel",)) for c in grid]
        serial = evaluate_indexes(D, entries, ASPECT_INDEXES, 3,
                                  bootstab_b=4, threads=1)
        threaded = evaluate_indexes(D, entries, ASPECT_INDEXES, 3,
                                    bootstab_b=4, threads=4)
        for index_id in ASPECT_INDEXES:
            np.testing.assert_array_equal(serial[index_id], threaded[index_id])
