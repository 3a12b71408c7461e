import math

import numpy as np
import pytest

from pitchclust.errors import InvalidInputError, UndefinedIndexError
from pitchclust.indexes import (
    ORIENTATIONS,
    ari,
    asw,
    ave_within,
    ch,
    cvnn,
    dunn,
    entropy,
    make_index_value,
    pearson_gamma,
    separation_index,
)

from naive import (
    naive_ari,
    naive_asw,
    naive_ave_within,
    naive_ch,
    naive_dunn,
    naive_entropy,
    naive_pearson_gamma,
    naive_separation,
    random_euclidean_dissim,
    random_partition,
)

FOUR_POINTS = np.array(
    [[0, 1, 3, 3], [1, 0, 3, 3], [3, 3, 0, 1], [3, 3, 1, 0]], dtype=float
)
FOUR_LABELS = np.array([1, 1, 2, 2])


class TestAveWithin:
    def test_equal_dissimilarities_score_d(self):
        d = 0.7
        sq = np.full((9, 9), d)
        np.fill_diagonal(sq, 0.0)
        labels = np.array([1, 1, 1, 2, 2, 3, 3, 3, 3])
        assert ave_within(sq, labels) == pytest.approx(d)

    def test_all_singletons_zero(self):
        sq = random_euclidean_dissim(np.random.default_rng(0), 5)
        assert ave_within(sq, np.arange(1, 6)) == 0.0

    def test_pair_plus_singleton(self):
        sq = np.array([[0, 2, 9], [2, 0, 9], [9, 9, 0]], dtype=float)
        assert ave_within(sq, np.array([1, 1, 2])) == pytest.approx(4 / 3)


class TestSeparation:
    def test_uniform_gap(self):
        n = 20
        sq = np.full((n, n), 0.4)
        labels = np.array([1] * 10 + [2] * 10)
        g = 2.5
        sq[:10, 10:] = g
        sq[10:, :10] = g
        np.fill_diagonal(sq, 0.0)
        assert separation_index(sq, labels, p=0.1) == pytest.approx(g)

    def test_clamped_small_clusters(self):
        # with two clusters and symmetric d the per-cluster border minima
        # coincide at the global cross minimum; floor(0.3) clamps to one
        # border point per cluster
        sq = np.zeros((6, 6))
        labels = np.array([1, 1, 1, 2, 2, 2])
        cross = np.array([[1.0, 2.0, 9.0], [5.0, 3.0, 9.0], [8.0, 7.0, 9.0]])
        sq[:3, 3:] = cross
        sq[3:, :3] = cross.T
        assert separation_index(sq, labels, p=0.1) == pytest.approx(1.0)
        assert separation_index(sq, labels, p=0.1) == pytest.approx(
            naive_separation(sq, labels, 0.1)
        )

    def test_clamping_with_three_clusters(self):
        # distinct per-cluster border values require more than two clusters
        rng = np.random.default_rng(11)
        sq = random_euclidean_dissim(rng, 8)
        labels = np.array([1, 1, 1, 2, 2, 2, 3, 3])
        assert separation_index(sq, labels, p=0.1) == pytest.approx(
            naive_separation(sq, labels, 0.1)
        )
        # every cluster contributes exactly one clamped border point
        other = labels[:, None] != labels[None, :]
        nearest = np.where(other, sq, np.inf).min(axis=1)
        expected = np.mean(
            [nearest[labels == c].min() for c in (1, 2, 3)]
        )
        assert separation_index(sq, labels, p=0.1) == pytest.approx(expected)

    def test_p_one_two_singletons(self):
        sq = np.array([[0, 5], [5, 0]], dtype=float)
        assert separation_index(sq, np.array([1, 2]), p=1.0) == pytest.approx(5.0)

    def test_single_cluster_undefined(self):
        with pytest.raises(UndefinedIndexError):
            separation_index(FOUR_POINTS, np.ones(4, dtype=int), p=0.1)

    def test_p_bounds(self):
        with pytest.raises(InvalidInputError):
            separation_index(FOUR_POINTS, FOUR_LABELS, p=0.0)


class TestPearsonGamma:
    def test_perfect_positive(self):
        assert pearson_gamma(FOUR_POINTS, FOUR_LABELS) == pytest.approx(1.0)

    def test_perfect_negative(self):
        sq = np.array(
            [[0, 3, 1, 1], [3, 0, 1, 1], [1, 1, 0, 3], [1, 1, 3, 0]], dtype=float
        )
        assert pearson_gamma(sq, FOUR_LABELS) == pytest.approx(-1.0)

    def test_three_point_example(self):
        sq = np.array([[0, 1, 2], [1, 0, 2], [2, 2, 0]], dtype=float)
        assert pearson_gamma(sq, np.array([1, 1, 2])) == pytest.approx(1.0)

    def test_undefined_for_trivial_partitions(self):
        with pytest.raises(UndefinedIndexError):
            pearson_gamma(FOUR_POINTS, np.ones(4, dtype=int))
        with pytest.raises(UndefinedIndexError):
            pearson_gamma(FOUR_POINTS, np.arange(1, 5))


class TestEntropy:
    def test_two_equal_clusters(self):
        assert entropy(FOUR_LABELS) == pytest.approx(math.log(2))

    def test_single_cluster(self):
        assert entropy(np.ones(7, dtype=int)) == 0.0

    def test_one_three_split(self):
        value = entropy(np.array([1, 2, 2, 2]))
        assert value == pytest.approx(0.5623351, abs=1e-6)

    def test_maximal_at_equal_sizes(self):
        balanced = entropy(np.array([1, 1, 2, 2, 3, 3]))
        skewed = entropy(np.array([1, 1, 1, 1, 2, 3]))
        assert balanced > skewed
        assert balanced == pytest.approx(math.log(3))


class TestLiteratureIndexes:
    def test_asw_example(self):
        assert asw(FOUR_POINTS, FOUR_LABELS) == pytest.approx(2 / 3)

    def test_dunn_example(self):
        assert dunn(FOUR_POINTS, FOUR_LABELS) == pytest.approx(3.0)

    def test_ari_identity_and_permutation(self):
        rng = np.random.default_rng(1)
        labels = random_partition(rng, 12, 3)
        assert ari(labels, labels) == 1.0
        perm = np.array([0, 2, 3, 1])
        assert ari(labels, perm[labels]) == 1.0

    def test_ari_disagreement_below_one(self):
        assert ari(np.array([1, 1, 2, 2]), np.array([1, 2, 1, 2])) < 1.0

    def test_undefined_cases(self):
        for fn in (asw, ch, dunn):
            with pytest.raises(UndefinedIndexError):
                fn(FOUR_POINTS, np.ones(4, dtype=int))
            with pytest.raises(UndefinedIndexError):
                fn(FOUR_POINTS, np.arange(1, 5))


class TestOracleEquivalence:
    def test_matches_naive_definitions(self):
        rng = np.random.default_rng(42)
        for _ in range(40):
            n = int(rng.integers(4, 13))
            k = int(rng.integers(2, n))
            sq = random_euclidean_dissim(rng, n)
            labels = random_partition(rng, n, k)
            assert ave_within(sq, labels) == pytest.approx(
                naive_ave_within(sq, labels), abs=1e-10
            )
            for p in (0.1, 0.5, 1.0):
                assert separation_index(sq, labels, p) == pytest.approx(
                    naive_separation(sq, labels, p), abs=1e-10
                )
            assert pearson_gamma(sq, labels) == pytest.approx(
                naive_pearson_gamma(sq, labels), abs=1e-10
            )
            assert entropy(labels) == pytest.approx(
                naive_entropy(labels), abs=1e-10
            )
            assert asw(sq, labels) == pytest.approx(
                naive_asw(sq, labels), abs=1e-10
            )
            assert ch(sq, labels) == pytest.approx(
                naive_ch(sq, labels), abs=1e-10
            )
            assert dunn(sq, labels) == pytest.approx(
                naive_dunn(sq, labels), abs=1e-10
            )
            other = random_partition(rng, n, int(rng.integers(2, n)))
            assert ari(labels, other) == pytest.approx(
                naive_ari(labels, other), abs=1e-10
            )


class TestInvariances:
    def test_reordering_points(self):
        rng = np.random.default_rng(3)
        sq = random_euclidean_dissim(rng, 10)
        labels = random_partition(rng, 10, 3)
        perm = rng.permutation(10)
        sq_p = sq[np.ix_(perm, perm)]
        labels_p = labels[perm]
        assert ave_within(sq, labels) == pytest.approx(ave_within(sq_p, labels_p))
        assert separation_index(sq, labels) == pytest.approx(
            separation_index(sq_p, labels_p)
        )
        assert asw(sq, labels) == pytest.approx(asw(sq_p, labels_p))
        assert dunn(sq, labels) == pytest.approx(dunn(sq_p, labels_p))

    def test_scaling_behaviour(self):
        rng = np.random.default_rng(4)
        sq = random_euclidean_dissim(rng, 10)
        labels = random_partition(rng, 10, 3)
        lam = 3.7
        assert ave_within(lam * sq, labels) == pytest.approx(
            lam * ave_within(sq, labels)
        )
        assert separation_index(lam * sq, labels) == pytest.approx(
            lam * separation_index(sq, labels)
        )
        for fn in (pearson_gamma, asw, dunn):
            assert fn(lam * sq, labels) == pytest.approx(fn(sq, labels))

    def test_bounds(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = int(rng.integers(4, 12))
            sq = random_euclidean_dissim(rng, n)
            labels = random_partition(rng, n, int(rng.integers(2, n)))
            assert -1.0 <= pearson_gamma(sq, labels) <= 1.0
            assert -1.0 <= asw(sq, labels) <= 1.0
            assert ari(labels, random_partition(rng, n, 2)) <= 1.0


class TestCvnn:
    def test_prefers_true_structure(self):
        from naive import two_group_dissim

        rng = np.random.default_rng(6)
        sq, truth = two_group_dissim(rng, 20)
        bad = np.array(([1, 2] * 10)[:20])
        values = cvnn(sq, [truth, bad], kappa=5)
        assert values[0] < values[1]

    def test_normalization_bounds(self):
        rng = np.random.default_rng(7)
        sq = random_euclidean_dissim(rng, 15)
        labelings = [random_partition(rng, 15, k) for k in (2, 3, 4, 5)]
        values = cvnn(sq, labelings, kappa=10)
        assert len(values) == 4
        assert all(0.0 <= v <= 2.0 for v in values)
        assert max(values) >= 1.0  # at least one component attains its max

    def test_kappa_clamped_to_n_minus_one(self):
        sq = random_euclidean_dissim(np.random.default_rng(8), 6)
        labelings = [random_partition(np.random.default_rng(9), 6, 2)]
        assert cvnn(sq, labelings, kappa=50)  # does not raise

    def test_empty_set_rejected(self):
        with pytest.raises(InvalidInputError):
            cvnn(FOUR_POINTS, [])


def test_orientations_registry():
    assert ORIENTATIONS["ave_within"] == "smaller_better"
    assert ORIENTATIONS["bootstab"] == "smaller_better"
    assert ORIENTATIONS["cvnn"] == "smaller_better"
    assert ORIENTATIONS["sep"] == "larger_better"
    value = make_index_value("asw", 0.5)
    assert value.orientation == "larger_better"
    with pytest.raises(Exception):
        make_index_value("asw", float("nan"))
