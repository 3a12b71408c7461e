import numpy as np
import pytest

from pitchclust.errors import InvalidInputError
from pitchclust.mds import classical_mds, write_coordinates_csv


def _pairwise(coords):
    return np.sqrt(((coords[:, None] - coords[None, :]) ** 2).sum(-1))


def test_equilateral_triangle_recovered():
    D = np.ones((3, 3)) - np.eye(3)
    result = classical_mds(D, dims=2)
    embedded = _pairwise(result.coordinates)
    np.testing.assert_allclose(embedded + np.eye(3), D + np.eye(3), atol=1e-9)


def test_planar_euclidean_recovered_exactly():
    rng = np.random.default_rng(0)
    points = rng.random((40, 2)) * 10
    D = _pairwise(points)
    result = classical_mds(D, dims=2)
    assert np.abs(_pairwise(result.coordinates) - D).max() < 1e-6
    assert result.stress < 1e-8
    assert result.clamped_mass_fraction < 1e-9


def test_duplicated_points_coincide():
    rng = np.random.default_rng(1)
    points = rng.random((10, 2))
    points[4] = points[2]
    D = _pairwise(points)
    coords = classical_mds(D, dims=2).coordinates
    np.testing.assert_allclose(coords[4], coords[2], atol=1e-9)


def test_coordinates_centered():
    rng = np.random.default_rng(2)
    points = rng.random((25, 3))
    D = _pairwise(points)
    coords = classical_mds(D, dims=2).coordinates
    np.testing.assert_allclose(coords.mean(axis=0), 0.0, atol=1e-9)


def test_sign_convention_deterministic():
    rng = np.random.default_rng(3)
    points = rng.random((12, 2))
    D = _pairwise(points)
    a = classical_mds(D, dims=2).coordinates
    b = classical_mds(D, dims=2).coordinates
    np.testing.assert_array_equal(a, b)
    for j in range(2):
        pivot = np.argmax(np.abs(a[:, j]))
        assert a[pivot, j] > 0


def test_non_euclidean_input_clamps_negative_mass():
    # strongly non-Euclidean dissimilarity: nontrivial negative eigenvalues
    rng = np.random.default_rng(4)
    sq = rng.random((15, 15))
    sq = np.triu(sq, 1) ** 0.2
    sq = sq + sq.T
    result = classical_mds(sq, dims=2)
    assert result.clamped_mass_fraction > 0.0
    assert np.isfinite(result.coordinates).all()


def test_needs_enough_points():
    with pytest.raises(InvalidInputError):
        classical_mds(np.zeros((2, 2)), dims=2)


def test_coordinates_csv(tmp_path):
    D = np.ones((3, 3)) - np.eye(3)
    result = classical_mds(D, dims=2)
    path = tmp_path / "coords.csv"
    write_coordinates_csv(result, path, ids=["a", "b", "c"],
                          labels=np.array([1, 1, 2]))
    lines = path.read_text().splitlines()
    assert lines[0] == "player_id,x,y,cluster"
    assert len(lines) == 4
    assert lines[1].startswith("a,")
    assert lines[1].endswith(",1")
