"""Classical (Torgerson) multidimensional scaling for cluster maps."""

from dataclasses import dataclass

import numpy as np

from .clusterers import as_square
from .errors import InvalidInputError, NumericError


@dataclass
class EmbeddingResult:
    coordinates: np.ndarray  # (n, dims), column means zero
    eigenvalues: np.ndarray  # the dims leading eigenvalues (before clamping)
    stress: float  # relative error of the embedded pairwise distances
    clamped_mass_fraction: float  # share of |eigenvalue| mass clamped at 0


def classical_mds(D, dims=2):
    """Embed a dissimilarity matrix by double-centering and eigendecomposition.

    Coordinates are eigenvectors scaled by the square roots of the leading
    eigenvalues (negative eigenvalues clamp to zero). The configuration is
    determined up to rotation/reflection; for reproducible output each
    eigenvector's largest-magnitude entry is made positive.
    """
    sq = as_square(D)
    n = sq.shape[0]
    if n < dims + 1:
        raise InvalidInputError(f"need at least {dims + 1} points for {dims} dims")
    d2 = sq**2
    row_means = d2.mean(axis=1)
    b = -0.5 * (d2 - row_means[:, None] - row_means[None, :] + d2.mean())
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(b)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"mds eigendecomposition failed (n={n}): {exc}") from exc
    order = np.argsort(eigenvalues)[::-1]
    top_vals = eigenvalues[order[:dims]]
    top_vecs = eigenvectors[:, order[:dims]]
    for j in range(dims):
        pivot = int(np.argmax(np.abs(top_vecs[:, j])))
        if top_vecs[pivot, j] < 0:
            top_vecs[:, j] = -top_vecs[:, j]
    coords = top_vecs * np.sqrt(np.clip(top_vals, 0.0, None))

    total_mass = float(np.abs(eigenvalues).sum())
    clamped = float(np.clip(-eigenvalues, 0.0, None).sum())
    embedded = np.sqrt(
        np.maximum(
            ((coords[:, None, :] - coords[None, :, :]) ** 2).sum(axis=2), 0.0
        )
    )
    iu = np.triu_indices(n, 1)
    denom = float((sq[iu] ** 2).sum())
    stress = (
        float(np.sqrt(((embedded[iu] - sq[iu]) ** 2).sum() / denom))
        if denom > 0
        else 0.0
    )
    return EmbeddingResult(
        coordinates=coords,
        eigenvalues=top_vals,
        stress=stress,
        clamped_mass_fraction=clamped / total_mass if total_mass > 0 else 0.0,
    )


def write_coordinates_csv(result, path, ids=None, labels=None):
    """Coordinates CSV: player id, x, y, ... and optional cluster label."""
    n = result.coordinates.shape[0]
    ids = ids if ids is not None else [str(i) for i in range(n)]
    dims = result.coordinates.shape[1]
    axis_names = ["x", "y", "z"][:dims] + [
        f"dim{j + 1}" for j in range(3, dims)
    ]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        header = ["player_id", *axis_names]
        if labels is not None:
            header.append("cluster")
        fh.write(",".join(header) + "\n")
        for i in range(n):
            row = [ids[i], *(repr(float(v)) for v in result.coordinates[i])]
            if labels is not None:
                row.append(str(int(labels[i])))
            fh.write(",".join(row) + "\n")
