"""Symmetric dissimilarity matrices in condensed storage.

Values are stored as the upper triangle (row-major, i < j) of an n x n
symmetric matrix with a zero diagonal, matching scipy's condensed layout.
Binary serialization is an 8-byte little-endian unsigned n header followed
by the n*(n-1)/2 condensed values as little-endian float64; identical input
produces byte-identical files.
"""

import struct

import numpy as np

from .errors import DataError, InvalidInputError

_HEADER = struct.Struct("<Q")


def condensed_size(n):
    return n * (n - 1) // 2


def condensed_index(n, i, j):
    """Position of pair (i, j), i != j, in the condensed vector."""
    if i == j:
        raise InvalidInputError("diagonal entries are not stored")
    if i > j:
        i, j = j, i
    return n * i - i * (i + 1) // 2 + (j - i - 1)


class DissimilarityMatrix:
    """Pairwise dissimilarities: symmetric, nonnegative, zero diagonal."""

    def __init__(self, n, values, validate=True):
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.shape != (condensed_size(n),):
            raise InvalidInputError(
                f"expected {condensed_size(n)} condensed values for n={n}, "
                f"got shape {values.shape}"
            )
        if validate and values.size:
            if not np.all(np.isfinite(values)):
                raise DataError("dissimilarities must be finite")
            if values.min() < 0.0:
                raise DataError("dissimilarities must be nonnegative")
        self.n = int(n)
        self.values = values
        self._square = None

    @classmethod
    def from_square(cls, matrix, atol=1e-12):
        matrix = np.asarray(matrix, dtype=np.float64)
        n = matrix.shape[0]
        if matrix.shape != (n, n):
            raise InvalidInputError("square matrix required")
        if not np.allclose(matrix, matrix.T, atol=atol, rtol=0.0):
            raise DataError("matrix is not symmetric")
        if np.abs(np.diag(matrix)).max(initial=0.0) > atol:
            raise DataError("diagonal must be zero")
        iu = np.triu_indices(n, 1)
        return cls(n, matrix[iu])

    def square(self):
        """Full symmetric matrix (cached)."""
        if self._square is None:
            sq = np.zeros((self.n, self.n), dtype=np.float64)
            iu = np.triu_indices(self.n, 1)
            sq[iu] = self.values
            sq.T[iu] = self.values
            self._square = sq
        return self._square

    def get(self, i, j):
        if i == j:
            return 0.0
        return float(self.values[condensed_index(self.n, i, j)])

    def scale(self, factor):
        return DissimilarityMatrix(self.n, self.values * float(factor))

    def std(self):
        """Sample standard deviation (ddof=1) over all pairwise values."""
        if self.values.size < 2:
            return 0.0
        return float(np.std(self.values, ddof=1))

    # -- serialization -----------------------------------------------------

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(self.n))
            fh.write(self.values.astype("<f8").tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            head = fh.read(_HEADER.size)
            if len(head) != _HEADER.size:
                raise DataError(f"truncated dissimilarity file: {path}")
            (n,) = _HEADER.unpack(head)
            raw = fh.read()
        values = np.frombuffer(raw, dtype="<f8")
        if values.size != condensed_size(n):
            raise DataError(
                f"corrupt dissimilarity file {path}: header n={n} implies "
                f"{condensed_size(n)} values, found {values.size}"
            )
        return cls(n, values.astype(np.float64))

    def save_csv(self, path, ids=None):
        """Optional square CSV export (header row of ids, one row per point)."""
        ids = ids if ids is not None else [str(i) for i in range(self.n)]
        sq = self.square()
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("id," + ",".join(ids) + "\n")
            for i in range(self.n):
                fh.write(
                    ids[i] + "," + ",".join(repr(float(v)) for v in sq[i]) + "\n"
                )

    def __eq__(self, other):
        return (
            isinstance(other, DissimilarityMatrix)
            and self.n == other.n
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self):
        return f"DissimilarityMatrix(n={self.n})"
