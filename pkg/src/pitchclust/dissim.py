"""Player dissimilarity from three variable groups.

Group 1: weighted L1 over the standardized quantitative columns, with the
composition-weight reassignment rule for players whose parent count is zero.
Group 2: playing positions, compared with a presence/absence coefficient
over pitch geometry. Group 3: league strength and team points, compared by
the sum of absolute standardized differences so that a strong team in a
weak league can resemble a weak team in a strong league.

The final dissimilarity adds the groups after dividing each by the standard
deviation of its own pairwise values and multiplying by a group weight
proportional to the group's variable count.
"""

import math
from dataclasses import dataclass

import numpy as np

from .distmatrix import DissimilarityMatrix
from .errors import (
    DegenerateGroupError,
    IncomparablePairError,
    InvalidInputError,
)
from .features import KIND_COMPOSITION, POSITION_CODES, standardize_mad_median

#: Advance coordinate (defense 0 .. attack 4) and lateral class per position.
_POSITION_GEOMETRY = {
    "DC": (0, "C"),
    "DL": (0, "L"),
    "DR": (0, "R"),
    "DMC": (1, "C"),
    "MC": (2, "C"),
    "ML": (2, "L"),
    "MR": (2, "R"),
    "AMC": (3, "C"),
    "AML": (3, "L"),
    "AMR": (3, "R"),
    "FW": (4, "C"),
}

DEFAULT_GECO_CUTOFF = 4.0


def position_distance(a, b):
    """Pitch distance between two position codes.

    Euclidean in (advance, lateral) coordinates where the lateral offset is
    0 for the same lateral class (centre/left/right) and 1 otherwise.
    """
    try:
        xa, la = _POSITION_GEOMETRY[a]
        xb, lb = _POSITION_GEOMETRY[b]
    except KeyError as exc:
        raise InvalidInputError(f"unknown position code: {exc.args[0]!r}") from exc
    dx = xa - xb
    dlat = 0 if la == lb else 1
    return math.sqrt(dx * dx + dlat)


def _clipped_position_table(cutoff):
    if not cutoff > 0:
        raise InvalidInputError("cutoff must be positive")
    m = len(POSITION_CODES)
    table = np.empty((m, m))
    for i, a in enumerate(POSITION_CODES):
        for j, b in enumerate(POSITION_CODES):
            table[i, j] = min(position_distance(a, b) / cutoff, 1.0)
    return table


def geco_position(a, b, cutoff=DEFAULT_GECO_CUTOFF):
    """Dissimilarity in [0, 1] between two sets of playing positions.

    Averages, in both directions, the clipped distance from each occupied
    position to the nearest position occupied by the other player.
    """
    if not a or not b:
        raise InvalidInputError("position sets must be nonempty")
    table = _clipped_position_table(cutoff)
    ia = [POSITION_CODES.index(p) for p in a]
    ib = [POSITION_CODES.index(p) for p in b]
    forward = np.mean([min(table[i, j] for j in ib) for i in ia])
    backward = np.mean([min(table[i, j] for i in ia) for j in ib])
    return 0.5 * (forward + backward)


def position_matrix(positions, cutoff=DEFAULT_GECO_CUTOFF):
    """Pairwise geco dissimilarities for all players' position sets."""
    n = len(positions)
    table = _clipped_position_table(cutoff)
    mask = np.zeros((n, len(POSITION_CODES)), dtype=bool)
    for i, pos in enumerate(positions):
        if not pos:
            raise InvalidInputError(f"player {i} has an empty position set")
        for p in pos:
            if p not in _POSITION_GEOMETRY:
                raise InvalidInputError(f"unknown position code: {p!r}")
            mask[i, POSITION_CODES.index(p)] = True
    # min_to[j, a] = clipped distance from position a to player j's nearest position
    min_to = np.array([table[:, row].min(axis=1) for row in mask])
    sizes = mask.sum(axis=1).astype(float)
    forward = (mask @ min_to.T) / sizes[:, None]  # mean over i's positions vs j
    sq = 0.5 * (forward + forward.T)
    np.fill_diagonal(sq, 0.0)
    return DissimilarityMatrix.from_square(sq)


def league_team_dissim(p1, p2):
    """Sum of absolute differences of the two standardized club variables."""
    return abs(p1[0] - p2[0]) + abs(p1[1] - p2[1])


def league_team_matrix(league_score, team_points):
    """Standardize both club variables over all players, then |d1| + |d2|."""
    ls, _ = standardize_mad_median(np.asarray(league_score, dtype=float))
    tp, _ = standardize_mad_median(np.asarray(team_points, dtype=float))
    if np.isnan(ls).any() or np.isnan(tp).any():
        raise InvalidInputError("league/team variables must not be missing")
    sq = np.abs(ls[:, None] - ls[None, :]) + np.abs(tp[:, None] - tp[None, :])
    return DissimilarityMatrix.from_square(sq)


def _composition_groups(columns):
    groups = {}
    for j, spec in enumerate(columns):
        if spec.kind == KIND_COMPOSITION:
            groups.setdefault(spec.composition_id, []).append(j)
    return groups


def quantitative_l1(row_i, row_j, columns):
    """Weighted L1 between two feature rows over commonly observed columns.

    When a composition group is missing for either player (parent count was
    zero), the group's total weight moves onto the parent column for this
    pair; a pair with no commonly observed column at all is an error.
    """
    x = np.asarray(row_i, dtype=float)
    y = np.asarray(row_j, dtype=float)
    weights = _pair_weights(x, y, columns)
    both = ~np.isnan(x) & ~np.isnan(y)
    if not both.any():
        raise IncomparablePairError("no commonly observed variable")
    return float(np.sum(weights[both] * np.abs(x[both] - y[both])))


def _pair_weights(x, y, columns):
    weights = np.array([s.weight for s in columns], dtype=float)
    name_to_col = {s.name: j for j, s in enumerate(columns)}
    for gid, cols in _composition_groups(columns).items():
        group_missing = np.isnan(x[cols]).any() or np.isnan(y[cols]).any()
        if not group_missing:
            continue
        weights[cols] = 0.0
        parent = columns[cols[0]].parent
        if parent in name_to_col:
            weights[name_to_col[parent]] += sum(columns[j].weight for j in cols)
    return weights


def quantitative_matrix(table):
    """Pairwise weighted L1 over a standardized feature table."""
    x = table.values
    n, p = x.shape
    observed = ~np.isnan(x)
    base_w = np.array([s.weight for s in table.columns], dtype=float)
    name_to_col = {s.name: j for j, s in enumerate(table.columns)}

    total = np.zeros((n, n))
    common = np.zeros((n, n), dtype=np.int64)
    groups = _composition_groups(table.columns)

    for j in range(p):
        both = observed[:, j][:, None] & observed[:, j][None, :]
        common += both
        col = np.where(observed[:, j], x[:, j], 0.0)
        diff = np.abs(col[:, None] - col[None, :])
        total += np.where(both, base_w[j] * diff, 0.0)

    # reassign each missing composition group's weight to its parent column
    for gid, cols in groups.items():
        parent = table.columns[cols[0]].parent
        if parent not in name_to_col:
            continue
        pj = name_to_col[parent]
        group_weight = sum(table.columns[j].weight for j in cols)
        has_group = observed[:, cols].all(axis=1)
        pair_missing = ~(has_group[:, None] & has_group[None, :])
        parent_both = observed[:, pj][:, None] & observed[:, pj][None, :]
        col = np.where(observed[:, pj], x[:, pj], 0.0)
        diff = np.abs(col[:, None] - col[None, :])
        total += np.where(pair_missing & parent_both, group_weight * diff, 0.0)

    off_diag = ~np.eye(n, dtype=bool)
    if (common[off_diag] == 0).any():
        i, j = np.argwhere((common == 0) & off_diag)[0]
        raise IncomparablePairError(
            f"players {table.ids[i]!r} and {table.ids[j]!r} share no "
            "observed variable"
        )
    np.fill_diagonal(total, 0.0)
    return DissimilarityMatrix.from_square(total)


@dataclass
class GroupDissimilarity:
    """One variable group's matrix with its aggregation weight and spread."""

    name: str
    matrix: DissimilarityMatrix
    weight: float
    scale: float = None  # sample sd of all pairwise values, filled on aggregate

    def __post_init__(self):
        if not self.weight > 0:
            raise InvalidInputError(f"group {self.name!r} needs positive weight")


def aggregate_final(groups):
    """Sum of weight_k * d_k / sd_k over the variable groups."""
    if not groups:
        raise InvalidInputError("at least one group is required")
    n = groups[0].matrix.n
    total = np.zeros(groups[0].matrix.values.shape)
    for g in groups:
        if g.matrix.n != n:
            raise InvalidInputError("all groups must cover the same players")
        s = g.matrix.std()
        if s == 0.0:
            raise DegenerateGroupError(
                f"group {g.name!r} has zero dispersion across pairs"
            )
        g.scale = s
        total += g.weight * g.matrix.values / s
    return DissimilarityMatrix(n, total)


def player_dissimilarity(table, positions, league_score, team_points,
                         geco_cutoff=DEFAULT_GECO_CUTOFF, group_weights=None):
    """Full three-group dissimilarity for a standardized feature table.

    Group weights default to the number of variables per group: the count
    of quantitative columns, 11 for positions, and 2 for league/team.

    Returns (final matrix, list of GroupDissimilarity with scales filled).
    """
    if not table.standardized:
        raise InvalidInputError("feature table must be standardized first")
    defaults = {
        "quantitative": float(len(table.columns)),
        "position": float(len(POSITION_CODES)),
        "league_team": 2.0,
    }
    if group_weights:
        unknown = set(group_weights) - set(defaults)
        if unknown:
            raise InvalidInputError(f"unknown group names: {sorted(unknown)}")
        defaults.update(group_weights)
    groups = [
        GroupDissimilarity("quantitative", quantitative_matrix(table),
                           defaults["quantitative"]),
        GroupDissimilarity("position", position_matrix(positions, geco_cutoff),
                           defaults["position"]),
        GroupDissimilarity("league_team", league_team_matrix(league_score, team_points),
                           defaults["league_team"]),
    ]
    return aggregate_final(groups), groups
