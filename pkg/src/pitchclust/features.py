"""Feature pipeline: turns raw player records into analysis-ready columns.

Stages, in order:

1. representation  - action counts become per-90-minute rates, sub-category
   counts become proportions of their parent count, success counts become
   success rates against their attempt count;
2. transformation  - optional log(x + c) on top-level rates, with c chosen
   per variable so that season-to-season differences are equally variable
   across the value range;
3. standardization - every column is centered at its median and divided by
   the average absolute deviation from the median; proportion columns of a
   composition group share one pooled scale.

Missing values (empty CSV cells) stay missing through every stage; they are
handled pairwise when dissimilarities are computed.
"""

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    ConstantColumnError,
    ConstantGroupError,
    DataError,
    FitFailureError,
    InvalidInputError,
)

KIND_TOP_COUNT = "top_count"
KIND_COMPOSITION = "composition"
KIND_SUCCESS_RATE = "success_rate"
KIND_CHARACTERISTIC = "characteristic"
KIND_APPEARANCE = "appearance"
KIND_POSITION = "position"
KIND_LEAGUE_TEAM = "league_team"

QUANTITATIVE_KINDS = (
    KIND_TOP_COUNT,
    KIND_COMPOSITION,
    KIND_SUCCESS_RATE,
    KIND_CHARACTERISTIC,
    KIND_APPEARANCE,
)
ALL_KINDS = QUANTITATIVE_KINDS + (KIND_POSITION, KIND_LEAGUE_TEAM)

POSITION_CODES = ("DC", "DL", "DR", "DMC", "MC", "ML", "MR", "AMC", "AML", "AMR", "FW")

#: Candidate shift constants for the log transform; None = leave untransformed.
DEFAULT_SHIFT_GRID = (0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0)


@dataclass(frozen=True)
class VariableSpec:
    """Metadata for one input column.

    For composition members, ``weight`` is the weight of the whole group;
    it is split equally over the members when features are built.
    """

    name: str
    kind: str
    parent: str = None
    composition_id: str = None
    weight: float = 1.0

    def __post_init__(self):
        if self.kind not in ALL_KINDS:
            raise DataError(f"unknown variable kind {self.kind!r} for {self.name!r}")
        if self.kind == KIND_COMPOSITION and not (self.parent and self.composition_id):
            raise DataError(
                f"composition variable {self.name!r} needs parent and composition_id"
            )
        if self.kind == KIND_SUCCESS_RATE and not self.parent:
            raise DataError(f"success_rate variable {self.name!r} needs a parent")
        if not self.weight > 0:
            raise DataError(f"variable {self.name!r} must have positive weight")


@dataclass(frozen=True)
class PlayerRecord:
    id: str
    minutes_played: float
    raw_values: dict
    positions: frozenset
    league_score: float
    team_points: float

    def __post_init__(self):
        if not self.minutes_played > 0:
            raise InvalidInputError(f"player {self.id!r}: minutes_played must be > 0")
        if not self.positions:
            raise InvalidInputError(f"player {self.id!r}: positions must be nonempty")


# ---------------------------------------------------------------------------
# elementary operations


def per90(count, minutes):
    """Rescale a season count to a 90-minute match equivalent."""
    if not minutes > 0:
        raise InvalidInputError("minutes must be positive")
    if np.isnan(count):
        return math.nan
    if count < 0:
        raise InvalidInputError("count must be nonnegative")
    return count * 90.0 / minutes


def derive_composition(top_count, sub_counts):
    """Proportions of a parent count over its sub-categories.

    Returns None (missing) when the parent count is zero; the weight
    normally carried by the proportions is then reassigned to the parent
    at dissimilarity time.
    """
    sub = np.asarray(sub_counts, dtype=float)
    if top_count < 0 or (sub < 0).any():
        raise InvalidInputError("counts must be nonnegative")
    if top_count == 0:
        return None
    if sub.sum() > top_count * (1.0 + 1e-9) + 1e-9:
        raise InvalidInputError("sub-category counts exceed the parent count")
    return sub / top_count


def success_rate(successes, attempts):
    """Fraction of successful attempts; missing (None) when nothing was tried."""
    if successes < 0 or attempts < 0:
        raise InvalidInputError("counts must be nonnegative")
    if successes > attempts:
        raise InvalidInputError("successes cannot exceed attempts")
    if attempts == 0:
        return None
    return successes / attempts


def log_shift(x, c):
    """Natural log of (x + c)."""
    if not c > 0:
        raise InvalidInputError("shift constant must be positive")
    if np.isnan(x):
        return math.nan
    if x < 0:
        raise InvalidInputError("value must be nonnegative")
    if x + c <= 0:
        raise InvalidInputError("x + c must be positive")
    return math.log(x + c)


def _ols_slope(explanatory, response):
    """Least-squares slope of response on explanatory; None when degenerate.

    The variance check is relative to the magnitude of the explanatory
    values so that rounding noise on a constant vector counts as zero.
    """
    e = np.asarray(explanatory, dtype=float)
    r = np.asarray(response, dtype=float)
    e_c = e - e.mean()
    denom = float(np.dot(e_c, e_c))
    scale = float(np.abs(e).max(initial=0.0))
    if denom <= (1e-12 * max(1.0, scale)) ** 2 * e.size:
        return None
    return float(np.dot(e_c, r)) / denom


def fit_shift_constant(pairs, grid=DEFAULT_SHIFT_GRID):
    """Pick the shift constant giving the most stable cross-season differences.

    ``pairs`` holds (value_season1, value_season2, minutes1, minutes2) rows
    for one variable. For each candidate c the absolute difference of the
    log(x + c) values is regressed on their minutes-weighted mean; the c
    with the slope closest to zero wins (ties toward smaller c). If the
    untransformed variable beats every candidate, None is returned, meaning
    "do not transform".
    """
    rows = np.asarray(pairs, dtype=float)
    if rows.ndim != 2 or rows.shape[1] != 4:
        raise InvalidInputError("pairs must be (x1, x2, minutes1, minutes2) rows")
    if rows.shape[0] < 3:
        raise InvalidInputError("at least 3 season pairs are required")
    if len(grid) == 0:
        raise InvalidInputError("candidate grid must be nonempty")
    x1, x2, m1, m2 = rows.T
    if (m1 <= 0).any() or (m2 <= 0).any():
        raise InvalidInputError("minutes must be positive")

    def slope_for(y1, y2):
        return _ols_slope((m1 * y1 + m2 * y2) / (m1 + m2), np.abs(y2 - y1))

    best_c = None
    best_abs = None
    for c in sorted(grid):
        if not c > 0:
            raise InvalidInputError("shift constants must be positive")
        slope = slope_for(np.log(x1 + c), np.log(x2 + c))
        if slope is None:
            continue
        if best_abs is None or abs(slope) < best_abs:
            best_abs = abs(slope)
            best_c = c
    raw_slope = slope_for(x1, x2)
    if best_abs is None and raw_slope is None:
        raise FitFailureError("every candidate regression was degenerate")
    if raw_slope is not None and (best_abs is None or abs(raw_slope) < best_abs):
        return None
    return best_c


def standardize_mad_median(column):
    """Center at the median, scale by the mean absolute deviation from it.

    Returns (standardized column, scale). Missing entries stay missing.
    """
    x = np.asarray(column, dtype=float)
    observed = ~np.isnan(x)
    if observed.sum() < 2:
        raise InvalidInputError("need at least 2 non-missing values")
    med = float(np.median(x[observed]))
    scale = float(np.abs(x[observed] - med).mean())
    if scale == 0.0:
        raise ConstantColumnError("column has zero spread around its median")
    return (x - med) / scale, scale


def standardize_pooled(columns):
    """Standardize a composition group by one pooled scale.

    Each column is centered at its own median; all columns are divided by
    the single mean absolute deviation pooled over the whole group, so a
    given proportion difference means the same in every category.
    """
    x = np.asarray(columns, dtype=float)
    if x.ndim != 2 or x.shape[1] == 0:
        raise InvalidInputError("a 2-D group of columns is required")
    observed = ~np.isnan(x)
    if observed.sum() < 2:
        raise InvalidInputError("need at least 2 non-missing values in the group")
    centered = np.empty_like(x)
    for j in range(x.shape[1]):
        col = x[:, j]
        obs = observed[:, j]
        if not obs.any():
            centered[:, j] = np.nan
            continue
        centered[:, j] = col - float(np.median(col[obs]))
    scale = float(np.abs(centered[observed]).mean())
    if scale == 0.0:
        raise ConstantGroupError("composition group has zero pooled spread")
    return centered / scale, scale


# ---------------------------------------------------------------------------
# staged feature table


@dataclass
class FeatureTable:
    """Quantitative columns of the pipeline, with stage flags."""

    ids: list
    columns: list  # VariableSpec per output column, weight already effective
    values: np.ndarray  # (n_players, n_columns), nan = missing
    represented: bool = False
    transformed: bool = False
    standardized: bool = False
    shift_constants: dict = field(default_factory=dict)
    scales: dict = field(default_factory=dict)
    dropped: list = field(default_factory=list)

    @property
    def n(self):
        return len(self.ids)

    def column_index(self, name):
        for j, spec in enumerate(self.columns):
            if spec.name == name:
                return j
        raise KeyError(name)

    def composition_groups(self):
        """Mapping composition_id -> list of column positions, in order."""
        groups = {}
        for j, spec in enumerate(self.columns):
            if spec.kind == KIND_COMPOSITION:
                groups.setdefault(spec.composition_id, []).append(j)
        return groups

    def validate(self, atol=1e-9):
        if self.values.shape != (self.n, len(self.columns)):
            raise DataError("value matrix shape does not match ids/columns")
        if self.represented and not self.standardized:
            for gid, cols in self.composition_groups().items():
                block = self.values[:, cols]
                missing = np.isnan(block)
                partial = missing.any(axis=1) & ~missing.all(axis=1)
                if partial.any():
                    raise DataError(
                        f"composition group {gid!r} is partially missing for "
                        f"player {self.ids[int(np.flatnonzero(partial)[0])]!r}"
                    )
                full = ~missing.any(axis=1)
                if full.any():
                    sums = block[full].sum(axis=1)
                    if np.abs(sums - 1.0).max() > atol:
                        raise DataError(
                            f"composition group {gid!r} does not sum to 1"
                        )
        if self.standardized:
            comp_cols = {j for cols in self.composition_groups().values() for j in cols}
            for j, spec in enumerate(self.columns):
                if j in comp_cols:
                    continue
                col = self.values[:, j]
                obs = col[~np.isnan(col)]
                med = np.median(obs)
                if abs(np.abs(obs - med).mean() - 1.0) > atol:
                    raise DataError(f"column {spec.name!r} is not standardized")
        return self


def _require_spec(specs_by_name, name, context):
    if name not in specs_by_name:
        raise DataError(f"{context}: unknown variable {name!r}")
    return specs_by_name[name]


def represent(records, specs):
    """Stage 1: build the represented quantitative table from raw records."""
    quantitative = [s for s in specs if s.kind in QUANTITATIVE_KINDS]
    specs_by_name = {s.name: s for s in specs}
    groups = {}
    for s in quantitative:
        if s.kind == KIND_COMPOSITION:
            groups.setdefault(s.composition_id, []).append(s)
    for gid, members in groups.items():
        parents = {m.parent for m in members}
        weights = {m.weight for m in members}
        if len(parents) != 1 or len(weights) != 1:
            raise DataError(
                f"composition group {gid!r} members must share parent and weight"
            )
        _require_spec(specs_by_name, members[0].parent, f"composition group {gid!r}")

    out_columns = []
    for s in quantitative:
        if s.kind == KIND_COMPOSITION:
            size = len(groups[s.composition_id])
            out_columns.append(replace(s, weight=s.weight / size))
        else:
            out_columns.append(s)

    n = len(records)
    values = np.full((n, len(out_columns)), np.nan)
    raw = {
        s.name: np.array(
            [rec.raw_values.get(s.name, math.nan) for rec in records], dtype=float
        )
        for s in quantitative
    }
    minutes = np.array([rec.minutes_played for rec in records], dtype=float)

    for j, spec in enumerate(out_columns):
        col = raw[spec.name]
        if spec.kind == KIND_TOP_COUNT:
            values[:, j] = [per90(v, m) for v, m in zip(col, minutes)]
        elif spec.kind == KIND_COMPOSITION:
            parent = raw[spec.parent]
            for i in range(n):
                if np.isnan(col[i]) or np.isnan(parent[i]):
                    continue
                prop = derive_composition(parent[i], [col[i]])
                values[i, j] = math.nan if prop is None else prop[0]
        elif spec.kind == KIND_SUCCESS_RATE:
            parent = raw[spec.parent]
            for i in range(n):
                if np.isnan(col[i]) or np.isnan(parent[i]):
                    continue
                rate = success_rate(col[i], parent[i])
                values[i, j] = math.nan if rate is None else rate
        else:  # characteristic, appearance
            values[:, j] = col

    table = FeatureTable(
        ids=[rec.id for rec in records],
        columns=out_columns,
        values=values,
        represented=True,
    )
    return table.validate()


def apply_transforms(table, shift_constants):
    """Stage 2: log(x + c) on top-level rate columns; c=None leaves a column."""
    if not table.represented or table.transformed:
        raise InvalidInputError("transform expects a represented, untransformed table")
    top_names = {s.name for s in table.columns if s.kind == KIND_TOP_COUNT}
    unknown = set(shift_constants) - top_names
    if unknown:
        raise DataError(f"shift constants for non-count variables: {sorted(unknown)}")
    values = table.values.copy()
    applied = {}
    for j, spec in enumerate(table.columns):
        if spec.kind != KIND_TOP_COUNT:
            continue
        c = shift_constants.get(spec.name)
        applied[spec.name] = c
        if c is None:
            continue
        values[:, j] = [log_shift(v, c) if not np.isnan(v) else math.nan
                        for v in values[:, j]]
    return replace(table, values=values, transformed=True, shift_constants=applied)


def standardize_table(table, drop_constant=True):
    """Stage 3: per-column mad-median scaling, pooled over composition groups.

    Constant columns (or fully constant groups) are dropped and recorded in
    ``dropped`` when drop_constant is true, otherwise the error propagates.
    """
    if table.standardized:
        raise InvalidInputError("table is already standardized")
    values = table.values.copy()
    keep = np.ones(len(table.columns), dtype=bool)
    scales = {}
    dropped = list(table.dropped)

    for gid, cols in table.composition_groups().items():
        try:
            values[:, cols], scale = standardize_pooled(values[:, cols])
        except ConstantGroupError:
            if not drop_constant:
                raise
            keep[cols] = False
            dropped.extend(table.columns[j].name for j in cols)
            continue
        for j in cols:
            scales[table.columns[j].name] = scale

    comp_cols = {j for cols in table.composition_groups().values() for j in cols}
    for j, spec in enumerate(table.columns):
        if j in comp_cols:
            continue
        try:
            values[:, j], scales[spec.name] = standardize_mad_median(values[:, j])
        except ConstantColumnError:
            if not drop_constant:
                raise
            keep[j] = False
            dropped.append(spec.name)

    table = replace(
        table,
        columns=[s for j, s in enumerate(table.columns) if keep[j]],
        values=values[:, keep],
        standardized=True,
        scales=scales,
        dropped=dropped,
    )
    return table.validate()


def build_features(records, specs, shift_constants=None, drop_constant=True):
    """Run all three stages; shift_constants maps variable name -> c or None."""
    table = represent(records, specs)
    table = apply_transforms(table, shift_constants or {})
    return standardize_table(table, drop_constant=drop_constant)


# ---------------------------------------------------------------------------
# CSV / JSON interfaces


def _parse_cell(cell, column=""):
    cell = cell.strip()
    if cell == "":
        return math.nan
    try:
        return float(cell)
    except ValueError as exc:
        where = f" in column {column!r}" if column else ""
        raise DataError(f"cannot parse numeric cell {cell!r}{where}") from exc


def load_variable_specs(path):
    """Variable-metadata CSV: name,kind,parent,composition_id,weight."""
    specs = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"name", "kind"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise DataError(f"{path}: metadata needs at least columns name,kind")
        for row in reader:
            weight = row.get("weight") or ""
            specs.append(
                VariableSpec(
                    name=row["name"].strip(),
                    kind=row["kind"].strip(),
                    parent=(row.get("parent") or "").strip() or None,
                    composition_id=(row.get("composition_id") or "").strip() or None,
                    weight=float(weight) if weight.strip() else 1.0,
                )
            )
    if not specs:
        raise DataError(f"{path}: no variables defined")
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise DataError(f"{path}: duplicate variable names")
    return specs


def load_players_csv(path, specs, id_column="player_id", minutes_column="minutes_played"):
    """Players CSV (one row per player, empty cell = missing) -> records."""
    position_specs = [s for s in specs if s.kind == KIND_POSITION]
    league_specs = [s for s in specs if s.kind == KIND_LEAGUE_TEAM]
    quant_names = [s.name for s in specs if s.kind in QUANTITATIVE_KINDS]
    for s in position_specs:
        if s.name not in POSITION_CODES:
            raise DataError(f"{path}: unknown position code {s.name!r}")
    if len(league_specs) != 2:
        raise DataError(f"{path}: exactly two league_team columns are required")

    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        needed = [id_column, minutes_column, *quant_names]
        needed += [s.name for s in position_specs] + [s.name for s in league_specs]
        missing = [c for c in needed if c not in header]
        if missing:
            raise DataError(f"{path}: missing columns {missing}")
        for lineno, row in enumerate(reader, start=2):
            try:
                positions = frozenset(
                    s.name
                    for s in position_specs
                    if _parse_cell(row[s.name], s.name) == 1.0
                )
                records.append(
                    PlayerRecord(
                        id=row[id_column].strip(),
                        minutes_played=_parse_cell(row[minutes_column],
                                                   minutes_column),
                        raw_values={
                            n: _parse_cell(row[n], n) for n in quant_names
                        },
                        positions=positions,
                        league_score=_parse_cell(row[league_specs[0].name],
                                                 league_specs[0].name),
                        team_points=_parse_cell(row[league_specs[1].name],
                                                league_specs[1].name),
                    )
                )
            except (InvalidInputError, DataError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    if not records:
        raise DataError(f"{path}: no player rows")
    ids = [r.id for r in records]
    if len(set(ids)) != len(ids):
        raise DataError(f"{path}: duplicate player ids")
    return records


def write_features_csv(table, path, manifest_path=None):
    """Staged feature CSV plus a sidecar JSON manifest with the stage flags."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("player_id," + ",".join(s.name for s in table.columns) + "\n")
        for i, pid in enumerate(table.ids):
            cells = [
                "" if np.isnan(v) else repr(float(v)) for v in table.values[i]
            ]
            fh.write(pid + "," + ",".join(cells) + "\n")
    if manifest_path is not None:
        manifest = {
            "stages": {
                "represented": table.represented,
                "transformed": table.transformed,
                "standardized": table.standardized,
            },
            "columns": [
                {
                    "name": s.name,
                    "kind": s.kind,
                    "parent": s.parent,
                    "composition_id": s.composition_id,
                    "weight": s.weight,
                }
                for s in table.columns
            ],
            "shift_constants": table.shift_constants,
            "scales": table.scales,
            "dropped": table.dropped,
        }
        with open(manifest_path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
