"""End-to-end workflow: every stage reads/writes the documented artifacts.

Artifacts written under the output directory:

  features.csv / features_manifest.json  staged feature table + stage flags
  dissim.bin [dissim.csv]                final dissimilarity (condensed binary)
  clusterings.csv                        labels for every (method, K)
  index_panel.csv                        raw validity indexes + orientation
  calibrated_panel.csv                   calibrated (oriented) index values
  ranking.csv                            top-5 candidates per criterion
  mds.csv                                2-D map with the leading clustering
  manifest.json                          config hash, seed, versions, hashes

Identical configuration and seed reproduce every artifact byte for byte.
"""

import csv
import hashlib
import json
import math
import os

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .calibrate import (
    PoolEntry,
    calibrate_panel,
    evaluate_indexes,
    orient,
    rank_candidates,
)
from .clusterers import Clustering, cluster_grid
from .dissim import player_dissimilarity
from .errors import DataError, UsageError
from .features import (
    DEFAULT_SHIFT_GRID,
    KIND_TOP_COUNT,
    build_features,
    fit_shift_constant,
    load_players_csv,
    load_variable_specs,
    write_features_csv,
)
from .indexes import ASPECT_INDEXES, ORIENTATIONS, cvnn
from .mds import classical_mds, write_coordinates_csv
from .survey import (
    bundled_design,
    bundled_expert_scores,
    load_design,
    load_responses,
    mc_randomness_test,
    selection_scores,
    weight_search,
)

_PANEL_INDEXES = ASPECT_INDEXES + ("asw", "ch", "dunn")


def _fmt(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return repr(float(value))


def _require_file(path, role):
    if not os.path.exists(path):
        raise DataError(f"{role} file not found: {path}")
    return path


# ---------------------------------------------------------------------------
# shift-constant fitting from season pairs


def load_shift_pairs(path):
    """CSV variable,x1,x2,minutes1,minutes2 -> {variable: [(...), ...]}."""
    pairs = {}
    with open(_require_file(path, "shift pairs"), "r", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        needed = {"variable", "x1", "x2", "minutes1", "minutes2"}
        if reader.fieldnames is None or not needed.issubset(reader.fieldnames):
            raise DataError(f"{path}: needs columns {sorted(needed)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                pairs.setdefault(row["variable"], []).append(
                    (
                        float(row["x1"]),
                        float(row["x2"]),
                        float(row["minutes1"]),
                        float(row["minutes2"]),
                    )
                )
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    return pairs


def resolve_shift_constants(specs, cfg):
    """Per-variable shift constants from the pairs file or explicit config."""
    top_names = [s.name for s in specs if s.kind == KIND_TOP_COUNT]
    if cfg.shift_pairs_csv:
        pairs = load_shift_pairs(cfg.shift_pairs_csv)
        return {
            name: fit_shift_constant(pairs[name], DEFAULT_SHIFT_GRID)
            for name in top_names
            if name in pairs
        }
    constants = {}
    for name, value in cfg.shift_constants.items():
        if name not in top_names:
            raise DataError(
                f"shift constant for {name!r}, which is not a count variable"
            )
        constants[name] = None if value is None else float(value)
    return constants


# ---------------------------------------------------------------------------
# stages


def stage_features(cfg):
    specs = load_variable_specs(_require_file(cfg.variables_csv, "variable metadata"))
    records = load_players_csv(_require_file(cfg.players_csv, "players"), specs)
    constants = resolve_shift_constants(specs, cfg)
    table = build_features(records, specs, shift_constants=constants)
    return records, specs, table


def stage_dissim(records, table, cfg):
    final, groups = player_dissimilarity(
        table,
        positions=[r.positions for r in records],
        league_score=np.array([r.league_score for r in records]),
        team_points=np.array([r.team_points for r in records]),
        geco_cutoff=cfg.geco_cutoff,
        group_weights=cfg.group_weights or None,
    )
    return final, groups


def write_clusterings_csv(path, ids, clusterings):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("player_id,method,k,label,seed\n")
        for c in clusterings:
            for pid, lab in zip(ids, c.labels):
                fh.write(f"{pid},{c.method},{c.k},{int(lab)},{c.seed}\n")


def read_clusterings_csv(path):
    """Returns (ids, [Clustering...]) preserving file order."""
    groups = {}
    order = []
    ids = []
    with open(_require_file(path, "clusterings"), "r", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        needed = {"player_id", "method", "k", "label", "seed"}
        if reader.fieldnames is None or not needed.issubset(reader.fieldnames):
            raise DataError(f"{path}: needs columns {sorted(needed)}")
        for row in reader:
            key = (row["method"], int(row["k"]), int(row["seed"]))
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append((row["player_id"], int(row["label"])))
    first = order[0]
    ids = [pid for pid, _ in groups[first]]
    clusterings = []
    for key in order:
        rows = groups[key]
        if [pid for pid, _ in rows] != ids:
            raise DataError(f"{path}: inconsistent player order across clusterings")
        clusterings.append(
            Clustering(
                labels=np.array([lab for _, lab in rows], dtype=np.int64),
                k=key[1],
                method=key[0],
                seed=key[2],
            )
        )
    return ids, clusterings


def evaluate_panel_raw(D, clusterings, cfg):
    """Raw values for the aspect + literature indexes, plus joint cvnn."""
    entries = [PoolEntry(c.method, c.k, c.labels, ("panel",)) for c in clusterings]
    raw = evaluate_indexes(
        D,
        entries,
        _PANEL_INDEXES,
        cfg.seed,
        sep_p=cfg.sep_p,
        bootstab_b=cfg.b_bootstab,
        threads=cfg.threads,
    )
    raw["cvnn"] = np.array(
        cvnn(D, [c.labels for c in clusterings], kappa=cfg.cvnn_kappa)
    )
    return raw


def write_index_panel_csv(path, clusterings, raw):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("method,k,index_id,value,orientation\n")
        for index_id in raw:
            for c, value in zip(clusterings, raw[index_id]):
                fh.write(
                    f"{c.method},{c.k},{index_id},{_fmt(value)},"
                    f"{ORIENTATIONS[index_id]}\n"
                )


def write_calibrated_csv(path, panel, profiles):
    composites = panel.composites(profiles)
    names = [p.name for p in profiles]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        header = ["method", "k", *ASPECT_INDEXES]
        header += [f"composite_{n}" for n in names]
        fh.write(",".join(header) + "\n")
        for i, c in enumerate(panel.candidates):
            row = [c.method, str(c.k)]
            row += [_fmt(panel.star[a][i]) for a in ASPECT_INDEXES]
            row += [_fmt(composites[n][i]) for n in names]
            fh.write(",".join(row) + "\n")


def read_calibrated_csv(path):
    """Returns (candidates as (method, k) rows, star matrix dict)."""
    with open(_require_file(path, "calibrated panel"), "r", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in ("method", "k", *ASPECT_INDEXES)
                   if c not in (reader.fieldnames or [])]
        if missing:
            raise DataError(f"{path}: missing columns {missing}")
        rows = list(reader)
    candidates = [SimpleCandidate(r["method"], int(r["k"])) for r in rows]
    star = {
        a: np.array(
            [float(r[a]) if r[a] != "" else np.nan for r in rows], dtype=float
        )
        for a in ASPECT_INDEXES
    }
    return candidates, star


class SimpleCandidate:
    def __init__(self, method, k):
        self.method = method
        self.k = k


def ranking_rows(clusterings, raw, panel, profiles, rank_indexes, top=5):
    """(criterion, rank, method, k, value) rows for the ranking CSV."""
    rows = []
    composites = panel.composites(profiles) if panel is not None else {}
    for name in composites:
        ranked = rank_candidates(panel.candidates, composites[name])
        for pos, r in enumerate(ranked[:top], start=1):
            rows.append((f"composite_{name}", pos, r.method, r.k, r.value))
    for index_id in rank_indexes:
        values = raw.get(index_id)
        if values is None:
            continue
        oriented = orient(values, index_id)
        defined = [
            (c, v, o)
            for c, v, o in zip(clusterings, values, oriented)
            if not math.isnan(v)
        ]
        ranked = sorted(
            defined, key=lambda t: (-t[2], t[0].k, t[0].method)
        )[:top]
        for pos, (c, v, _) in enumerate(ranked, start=1):
            rows.append((index_id, pos, c.method, c.k, v))
    return rows


def write_ranking_csv(path, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("criterion,rank,method,k,value\n")
        for criterion, pos, method, k, value in rows:
            fh.write(f"{criterion},{pos},{method},{k},{_fmt(value)}\n")


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, cfg, artifact_paths):
    manifest = {
        "config": cfg.canonical(),
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "versions": {
            "pitchclust": __version__,
            "numpy": np.__version__,
            "kernels": BACKEND,
        },
        "artifacts": {
            os.path.basename(p): _sha256(p) for p in artifact_paths
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def run_pipeline(cfg):
    """Execute every stage and write all artifacts; returns the manifest."""
    cfg.validate()
    if not cfg.players_csv or not cfg.variables_csv:
        raise UsageError("players_csv and variables_csv are required")
    if not cfg.out_dir:
        raise UsageError("an output directory is required")
    os.makedirs(cfg.out_dir, exist_ok=True)
    out = lambda name: os.path.join(cfg.out_dir, name)
    artifacts = []

    records, specs, table = stage_features(cfg)
    write_features_csv(table, out("features.csv"), out("features_manifest.json"))
    artifacts += [out("features.csv"), out("features_manifest.json")]

    final, groups = stage_dissim(records, table, cfg)
    final.save(out("dissim.bin"))
    artifacts.append(out("dissim.bin"))
    if cfg.write_dissim_csv:
        final.save_csv(out("dissim.csv"), ids=table.ids)
        artifacts.append(out("dissim.csv"))

    clusterings = cluster_grid(final, cfg.methods, cfg.ks(), cfg.seed)
    write_clusterings_csv(out("clusterings.csv"), table.ids, clusterings)
    artifacts.append(out("clusterings.csv"))

    raw = evaluate_panel_raw(final, clusterings, cfg)
    write_index_panel_csv(out("index_panel.csv"), clusterings, raw)
    artifacts.append(out("index_panel.csv"))

    panel = calibrate_panel(
        final,
        clusterings,
        cfg.ks(),
        cfg.seed,
        mode=cfg.calibration_mode,
        b_calibration=cfg.b_calibration,
        b_bootstab=cfg.b_bootstab,
        sep_p=cfg.sep_p,
        threads=cfg.threads,
    )
    profiles = cfg.profiles()
    write_calibrated_csv(out("calibrated_panel.csv"), panel, profiles)
    artifacts.append(out("calibrated_panel.csv"))

    rows = ranking_rows(clusterings, raw, panel, profiles, cfg.rank_indexes)
    write_ranking_csv(out("ranking.csv"), rows)
    artifacts.append(out("ranking.csv"))

    lead_profile = profiles[0]
    lead = rank_candidates(panel.candidates, panel.composites([lead_profile])[lead_profile.name])[0]
    best = next(
        c for c in clusterings if c.method == lead.method and c.k == lead.k
    )
    embedding = classical_mds(final, dims=2)
    write_coordinates_csv(embedding, out("mds.csv"), ids=table.ids,
                          labels=best.labels)
    artifacts.append(out("mds.csv"))

    return write_manifest(out("manifest.json"), cfg, artifacts)


# ---------------------------------------------------------------------------
# survey workflow


def run_survey(design_path, responses_path, out_path, *, panel_path=None,
               n_sim=2000, seed=0, grid=None):
    """Score a survey, test randomness, optionally search index weights."""
    design = bundled_design() if design_path == "bundled" else load_design(
        _require_file(design_path, "survey design"))
    if responses_path == "bundled":
        responses = bundled_expert_scores()
    else:
        responses = load_responses(_require_file(responses_path, "responses"))
    matrix, totals = selection_scores(design, responses)
    mc = mc_randomness_test(
        design, totals, n_experts=matrix.shape[0], n_sim=n_sim, seed=seed
    )
    report = {
        "n_experts": int(matrix.shape[0]),
        "selections": [s.id for s in design.selections],
        "totals": [float(t) for t in totals],
        "statistic": mc.statistic,
        "p_value": mc.p_value,
        "n_sim": mc.n_sim,
        "weight_search": None,
    }
    if panel_path is not None:
        candidates, star = read_calibrated_csv(panel_path)
        star_matrix = np.column_stack([star[a] for a in ASPECT_INDEXES])
        result = weight_search(
            candidates, star_matrix, design.selections, totals, grid=grid
        )
        report["weight_search"] = {
            "weights": {
                a: float(w) for a, w in zip(ASPECT_INDEXES, result.weights)
            },
            "correlation": result.correlation,
            "per_selection_best": [float(v) for v in result.per_selection_best],
        }
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return report
