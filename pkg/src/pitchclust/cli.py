"""Command-line interface.

Subcommands: dissim, cluster, validate, calibrate, rank, survey, mds, run,
make-toy. Flags override config-file values, which override defaults. Exit
codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__, pipeline
from .calibrate import calibrate_panel
from .config import RunConfig, load_config
from .clusterers import cluster_grid
from .datasets import write_toy_dataset
from .distmatrix import DissimilarityMatrix
from .errors import PitchclustError, UsageError
from .indexes import ASPECT_INDEXES
from .mds import classical_mds, write_coordinates_csv


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(sub):
    sub.add_argument("--config", help="JSON config file")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--seed", type=int, help="master seed")
    sub.add_argument("--threads", type=int, help="parallel worker count")


def build_parser():
    parser = _Parser(prog="pitchclust", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("run", help="full pipeline: features to ranking")
    _add_common(p)
    p.add_argument("--players", help="players CSV")
    p.add_argument("--variables", help="variable metadata CSV")
    p.add_argument("--kmax", type=int, help="largest number of clusters")
    p.add_argument("--mode", choices=("C1", "C2"), help="calibration mode")

    p = subs.add_parser("dissim", help="features and dissimilarity matrix")
    _add_common(p)
    p.add_argument("--players", required=True)
    p.add_argument("--variables", required=True)
    p.add_argument("--csv", action="store_true", help="also write dissim.csv")

    p = subs.add_parser("cluster", help="candidate clusterings over a K grid")
    _add_common(p)
    p.add_argument("--dissim", required=True, help="dissim.bin from `dissim`")
    p.add_argument("--ids", help="features.csv to recover player ids")
    p.add_argument("--kmin", type=int)
    p.add_argument("--kmax", type=int)
    p.add_argument("--methods", help="comma-separated method names")

    p = subs.add_parser("validate", help="raw validity indexes for clusterings")
    _add_common(p)
    p.add_argument("--dissim", required=True)
    p.add_argument("--clusterings", required=True)

    p = subs.add_parser("calibrate", help="calibrate indexes against random pools")
    _add_common(p)
    p.add_argument("--dissim", required=True)
    p.add_argument("--clusterings", required=True)
    p.add_argument("--mode", choices=("C1", "C2"))
    p.add_argument("--b-calibration", type=int, dest="b_calibration")

    p = subs.add_parser("rank", help="rank candidates by composite and indexes")
    _add_common(p)
    p.add_argument("--calibrated", required=True, help="calibrated_panel.csv")
    p.add_argument("--panel", help="index_panel.csv for literature indexes")

    p = subs.add_parser("survey", help="score expert survey, test randomness")
    _add_common(p)
    p.add_argument("--design", default="bundled", help="design JSON or 'bundled'")
    p.add_argument("--responses", default="bundled",
                   help="responses/scores JSON or 'bundled'")
    p.add_argument("--panel", help="calibrated_panel.csv for weight search")
    p.add_argument("--n-sim", type=int, default=2000, dest="n_sim")
    p.add_argument("--grid", help="JSON file with a list of weight vectors")

    p = subs.add_parser("mds", help="2-D map of the dissimilarity matrix")
    _add_common(p)
    p.add_argument("--dissim", required=True)
    p.add_argument("--clusterings", help="clusterings.csv for labels")
    p.add_argument("--method", help="method of the labelling clustering")
    p.add_argument("--k", type=int, help="K of the labelling clustering")

    p = subs.add_parser("make-toy", help="write the bundled synthetic dataset")
    _add_common(p)
    return parser


def _merge_config(args, require_out=True):
    cfg = load_config(args.config) if args.config else RunConfig()
    for flag, attr in (
        ("players", "players_csv"),
        ("variables", "variables_csv"),
        ("out", "out_dir"),
        ("seed", "seed"),
        ("threads", "threads"),
        ("kmin", "k_min"),
        ("kmax", "k_max"),
        ("mode", "calibration_mode"),
        ("b_calibration", "b_calibration"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, attr, value)
    if getattr(args, "csv", False):
        cfg.write_dissim_csv = True
    if getattr(args, "methods", None):
        cfg.methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    if require_out and not cfg.out_dir:
        raise UsageError("an output directory is required (--out or config)")
    return cfg


def _out_path(cfg, name):
    os.makedirs(cfg.out_dir, exist_ok=True)
    return os.path.join(cfg.out_dir, name)


def _read_ids(path, n):
    if path is None:
        return [str(i) for i in range(n)]
    import csv as _csv

    with open(path, "r", encoding="utf-8") as fh:
        reader = _csv.reader(fh)
        next(reader)
        return [row[0] for row in reader]


def _cmd_run(args):
    cfg = _merge_config(args)
    manifest = pipeline.run_pipeline(cfg)
    print(f"wrote {len(manifest['artifacts'])} artifacts to {cfg.out_dir}")
    return 0


def _cmd_dissim(args):
    cfg = _merge_config(args)
    if cfg.seed is None:
        cfg.seed = 0  # the dissimilarity stage itself is deterministic
    records, specs, table = pipeline.stage_features(cfg)
    pipeline.write_features_csv(
        table, _out_path(cfg, "features.csv"), _out_path(cfg, "features_manifest.json")
    )
    final, groups = pipeline.stage_dissim(records, table, cfg)
    final.save(_out_path(cfg, "dissim.bin"))
    if cfg.write_dissim_csv:
        final.save_csv(_out_path(cfg, "dissim.csv"), ids=table.ids)
    scales = ", ".join(f"{g.name}: sd={g.scale:.6g} w={g.weight:g}" for g in groups)
    print(f"n={final.n} players; groups: {scales}")
    return 0


def _cmd_cluster(args):
    cfg = _merge_config(args)
    cfg.validate()
    D = DissimilarityMatrix.load(pipeline._require_file(args.dissim, "dissimilarity"))
    clusterings = cluster_grid(D, cfg.methods, cfg.ks(), cfg.seed)
    ids = _read_ids(args.ids, D.n)
    pipeline.write_clusterings_csv(_out_path(cfg, "clusterings.csv"), ids, clusterings)
    print(f"wrote {len(clusterings)} clusterings "
          f"({len(cfg.methods)} methods x K={cfg.k_min}..{cfg.k_max})")
    return 0


def _cmd_validate(args):
    cfg = _merge_config(args)
    if cfg.seed is None:
        raise UsageError("a master seed is required (--seed or config)")
    D = DissimilarityMatrix.load(pipeline._require_file(args.dissim, "dissimilarity"))
    _, clusterings = pipeline.read_clusterings_csv(args.clusterings)
    raw = pipeline.evaluate_panel_raw(D, clusterings, cfg)
    pipeline.write_index_panel_csv(_out_path(cfg, "index_panel.csv"), clusterings, raw)
    print(f"evaluated {len(raw)} indexes on {len(clusterings)} clusterings")
    return 0


def _cmd_calibrate(args):
    cfg = _merge_config(args)
    if cfg.seed is None:
        raise UsageError("a master seed is required (--seed or config)")
    D = DissimilarityMatrix.load(pipeline._require_file(args.dissim, "dissimilarity"))
    _, clusterings = pipeline.read_clusterings_csv(args.clusterings)
    ks = sorted({c.k for c in clusterings})
    panel = calibrate_panel(
        D, clusterings, ks, cfg.seed,
        mode=cfg.calibration_mode,
        b_calibration=cfg.b_calibration,
        b_bootstab=cfg.b_bootstab,
        sep_p=cfg.sep_p,
        threads=cfg.threads,
    )
    pipeline.write_calibrated_csv(
        _out_path(cfg, "calibrated_panel.csv"), panel, cfg.profiles()
    )
    print(f"calibrated {len(clusterings)} candidates (mode {cfg.calibration_mode})")
    return 0


def _cmd_rank(args):
    cfg = _merge_config(args)
    candidates, star = pipeline.read_calibrated_csv(args.calibrated)

    class _Panel:
        def composites(self, profiles):
            from .calibrate import composite

            matrix = np.column_stack([star[a] for a in ASPECT_INDEXES])
            return {p.name: composite(matrix, p) for p in profiles}

    panel = _Panel()
    panel.candidates = candidates
    raw = {}
    if args.panel:
        raw = _read_index_panel(args.panel)
    rows = pipeline.ranking_rows(
        candidates, raw, panel, cfg.profiles(), cfg.rank_indexes
    )
    pipeline.write_ranking_csv(_out_path(cfg, "ranking.csv"), rows)
    print(f"wrote ranking.csv with {len(rows)} rows")
    return 0


def _read_index_panel(path):
    import csv as _csv

    values = {}
    with open(pipeline._require_file(path, "index panel"), "r", encoding="utf-8") as fh:
        for row in _csv.DictReader(fh):
            values.setdefault(row["index_id"], []).append(
                float(row["value"]) if row["value"] != "" else float("nan")
            )
    return {k: np.array(v) for k, v in values.items()}


def _cmd_survey(args):
    cfg = _merge_config(args, require_out=False)
    grid = None
    if args.grid:
        with open(pipeline._require_file(args.grid, "weight grid"), "r",
                  encoding="utf-8") as fh:
            doc = json.load(fh)
        if not isinstance(doc, list) or not doc:
            raise UsageError("weight grid must be a nonempty JSON list")
        grid = [np.asarray(w, dtype=float) for w in doc]
    out_path = _out_path(cfg, "survey_report.json") if cfg.out_dir else None
    report = pipeline.run_survey(
        args.design,
        args.responses,
        out_path,
        panel_path=args.panel,
        n_sim=args.n_sim,
        seed=cfg.seed if cfg.seed is not None else 0,
        grid=grid,
    )
    print(json.dumps(
        {k: report[k] for k in ("totals", "statistic", "p_value")}, indent=2
    ))
    if report["weight_search"]:
        print(json.dumps({"weight_search": report["weight_search"]}, indent=2))
    return 0


def _cmd_mds(args):
    cfg = _merge_config(args)
    D = DissimilarityMatrix.load(pipeline._require_file(args.dissim, "dissimilarity"))
    labels = None
    if args.clusterings:
        _, clusterings = pipeline.read_clusterings_csv(args.clusterings)
        if args.method is None or args.k is None:
            raise UsageError("--method and --k select the labelling clustering")
        match = [c for c in clusterings if c.method == args.method and c.k == args.k]
        if not match:
            raise UsageError(f"no clustering {args.method}(k={args.k}) in file")
        labels = match[0].labels
    result = classical_mds(D, dims=2)
    write_coordinates_csv(result, _out_path(cfg, "mds.csv"), labels=labels)
    print(f"wrote mds.csv (stress {result.stress:.4g}, "
          f"clamped mass {result.clamped_mass_fraction:.4g})")
    return 0


def _cmd_make_toy(args):
    cfg = _merge_config(args)
    players = _out_path(cfg, "toy_players.csv")
    variables = _out_path(cfg, "toy_variables.csv")
    write_toy_dataset(players, variables)
    print(f"wrote {players} and {variables}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "dissim": _cmd_dissim,
    "cluster": _cmd_cluster,
    "validate": _cmd_validate,
    "calibrate": _cmd_calibrate,
    "rank": _cmd_rank,
    "survey": _cmd_survey,
    "mds": _cmd_mds,
    "make-toy": _cmd_make_toy,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except PitchclustError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
