"""Synthetic desk-scale player data for demos, smoke tests and the CLI.

The generator uses only uniform draws from a seeded generator, so the
emitted CSV files are reproducible byte for byte. Copies of the default
dataset ship as package data (data/toy_players.csv, data/toy_variables.csv).
"""

from importlib import resources

import numpy as np

from .rng import derive_rng

TOY_SEED = 230795
TOY_N = 60

_ARCHETYPES = (
    # name, positions pool, per-90 rates:
    #   shots, passes, tackles, interceptions, clearances, dribbles,
    #   aerials, crosses
    ("centre_back", (("DC",), ("DC", "DMC")),
     dict(shots=0.4, passes=42.0, tackles=1.8, interceptions=2.6,
          clearances=6.0, dribbles=0.3, aerials=3.0, crosses=0.2)),
    ("full_back", (("DL",), ("DR",), ("DL", "ML"), ("DR", "MR")),
     dict(shots=0.6, passes=40.0, tackles=2.4, interceptions=2.2,
          clearances=3.0, dribbles=0.9, aerials=1.4, crosses=3.0)),
    ("midfielder", (("MC",), ("DMC", "MC"), ("MC", "AMC"), ("ML",), ("MR",)),
     dict(shots=1.2, passes=55.0, tackles=2.6, interceptions=1.8,
          clearances=1.2, dribbles=1.2, aerials=1.2, crosses=1.2)),
    ("attacker", (("FW",), ("AMC", "FW"), ("AML",), ("AMR",), ("AML", "AMR")),
     dict(shots=3.2, passes=30.0, tackles=0.8, interceptions=0.5,
          clearances=0.6, dribbles=2.4, aerials=1.8, crosses=1.4)),
)

_LEAGUES = (
    (92.5, "L1"), (84.0, "L2"), (76.5, "L3"), (71.0, "L4"),
    (66.5, "L5"), (60.0, "L6"), (54.5, "L7"), (49.0, "L8"),
)

VARIABLES_CSV_ROWS = [
    # name, kind, parent, composition_id, weight
    ("minutes_played", "appearance", "", "", "1"),
    ("appearances", "appearance", "", "", "1"),
    ("age", "characteristic", "", "", "1"),
    ("height", "characteristic", "", "", "1"),
    ("shots", "top_count", "", "", "1"),
    ("shots_outbox", "composition", "shots", "shot_zone", "1"),
    ("shots_box", "composition", "shots", "shot_zone", "1"),
    ("shots_sixyard", "composition", "shots", "shot_zone", "1"),
    ("goals", "success_rate", "shots", "", "1"),
    ("passes", "top_count", "", "", "1"),
    ("passes_long", "composition", "passes", "pass_length", "1"),
    ("passes_short", "composition", "passes", "pass_length", "1"),
    ("passes_accurate", "success_rate", "passes", "", "1"),
    ("tackles", "top_count", "", "", "1"),
    ("interceptions", "top_count", "", "", "1"),
    ("clearances", "top_count", "", "", "1"),
    ("dribbles", "top_count", "", "", "1"),
    ("aerials", "top_count", "", "", "1"),
    ("aerials_won", "success_rate", "aerials", "", "1"),
    ("crosses", "top_count", "", "", "1"),
    ("DC", "position", "", "", "1"),
    ("DL", "position", "", "", "1"),
    ("DR", "position", "", "", "1"),
    ("DMC", "position", "", "", "1"),
    ("MC", "position", "", "", "1"),
    ("ML", "position", "", "", "1"),
    ("MR", "position", "", "", "1"),
    ("AMC", "position", "", "", "1"),
    ("AML", "position", "", "", "1"),
    ("AMR", "position", "", "", "1"),
    ("FW", "position", "", "", "1"),
    ("league_score", "league_team", "", "", "1"),
    ("team_points", "league_team", "", "", "1"),
]

POSITION_ORDER = ("DC", "DL", "DR", "DMC", "MC", "ML", "MR", "AMC", "AML",
                  "AMR", "FW")


def _split_count(total, shares, rng):
    """Integer split of ``total`` proportional to jittered shares, exact sum."""
    shares = np.asarray(shares, dtype=float)
    shares = shares * (0.6 + 0.8 * rng.random(shares.size))
    shares = shares / shares.sum()
    raw = shares * total
    base = np.floor(raw).astype(int)
    rest = total - base.sum()
    order = np.argsort(-(raw - base), kind="stable")
    base[order[:rest]] += 1
    return base


def _count(rate_per90, minutes, rng):
    lam = rate_per90 * minutes / 90.0
    jitter = 0.55 + 0.9 * rng.random()
    return int(round(lam * jitter))


def make_toy_players(n=TOY_N, seed=TOY_SEED):
    """Rows (list of dicts) for a synthetic players CSV."""
    rng = derive_rng(seed, "toy-players")
    rows = []
    per_type = max(1, n // len(_ARCHETYPES))
    for i in range(n):
        arch_idx = min(i // per_type, len(_ARCHETYPES) - 1)
        name, position_pools, rates = _ARCHETYPES[arch_idx]
        positions = position_pools[int(rng.integers(len(position_pools)))]
        minutes = int(1400 + rng.integers(0, 2001))
        league_score, _ = _LEAGUES[int(rng.integers(len(_LEAGUES)))]
        row = {
            "player_id": f"P{i + 1:03d}",
            "minutes_played": str(minutes),
            "appearances": str(int(np.ceil(minutes / 90.0))
                               + int(rng.integers(0, 6))),
            "age": str(int(18 + rng.integers(0, 18))),
            "height": str(int(168 + rng.integers(0, 26))),
            "league_score": repr(league_score),
            "team_points": str(int(30 + rng.integers(0, 66))),
        }
        shots = _count(rates["shots"], minutes, rng)
        if name == "centre_back" and rng.random() < 0.4:
            shots = 0  # zero parent count: zone shares and goal rate missing
        zone = (_split_count(shots, (0.3, 0.5, 0.2), rng)
                if shots > 0 else np.zeros(3, dtype=int))
        goals = int(rng.integers(0, shots + 1)) if shots > 0 else 0
        goals = min(goals, max(0, int(round(shots * 0.35))))
        passes = max(2, _count(rates["passes"], minutes, rng))
        length = _split_count(passes, (0.25, 0.75), rng)
        accurate = int(round(passes * (0.62 + 0.3 * rng.random())))
        aerials = _count(rates["aerials"], minutes, rng)
        aerials_won = int(round(aerials * (0.3 + 0.5 * rng.random())))
        row.update(
            shots=str(shots),
            shots_outbox=str(int(zone[0])),
            shots_box=str(int(zone[1])),
            shots_sixyard=str(int(zone[2])),
            goals=str(goals),
            passes=str(passes),
            passes_long=str(int(length[0])),
            passes_short=str(int(length[1])),
            passes_accurate=str(min(accurate, passes)),
            tackles=str(_count(rates["tackles"], minutes, rng)),
            interceptions=str(_count(rates["interceptions"], minutes, rng)),
            clearances=str(_count(rates["clearances"], minutes, rng)),
            dribbles=str(_count(rates["dribbles"], minutes, rng)),
            aerials=str(aerials),
            aerials_won=str(min(aerials_won, aerials)),
            crosses=str(_count(rates["crosses"], minutes, rng)),
        )
        for code in POSITION_ORDER:
            row[code] = "1" if code in positions else "0"
        rows.append(row)
    # a sprinkling of genuinely missing cells
    rows[7]["age"] = ""
    rows[23]["crosses"] = ""
    return rows


def write_toy_dataset(players_path, variables_path, n=TOY_N, seed=TOY_SEED):
    """Write the synthetic players and variable-metadata CSV files."""
    rows = make_toy_players(n=n, seed=seed)
    header = list(rows[0].keys())
    with open(players_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row[c] for c in header) + "\n")
    with open(variables_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("name,kind,parent,composition_id,weight\n")
        for fields in VARIABLES_CSV_ROWS:
            fh.write(",".join(fields) + "\n")


def bundled_toy_paths():
    """Paths of the packaged copies of the toy dataset."""
    base = resources.files("pitchclust.data")
    return base.joinpath("toy_players.csv"), base.joinpath("toy_variables.csv")
