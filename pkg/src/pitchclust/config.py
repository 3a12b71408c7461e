"""Run configuration: defaults, JSON config files, CLI overrides.

Precedence is flags > config file > defaults. The configuration hash that
goes into the run manifest covers everything that affects results; output
location and thread count are execution details and stay out of the hash.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field

from .calibrate import (
    CALIBRATION_MODES,
    DEFAULT_B_BOOTSTAB,
    DEFAULT_B_CALIBRATION,
    DEFAULT_PROFILES,
    WeightProfile,
)
from .clusterers import METHOD_NAMES
from .dissim import DEFAULT_GECO_CUTOFF
from .errors import UsageError

DEFAULT_RANK_INDEXES = ("asw", "ch", "dunn", "pearson_gamma", "cvnn", "bootstab")


@dataclass
class RunConfig:
    players_csv: str = None
    variables_csv: str = None
    out_dir: str = None
    seed: int = None
    k_min: int = 2
    k_max: int = 8
    methods: tuple = METHOD_NAMES
    calibration_mode: str = "C1"
    b_calibration: int = DEFAULT_B_CALIBRATION
    b_bootstab: int = DEFAULT_B_BOOTSTAB
    sep_p: float = 0.1
    cvnn_kappa: int = 10
    geco_cutoff: float = DEFAULT_GECO_CUTOFF
    threads: int = 1
    group_weights: dict = field(default_factory=dict)
    shift_constants: dict = field(default_factory=dict)
    shift_pairs_csv: str = None
    weight_profiles: dict = field(
        default_factory=lambda: {p.name: dict(p.weights) for p in DEFAULT_PROFILES}
    )
    rank_indexes: tuple = DEFAULT_RANK_INDEXES
    write_dissim_csv: bool = False

    def validate(self):
        if self.seed is None:
            raise UsageError("a master seed is required (--seed or config)")
        if not 2 <= self.k_min <= self.k_max:
            raise UsageError("need 2 <= k_min <= k_max")
        if self.calibration_mode not in CALIBRATION_MODES:
            raise UsageError(
                f"calibration_mode must be one of {CALIBRATION_MODES}"
            )
        unknown = set(self.methods) - set(METHOD_NAMES)
        if unknown:
            raise UsageError(f"unknown methods: {sorted(unknown)}")
        if not self.methods:
            raise UsageError("at least one clustering method is required")
        if self.threads < 1:
            raise UsageError("threads must be >= 1")
        if not self.weight_profiles:
            raise UsageError("at least one weight profile is required")
        for name, weights in self.weight_profiles.items():
            WeightProfile(name, weights)  # raises on bad content
        return self

    def ks(self):
        return tuple(range(self.k_min, self.k_max + 1))

    def profiles(self):
        return [WeightProfile(n, w) for n, w in self.weight_profiles.items()]

    def canonical(self):
        """Result-relevant configuration as a plain dict."""
        doc = asdict(self)
        doc.pop("out_dir")
        doc.pop("threads")
        doc["methods"] = list(self.methods)
        doc["rank_indexes"] = list(self.rank_indexes)
        return doc

    def config_hash(self):
        blob = json.dumps(self.canonical(), sort_keys=True,
                          separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


_FIELDS = set(RunConfig.__dataclass_fields__)


def config_from_dict(doc):
    unknown = set(doc) - _FIELDS
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    cfg = RunConfig(**doc)
    if isinstance(cfg.methods, list):
        cfg.methods = tuple(cfg.methods)
    if isinstance(cfg.rank_indexes, list):
        cfg.rank_indexes = tuple(cfg.rank_indexes)
    return cfg


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise UsageError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return config_from_dict(doc)
