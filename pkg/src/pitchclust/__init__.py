"""pitchclust: clustering of sports performance records with calibrated
multi-aspect validity indexes.

The package builds a mixed-type player dissimilarity (per-90 counts,
proportions and success rates, log transforms, robust standardization,
position geometry, club strength), runs a battery of dissimilarity-based
clusterers over a range of cluster counts, scores every clustering with
validity indexes calibrated against random clusterings, aggregates them
into weighted composite scores, and evaluates index weights against expert
survey rankings.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .calibrate import (
    PROFILE_BALANCED,
    PROFILE_STABILITY,
    PROFILE_UNIFORM,
    CalibratedPanel,
    WeightProfile,
    calibrate,
    calibrate_panel,
    composite,
    orient,
    rank_candidates,
    random_pool,
)
from .clusterers import (
    Clustering,
    Dendrogram,
    cluster_grid,
    cut,
    hierarchical,
    pam,
    random_clustering,
    spectral,
)
from .dissim import (
    GroupDissimilarity,
    aggregate_final,
    geco_position,
    league_team_dissim,
    player_dissimilarity,
    position_distance,
    quantitative_l1,
)
from .distmatrix import DissimilarityMatrix
from .features import (
    FeatureTable,
    PlayerRecord,
    VariableSpec,
    build_features,
    derive_composition,
    fit_shift_constant,
    log_shift,
    per90,
    standardize_mad_median,
    standardize_pooled,
    success_rate,
)
from .indexes import (
    ari,
    asw,
    ave_within,
    bootstab,
    ch,
    cvnn,
    dunn,
    entropy,
    pearson_gamma,
    separation_index,
)
from .mds import EmbeddingResult, classical_mds
from .survey import (
    ResponseSet,
    SurveyDesign,
    mc_randomness_test,
    score_rank,
    selection_scores,
    spearman,
    weight_search,
)

__all__ = [name for name in dir() if not name.startswith("_")]
