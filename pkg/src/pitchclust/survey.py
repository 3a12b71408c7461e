"""Expert-survey scoring, a randomness test, and index-weight search.

Experts rank alternative groupings of well-known players in a set of
questions. Each clustering selection (a method plus a K range producing one
fixed grouping of the surveyed players) maps, per question, to one of the
question's choices; the rank an expert gives that choice converts to a
score. Balanced score tables keep questions with different choice counts
comparable. Selection sum scores feed (a) a one-sided Monte Carlo test of
the hypothesis that experts ranked at random, and (b) a grid search for
index weights whose composite score agrees best (Spearman) with the
experts.
"""

import itertools
import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .calibrate import composite
from .errors import DataError, InvalidInputError, UndefinedIndexError
from .indexes import ASPECT_INDEXES
from .rng import derive_rng

#: Score by rank for the supported choice counts.
SCORE_TABLES = {
    5: (30, 24, 18, 12, 6),
    3: (30, 20, 10),
    2: (30, 15),
}


def score_rank(choice_count, rank):
    """Score earned by the choice an expert put at ``rank``."""
    if choice_count not in SCORE_TABLES:
        raise InvalidInputError(
            f"unsupported choice count {choice_count}; "
            f"expected one of {sorted(SCORE_TABLES)}"
        )
    if not 1 <= rank <= choice_count:
        raise InvalidInputError(f"rank {rank} outside 1..{choice_count}")
    return SCORE_TABLES[choice_count][rank - 1]


@dataclass(frozen=True)
class Question:
    choice_count: int
    selection_to_choice: dict  # selection id -> choice id

    def __post_init__(self):
        if self.choice_count not in SCORE_TABLES:
            raise DataError(f"unsupported choice count {self.choice_count}")
        for sel, choice in self.selection_to_choice.items():
            if not 1 <= choice <= self.choice_count:
                raise DataError(
                    f"selection {sel} maps to choice {choice} outside "
                    f"1..{self.choice_count}"
                )


@dataclass(frozen=True)
class Selection:
    id: int
    method: str
    k_ranges: tuple  # ((lo, hi), ...)

    def contains(self, method, k):
        return method == self.method and any(
            lo <= k <= hi for lo, hi in self.k_ranges
        )


@dataclass(frozen=True)
class SurveyDesign:
    questions: tuple
    selections: tuple

    def __post_init__(self):
        ids = [s.id for s in self.selections]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate selection ids")
        for qi, q in enumerate(self.questions, start=1):
            missing = [s.id for s in self.selections
                       if s.id not in q.selection_to_choice]
            if missing:
                raise DataError(
                    f"question {qi} does not map selections {missing}"
                )

    @property
    def n_selections(self):
        return len(self.selections)


@dataclass(frozen=True)
class ResponseSet:
    """Per expert and question, the rank given to every choice (1..count)."""

    ranks: tuple  # ranks[expert][question][choice] -> rank

    def validate(self, design):
        for e, expert in enumerate(self.ranks):
            if len(expert) != len(design.questions):
                raise DataError(f"expert {e + 1}: wrong number of questions")
            for qi, (question, given) in enumerate(
                zip(design.questions, expert), start=1
            ):
                if sorted(given) != list(range(1, question.choice_count + 1)):
                    raise DataError(
                        f"expert {e + 1}, question {qi}: ranks must be a "
                        f"permutation of 1..{question.choice_count}"
                    )
        return self


def selection_scores(design, responses):
    """Experts x selections score matrix and its TOTAL row.

    ``responses`` is either a ResponseSet (scores are computed from the
    ranks) or an already-scored experts x selections matrix (passed through
    so pre-scored expert tables can be totalled directly).
    """
    if isinstance(responses, ResponseSet):
        responses.validate(design)
        sel_ids = [s.id for s in design.selections]
        matrix = np.zeros((len(responses.ranks), design.n_selections))
        for e, expert in enumerate(responses.ranks):
            for question, given in zip(design.questions, expert):
                for j, sid in enumerate(sel_ids):
                    choice = question.selection_to_choice[sid]
                    matrix[e, j] += score_rank(question.choice_count,
                                               given[choice - 1])
    else:
        matrix = np.asarray(responses, dtype=float)
        if matrix.ndim != 2 or matrix.shape[1] != design.n_selections:
            raise InvalidInputError(
                "score matrix must be experts x selections"
            )
    return matrix, matrix.sum(axis=0)


@dataclass(frozen=True)
class MCTestResult:
    statistic: float
    p_value: float
    n_sim: int


def _simulate_sum_scores(design, n_experts, n_sim, rng):
    """Sum scores of n_sim surveys answered with uniformly random rankings."""
    n_sel = design.n_selections
    sel_ids = [s.id for s in design.selections]
    sums = np.zeros((n_sim, n_sel))
    for question in design.questions:
        cc = question.choice_count
        scores = np.asarray(SCORE_TABLES[cc], dtype=float)
        u = rng.random((n_sim * n_experts, cc))
        order = np.argsort(u, axis=1)
        ranks = np.empty_like(order)
        np.put_along_axis(
            ranks, order,
            np.broadcast_to(np.arange(cc), order.shape).copy(), axis=1,
        )
        per_choice = scores[ranks]
        cols = np.array([question.selection_to_choice[s] - 1 for s in sel_ids])
        sums += per_choice[:, cols].reshape(n_sim, n_experts, n_sel).sum(axis=1)
    return sums


def mc_randomness_test(design, observed_totals, n_experts, n_sim=2000, seed=0):
    """One-sided Monte Carlo test of random expert ranking.

    The statistic is the variance (denominator n-1) of the selection sum
    scores; concentrated agreement inflates it. p uses the add-one
    convention: (1 + #{simulated >= observed}) / (n_sim + 1).
    """
    if n_sim < 1:
        raise InvalidInputError("n_sim must be at least 1")
    if n_experts < 1:
        raise InvalidInputError("n_experts must be at least 1")
    observed_totals = np.asarray(observed_totals, dtype=float)
    if observed_totals.size != design.n_selections:
        raise InvalidInputError("observed totals do not match the design")
    statistic = float(np.var(observed_totals, ddof=1))
    rng = derive_rng(seed, "survey-mc")
    sims = np.var(_simulate_sum_scores(design, n_experts, n_sim, rng),
                  axis=1, ddof=1)
    p = (1 + int(np.sum(sims >= statistic))) / (n_sim + 1)
    return MCTestResult(statistic=statistic, p_value=float(p), n_sim=n_sim)


def _midranks(x):
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size)
    sx = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x, y):
    """Spearman rank correlation with midranks for ties."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size or x.size < 3:
        raise InvalidInputError("need two equal-length vectors of size >= 3")
    rx = _midranks(x)
    ry = _midranks(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    denom = np.sqrt(float(dx @ dx) * float(dy @ dy))
    if denom == 0.0:
        raise UndefinedIndexError("spearman undefined for constant input")
    return float(dx @ dy) / denom


def default_weight_grid(levels=(0.0, 0.25, 0.5, 1.0)):
    """All weight vectors over the aspect indexes with entries from
    ``levels``, excluding the all-zero vector, in lexicographic order."""
    grid = [
        np.array(w)
        for w in itertools.product(levels, repeat=len(ASPECT_INDEXES))
        if any(v > 0 for v in w)
    ]
    return grid


@dataclass(frozen=True)
class WeightSearchResult:
    weights: np.ndarray
    correlation: float
    per_selection_best: np.ndarray


def weight_search(candidates, star_matrix, selections, sum_scores, grid=None):
    """Find index weights whose composite agrees best with the experts.

    For each grid weight vector the composite score is computed for every
    candidate, maximized within each selection (a selection stands for all
    its clusterings), and the resulting per-selection values are compared
    with the experts' sum scores by Spearman correlation. The first vector
    attaining the maximum correlation (in grid order) wins.
    """
    star = np.asarray(star_matrix, dtype=float)
    sum_scores = np.asarray(sum_scores, dtype=float)
    if grid is None:
        grid = default_weight_grid()
    grid = [np.asarray(w, dtype=float) for w in grid]
    if not grid:
        raise InvalidInputError("weight grid must be nonempty")
    if len(selections) != sum_scores.size:
        raise InvalidInputError("sum scores do not match the selections")
    member_rows = []
    for sel in selections:
        rows = [
            i for i, c in enumerate(candidates) if sel.contains(c.method, c.k)
        ]
        if not rows:
            raise InvalidInputError(
                f"selection {sel.id} contains no candidate clustering"
            )
        member_rows.append(np.asarray(rows))
    best = None
    for w in grid:
        scores = composite(star, w)
        per_sel = np.array([scores[rows].max() for rows in member_rows])
        try:
            corr = spearman(per_sel, sum_scores)
        except UndefinedIndexError:
            continue  # constant composite across selections: no ranking
        if best is None or corr > best.correlation:
            best = WeightSearchResult(
                weights=w, correlation=float(corr), per_selection_best=per_sel
            )
    if best is None:
        raise UndefinedIndexError(
            "every grid vector produced a constant composite across selections"
        )
    return best


# ---------------------------------------------------------------------------
# JSON documents and bundled fixtures


def design_from_dict(doc):
    try:
        selections = tuple(
            Selection(
                id=int(s["id"]),
                method=str(s["method"]),
                k_ranges=tuple((int(lo), int(hi)) for lo, hi in s["k_ranges"]),
            )
            for s in doc["selections"]
        )
        questions = tuple(
            Question(
                choice_count=int(q["choice_count"]),
                selection_to_choice={
                    int(k): int(v) for k, v in q["selection_to_choice"].items()
                },
            )
            for q in doc["questions"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed survey design document: {exc}") from exc
    return SurveyDesign(questions=questions, selections=selections)


def load_design(path):
    with open(path, "r", encoding="utf-8") as fh:
        return design_from_dict(json.load(fh))


def responses_from_dict(doc):
    if "ranks" in doc:
        return ResponseSet(
            ranks=tuple(
                tuple(tuple(int(r) for r in question) for question in expert)
                for expert in doc["ranks"]
            )
        )
    if "scores" in doc:
        return np.asarray(doc["scores"], dtype=float)
    raise DataError("responses document needs a 'ranks' or 'scores' field")


def load_responses(path):
    with open(path, "r", encoding="utf-8") as fh:
        return responses_from_dict(json.load(fh))


def _bundled(name):
    with resources.files("pitchclust.data").joinpath(name).open(
        "r", encoding="utf-8"
    ) as fh:
        return json.load(fh)


def bundled_design():
    """The seven-question survey design shipped with the package."""
    return design_from_dict(_bundled("survey_design.json"))


def bundled_expert_scores():
    """The 13 x 8 expert score matrix shipped with the package."""
    return np.asarray(_bundled("survey_expert_scores.json")["scores"], dtype=float)
