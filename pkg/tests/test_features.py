import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pitchclust.errors import (
    ConstantColumnError,
    ConstantGroupError,
    DataError,
    FitFailureError,
    InvalidInputError,
)
from pitchclust.features import (
    DEFAULT_SHIFT_GRID,
    PlayerRecord,
    VariableSpec,
    apply_transforms,
    build_features,
    derive_composition,
    fit_shift_constant,
    load_players_csv,
    load_variable_specs,
    log_shift,
    per90,
    represent,
    standardize_mad_median,
    standardize_pooled,
    success_rate,
)


class TestPer90:
    def test_identity(self):
        assert per90(1, 90) == 1.0

    def test_zero_count(self):
        assert per90(0, 1000) == 0.0

    def test_formula(self):
        assert per90(45, 3711) == pytest.approx(45 * 90 / 3711)

    def test_minutes_must_be_positive(self):
        with pytest.raises(InvalidInputError):
            per90(3, 0)
        with pytest.raises(InvalidInputError):
            per90(3, -10)

    @given(
        st.floats(0, 1e6, allow_nan=False),
        st.floats(0.01, 100, allow_nan=False),
        st.floats(1, 5000, allow_nan=False),
    )
    def test_linear_in_count(self, x, a, m):
        assert per90(a * x, m) == pytest.approx(a * per90(x, m), rel=1e-12)


class TestDeriveComposition:
    def test_proportions(self):
        np.testing.assert_allclose(
            derive_composition(10, [2, 3, 5]), [0.2, 0.3, 0.5]
        )

    def test_zero_parent_is_missing(self):
        assert derive_composition(0, [0, 0, 0]) is None

    def test_degenerate_single_category(self):
        np.testing.assert_allclose(derive_composition(4, [4, 0, 0]), [1, 0, 0])

    def test_negative_inputs(self):
        with pytest.raises(InvalidInputError):
            derive_composition(-1, [0])
        with pytest.raises(InvalidInputError):
            derive_composition(5, [-2, 7])

    def test_subcounts_cannot_exceed_parent(self):
        with pytest.raises(InvalidInputError):
            derive_composition(4, [3, 3])

    @given(st.lists(st.integers(0, 50), min_size=1, max_size=6).filter(sum))
    def test_sums_to_one(self, subs):
        props = derive_composition(sum(subs), subs)
        assert math.isclose(props.sum(), 1.0, abs_tol=1e-9)


class TestSuccessRate:
    def test_basic(self):
        assert success_rate(3, 10) == pytest.approx(0.3)

    def test_no_attempts_is_missing(self):
        assert success_rate(0, 0) is None

    def test_perfect(self):
        assert success_rate(10, 10) == 1.0

    def test_more_successes_than_attempts(self):
        with pytest.raises(InvalidInputError):
            success_rate(11, 10)


class TestLogShift:
    def test_log_one(self):
        assert log_shift(0, 1) == 0.0

    def test_log_e(self):
        assert log_shift(math.e - 1, 1) == pytest.approx(1.0)

    def test_ln_ten(self):
        assert log_shift(9, 1) == pytest.approx(math.log(10))

    def test_errors(self):
        with pytest.raises(InvalidInputError):
            log_shift(1, 0)
        with pytest.raises(InvalidInputError):
            log_shift(-1, 0.5)


def _ols_slope_reference(e, r):
    return np.polyfit(e, r, 1)[0]


def _slope_for_constant(pairs, c):
    x1, x2, m1, m2 = np.asarray(pairs, float).T
    if c is None:
        y1, y2 = x1, x2
    else:
        y1, y2 = np.log(x1 + c), np.log(x2 + c)
    return _ols_slope_reference((m1 * y1 + m2 * y2) / (m1 + m2), np.abs(y2 - y1))


class TestFitShiftConstant:
    def test_identical_seasons_tie_broken_to_smallest(self):
        pairs = [(1, 1, 900, 900), (5, 5, 900, 900), (20, 20, 900, 900)]
        assert fit_shift_constant(pairs, (0.5, 0.1, 2.0)) == 0.1

    def test_multiplicative_noise_prefers_log(self):
        rng = np.random.default_rng(3)
        x1 = 10 ** rng.uniform(-1, 1, 80)
        x2 = x1 * np.exp(rng.normal(0, 0.25, 80))
        minutes = rng.uniform(900, 3400, (2, 80))
        pairs = list(zip(x1, x2, minutes[0], minutes[1]))
        chosen = fit_shift_constant(pairs, DEFAULT_SHIFT_GRID)
        assert chosen is not None
        best_abs = abs(_slope_for_constant(pairs, chosen))
        for c in DEFAULT_SHIFT_GRID:
            assert best_abs <= abs(_slope_for_constant(pairs, c)) + 1e-12
        assert chosen <= 0.5  # strong shrink at the low end

    def test_additive_noise_prefers_raw_or_large_shift(self):
        rng = np.random.default_rng(4)
        x1 = rng.uniform(0, 30, 80)
        x2 = np.clip(x1 + rng.normal(0, 1.0, 80), 0, None)
        minutes = rng.uniform(900, 3400, (2, 80))
        pairs = list(zip(x1, x2, minutes[0], minutes[1]))
        chosen = fit_shift_constant(pairs, DEFAULT_SHIFT_GRID)
        assert chosen is None or chosen >= 2.0
        best_abs = abs(_slope_for_constant(pairs, chosen))
        for c in DEFAULT_SHIFT_GRID:
            assert best_abs <= abs(_slope_for_constant(pairs, c)) + 1e-12

    def test_chosen_is_grid_member_or_sentinel(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            x1 = rng.uniform(0, 10, 20)
            x2 = rng.uniform(0, 10, 20)
            pairs = list(zip(x1, x2, rng.uniform(900, 3000, 20),
                             rng.uniform(900, 3000, 20)))
            chosen = fit_shift_constant(pairs, (0.1, 1.0, 5.0))
            assert chosen in (None, 0.1, 1.0, 5.0)

    def test_all_degenerate_is_fit_failure(self):
        # identical values everywhere: zero variance of the explanatory term
        pairs = [(2, 2, 900, 900)] * 5
        with pytest.raises(FitFailureError):
            fit_shift_constant(pairs, (0.5, 1.0))

    def test_preconditions(self):
        with pytest.raises(InvalidInputError):
            fit_shift_constant([(1, 2, 900, 900)], (0.5,))
        with pytest.raises(InvalidInputError):
            fit_shift_constant([(1, 2, 900, 900)] * 3, ())


class TestStandardizeMadMedian:
    def test_three_values(self):
        standardized, scale = standardize_mad_median([0, 1, 2])
        np.testing.assert_allclose(standardized, [-1.5, 0, 1.5])
        assert scale == pytest.approx(2 / 3)

    def test_constant_column(self):
        with pytest.raises(ConstantColumnError):
            standardize_mad_median([5, 5, 5])

    def test_two_values(self):
        standardized, scale = standardize_mad_median([-1, 1])
        np.testing.assert_allclose(standardized, [-1, 1])
        assert scale == 1.0

    def test_missing_stays_missing(self):
        standardized, _ = standardize_mad_median([0, np.nan, 1, 2])
        assert np.isnan(standardized[1])
        assert not np.isnan(standardized[[0, 2, 3]]).any()

    @given(
        st.lists(
            st.floats(-1e4, 1e4, allow_nan=False), min_size=3, max_size=40
        ).filter(lambda xs: max(xs) > min(xs))
    )
    @settings(max_examples=60)
    def test_unit_average_deviation(self, xs):
        standardized, _ = standardize_mad_median(xs)
        med = np.median(standardized)
        assert abs(np.abs(standardized - med).mean() - 1.0) < 1e-9


class TestStandardizePooled:
    def test_two_columns(self):
        cols = np.array([[0.0, 1.0], [1.0, 0.0]])
        standardized, scale = standardize_pooled(cols)
        assert scale == pytest.approx(0.5)
        np.testing.assert_allclose(standardized, [[-1, 1], [1, -1]])

    def test_constant_member_shares_pooled_scale(self):
        cols = np.array([[0.0, 0.5], [1.0, 0.5], [0.0, 0.5], [1.0, 0.5]])
        standardized, scale = standardize_pooled(cols)
        assert scale == pytest.approx(0.25)
        np.testing.assert_allclose(standardized[:, 1], 0.0)

    def test_all_constant_group(self):
        with pytest.raises(ConstantGroupError):
            standardize_pooled(np.full((4, 2), 0.25))


def _toy_specs():
    return [
        VariableSpec("shots", "top_count"),
        VariableSpec("z_out", "composition", parent="shots", composition_id="zone"),
        VariableSpec("z_box", "composition", parent="shots", composition_id="zone"),
        VariableSpec("z_six", "composition", parent="shots", composition_id="zone"),
        VariableSpec("goals", "success_rate", parent="shots"),
        VariableSpec("age", "characteristic"),
        VariableSpec("DC", "position"),
        VariableSpec("FW", "position"),
        VariableSpec("league_score", "league_team"),
        VariableSpec("team_points", "league_team"),
    ]


def _record(pid, minutes, shots, zones, goals, age, positions):
    return PlayerRecord(
        id=pid,
        minutes_played=minutes,
        raw_values={
            "shots": shots,
            "z_out": zones[0],
            "z_box": zones[1],
            "z_six": zones[2],
            "goals": goals,
            "age": age,
        },
        positions=frozenset(positions),
        league_score=80.0,
        team_points=60.0,
    )


class TestRepresent:
    def test_stages_and_values(self):
        records = [
            _record("a", 900, 10, (2, 3, 5), 3, 24, {"FW"}),
            _record("b", 1800, 0, (0, 0, 0), 0, 30, {"DC"}),
            _record("c", 900, 4, (4, 0, 0), 4, 27, {"DC", "FW"}),
        ]
        table = represent(records, _toy_specs())
        assert table.represented and not table.standardized
        shots = table.values[:, table.column_index("shots")]
        np.testing.assert_allclose(shots, [1.0, 0.0, 0.4])
        # zero parent: the whole zone group and the goal rate are missing
        zone_cols = [table.column_index(n) for n in ("z_out", "z_box", "z_six")]
        assert np.isnan(table.values[1, zone_cols]).all()
        assert np.isnan(table.values[1, table.column_index("goals")])
        np.testing.assert_allclose(table.values[0, zone_cols], [0.2, 0.3, 0.5])
        assert table.values[2, table.column_index("goals")] == 1.0
        # composition members carry the split weight
        zone_specs = [s for s in table.columns if s.composition_id == "zone"]
        assert all(s.weight == pytest.approx(1 / 3) for s in zone_specs)

    def test_partial_missing_group_rejected(self):
        records = [
            _record("a", 900, 10, (2, 3, 5), 3, 24, {"FW"}),
            _record("b", 900, 10, (np.nan, 3, 5), 3, 30, {"DC"}),
        ]
        with pytest.raises(DataError):
            represent(records, _toy_specs())

    def test_positions_must_be_nonempty(self):
        with pytest.raises(InvalidInputError):
            _record("a", 900, 1, (1, 0, 0), 0, 20, set())

    def test_minutes_must_be_positive(self):
        with pytest.raises(InvalidInputError):
            _record("a", 0, 1, (1, 0, 0), 0, 20, {"FW"})


class TestPipeline:
    def _records(self):
        rng = np.random.default_rng(8)
        records = []
        for i in range(12):
            shots = int(rng.integers(0, 12))
            zones = (0, 0, 0)
            if shots:
                a = int(rng.integers(0, shots + 1))
                b = int(rng.integers(0, shots - a + 1))
                zones = (a, b, shots - a - b)
            records.append(
                _record(
                    f"p{i}",
                    float(rng.integers(900, 3400)),
                    shots,
                    zones,
                    int(rng.integers(0, shots + 1)) if shots else 0,
                    int(rng.integers(18, 36)),
                    {"FW"} if i % 2 else {"DC"},
                )
            )
        return records

    def test_full_pipeline_flags_and_invariants(self):
        table = build_features(self._records(), _toy_specs(),
                               shift_constants={"shots": 1.0})
        assert table.represented and table.transformed and table.standardized
        assert table.shift_constants == {"shots": 1.0}
        table.validate()

    def test_transform_applies_log(self):
        records = self._records()
        represented = represent(records, _toy_specs())
        transformed = apply_transforms(represented, {"shots": 0.5})
        j = represented.column_index("shots")
        expected = np.log(represented.values[:, j] + 0.5)
        np.testing.assert_allclose(transformed.values[:, j], expected)

    def test_transform_rejects_unknown_variable(self):
        represented = represent(self._records(), _toy_specs())
        with pytest.raises(DataError):
            apply_transforms(represented, {"age": 1.0})

    def test_deterministic(self):
        a = build_features(self._records(), _toy_specs())
        b = build_features(self._records(), _toy_specs())
        np.testing.assert_array_equal(a.values, b.values)

    def test_constant_column_dropped_and_recorded(self):
        records = self._records()
        for r in records:
            r.raw_values["age"] = 25
        table = build_features(records, _toy_specs())
        assert "age" in table.dropped
        assert all(s.name != "age" for s in table.columns)


class TestCsvInterfaces:
    def test_toy_dataset_loads(self, toy_paths):
        players, variables = toy_paths
        specs = load_variable_specs(variables)
        records = load_players_csv(players, specs)
        assert len(records) == 60
        table = build_features(records, specs)
        assert table.standardized
        assert table.n == 60

    def test_bundled_fixtures_match_generator(self, tmp_path, toy_paths):
        from pitchclust.datasets import write_toy_dataset

        players, variables = toy_paths
        write_toy_dataset(tmp_path / "p.csv", tmp_path / "v.csv")
        assert (tmp_path / "p.csv").read_bytes() == players.read_bytes()
        assert (tmp_path / "v.csv").read_bytes() == variables.read_bytes()

    def test_missing_column_is_data_error(self, tmp_path, toy_paths):
        players, variables = toy_paths
        specs = load_variable_specs(variables)
        broken = tmp_path / "broken.csv"
        lines = players.read_text().splitlines()
        header = lines[0].split(",")
        header.remove("shots")
        broken.write_text("\n".join([",".join(header)] + lines[1:]))
        with pytest.raises(DataError):
            load_players_csv(broken, specs)

    def test_duplicate_variable_names_rejected(self, tmp_path):
        path = tmp_path / "v.csv"
        path.write_text("name,kind,parent,composition_id,weight\n"
                        "a,top_count,,,1\na,top_count,,,1\n")
        with pytest.raises(DataError):
            load_variable_specs(path)
