from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_possession
from oracles import t_sf
from rlepv.aggregation import (
    FullWidthRule,
    MarginalReturnSeries,
    MinimalEffectConfig,
    aggregated_values,
    build_aggregated_system,
    fold_and_pair,
    marginal_returns,
    merge_scan,
    minimal_effect_separate,
    minimal_effect_test,
)
from rlepv.errors import ConfigError, ContractViolation, InsufficientData
from rlepv.events import Terminal
from rlepv.geometry import AggregatedZoneSystem, build_grid
from rlepv.synth import default_config, generate_season
from rlepv.valuation import MatchReturnMatrix, estimate_epv, season_returns


def _matrix(grid, cells, match_id="M1", team_id="A"):
    returns = np.zeros(grid.zone_count)
    visits = np.zeros(grid.zone_count, dtype=np.int64)
    for (col, row), value in cells.items():
        returns[grid.zone_id(col, row) - 1] = value
        visits[grid.zone_id(col, row) - 1] = 1
    return MatchReturnMatrix(match_id, team_id, grid, returns, visits)


def _series(values, axis="column"):
    values = np.asarray(values, dtype=float)
    keys = tuple((f"M{i}", "A") for i in range(values.shape[1]))
    return MarginalReturnSeries(axis, keys, values)


def test_marginal_single_entry(grid5):
    cols, rows = marginal_returns([_matrix(grid5, {(3, 10): 4})])
    assert cols.n_groups == 14 and rows.n_groups == 22
    assert cols.series(3)[0] == 4 and rows.series(10)[0] == 4
    assert cols.values.sum() == 4 and rows.values.sum() == 4


def test_marginal_empty():
    cols, rows = marginal_returns([])
    assert cols.values.shape == (14, 0) and rows.values.shape == (22, 0)


def test_marginal_needs_5m_grid(grid10):
    with pytest.raises(ContractViolation):
        marginal_returns([_matrix(grid10, {(1, 1): 1})])


def test_fold_and_pair_examples(grid5):
    cols, rows = marginal_returns([_matrix(grid5, {(1, 1): 2, (14, 2): 2, (5, 1): 1})])
    classes, pairs = fold_and_pair(cols, rows)
    assert classes.n_groups == 7 and pairs.n_groups == 11
    assert classes.series(1)[0] == 4
    assert pairs.series(1)[0] == 5
    rows = _series(np.arange(1, 23)[:, None] * 0 + np.array([[3], [5]] * 11), "row")
    assert fold_and_pair(cols, rows)[1].series(1)[0] == 8


def test_symmetric_fold_doubles(grid5):
    one_side = {(c, 4): float(c) for c in range(1, 8)}
    mirrored = {(15 - c, 4): float(c) for c in range(1, 8)}
    classes, _ = fold_and_pair(*marginal_returns([_matrix(grid5, {**one_side, **mirrored})]))
    assert list(classes.values[:, 0]) == [2.0 * c for c in range(1, 8)]


def test_conservation():
    season = generate_season(default_config(seed=2, n_matches_per_team=4))
    matrices = season_returns(season.table, build_grid(5))
    total = sum(m.total for m in matrices)
    cols, rows = marginal_returns(matrices)
    classes, pairs = fold_and_pair(cols, rows)
    for s in (cols, rows, classes, pairs):
        assert s.values.sum() == pytest.approx(total, rel=1e-9)
    system = build_aggregated_system(matrices)
    agg = season_returns(season.table, system)
    assert sum(m.total for m in agg) == pytest.approx(total, rel=1e-9)


def test_minimal_effect_identical():
    a = np.arange(10.0)
    assert minimal_effect_separate(a, a) is False


def test_minimal_effect_constant_difference():
    a = np.linspace(0, 30, 20)
    b = a - 5
    # exact arithmetic: the paired differences are all 5 with zero spread
    d = [Fraction(x) - Fraction(y) for x, y in zip(a.tolist(), b.tolist())]
    mean = sum(d) / len(d)
    assert sum((x - mean) ** 2 for x in d) < Fraction(1, 10**20) and mean > 1
    assert minimal_effect_separate(a, b) is True
    assert minimal_effect_separate(a, a - 0.5) is False


def _with_moments(mean, sd, n, seed=0):
    z = np.random.default_rng(seed).standard_normal(n)
    z = (z - z.mean()) / z.std(ddof=1)
    return mean + sd * z


def test_minimal_effect_t_and_p():
    d = _with_moments(1.2, 4.0, 100)
    res = minimal_effect_test(d, np.zeros(100))
    assert res.t == pytest.approx(0.5, abs=1e-9)
    assert res.p == pytest.approx(t_sf(0.5, 99), abs=1e-6)
    assert res.p == pytest.approx(0.31, abs=0.005)
    assert res.separate is False
    # the sign of the mean difference does not matter
    assert minimal_effect_test(np.zeros(100), d).p == pytest.approx(res.p, abs=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.floats(-2, 3), st.integers(5, 60))
def test_p_against_numeric_cdf(t, n):
    # mean 1 + t / sqrt(n) stays positive, so (|mean| - 1) / (sd / sqrt(n)) = t
    d = _with_moments(0.0, 1.0, n) + 1.0 + t / np.sqrt(n)
    res = minimal_effect_test(d, np.zeros(n))
    assert res.t == pytest.approx(t, abs=1e-9)
    assert res.p == pytest.approx(t_sf(res.t, n - 1), abs=1e-6)


def test_minimal_effect_errors():
    with pytest.raises(InsufficientData):
        minimal_effect_separate([1.0], [2.0])
    with pytest.raises(ConfigError):
        MinimalEffectConfig(threshold=0)
    with pytest.raises(ConfigError):
        MinimalEffectConfig(alpha=1.0)


def test_merge_scan_examples():
    rng = np.random.default_rng(1)
    base = rng.normal(20, 3, 40)
    same = _series(np.tile(base, (7, 1)))
    assert merge_scan(same).groups == ((1, 2, 3, 4, 5, 6, 7),)
    alternating = _series([base * 0.01 + (100 if g % 2 else 0) for g in range(7)])
    assert merge_scan(alternating).groups == tuple((g,) for g in range(1, 8))


def test_merge_scan_uses_group_mean():
    # group 2 differs from group 1 by 1.5 (within noise), group 3 from the running mean by 10
    rng = np.random.default_rng(4)
    noise = rng.normal(0, 3, (3, 200))
    values = np.array([[10.0], [11.5], [20.75]]) + noise
    part = merge_scan(_series(values))
    assert part.groups == ((1, 2), (3,))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 50), min_size=2, max_size=12), st.integers(0, 10**6))
def test_merge_scan_contiguous_partition(means, seed):
    rng = np.random.default_rng(seed)
    values = np.array(means)[:, None] + rng.normal(0, 2, (len(means), 30))
    groups = merge_scan(_series(values)).groups
    assert [g for grp in groups for g in grp] == list(range(1, len(means) + 1))
    assert all(list(grp) == list(range(grp[0], grp[-1] + 1)) for grp in groups)


def test_build_default_preset_gives_19():
    season = generate_season(default_config(seed=7))
    system = build_aggregated_system(season_returns(season.table, build_grid(5)))
    truth = season.truth_dict()["regime_partition"]
    assert [list(g) for g in system.row_groups] == truth["rows"]
    assert [list(g) for g in system.column_groups] == truth["columns"]
    assert system.zone_count == 19
    assert system.full_width == (True,) + (False,) * 18
    # the full-width zone is the bottom 10m x 2 strip; the next zone is the outermost column group
    assert system.zone_of(34, -5) == 1 and system.zone_of(67, 15) == 2 and system.zone_of(1, 15) == 2


def test_build_degenerate_cases(grid5):
    rng = np.random.default_rng(0)
    matrices = []
    for m in range(30):
        cells = {(c, r): 100.0 * (min(c, 15 - c) + 20 * r) + rng.normal() for c in range(1, 15) for r in range(1, 23)}
        matrices.append(_matrix(grid5, cells, f"M{m}"))
    fine = build_aggregated_system(matrices, full_width_rule=FullWidthRule(min_play_share=0.0))
    assert fine.zone_count == 77
    one = build_aggregated_system(matrices, MinimalEffectConfig(threshold=1e12), FullWidthRule(min_play_share=0.0))
    assert one.zone_count == 1


def test_manual_full_width_override():
    season = generate_season(default_config(seed=7))
    matrices = season_returns(season.table, build_grid(5))
    system = build_aggregated_system(matrices, full_width_rule=FullWidthRule(rows=(4,)))
    assert system.zone_count == 14
    assert system.full_width[-1]


def test_aggregated_values_weighted_mean(grid5):
    za, zb = grid5.zone_id(1, 1), grid5.zone_id(2, 1)
    ps = [make_possession([(1, -9)], Terminal.TRY_UNCONVERTED if i < 5 else Terminal.ERROR) for i in range(10)]
    ps += [make_possession([(6, -9)], Terminal.TRY_CONVERTED if i < 25 else Terminal.ERROR) for i in range(30)]
    epv = estimate_epv(ps, grid5)
    assert (epv.value(za), epv.visits[za - 1]) == (2.0, 10)
    assert (epv.value(zb), epv.visits[zb - 1]) == (5.0, 30)
    rest = [z for z in grid5.zone_ids() if z not in (za, zb)]
    system = AggregatedZoneSystem(grid5, [[za, zb], rest])
    agg = aggregated_values(epv, system)
    assert agg.value(1) == pytest.approx((2 * 10 + 5 * 30) / 40)
    assert agg.value(2) is None and agg.visits[1] == 0


def test_aggregated_values_match_direct_estimate():
    season = generate_season(default_config(seed=3, n_matches_per_team=6))
    grid = build_grid(5)
    system = build_aggregated_system(season_returns(season.table, grid))
    via_grid = aggregated_values(estimate_epv(season.table, grid), system)
    direct = estimate_epv(season.table, system)
    assert np.array_equal(via_grid.visits, direct.visits)
    assert np.allclose(via_grid.values, direct.values, rtol=1e-12, atol=0, equal_nan=True)
    assert system.zone_count <= 77
