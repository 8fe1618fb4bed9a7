import io

import numpy as np
import pytest

from rlepv.errors import ConfigError
from rlepv.events import normalize, parse_events
from rlepv.possessions import segment
from rlepv.synth import (
    ENDING_REWARDS,
    ROW_REGIMES,
    SynthConfig,
    analytic_truth,
    default_config,
    generate_season,
    gradient_config,
    outcome_mix,
    schedule,
    uniform_config,
)


def test_same_seed_byte_identical():
    a = generate_season(default_config(seed=4, n_matches_per_team=3))
    b = generate_season(default_config(seed=4, n_matches_per_team=3))
    assert a.events_csv() == b.events_csv()
    assert a.truth_json() == b.truth_json()
    c = generate_season(default_config(seed=5, n_matches_per_team=3))
    assert c.events_csv() != a.events_csv()


def test_uniform_config_constant_epv():
    cfg = uniform_config()
    truth = analytic_truth(cfg)
    assert np.ptp(truth.epv) < 1e-12
    # independent closed form: constant end probability q, cap T, forced handover after play T
    q, T = 0.18, cfg.max_plays
    rbar = outcome_mix(0.15) @ ENDING_REWARDS
    v = np.zeros(T)
    v[-1] = q * rbar
    for t in range(T - 2, -1, -1):
        v[t] = q * rbar + (1 - q) * v[t + 1]
    mu = (1 - q) ** np.arange(T)
    assert truth.epv[0, 0] == pytest.approx((mu * v).sum() / mu.sum(), rel=1e-12)


def test_discounted_truth_below_undiscounted():
    cfg = gradient_config()
    assert (analytic_truth(cfg, 0.8).epv < analytic_truth(cfg, 1.0).epv).all()


def test_regime_partition_sizes():
    season = generate_season(default_config(seed=1, n_matches_per_team=1))
    truth = season.truth_dict()
    assert len(truth["regime_partition"]["rows"]) == 4
    assert len(truth["regime_partition"]["columns"]) == 6
    assert truth["possession_count"] == season.possession_count == 12 * 28


def test_regime_effects_at_least_three_units():
    truth = analytic_truth(default_config())
    rows = truth.row_group_returns
    row_means = [np.mean([rows[g - 1] for g in grp]) for grp in ROW_REGIMES]
    assert np.diff(row_means).min() >= 3
    # within a regime the expected returns are equal
    for grp in ROW_REGIMES:
        vals = [rows[g - 1] for g in grp]
        assert np.ptp(vals) < 1e-9
    cols = truth.column_class_returns
    assert np.abs(np.diff(cols[:6])).min() >= 3
    assert cols[5] == pytest.approx(cols[6], rel=1e-12)


def test_events_pass_ingest():
    season = generate_season(gradient_config(seed=9, n_matches_per_team=2))
    plays = normalize(parse_events(io.StringIO(season.events_csv())))
    assert len(plays) == season.table.n_plays
    assert len(segment(plays)) == season.possession_count


def test_length_median_and_range():
    cfg = default_config(seed=0, n_matches_per_team=40)
    season = generate_season(cfg)
    lengths = season.table.lengths
    assert int(np.median(lengths)) == analytic_truth(cfg).median_length == 4
    assert lengths.min() >= 1 and lengths.max() <= 26
    pmf = analytic_truth(cfg).length_pmf
    assert pmf.sum() == pytest.approx(1.0, abs=1e-12)
    observed = np.bincount(lengths, minlength=27)[1:] / len(lengths)
    assert np.abs(observed - pmf).max() < 0.01


def test_schedule_round_robin():
    rounds = schedule(12, 29)
    assert len(rounds) == 29
    for pairs in rounds:
        assert sorted(t for p in pairs for t in p) == list(range(12))
    first = {frozenset(p) for r in rounds[:11] for p in r}
    assert len(first) == 66


def test_invalid_config():
    with pytest.raises(ConfigError):
        SynthConfig(n_teams=3)
    with pytest.raises(ConfigError):
        SynthConfig(end_prob=np.full((22, 14), 1.5))
    with pytest.raises(ConfigError):
        SynthConfig(row_regimes=((1, 3), (2,)))
    with pytest.raises(ConfigError):
        outcome_mix(0.9, 0.2)
