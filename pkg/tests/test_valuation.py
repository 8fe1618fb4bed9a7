import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_possession
from oracles import naive_epv
from rlepv.errors import ConfigError, ContractViolation
from rlepv.events import Terminal
from rlepv.geometry import build_grid
from rlepv.valuation import (
    EPVModel,
    ValuationConfig,
    epv_from_match_returns,
    estimate_epv,
    match_returns,
    play_return,
    season_returns,
)

A = (10, 10)  # a point in one 5m zone
B = (30, 60)


def test_play_return_examples():
    p = make_possession([A, A, A], Terminal.TRY_CONVERTED)
    assert play_return(p, 1, 1.0) == 6
    assert play_return(p, 1, 0.5) == 1.5
    assert play_return(p, 3, 0.5) == 6
    z = make_possession([A, A, A], Terminal.ERROR)
    assert all(play_return(z, t, 0.5) == 0 for t in (1, 2, 3))
    with pytest.raises(ContractViolation):
        play_return(p, 4, 1.0)


def test_play_return_matches_recursion():
    # V_t = gamma * V_{t+1}, V_T = R
    p = make_possession([A] * 5, Terminal.TRY_UNCONVERTED)
    v = 4.0
    for t in range(5, 0, -1):
        assert play_return(p, t, 0.7) == pytest.approx(v, rel=1e-15)
        v *= 0.7


@pytest.mark.parametrize("gamma", [0.0, -0.5, 1.5])
def test_gamma_range(gamma):
    with pytest.raises(ConfigError):
        ValuationConfig(gamma)


def test_match_returns_examples(grid5):
    za, zb = grid5.zone_of(*A), grid5.zone_of(*B)
    m = match_returns([make_possession([A, B, A], Terminal.TRY_UNCONVERTED)], grid5)
    assert m.returns[za - 1] == 8 and m.returns[zb - 1] == 4
    assert m.visits[za - 1] == 2 and m.visits[zb - 1] == 1
    assert m.returns.sum() == 12

    empty = match_returns([], grid5, match_id="M1", team_id="A")
    assert not empty.returns.any() and not empty.visits.any()

    two = match_returns([make_possession([A], Terminal.TRY_CONVERTED), make_possession([A], Terminal.ERROR)], grid5)
    assert two.returns[za - 1] == 6 and two.visits[za - 1] == 2


def test_match_returns_rejects_mixed(grid5):
    with pytest.raises(ContractViolation):
        match_returns([make_possession([A], match_id="M1"), make_possession([A], match_id="M2")], grid5)


def test_estimate_examples(grid5):
    za, zb = grid5.zone_of(*A), grid5.zone_of(*B)
    model = estimate_epv([make_possession([A], Terminal.TRY_CONVERTED), make_possession([A], Terminal.ERROR)], grid5)
    assert model.value(za) == 3.0
    assert model.value(zb) is None and math.isnan(model.values[zb - 1])
    for gamma in (0.3, 1.0):
        m = estimate_epv([make_possession([A, A, B], Terminal.TRY_CONVERTED)], grid5, ValuationConfig(gamma))
        assert m.value(zb) == 6
    with pytest.raises(ContractViolation):
        estimate_epv([], grid5)


points = st.tuples(st.integers(0, 68), st.integers(-10, 99))
possession = st.tuples(st.lists(points, min_size=1, max_size=8), st.sampled_from(list(Terminal)[1:]))


@settings(max_examples=60, deadline=None)
@given(st.lists(possession, min_size=1, max_size=25), st.sampled_from([0.5, 0.9, 1.0]))
def test_matches_naive_oracle(spec, gamma):
    ps = [make_possession(pts, end) for pts, end in spec]
    for system in (build_grid(5), build_grid(10)):
        model = estimate_epv(ps, system, ValuationConfig(gamma))
        want, count = naive_epv(ps, system, gamma)
        for z in system.zone_ids():
            if z in want:
                assert model.visits[z - 1] == count[z]
                assert model.values[z - 1] == pytest.approx(want[z], rel=1e-12, abs=1e-300)
                assert -1e-12 <= model.values[z - 1] <= 6 + 1e-12
            else:
                assert model.visits[z - 1] == 0 and math.isnan(model.values[z - 1])


def test_decomposition_and_gamma_one_tally(grid5):
    rng = np.random.default_rng(3)
    ends = list(Terminal)[1:]
    ps = []
    for m in range(6):
        for team in "AB":
            for _ in range(10):
                n = int(rng.integers(1, 7))
                pts = list(zip(rng.integers(0, 69, n), rng.integers(-10, 100, n)))
                ps.append(make_possession(pts, ends[int(rng.integers(len(ends)))], f"M{m}", team))
    for gamma in (0.8, 1.0):
        cfg = ValuationConfig(gamma)
        direct = estimate_epv(ps, grid5, cfg)
        per_match = season_returns(ps, grid5, cfg)
        assert len(per_match) == 12
        pooled = epv_from_match_returns(per_match, gamma)
        assert np.array_equal(pooled.visits, direct.visits)
        # visit-weighted average of per-match EPV
        seen = direct.has_data
        num = sum(np.where(m.visits > 0, m.returns / np.maximum(m.visits, 1), 0) * m.visits for m in per_match)
        assert np.allclose(num[seen] / direct.visits[seen], direct.values[seen], rtol=1e-12, atol=0)
        assert np.allclose(pooled.values[seen], direct.values[seen], rtol=1e-12, atol=0)

    # gamma = 1: mean terminal reward weighted by visit multiplicity
    tally = {}
    for p in ps:
        for pl in p.plays:
            z = grid5.zone_of(pl.x, pl.y)
            tally.setdefault(z, []).append(p.reward)
    direct = estimate_epv(ps, grid5)
    for z, rewards in tally.items():
        assert direct.value(z) == pytest.approx(sum(rewards) / len(rewards), rel=1e-12)


def test_json_round_trip_bit_exact(grid5, grid10):
    rng = np.random.default_rng(8)
    ps = [make_possession(list(zip(rng.uniform(0, 68, 5), rng.uniform(-10, 99.9, 5))), Terminal.TRY_UNCONVERTED)
          for _ in range(30)] + [make_possession([(1, 1)], Terminal.ERROR)]
    for g in (grid5, grid10):
        model = estimate_epv(ps, g, ValuationConfig(0.93))
        back = EPVModel.from_json(model.to_json())
        assert np.array_equal(back.values, model.values, equal_nan=True)
        assert np.array_equal(back.visits, model.visits)
        assert back.system.same_as(g) and back.gamma == 0.93
        assert back.to_json() == model.to_json()


def test_play_index_flag(grid5):
    ps = [make_possession([A, B], Terminal.TRY_CONVERTED), make_possession([B], Terminal.ERROR)]
    first = estimate_epv(ps, grid5, play_index=1)
    za, zb = grid5.zone_of(*A), grid5.zone_of(*B)
    assert first.value(za) == 6 and first.visits[za - 1] == 1
    assert first.value(zb) == 0 and first.visits[zb - 1] == 1
    second = estimate_epv(ps, grid5, play_index=2)
    assert second.value(zb) == 6 and second.visits.sum() == 1
