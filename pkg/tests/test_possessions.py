import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rlepv.errors import ContractViolation, SegmentationError
from rlepv.events import Play, Terminal, normalize, parse_events
from rlepv.possessions import REWARD_SUPPORT, as_table, assign_reward, read_play_store, segment, write_play_store
from rlepv.synth import default_config, generate_season


def _plays(spec, match_id="M1"):
    """spec: list of (team, terminal, set_number)."""
    return [
        Play(match_id, team, i + 1, 10.0, 10.0 + i, end, set_no)
        for i, (team, end, set_no) in enumerate(spec)
    ]


def test_field_kick_possession():
    ps = segment(_plays([("A", Terminal.NONE, 1)] * 3 + [("A", Terminal.FIELD_KICK, 1)]))
    assert len(ps) == 1
    assert ps[0].length == 4 and ps[0].reward == 0


def test_two_teams():
    spec = [("A", Terminal.NONE, 1)] * 2 + [("A", Terminal.TRY_CONVERTED, 1)]
    spec += [("B", Terminal.NONE, 2), ("B", Terminal.ERROR, 2)]
    ps = segment(_plays(spec))
    assert [p.reward for p in ps] == [6, 0]
    assert [p.length for p in ps] == [3, 2]


def test_single_drop_goal():
    ps = segment(_plays([("A", Terminal.DROP_GOAL_MADE, 1)]))
    assert len(ps) == 1 and ps[0].length == 1 and ps[0].reward == 1


def test_empty():
    assert segment([]) == []


def test_implicit_handover():
    ps = segment(_plays([("A", Terminal.NONE, 1), ("B", Terminal.NONE, 2), ("B", Terminal.ERROR, 2)]))
    assert [p.team_id for p in ps] == ["A", "B"]
    assert ps[0].implicit_end and ps[0].end is Terminal.HANDOVER and ps[0].reward == 0


def test_period_split():
    plays = [Play("M1", "A", 1, 1, 1, period="1"), Play("M1", "A", 2, 1, 1, period="2")]
    assert len(segment(plays)) == 2


def test_same_team_same_set_after_terminal_is_corrupt():
    with pytest.raises(SegmentationError):
        segment(_plays([("A", Terminal.ERROR, 1), ("A", Terminal.NONE, 1)]))
    # a new set for the same team is a fresh possession
    assert len(segment(_plays([("A", Terminal.PENALTY_GOAL_MISSED, 1), ("A", Terminal.NONE, 2)]))) == 2


def test_assign_reward():
    assert assign_reward(Terminal.TRY_CONVERTED) == 6
    assert assign_reward(Terminal.TRY_UNCONVERTED) == 4
    assert assign_reward(Terminal.PENALTY_GOAL_MADE) == 2
    assert assign_reward(Terminal.PENALTY_GOAL_MISSED) == 0
    assert assign_reward(Terminal.DROP_GOAL_MADE) == 1
    assert assign_reward(Terminal.HANDOVER) == 0
    with pytest.raises(ContractViolation):
        assign_reward(Terminal.NONE)


ENDS = [t for t in Terminal]


@given(st.lists(st.tuples(st.sampled_from(["A", "B"]), st.sampled_from(ENDS)), max_size=60))
def test_partition_and_support(spec):
    # bump the set number after every terminal so the feed is always consistent
    rows, set_no = [], 1
    for team, end in spec:
        rows.append((team, end, set_no))
        if end is not Terminal.NONE:
            set_no += 1
    plays = _plays(rows)
    ps = segment(plays)
    assert [pl for p in ps for pl in p.plays] == plays
    assert all(p.reward in REWARD_SUPPORT for p in ps)
    assert all(len({pl.team_id for pl in p.plays}) == 1 for p in ps)
    assert all(pl.terminal is Terminal.NONE for p in ps for pl in p.plays[:-1])


def test_synthetic_count_oracle(tmp_path):
    season = generate_season(default_config(seed=5, n_matches_per_team=3))
    ps = segment(normalize(parse_events(io.StringIO(season.events_csv()))))
    assert len(ps) == season.possession_count
    table = as_table(ps)
    assert (table.reward == season.table.reward).all()
    assert (table.lengths == season.table.lengths).all()

    path = tmp_path / "plays.csv"
    write_play_store(ps, path)
    back = read_play_store(path)
    assert (back.offsets == table.offsets).all()
    assert np.array_equal(back.x, table.x) and np.array_equal(back.y, table.y)
    assert list(back.match_id) == list(table.match_id)
