"""Possession returns, per-match zone returns and every-visit Monte Carlo EPV.

The return credited to play ``t`` of a possession with ``T`` plays and
terminal reward ``R`` is ``gamma ** (T - t) * R``: the final play receives the
reward undiscounted and every earlier play one more factor of ``gamma``.
A zone's EPV is the mean of these returns over every visit to it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractViolation
from .geometry import ZoneSystem, system_from_dict
from .possessions import Possession, PossessionTable, as_table


@dataclass(frozen=True)
class ValuationConfig:
    gamma: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.gamma <= 1.0):
            raise ConfigError(f"gamma must lie in (0, 1], got {self.gamma!r}")


def play_return(possession: Possession, t: int, gamma: float) -> float:
    T = possession.length
    if not 1 <= t <= T:
        raise ContractViolation(f"play {t} outside 1..{T}")
    return gamma ** (T - t) * possession.reward


def play_returns(table: PossessionTable, gamma: float) -> np.ndarray:
    """Return credited to every play of the table, in play order."""
    lengths = table.lengths
    exponent = np.repeat(lengths, lengths) - table.play_index()
    reward = np.repeat(table.reward, lengths).astype(float)
    if gamma == 1.0:
        return reward
    return np.power(float(gamma), exponent) * reward


@dataclass(frozen=True, eq=False)
class MatchReturnMatrix:
    """Zone returns G_m(s) of one team in one match.

    ``returns[s - 1]`` and ``visits[s - 1]`` belong to zone ``s``.
    """

    match_id: str
    team_id: str
    system: ZoneSystem
    returns: np.ndarray
    visits: np.ndarray

    @property
    def total(self) -> float:
        return float(self.returns.sum())


def _zone_sums(table: PossessionTable, system: ZoneSystem, config: ValuationConfig, group: np.ndarray, n_groups: int):
    """Accumulate play returns and visit counts into ``(group, zone)`` cells.

    ``np.add.at`` is unbuffered and applies updates in play order, so the sums
    do not depend on how the input was produced.
    """
    zones = system.zone_index(table.x, table.y) - 1
    g = play_returns(table, config.gamma)
    play_group = np.repeat(group, table.lengths)
    flat = play_group * system.zone_count + zones
    returns = np.zeros(n_groups * system.zone_count)
    visits = np.zeros(n_groups * system.zone_count, dtype=np.int64)
    np.add.at(returns, flat, g)
    np.add.at(visits, flat, 1)
    return returns.reshape(n_groups, system.zone_count), visits.reshape(n_groups, system.zone_count)


def match_returns(possessions, system: ZoneSystem, config: ValuationConfig = ValuationConfig(), *,
                  match_id: str | None = None, team_id: str | None = None) -> MatchReturnMatrix:
    """Zone returns for the possessions of a single team in a single match.

    ``match_id``/``team_id`` label an empty input; otherwise they are taken
    from the possessions.
    """
    table = as_table(possessions)
    keys = table.team_matches()
    if len(keys) > 1:
        raise ContractViolation(f"possessions span {len(keys)} team-matches; expected one")
    if keys:
        match_id, team_id = keys[0]
    returns, visits = _zone_sums(table, system, config, np.zeros(len(table), dtype=np.int64), 1)
    return MatchReturnMatrix(match_id, team_id, system, returns[0], visits[0])


def season_returns(possessions, system: ZoneSystem, config: ValuationConfig = ValuationConfig()) -> list[MatchReturnMatrix]:
    """One :class:`MatchReturnMatrix` per (match, team), in order of first appearance."""
    table = as_table(possessions)
    keys = table.team_matches()
    index = {k: i for i, k in enumerate(keys)}
    group = np.array([index[k] for k in zip(table.match_id.tolist(), table.team_id.tolist())], dtype=np.int64)
    returns, visits = _zone_sums(table, system, config, group, len(keys))
    return [MatchReturnMatrix(m, t, system, returns[i], visits[i]) for i, (m, t) in enumerate(keys)]


@dataclass(frozen=True, eq=False)
class EPVModel:
    """Per-zone expected possession value.

    Zones never visited hold ``nan`` in ``values`` (no data), never 0.
    """

    system: ZoneSystem
    values: np.ndarray
    visits: np.ndarray
    gamma: float

    @property
    def has_data(self) -> np.ndarray:
        return self.visits > 0

    def value(self, zone_id: int) -> float | None:
        v = self.values[zone_id - 1]
        return None if math.isnan(v) else float(v)

    def to_dict(self) -> dict:
        return {
            "system": self.system.to_dict(),
            "gamma": self.gamma,
            "zones": [
                {
                    "id": z,
                    "bounds": _bounds(self.system, z),
                    "epv": self.value(z),
                    "visits": int(self.visits[z - 1]),
                }
                for z in self.system.zone_ids()
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "EPVModel":
        system = system_from_dict(d["system"])
        zones = sorted(d["zones"], key=lambda z: z["id"])
        if [z["id"] for z in zones] != list(system.zone_ids()):
            raise ContractViolation("model zones do not match its zone system")
        values = np.array([np.nan if z["epv"] is None else float(z["epv"]) for z in zones])
        visits = np.array([int(z["visits"]) for z in zones], dtype=np.int64)
        return cls(system, values, visits, float(d["gamma"]))

    @classmethod
    def from_json(cls, text: str) -> "EPVModel":
        return cls.from_dict(json.loads(text))


def _bounds(system: ZoneSystem, zone_id: int) -> list[list[float]]:
    return [[int(v) if float(v).is_integer() else float(v) for v in r] for r in system.rects(zone_id)]


def model_from_sums(system: ZoneSystem, returns: np.ndarray, visits: np.ndarray, gamma: float) -> EPVModel:
    values = np.full(system.zone_count, np.nan)
    seen = visits > 0
    values[seen] = returns[seen] / visits[seen]
    return EPVModel(system, values, visits.astype(np.int64), gamma)


def estimate_epv(possessions, system: ZoneSystem, config: ValuationConfig = ValuationConfig(),
                 play_index: int | None = None) -> EPVModel:
    """Every-visit Monte Carlo EPV over all possessions.

    Visits are pooled over play positions. Pass ``play_index`` to restrict
    the estimate to visits made at that position within the possession.
    """
    table = as_table(possessions)
    if len(table) == 0:
        raise ContractViolation("at least one possession is required")
    if play_index is not None:
        keep = table.lengths >= play_index
        sub = table.select(keep)
        pos = sub.play_index() == play_index
        zones = system.zone_index(sub.x[pos], sub.y[pos]) - 1
        g = play_returns(sub, config.gamma)[pos]
        returns = np.zeros(system.zone_count)
        visits = np.zeros(system.zone_count, dtype=np.int64)
        np.add.at(returns, zones, g)
        np.add.at(visits, zones, 1)
        return model_from_sums(system, returns, visits, config.gamma)
    returns, visits = _zone_sums(table, system, config, np.zeros(len(table), dtype=np.int64), 1)
    return model_from_sums(system, returns[0], visits[0], config.gamma)


def epv_from_match_returns(matrices: list[MatchReturnMatrix], gamma: float) -> EPVModel:
    """Pool per-match zone returns into a season model (sum of returns / sum of visits)."""
    if not matrices:
        raise ContractViolation("no match returns to pool")
    system = matrices[0].system
    returns = np.zeros(system.zone_count)
    visits = np.zeros(system.zone_count, dtype=np.int64)
    for m in matrices:
        returns += m.returns
        visits += m.visits
    return model_from_sums(system, returns, visits, gamma)
