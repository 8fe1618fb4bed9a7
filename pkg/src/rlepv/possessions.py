"""Possession segmentation, terminal rewards and a columnar possession table."""

from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractViolation, ParseError, SegmentationError
from .events import Play, Terminal

log = logging.getLogger(__name__)

REWARDS = {
    Terminal.TRY_CONVERTED: 6,
    Terminal.TRY_UNCONVERTED: 4,
    Terminal.PENALTY_GOAL_MADE: 2,
    Terminal.DROP_GOAL_MADE: 1,
    Terminal.PENALTY_GOAL_MISSED: 0,
    Terminal.DROP_GOAL_MISSED: 0,
    Terminal.ERROR: 0,
    Terminal.HANDOVER: 0,
    Terminal.FIELD_KICK: 0,
}
REWARD_SUPPORT = frozenset(REWARDS.values())


def assign_reward(marker: Terminal) -> int:
    """Points credited to a possession that ends with ``marker``."""
    if marker is Terminal.NONE:
        raise ContractViolation("a play without a terminal marker carries no reward")
    return REWARDS[marker]


@dataclass(frozen=True)
class Possession:
    match_id: str
    team_id: str
    plays: tuple[Play, ...]
    reward: int
    end: Terminal
    implicit_end: bool = False  # ended by a change of team/period/match, not a marker

    @property
    def length(self) -> int:
        return len(self.plays)


def segment(plays: Sequence[Play]) -> list[Possession]:
    """Split chronologically ordered plays into attacking possessions.

    A possession closes on a terminal marker, and also when the team in
    possession, the period or the match changes; those implicit endings are
    handovers worth 0. After a terminal marker the same team may only carry
    on in a new set, otherwise the feed is inconsistent.
    """
    possessions: list[Possession] = []
    current: list[Play] = []

    def close(end: Terminal, implicit: bool) -> None:
        first = current[0]
        possessions.append(
            Possession(first.match_id, first.team_id, tuple(current), assign_reward(end), end, implicit)
        )
        current.clear()

    prev: Play | None = None
    for play in plays:
        if prev is not None:
            boundary = (
                play.match_id != prev.match_id
                or play.team_id != prev.team_id
                or play.period != prev.period
            )
            if current and boundary:
                close(Terminal.HANDOVER, True)
            elif (
                not current
                and not boundary
                and prev.terminal is not Terminal.NONE
                and play.set_number == prev.set_number
            ):
                raise SegmentationError(
                    f"match {play.match_id}: team {play.team_id} plays on in set "
                    f"{play.set_number} after {prev.terminal.value} (play order {play.order})"
                )
        current.append(play)
        if play.terminal is not Terminal.NONE:
            close(play.terminal, False)
        prev = play
    if current:
        close(Terminal.HANDOVER, True)
    implicit = sum(p.implicit_end for p in possessions)
    if implicit:
        log.info("%d possession(s) ended without an explicit marker (reward 0)", implicit)
    return possessions


@dataclass(frozen=True, eq=False)
class PossessionTable:
    """Possessions stored column-wise.

    Play arrays (``x``, ``y``) are concatenated over possessions; the plays of
    possession ``j`` are ``offsets[j]:offsets[j + 1]``.
    """

    match_id: np.ndarray
    team_id: np.ndarray
    reward: np.ndarray
    offsets: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def __len__(self) -> int:
        return len(self.reward)

    @property
    def n_plays(self) -> int:
        return int(self.offsets[-1])

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.offsets)

    def play_possession(self) -> np.ndarray:
        """Possession index of every play."""
        return np.repeat(np.arange(len(self)), self.lengths)

    def play_index(self) -> np.ndarray:
        """1-based position of every play within its possession."""
        starts = np.repeat(self.offsets[:-1], self.lengths)
        return np.arange(self.n_plays) - starts + 1

    def team_matches(self) -> list[tuple[str, str]]:
        """Distinct (match_id, team_id) pairs in order of first appearance."""
        seen = {}
        for key in zip(self.match_id.tolist(), self.team_id.tolist()):
            seen.setdefault(key, None)
        return list(seen)

    def teams(self) -> list[str]:
        return list(dict.fromkeys(self.team_id.tolist()))

    def select(self, mask: np.ndarray) -> "PossessionTable":
        idx = np.flatnonzero(mask)
        lengths = self.lengths[idx]
        offsets = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)
        play_idx = np.concatenate(
            [np.arange(self.offsets[j], self.offsets[j + 1]) for j in idx]
        ) if len(idx) else np.array([], dtype=np.int64)
        return PossessionTable(
            self.match_id[idx], self.team_id[idx], self.reward[idx], offsets,
            self.x[play_idx], self.y[play_idx],
        )

    @classmethod
    def from_possessions(cls, possessions: Iterable[Possession]) -> "PossessionTable":
        possessions = list(possessions)
        lengths = [p.length for p in possessions]
        return cls(
            np.array([p.match_id for p in possessions], dtype=object),
            np.array([p.team_id for p in possessions], dtype=object),
            np.array([p.reward for p in possessions], dtype=np.int64),
            np.concatenate([[0], np.cumsum(lengths, dtype=np.int64)]).astype(np.int64),
            np.array([pl.x for p in possessions for pl in p.plays], dtype=float),
            np.array([pl.y for p in possessions for pl in p.plays], dtype=float),
        )


def as_table(possessions) -> PossessionTable:
    if isinstance(possessions, PossessionTable):
        return possessions
    return PossessionTable.from_possessions(possessions)


# Play store: the canonical file written by ``rlepv ingest``.
PLAY_STORE_COLUMNS = ("possession", "match_id", "team_id", "play", "x", "y", "terminal", "reward")


def write_play_store(possessions: Sequence[Possession], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PLAY_STORE_COLUMNS)
        for j, p in enumerate(possessions, start=1):
            for t, pl in enumerate(p.plays, start=1):
                writer.writerow(
                    [j, p.match_id, p.team_id, t, _fmt(pl.x), _fmt(pl.y), pl.terminal.value, p.reward]
                )


def read_play_store(path: str | os.PathLike) -> PossessionTable:
    match_ids, team_ids, rewards, lengths, xs, ys = [], [], [], [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != PLAY_STORE_COLUMNS:
            raise ParseError(f"not a play store: header must be {','.join(PLAY_STORE_COLUMNS)}", 1)
        last = None
        for line, row in enumerate(reader, start=2):
            if len(row) != len(PLAY_STORE_COLUMNS):
                raise ParseError(f"expected {len(PLAY_STORE_COLUMNS)} fields", line)
            try:
                pid, t, x, y, reward = int(row[0]), int(row[3]), float(row[4]), float(row[5]), int(row[7])
            except ValueError as exc:
                raise ParseError(str(exc), line) from None
            if pid != last:
                if t != 1:
                    raise ParseError("possession does not start at play 1", line)
                match_ids.append(row[1])
                team_ids.append(row[2])
                rewards.append(reward)
                lengths.append(0)
                last = pid
            elif t != lengths[-1] + 1:
                raise ParseError("plays out of order within possession", line)
            lengths[-1] += 1
            xs.append(x)
            ys.append(y)
    return PossessionTable(
        np.array(match_ids, dtype=object),
        np.array(team_ids, dtype=object),
        np.array(rewards, dtype=np.int64),
        np.concatenate([[0], np.cumsum(lengths, dtype=np.int64)]).astype(np.int64),
        np.array(xs, dtype=float),
        np.array(ys, dtype=float),
    )


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))
