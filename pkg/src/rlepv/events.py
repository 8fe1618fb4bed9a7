"""Events CSV parsing and orientation into the attacking frame.

Canonical schema (UTF-8, comma separated, one row per play)::

    match_id,team_id,set_number,play_number,x,y,action,outcome

Each row is the opening event of one play. ``action`` is what ended the play
and ``outcome`` qualifies goal attempts and tries. Two optional columns are
recognised: ``direction`` (``up``/``down``, needed for ``raw`` orientation)
and ``period`` (a possession never spans a change of period).
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence, TextIO

from .errors import InvalidCoordinate, MissingDirection, ParseError, UnknownAction
from .geometry import PITCH

REQUIRED_COLUMNS = ("match_id", "team_id", "set_number", "play_number", "x", "y", "action", "outcome")
ACTIONS = ("play", "error", "handover", "field_kick", "penalty_goal", "drop_goal", "try")
OUTCOMES = ("made", "missed", "converted", "unconverted", "")


class Terminal(Enum):
    """How a play ends the possession, if it does."""

    NONE = "none"
    ERROR = "error"
    HANDOVER = "handover"
    FIELD_KICK = "field_kick"
    PENALTY_GOAL_MADE = "penalty_goal_made"
    PENALTY_GOAL_MISSED = "penalty_goal_missed"
    DROP_GOAL_MADE = "drop_goal_made"
    DROP_GOAL_MISSED = "drop_goal_missed"
    TRY_CONVERTED = "try_converted"
    TRY_UNCONVERTED = "try_unconverted"


# (action, outcome) -> terminal marker; anything not listed is rejected
MARKERS = {
    ("play", ""): Terminal.NONE,
    ("error", ""): Terminal.ERROR,
    ("handover", ""): Terminal.HANDOVER,
    ("field_kick", ""): Terminal.FIELD_KICK,
    ("penalty_goal", "made"): Terminal.PENALTY_GOAL_MADE,
    ("penalty_goal", "missed"): Terminal.PENALTY_GOAL_MISSED,
    ("drop_goal", "made"): Terminal.DROP_GOAL_MADE,
    ("drop_goal", "missed"): Terminal.DROP_GOAL_MISSED,
    ("try", "converted"): Terminal.TRY_CONVERTED,
    ("try", "unconverted"): Terminal.TRY_UNCONVERTED,
}
ACTION_OF = {marker: key for key, marker in MARKERS.items()}


@dataclass(frozen=True)
class RawEvent:
    match_id: str
    team_id: str
    set_number: int
    play_number: int
    x: float
    y: float
    action: str
    outcome: str = ""
    direction: str | None = None
    period: str | None = None
    line: int | None = None


@dataclass(frozen=True)
class Play:
    match_id: str
    team_id: str
    order: int
    x: float
    y: float
    terminal: Terminal = Terminal.NONE
    set_number: int = 1
    play_number: int = 1
    period: str | None = None


def _open(source) -> tuple[TextIO, bool]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline="", encoding="utf-8"), True
    return source, False


def _int(value: str, name: str, line: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise ParseError(f"{name} {value!r} is not an integer", line) from None


def _float(value: str, name: str, line: int) -> float:
    try:
        v = float(value)
    except ValueError:
        raise ParseError(f"{name} {value!r} is not a number", line) from None
    if not math.isfinite(v):
        raise ParseError(f"{name} {value!r} is not finite", line)
    return v


def parse_events(source) -> list[RawEvent]:
    """Read an events CSV (path or text stream) into :class:`RawEvent` rows.

    Rows are returned in file order. The first bad row raises, carrying its
    1-based line number (the header is line 1).
    """
    fh, close = _open(source)
    try:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file: missing header", 1) from None
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise ParseError(f"header lacks column(s) {', '.join(missing)}", 1)
        idx = {name: header.index(name) for name in header}
        events = []
        for line, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, found {len(row)}", line)
            events.append(_event(row, idx, line))
        return events
    finally:
        if close:
            fh.close()


def _event(row: list[str], idx: dict[str, int], line: int) -> RawEvent:
    get = lambda name: row[idx[name]].strip()  # noqa: E731
    match_id, team_id = get("match_id"), get("team_id")
    if not match_id or not team_id:
        raise ParseError("match_id and team_id are required", line)
    set_number = _int(get("set_number"), "set_number", line)
    play_number = _int(get("play_number"), "play_number", line)
    if set_number < 1 or play_number < 1:
        raise ParseError("set_number and play_number must be >= 1", line)
    x = _float(get("x"), "x", line)
    y = _float(get("y"), "y", line)
    if not 0 <= x <= PITCH.width_m:
        raise InvalidCoordinate(f"x = {x:g} outside [0, {PITCH.width_m:g}]", line)
    if not PITCH.y_min <= y <= PITCH.y_max:
        raise InvalidCoordinate(f"y = {y:g} outside [{PITCH.y_min:g}, {PITCH.y_max:g}]", line)
    action = get("action")
    if action not in ACTIONS:
        raise UnknownAction(f"unknown action {action!r}", line)
    outcome = get("outcome")
    if outcome not in OUTCOMES:
        raise ParseError(f"unknown outcome {outcome!r}", line)
    if (action, outcome) not in MARKERS:
        raise ParseError(f"outcome {outcome!r} is not valid for action {action!r}", line)
    direction = get("direction") or None if "direction" in idx else None
    if direction is not None and direction not in ("up", "down"):
        raise ParseError(f"direction must be 'up' or 'down', not {direction!r}", line)
    period = get("period") or None if "period" in idx else None
    return RawEvent(match_id, team_id, set_number, play_number, x, y, action, outcome, direction, period, line)


def terminal_marker(action: str, outcome: str = "") -> Terminal:
    try:
        return MARKERS[(action, outcome)]
    except KeyError:
        if action not in ACTIONS:
            raise UnknownAction(f"unknown action {action!r}") from None
        raise ParseError(f"outcome {outcome!r} is not valid for action {action!r}") from None


def reflect(x: float, y: float, pitch=PITCH) -> tuple[float, float]:
    """Rotate a point half a turn about the pitch centre; an involution."""
    return pitch.width_m - x, pitch.try_line - y


def normalize(events: Sequence[RawEvent], orientation: str = "attacking-frame") -> list[Play]:
    """Turn raw events into plays oriented toward ``y = 100``.

    ``attacking-frame`` input is already oriented. ``raw`` input must carry a
    ``direction`` per row; rows attacking ``down`` are reflected with
    ``x' = 68 - x`` and ``y' = 100 - y`` (which swaps the two in-goals).
    ``order`` counts plays within each match from 1, in input order.
    """
    if orientation not in ("attacking-frame", "raw"):
        raise ValueError(f"orientation must be 'attacking-frame' or 'raw', not {orientation!r}")
    counters: dict[str, int] = {}
    plays = []
    for ev in events:
        x, y = ev.x, ev.y
        if orientation == "raw":
            if ev.direction is None:
                where = f" (line {ev.line})" if ev.line else ""
                raise MissingDirection(f"raw orientation needs a direction for every row{where}")
            if ev.direction == "down":
                x, y = reflect(x, y)
        order = counters.get(ev.match_id, 0) + 1
        counters[ev.match_id] = order
        plays.append(
            Play(
                ev.match_id,
                ev.team_id,
                order,
                x,
                y,
                terminal_marker(ev.action, ev.outcome),
                ev.set_number,
                ev.play_number,
                ev.period,
            )
        )
    return plays


def write_events(rows: Iterable[Sequence], fh: TextIO, extra_columns: Sequence[str] = ()) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(list(REQUIRED_COLUMNS) + list(extra_columns))
    writer.writerows(rows)


def events_to_csv(rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    write_events(rows, buf)
    return buf.getvalue()
