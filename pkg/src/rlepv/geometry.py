"""Pitch frame, fixed grids and aggregated zone systems.

Coordinates are metres in the attacking frame: ``x`` runs across the pitch
(0 to 68) and ``y`` along it, with ``y = 0`` the attacking team's own try
line, ``y = -10`` its dead-ball line and ``y = 100`` the opposition try line.
The opposition in-goal (``100 <= y <= 110``) belongs to no zone.

Zones are numbered from 1, row-major from the own dead-ball line upward and
left to right within a row, so a larger index means more attacking progress.
Cells are half-open ``[lo, hi)`` on both axes except the last column, which
is closed so that ``x = 68`` is on the pitch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ContractViolation, InvalidCoordinate, OutOfModelArea

Rect = tuple[float, float, float, float]  # (x0, x1, y0, y1)


@dataclass(frozen=True)
class Pitch:
    width_m: float = 68.0
    length_m: float = 120.0
    own_in_goal_depth_m: float = 10.0
    opp_in_goal_depth_m: float = 10.0

    def __post_init__(self):
        if self.width_m != 68.0 or self.length_m != 120.0:
            raise ConfigError("only the standardised 68m x 120m pitch is supported")

    @property
    def y_min(self) -> float:
        return -self.own_in_goal_depth_m

    @property
    def try_line(self) -> float:
        return self.length_m - self.own_in_goal_depth_m - self.opp_in_goal_depth_m

    @property
    def y_max(self) -> float:
        return self.try_line + self.opp_in_goal_depth_m


PITCH = Pitch()


def check_coordinates(x, y, pitch: Pitch = PITCH) -> tuple[np.ndarray, np.ndarray]:
    """Validate coordinates against the modelled area and return them as arrays."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    off_pitch = ~((x >= 0) & (x <= pitch.width_m) & (y >= pitch.y_min) & (y <= pitch.y_max))
    if off_pitch.any():
        i = int(np.flatnonzero(off_pitch.ravel())[0])
        raise InvalidCoordinate(f"({x.ravel()[i]:g}, {y.ravel()[i]:g}) is outside the pitch")
    in_goal = y >= pitch.try_line
    if in_goal.any():
        i = int(np.flatnonzero(in_goal.ravel())[0])
        raise OutOfModelArea(
            f"({x.ravel()[i]:g}, {y.ravel()[i]:g}) is inside the opposition in-goal"
        )
    return x, y


class ZoneSystem:
    """Common interface of grids and aggregated partitions."""

    zone_count: int
    name: str

    def zone_index(self, x, y) -> np.ndarray:
        raise NotImplementedError

    def zone_of(self, x: float, y: float) -> int:
        return int(self.zone_index(np.array([x]), np.array([y]))[0])

    def rects(self, zone_id: int) -> list[Rect]:
        raise NotImplementedError

    def zone_rows(self) -> np.ndarray:
        """Row label (1 = nearest the own dead-ball line) of every zone."""
        raise NotImplementedError

    def zone_ids(self) -> range:
        return range(1, self.zone_count + 1)

    def areas(self) -> np.ndarray:
        return np.array(
            [sum((x1 - x0) * (y1 - y0) for x0, x1, y0, y1 in self.rects(z)) for z in self.zone_ids()]
        )

    def to_dict(self) -> dict:
        raise NotImplementedError

    def same_as(self, other: "ZoneSystem") -> bool:
        return self.to_dict() == other.to_dict()


@dataclass(frozen=True)
class MirrorClass:
    class_index: int
    member_columns: tuple[int, int]


def mirror_class(column: int, n_columns: int) -> MirrorClass:
    """Pair ``column`` with its left-right mirror ``n_columns + 1 - column``.

    Classes count from the touchline inward, so class 1 is the outermost pair.
    For an odd column count the central column pairs with itself.
    """
    if not 1 <= column <= n_columns:
        raise InvalidCoordinate(f"column {column} outside 1..{n_columns}")
    partner = n_columns + 1 - column
    lo, hi = sorted((column, partner))
    return MirrorClass(lo, (lo, hi))


@dataclass(frozen=True, eq=False)
class GridZoneSystem(ZoneSystem):
    cell_length_m: int
    column_edges: tuple[float, ...]
    row_edges: tuple[float, ...]
    pitch: Pitch = field(default=PITCH, repr=False)

    @property
    def n_columns(self) -> int:
        return len(self.column_edges) - 1

    @property
    def n_rows(self) -> int:
        return len(self.row_edges) - 1

    @property
    def zone_count(self) -> int:
        return self.n_columns * self.n_rows

    @property
    def name(self) -> str:
        return f"grid-{self.cell_length_m}m"

    @property
    def column_widths(self) -> list[float]:
        return list(np.diff(self.column_edges))

    def zone_id(self, column: int, row: int) -> int:
        """Zone id from 1-based column and row."""
        return (row - 1) * self.n_columns + column

    def column_row(self, zone_id: int) -> tuple[int, int]:
        row, col = divmod(zone_id - 1, self.n_columns)
        return col + 1, row + 1

    def zone_index(self, x, y) -> np.ndarray:
        x, y = check_coordinates(x, y, self.pitch)
        col = np.searchsorted(self.column_edges, x, side="right") - 1
        col = np.minimum(col, self.n_columns - 1)
        row = np.searchsorted(self.row_edges, y, side="right") - 1
        return row * self.n_columns + col + 1

    def rects(self, zone_id: int) -> list[Rect]:
        if not 1 <= zone_id <= self.zone_count:
            raise ContractViolation(f"zone {zone_id} not in {self.name}")
        c, r = self.column_row(zone_id)
        return [(self.column_edges[c - 1], self.column_edges[c], self.row_edges[r - 1], self.row_edges[r])]

    def zone_rows(self) -> np.ndarray:
        return (np.arange(self.zone_count) // self.n_columns) + 1

    def zone_columns(self) -> np.ndarray:
        return (np.arange(self.zone_count) % self.n_columns) + 1

    def to_dict(self) -> dict:
        return {
            "kind": "grid",
            "cell_length_m": self.cell_length_m,
            "column_edges": [_num(v) for v in self.column_edges],
            "row_edges": [_num(v) for v in self.row_edges],
            "zones": [
                {"id": z, "bounds": [[_num(v) for v in r] for r in self.rects(z)]}
                for z in self.zone_ids()
            ],
        }


def build_grid(cell_length_m: int, pitch: Pitch = PITCH) -> GridZoneSystem:
    """Fixed grid of ``cell_length_m`` cells with the opposition in-goal removed.

    The width does not divide evenly, so the two touchline columns absorb the
    remainder: 5m cells give widths ``[4, 5 x 12, 4]`` and 10m cells
    ``[9, 10 x 5, 9]``.
    """
    if cell_length_m not in (5, 10):
        raise ConfigError(f"unsupported cell length {cell_length_m!r}; expected 5 or 10")
    n_cols = math.ceil(pitch.width_m / cell_length_m)
    edge = (pitch.width_m - (n_cols - 2) * cell_length_m) / 2
    widths = [edge] + [cell_length_m] * (n_cols - 2) + [edge]
    column_edges = tuple(float(v) for v in np.concatenate([[0.0], np.cumsum(widths)]))
    n_rows = int(round((pitch.try_line - pitch.y_min) / cell_length_m))
    row_edges = tuple(float(pitch.y_min + i * cell_length_m) for i in range(n_rows + 1))
    return GridZoneSystem(cell_length_m, column_edges, row_edges, pitch)


class AggregatedZoneSystem(ZoneSystem):
    """Partition of a 5m grid into larger zones.

    ``members[i]`` lists the grid zone ids making up aggregated zone ``i + 1``.
    Zones built from mirror classes are generally two disjoint strips, so a
    zone's geometry is a list of rectangles.
    """

    def __init__(
        self,
        base: GridZoneSystem,
        members,
        full_width=None,
        column_groups=None,
        row_groups=None,
    ):
        self.base = base
        self.members = tuple(tuple(sorted(int(m) for m in ms)) for ms in members)
        n = len(self.members)
        self.full_width = tuple(bool(f) for f in full_width) if full_width is not None else (False,) * n
        self.column_groups = tuple(tuple(g) for g in column_groups) if column_groups else None
        self.row_groups = tuple(tuple(g) for g in row_groups) if row_groups else None
        if len(self.full_width) != n:
            raise ContractViolation("full_width flags do not match zone count")
        lookup = np.zeros(base.zone_count + 1, dtype=np.int64)
        for zid, ms in enumerate(self.members, start=1):
            if not ms:
                raise ContractViolation(f"aggregated zone {zid} has no members")
            for m in ms:
                if not 1 <= m <= base.zone_count:
                    raise ContractViolation(f"member {m} not in {base.name}")
                if lookup[m]:
                    raise ContractViolation(f"grid zone {m} belongs to two aggregated zones")
                lookup[m] = zid
        if (lookup[1:] == 0).any():
            missing = int(np.flatnonzero(lookup[1:] == 0)[0]) + 1
            raise ContractViolation(f"grid zone {missing} belongs to no aggregated zone")
        self._lookup = lookup
        self._rects = [cells_to_rects(base, ms) for ms in self.members]

    @property
    def zone_count(self) -> int:
        return len(self.members)

    @property
    def name(self) -> str:
        return f"aggregated-{self.zone_count}"

    @property
    def base_lookup(self) -> np.ndarray:
        """``base_lookup[g]`` is the aggregated zone containing grid zone ``g``."""
        return self._lookup

    def zone_index(self, x, y) -> np.ndarray:
        return self._lookup[self.base.zone_index(x, y)]

    def rects(self, zone_id: int) -> list[Rect]:
        if not 1 <= zone_id <= self.zone_count:
            raise ContractViolation(f"zone {zone_id} not in {self.name}")
        return list(self._rects[zone_id - 1])

    def zone_rows(self) -> np.ndarray:
        base_rows = self.base.zone_rows()
        lowest = np.array([base_rows[ms[0] - 1] for ms in self.members])
        _, ranks = np.unique(lowest, return_inverse=True)
        return ranks + 1

    def to_dict(self) -> dict:
        d = {
            "kind": "aggregated",
            "base_cell_length_m": self.base.cell_length_m,
            "zones": [
                {
                    "id": z,
                    "members": list(self.members[z - 1]),
                    "full_width": self.full_width[z - 1],
                    "bounds": [[_num(v) for v in r] for r in self.rects(z)],
                }
                for z in self.zone_ids()
            ],
        }
        if self.column_groups is not None:
            d["column_groups"] = [list(g) for g in self.column_groups]
        if self.row_groups is not None:
            d["row_groups"] = [list(g) for g in self.row_groups]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AggregatedZoneSystem":
        base = build_grid(d.get("base_cell_length_m", 5))
        zones = sorted(d["zones"], key=lambda z: z["id"])
        if [z["id"] for z in zones] != list(range(1, len(zones) + 1)):
            raise ContractViolation("aggregated zone ids must be 1..n")
        return cls(
            base,
            [z["members"] for z in zones],
            [z.get("full_width", False) for z in zones],
            d.get("column_groups"),
            d.get("row_groups"),
        )


def cells_to_rects(grid: GridZoneSystem, zone_ids) -> list[Rect]:
    """Cover a set of grid cells with rectangles.

    Cells are first joined into horizontal runs per grid row; runs with the
    same extent in consecutive rows are then stacked.
    """
    by_row: dict[int, list[int]] = {}
    for z in sorted(zone_ids):
        c, r = grid.column_row(z)
        by_row.setdefault(r, []).append(c)
    runs_by_row: dict[int, list[tuple[int, int]]] = {}
    for r, cols in by_row.items():
        runs = []
        start = prev = cols[0]
        for c in cols[1:]:
            if c != prev + 1:
                runs.append((start, prev))
                start = c
            prev = c
        runs.append((start, prev))
        runs_by_row[r] = runs

    open_: dict[tuple[int, int], int] = {}  # run -> first row
    done: list[tuple[int, int, int, int]] = []
    rows = sorted(runs_by_row)
    prev_row = None
    for r in rows:
        current = set(runs_by_row[r])
        for run in list(open_):
            if run not in current or prev_row != r - 1:
                done.append((run[0], run[1], open_.pop(run), prev_row))
        for run in runs_by_row[r]:
            open_.setdefault(run, r)
        prev_row = r
    for run, first in open_.items():
        done.append((run[0], run[1], first, prev_row))

    ce, re_ = grid.column_edges, grid.row_edges
    rects = [(ce[c0 - 1], ce[c1], re_[r0 - 1], re_[r1]) for c0, c1, r0, r1 in done]
    return sorted(rects, key=lambda t: (t[2], t[0]))


def system_from_dict(d: dict) -> ZoneSystem:
    """Rebuild a zone system from its JSON description (or from a model document)."""
    if "system" in d and "kind" not in d:
        d = d["system"]
    kind = d.get("kind")
    if kind == "grid":
        grid = build_grid(int(d["cell_length_m"]))
        if "column_edges" in d and [float(v) for v in d["column_edges"]] != list(grid.column_edges):
            raise ContractViolation("grid column edges do not match the standard grid")
        return grid
    if kind == "aggregated":
        return AggregatedZoneSystem.from_dict(d)
    raise ConfigError(f"unknown zone system kind {kind!r}")


def _num(v: float):
    v = float(v)
    return int(v) if v.is_integer() else v
