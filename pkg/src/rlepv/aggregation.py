"""Data-driven aggregation of the 5m grid into a coarser zone system.

Pipeline: per team-match column and row returns on the 5m grid, fold
mirrored columns into seven classes and pair 5m rows into 10m rows, then
scan each axis once, merging neighbours whose match returns are not shown to
differ by more than a smallest effect of interest.

The difference test is a paired one-sided minimal-effects t-test on
within-team-match differences. Pairing by team-match stands in for the team
and fixture random effects of a mixed model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import ConfigError, ContractViolation, InsufficientData
from .geometry import AggregatedZoneSystem, GridZoneSystem, mirror_class
from .valuation import EPVModel, MatchReturnMatrix, model_from_sums


@dataclass(frozen=True)
class MinimalEffectConfig:
    threshold: float = 1.0
    alpha: float = 0.05

    def __post_init__(self):
        if not self.threshold > 0:
            raise ConfigError("threshold must be positive")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class MarginalReturnSeries:
    """Match returns summed over a set of grid lines.

    ``values[g, i]`` is group ``g + 1``'s return in team-match ``keys[i]``.
    """

    axis: str
    keys: tuple[tuple[str, str], ...]
    values: np.ndarray

    @property
    def n_groups(self) -> int:
        return self.values.shape[0]

    def series(self, group_index: int) -> np.ndarray:
        return self.values[group_index - 1]


def _check_grid(matrices) -> GridZoneSystem:
    if not matrices:
        return None
    grid = matrices[0].system
    if not isinstance(grid, GridZoneSystem) or grid.cell_length_m != 5:
        raise ContractViolation("marginal returns need match returns on the 5m grid")
    for m in matrices:
        if m.system is not grid and not m.system.same_as(grid):
            raise ContractViolation("match returns come from different zone systems")
    return grid


def marginal_returns(matrices: list[MatchReturnMatrix]) -> tuple[MarginalReturnSeries, MarginalReturnSeries]:
    """Column (14) and row (22) return series, one value per team-match."""
    grid = _check_grid(matrices)
    keys = tuple((m.match_id, m.team_id) for m in matrices)
    if grid is None:
        return (
            MarginalReturnSeries("column", keys, np.zeros((14, 0))),
            MarginalReturnSeries("row", keys, np.zeros((22, 0))),
        )
    g = np.stack([m.returns.reshape(grid.n_rows, grid.n_columns) for m in matrices], axis=-1)
    return (
        MarginalReturnSeries("column", keys, g.sum(axis=0)),
        MarginalReturnSeries("row", keys, g.sum(axis=1)),
    )


def fold_and_pair(columns: MarginalReturnSeries, rows: MarginalReturnSeries, fold: bool = True):
    """Sum mirrored columns into classes and adjacent 5m rows into 10m rows.

    With ``fold=False`` columns pass through unchanged.
    """
    n = columns.n_groups
    if fold:
        classes = np.zeros(((n + 1) // 2, columns.values.shape[1]))
        for c in range(1, n + 1):
            classes[mirror_class(c, n).class_index - 1] += columns.values[c - 1]
    else:
        classes = columns.values.copy()
    if rows.n_groups % 2:
        raise ContractViolation("row pairing needs an even number of 5m rows")
    paired = rows.values[0::2] + rows.values[1::2]
    return (
        MarginalReturnSeries("column", columns.keys, classes),
        MarginalReturnSeries("row", rows.keys, paired),
    )


@dataclass(frozen=True)
class MinimalEffectResult:
    mean_diff: float
    sd_diff: float
    n: int
    t: float
    p: float
    separate: bool


def minimal_effect_test(a, b, config: MinimalEffectConfig = MinimalEffectConfig()) -> MinimalEffectResult:
    """Test H0: |mean(a - b)| <= threshold against H1: |mean(a - b)| > threshold.

    ``t = (|mean d| - threshold) / (sd(d) / sqrt(n))`` is referred to the upper
    tail of Student's t with ``n - 1`` degrees of freedom. With zero spread
    the decision is exact: separate iff ``|mean d| > threshold``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ContractViolation("series are not aligned on the same observations")
    n = a.size
    if n < 2:
        raise InsufficientData(f"minimal-effects test needs at least 2 paired observations, got {n}")
    d = a - b
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    excess = abs(mean) - config.threshold
    if sd <= 1e-12 * max(1.0, float(np.abs(d).max())):
        separate = excess > 0
        t = math.copysign(math.inf, excess) if excess else 0.0
        p = 0.0 if separate else 1.0
        return MinimalEffectResult(mean, 0.0, n, t, p, separate)
    t = excess / (sd / math.sqrt(n))
    p = float(stats.t.sf(t, n - 1))
    return MinimalEffectResult(mean, sd, n, t, p, p < config.alpha)


def minimal_effect_separate(a, b, config: MinimalEffectConfig = MinimalEffectConfig()) -> bool:
    return minimal_effect_test(a, b, config).separate


@dataclass(frozen=True)
class MergePartition:
    axis: str
    groups: tuple[tuple[int, ...], ...]  # 1-based indices along the axis


def merge_scan(series: MarginalReturnSeries, config: MinimalEffectConfig = MinimalEffectConfig()) -> MergePartition:
    """Single ordered pass merging each group into the running group when the
    two are not significantly different.

    The running group's series is the mean of its members' series.
    """
    values = series.values
    if values.shape[0] == 0:
        return MergePartition(series.axis, ())
    groups = [[1]]
    current = values[0]
    for g in range(2, values.shape[0] + 1):
        nxt = values[g - 1]
        if minimal_effect_separate(current, nxt, config):
            groups.append([g])
            current = nxt
        else:
            groups[-1].append(g)
            current = values[[i - 1 for i in groups[-1]]].mean(axis=0)
    return MergePartition(series.axis, tuple(tuple(g) for g in groups))


@dataclass(frozen=True)
class FullWidthRule:
    """Which merged row groups stay as one zone spanning the whole width.

    A row group is full width when it holds less than ``min_play_share`` of
    all plays, when fewer than two team-matches visit it (the column test
    would lack data), or when its 1-based ordinal is listed in ``rows``.
    """

    min_play_share: float = 0.05
    rows: tuple[int, ...] = field(default_factory=tuple)


def build_aggregated_system(
    matrices: list[MatchReturnMatrix],
    config: MinimalEffectConfig = MinimalEffectConfig(),
    full_width_rule: FullWidthRule = FullWidthRule(),
    fold: bool = True,
) -> AggregatedZoneSystem:
    grid = _check_grid(matrices)
    if grid is None:
        raise InsufficientData("no match returns to aggregate")
    columns, rows = marginal_returns(matrices)
    classes, row_groups = fold_and_pair(columns, rows, fold)
    column_part = merge_scan(classes, config)
    row_part = merge_scan(row_groups, config)

    n_cols = grid.n_columns
    if fold:
        col_sets = [
            sorted({c for k in grp for c in mirror_class(k, n_cols).member_columns})
            for grp in column_part.groups
        ]
    else:
        col_sets = [list(grp) for grp in column_part.groups]

    visits = np.stack([m.visits.reshape(grid.n_rows, grid.n_columns) for m in matrices])  # (obs, row, col)
    total_plays = visits.sum()
    members, full_width = [], []
    for ordinal, grp in enumerate(row_part.groups, start=1):
        fine_rows = [r for g in grp for r in (2 * g - 1, 2 * g)]
        row_visits = visits[:, [r - 1 for r in fine_rows], :].sum(axis=(1, 2))
        share = row_visits.sum() / total_plays if total_plays else 0.0
        is_full = (
            ordinal in full_width_rule.rows
            or share < full_width_rule.min_play_share
            or np.count_nonzero(row_visits) < 2
        )
        if is_full:
            members.append([grid.zone_id(c, r) for r in fine_rows for c in range(1, n_cols + 1)])
            full_width.append(True)
        else:
            for cols in col_sets:
                members.append([grid.zone_id(c, r) for r in fine_rows for c in cols])
                full_width.append(False)
    return AggregatedZoneSystem(grid, members, full_width, column_part.groups, row_part.groups)


def aggregated_values(epv_5m: EPVModel, system: AggregatedZoneSystem) -> EPVModel:
    """Visit-weighted average of the grid EPVs making up each aggregated zone."""
    if not epv_5m.system.same_as(system.base):
        raise ContractViolation("EPV model is not on the aggregated system's base grid")
    seen = epv_5m.has_data
    weighted = np.where(seen, epv_5m.values, 0.0) * epv_5m.visits
    returns = np.zeros(system.zone_count)
    visits = np.zeros(system.zone_count, dtype=np.int64)
    for z, ms in enumerate(system.members):
        if not ms:
            raise ContractViolation(f"aggregated zone {z + 1} has no members")
        idx = np.asarray(ms) - 1
        returns[z] = weighted[idx].sum()
        visits[z] = epv_5m.visits[idx].sum()
    return model_from_sums(system, returns, visits, epv_5m.gamma)
