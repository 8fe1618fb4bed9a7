"""Seeded synthetic seasons with analytic ground truth.

A possession is a first-order Markov walk over the 308 zones of the 5m grid.
Each play's row is drawn from a row transition kernel and its column from
the attacking team's style (column weights), independently. After every
play the possession ends with the zone's end probability, and an ending is
drawn from the zone's outcome mix. A possession still alive at
``max_plays`` ends in a handover.

Because the walk is Markov and finite, the expected return of a visit at
play ``t`` in zone ``s`` has a closed form (a backward recursion over ``t``),
and so does the pooled every-visit estimate the pipeline should converge to.

Randomness comes from numpy's PCG64 bit generator seeded with
``config.seed``; draws are made in a fixed order so a seed reproduces a
season exactly.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from .errors import ConfigError
from .events import ACTION_OF, REQUIRED_COLUMNS, Terminal
from .geometry import build_grid, mirror_class
from .possessions import REWARDS, PossessionTable

N_ROWS, N_COLS = 22, 14

ENDINGS = (
    Terminal.TRY_CONVERTED,
    Terminal.TRY_UNCONVERTED,
    Terminal.PENALTY_GOAL_MADE,
    Terminal.PENALTY_GOAL_MISSED,
    Terminal.DROP_GOAL_MADE,
    Terminal.DROP_GOAL_MISSED,
    Terminal.ERROR,
    Terminal.HANDOVER,
    Terminal.FIELD_KICK,
)
ENDING_REWARDS = np.array([REWARDS[e] for e in ENDINGS], dtype=float)

# Conversion and goal success rates, and the split of pointless endings.
CONVERSION_RATE = 0.74
PENALTY_SUCCESS = 0.88
DROP_SUCCESS = 0.47
NO_SCORE_SPLIT = (0.40, 0.25, 0.35)  # error, handover, field kick


def outcome_mix(try_share, penalty_share=0.0, drop_share=0.0) -> np.ndarray:
    """Distribution over ``ENDINGS`` given that the play ends the possession.

    Shares broadcast, so per-row or per-zone arrays give per-row or per-zone
    mixes (last axis = ending).
    """
    ts, ps, ds = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (try_share, penalty_share, drop_share)))
    rest = 1.0 - ts - ps - ds
    if (rest < -1e-12).any():
        raise ConfigError("try, penalty and drop shares exceed 1")
    rest = np.clip(rest, 0.0, None)
    e, h, f = NO_SCORE_SPLIT
    return np.stack(
        [
            ts * CONVERSION_RATE,
            ts * (1 - CONVERSION_RATE),
            ps * PENALTY_SUCCESS,
            ps * (1 - PENALTY_SUCCESS),
            ds * DROP_SUCCESS,
            ds * (1 - DROP_SUCCESS),
            rest * e,
            rest * h,
            rest * f,
        ],
        axis=-1,
    )


@dataclass(frozen=True, eq=False)
class SynthConfig:
    """Generator parameters; arrays are indexed ``[row - 1, column - 1]`` on the 5m grid.

    ``row_regimes``/``column_regimes`` record the true partition of 10m rows
    and mirror classes into groups with equal expected match return, when
    the parameters were built to have one.
    """

    seed: int = 0
    n_teams: int = 12
    n_matches_per_team: int = 29
    possessions_per_match: int = 28
    max_plays: int = 26
    start_rows: np.ndarray = field(default_factory=lambda: np.full(N_ROWS, 1 / N_ROWS))
    row_kernel: np.ndarray = field(default_factory=lambda: np.full((N_ROWS, N_ROWS), 1 / N_ROWS))
    team_styles: np.ndarray = field(default_factory=lambda: np.full((12, N_COLS), 1 / N_COLS))
    end_prob: np.ndarray = field(default_factory=lambda: np.full((N_ROWS, N_COLS), 0.18))
    outcome_probs: np.ndarray = field(
        default_factory=lambda: np.broadcast_to(outcome_mix(0.15), (N_ROWS, N_COLS, len(ENDINGS))).copy()
    )
    row_regimes: tuple[tuple[int, ...], ...] | None = None
    column_regimes: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        validate(self)

    @property
    def try_prob(self) -> np.ndarray:
        """Per-zone probability that a play there ends in a try."""
        return self.end_prob * self.outcome_probs[..., :2].sum(axis=-1)

    @property
    def mean_reward(self) -> np.ndarray:
        """Expected reward of a possession ending in each zone."""
        return self.outcome_probs @ ENDING_REWARDS

    def with_seed(self, seed: int) -> "SynthConfig":
        return replace(self, seed=seed)


def validate(cfg: SynthConfig) -> None:
    def prob_vector(a, name, axis=-1):
        a = np.asarray(a, dtype=float)
        if not np.isfinite(a).all() or (a < 0).any() or (a > 1).any():
            raise ConfigError(f"{name} must hold probabilities in [0, 1]")
        if not np.allclose(a.sum(axis=axis), 1.0, atol=1e-9):
            raise ConfigError(f"{name} must sum to 1")

    if cfg.n_teams < 2 or cfg.n_teams % 2:
        raise ConfigError("n_teams must be an even number >= 2")
    if cfg.n_matches_per_team < 1 or cfg.possessions_per_match < 1 or cfg.max_plays < 1:
        raise ConfigError("match, possession and play counts must be >= 1")
    shapes = {
        "start_rows": (N_ROWS,),
        "row_kernel": (N_ROWS, N_ROWS),
        "team_styles": (cfg.n_teams, N_COLS),
        "end_prob": (N_ROWS, N_COLS),
        "outcome_probs": (N_ROWS, N_COLS, len(ENDINGS)),
    }
    for name, shape in shapes.items():
        if np.shape(getattr(cfg, name)) != shape:
            raise ConfigError(f"{name} must have shape {shape}, got {np.shape(getattr(cfg, name))}")
    prob_vector(cfg.start_rows, "start_rows")
    prob_vector(cfg.row_kernel, "row_kernel rows")
    prob_vector(cfg.team_styles, "team styles")
    prob_vector(cfg.outcome_probs, "outcome_probs")
    e = np.asarray(cfg.end_prob)
    if not np.isfinite(e).all() or (e < 0).any() or (e > 1).any():
        raise ConfigError("end_prob must hold probabilities in [0, 1]")
    for name, regimes, n_groups in (("row_regimes", cfg.row_regimes, 11), ("column_regimes", cfg.column_regimes, 7)):
        if regimes is None:
            continue
        flat = [g for grp in regimes for g in grp]
        if flat != list(range(1, n_groups + 1)) or any(not grp for grp in regimes):
            raise ConfigError(f"{name} must split 1..{n_groups} into contiguous non-empty runs")
        if len(regimes) > n_groups:
            raise ConfigError(f"{name}: more regimes than groups")


# ---------------------------------------------------------------- analytic truth


@dataclass(frozen=True, eq=False)
class AnalyticTruth:
    """Closed-form expectations for a configuration.

    ``epv`` is the limit of the pooled every-visit estimate per 5m zone and
    ``match_returns`` the league-average expected return per zone in one
    team-match (both row-major ``[row - 1, column - 1]``).
    """

    gamma: float
    epv: np.ndarray
    visits_per_possession: np.ndarray
    match_returns: np.ndarray
    length_pmf: np.ndarray  # P(T = t), t = 1..max_plays

    @property
    def column_class_returns(self) -> np.ndarray:
        cols = self.match_returns.sum(axis=0)
        out = np.zeros(7)
        for c in range(1, N_COLS + 1):
            out[mirror_class(c, N_COLS).class_index - 1] += cols[c - 1]
        return out

    @property
    def row_group_returns(self) -> np.ndarray:
        rows = self.match_returns.sum(axis=1)
        return rows[0::2] + rows[1::2]

    @property
    def median_length(self) -> int:
        cdf = np.cumsum(self.length_pmf)
        return int(np.searchsorted(cdf, 0.5 - 1e-12) + 1)


def _team_recursion(cfg: SynthConfig, style: np.ndarray, gamma: float):
    """Per-play state occupancy and visit values for one team.

    Returns ``mu[t]`` (probability of being alive at play ``t + 1`` in each
    zone) and ``v[t]`` (expected discounted return of that visit).
    """
    T = cfg.max_plays
    e = np.asarray(cfg.end_prob, dtype=float)
    immediate = e * np.asarray(cfg.mean_reward)
    K = np.asarray(cfg.row_kernel, dtype=float)
    mu = np.zeros((T, N_ROWS, N_COLS))
    v = np.zeros((T, N_ROWS, N_COLS))
    mu[0] = np.outer(cfg.start_rows, style)
    for t in range(1, T):
        stay = (mu[t - 1] * (1 - e)).sum(axis=1)
        mu[t] = np.outer(stay @ K, style)
    v[T - 1] = immediate
    for t in range(T - 2, -1, -1):
        nxt = K @ (v[t + 1] @ style)  # expected value of the next visit, per current row
        v[t] = immediate + (1 - e) * gamma * nxt[:, None]
    return mu, v


def analytic_truth(cfg: SynthConfig, gamma: float = 1.0) -> AnalyticTruth:
    e = np.asarray(cfg.end_prob, dtype=float)
    num = np.zeros((N_ROWS, N_COLS))
    den = np.zeros((N_ROWS, N_COLS))
    pmf = np.zeros(cfg.max_plays)
    for style in np.asarray(cfg.team_styles, dtype=float):
        mu, v = _team_recursion(cfg, style, gamma)
        num += (mu * v).sum(axis=0)
        den += mu.sum(axis=0)
        ends = (mu * e).sum(axis=(1, 2))
        alive = mu.sum(axis=(1, 2))
        ends[-1] = alive[-1]
        pmf += ends
    n = len(cfg.team_styles)
    with np.errstate(invalid="ignore", divide="ignore"):
        epv = np.where(den > 0, num / den, np.nan)
    return AnalyticTruth(
        gamma=gamma,
        epv=epv,
        visits_per_possession=den / n,
        match_returns=num / n * cfg.possessions_per_match,
        length_pmf=pmf / n,
    )


# ---------------------------------------------------------------- presets

ROW_REGIMES = ((1, 2), (3, 4, 5, 6), (7, 8, 9), (10, 11))
ROW_REGIME_SHARES = (0.016, 0.062, 0.12, 0.197)  # per 10m row, of a team's total return
COLUMN_REGIMES = ((1,), (2,), (3,), (4,), (5,), (6, 7))
COLUMN_CLASS_WEIGHTS = (0.04, 0.13, 0.22, 0.09, 0.20, 0.16, 0.16)
END_PROB = 0.18


def _scoring_by_row():
    r = np.arange(N_ROWS) / (N_ROWS - 1)
    try_share = 0.004 + 0.296 * r**2
    penalty_share = np.full(N_ROWS, 0.016)
    drop_share = np.where(np.arange(1, N_ROWS + 1) >= 14, 0.008, 0.0)
    return outcome_mix(try_share, penalty_share, drop_share)


def _styles(n_teams: int, class_weights, regimes, spread: float, style_seed: int) -> np.ndarray:
    """Team column weights; within a regime every class gets the same weight."""
    rng = np.random.Generator(np.random.PCG64(style_seed))
    base = np.asarray(class_weights, dtype=float)
    styles = np.zeros((n_teams, N_COLS))
    for k in range(n_teams):
        mult = np.exp(spread * rng.standard_normal(len(regimes)))
        w = base.copy()
        for i, grp in enumerate(regimes):
            for cls in grp:
                w[cls - 1] *= mult[i]
        w /= w.sum()
        for c in range(1, N_COLS + 1):
            styles[k, c - 1] = w[mirror_class(c, N_COLS).class_index - 1] / 2
    return styles


def _solve_row_weights(outcomes: np.ndarray, end_prob: float, max_plays: int, target: np.ndarray) -> np.ndarray:
    """Row visit weights that make each row's expected return proportional to ``target``.

    Rows are drawn independently at every play (memoryless kernel) and the
    end probability is constant, so the expected return generated in row
    ``r`` per possession is ``rho[r] * (q * A * Rbar[r] + u * M)``, where
    ``M = sum(rho * Rbar)`` and ``A``, ``u`` depend only on ``q`` and
    ``max_plays``. Solving for ``M`` fixes ``rho``.
    """
    q, T = end_prob, max_plays
    rbar = outcomes @ ENDING_REWARDS
    survive = (1 - q) ** np.arange(T)  # S_t, t = 1..T
    A = survive.sum()
    # W_{t+1} = M * (1 - (1 - q) ** (T - t)); only plays t < T feed forward
    b = sum(survive[t - 1] * (1 - (1 - q) ** (T - t)) for t in range(1, T))
    u = (1 - q) * b

    def rho_for(M):
        w = target / (q * A * rbar + u * M)
        return w / w.sum()

    M = optimize.brentq(lambda M: rho_for(M) @ rbar - M, rbar.min(), rbar.max(), xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return rho_for(M)


def default_config(seed: int = 0, style_seed: int = 2019, style_spread: float = 0.12, **overrides) -> SynthConfig:
    """A 12-team league with value rising toward the try line,
    four true row regimes (the first, from the dead-ball line to the 10m
    line, rarely visited) and six true column regimes."""
    n_teams = overrides.pop("n_teams", 12)
    max_plays = overrides.get("max_plays", 26)
    mix = _scoring_by_row()
    target = np.zeros(N_ROWS)
    for share, grp in zip(ROW_REGIME_SHARES, ROW_REGIMES):
        for g in grp:
            target[2 * g - 2: 2 * g] = share / 2
    rho = _solve_row_weights(mix, END_PROB, max_plays, target)
    return SynthConfig(
        seed=seed,
        n_teams=n_teams,
        start_rows=rho,
        row_kernel=np.tile(rho, (N_ROWS, 1)),
        team_styles=_styles(n_teams, COLUMN_CLASS_WEIGHTS, COLUMN_REGIMES, style_spread, style_seed),
        end_prob=np.full((N_ROWS, N_COLS), END_PROB),
        outcome_probs=np.repeat(mix[:, None, :], N_COLS, axis=1),
        row_regimes=ROW_REGIMES,
        column_regimes=COLUMN_REGIMES,
        **overrides,
    )


def gradient_config(seed: int = 0, style_seed: int = 2019, **overrides) -> SynthConfig:
    """Every row equally visited, try share rising linearly toward the try line."""
    n_teams = overrides.pop("n_teams", 12)
    try_share = np.linspace(0.0, 0.9, N_ROWS)
    mix = outcome_mix(try_share, 0.03, 0.0)
    return SynthConfig(
        seed=seed,
        n_teams=n_teams,
        start_rows=np.full(N_ROWS, 1 / N_ROWS),
        row_kernel=np.full((N_ROWS, N_ROWS), 1 / N_ROWS),
        team_styles=_styles(n_teams, np.full(7, 1 / 7), tuple((c,) for c in range(1, 8)), 0.12, style_seed),
        end_prob=np.full((N_ROWS, N_COLS), END_PROB),
        outcome_probs=np.repeat(mix[:, None, :], N_COLS, axis=1),
        **overrides,
    )


def uniform_config(seed: int = 0, try_share: float = 0.15, **overrides) -> SynthConfig:
    """Same end probability and outcome mix everywhere: analytic EPV is constant."""
    n_teams = overrides.pop("n_teams", 12)
    return SynthConfig(
        seed=seed,
        n_teams=n_teams,
        team_styles=np.full((n_teams, N_COLS), 1 / N_COLS),
        outcome_probs=np.broadcast_to(outcome_mix(try_share), (N_ROWS, N_COLS, len(ENDINGS))).copy(),
        **overrides,
    )


PRESETS = {"default": default_config, "gradient": gradient_config, "uniform": uniform_config}


# ---------------------------------------------------------------- simulation


def schedule(n_teams: int, n_rounds: int) -> list[list[tuple[int, int]]]:
    """Round-robin rounds (circle method), cycled until ``n_rounds`` exist.

    Every team plays exactly once per round.
    """
    teams = list(range(n_teams))
    base = []
    for _ in range(n_teams - 1):
        pairs = [(teams[i], teams[n_teams - 1 - i]) for i in range(n_teams // 2)]
        base.append(pairs)
        teams = [teams[0]] + [teams[-1]] + teams[1:-1]
    rounds = []
    for r in range(n_rounds):
        pairs = base[r % len(base)]
        if (r // len(base)) % 2:
            pairs = [(b, a) for a, b in pairs]
        rounds.append(pairs)
    return rounds


def _draw(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw; ``cum`` has one cumulative distribution per row of ``u``."""
    return np.minimum((u[:, None] > cum).sum(axis=1), cum.shape[1] - 1)


@dataclass(frozen=True, eq=False)
class Season:
    config: SynthConfig
    table: PossessionTable
    endings: np.ndarray  # index into ENDINGS per possession
    team_index: np.ndarray
    match_index: np.ndarray
    match_ids: tuple[str, ...]
    team_ids: tuple[str, ...]
    zones: np.ndarray  # 5m zone id per play

    @property
    def possession_count(self) -> int:
        return len(self.table)

    def truth(self, gamma: float = 1.0) -> AnalyticTruth:
        return analytic_truth(self.config, gamma)

    def event_rows(self):
        """Rows of the canonical events CSV, in chronological order."""
        offsets = self.table.offsets
        x, y = self.table.x, self.table.y
        set_no = 0
        current_match = -1
        for j in range(len(self.table)):
            m = self.match_index[j]
            if m != current_match:
                current_match, set_no = m, 0
            T = offsets[j + 1] - offsets[j]
            action, outcome = ACTION_OF[ENDINGS[self.endings[j]]]
            for t in range(1, T + 1):
                i = offsets[j] + t - 1
                last = t == T
                yield (
                    self.match_ids[m],
                    self.team_ids[self.team_index[j]],
                    set_no + (t - 1) // 6 + 1,
                    (t - 1) % 6 + 1,
                    int(x[i]),
                    int(y[i]),
                    action if last else "play",
                    outcome if last else "",
                )
            set_no += math.ceil(T / 6)

    def events_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(REQUIRED_COLUMNS) + "\n")
        for row in self.event_rows():
            buf.write(",".join(str(v) for v in row) + "\n")
        return buf.getvalue()

    def truth_dict(self) -> dict:
        truth = self.truth(1.0)
        grid = build_grid(5)
        flat = truth.epv.ravel()
        return {
            "seed": self.config.seed,
            "possession_count": self.possession_count,
            "play_count": self.table.n_plays,
            "gamma": 1.0,
            "analytic_epv": {
                "system": grid.name,
                "zones": [{"id": z, "epv": None if math.isnan(v) else float(v)} for z, v in enumerate(flat, 1)],
            },
            "regime_partition": {
                "rows": [list(g) for g in self.config.row_regimes] if self.config.row_regimes else None,
                "columns": [list(g) for g in self.config.column_regimes] if self.config.column_regimes else None,
            },
            "expected_row_group_returns": [float(v) for v in truth.row_group_returns],
            "expected_column_class_returns": [float(v) for v in truth.column_class_returns],
            "median_possession_length": truth.median_length,
        }

    def truth_json(self) -> str:
        return json.dumps(self.truth_dict(), indent=2) + "\n"


def generate_season(cfg: SynthConfig) -> Season:
    """Simulate a season; deterministic for a given configuration and seed."""
    validate(cfg)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    grid = build_grid(5)
    rounds = schedule(cfg.n_teams, cfg.n_matches_per_team)
    team_ids = tuple(f"T{k + 1:02d}" for k in range(cfg.n_teams))
    match_ids, p_team, p_match = [], [], []
    for r, pairs in enumerate(rounds, start=1):
        for i, (a, b) in enumerate(pairs, start=1):
            m = len(match_ids)
            match_ids.append(f"R{r:02d}-M{i}")
            for _ in range(cfg.possessions_per_match):
                p_team += [a, b]
                p_match += [m, m]
    p_team = np.array(p_team, dtype=np.int64)
    p_match = np.array(p_match, dtype=np.int64)
    n = len(p_team)

    cum_start = np.cumsum(cfg.start_rows)[None, :]
    cum_kernel = np.cumsum(cfg.row_kernel, axis=1)
    cum_style = np.cumsum(cfg.team_styles, axis=1)
    cum_outcome = np.cumsum(cfg.outcome_probs, axis=2)
    end_prob = np.asarray(cfg.end_prob)

    rows = np.zeros((cfg.max_plays, n), dtype=np.int16)
    cols = np.zeros((cfg.max_plays, n), dtype=np.int16)
    length = np.zeros(n, dtype=np.int64)
    ending = np.full(n, ENDINGS.index(Terminal.HANDOVER), dtype=np.int64)
    alive = np.arange(n)
    prev_row = None
    for t in range(cfg.max_plays):
        m = len(alive)
        if m == 0:
            break
        u = rng.random((4, m))
        if t == 0:
            r = _draw(np.broadcast_to(cum_start, (m, N_ROWS)), u[0])
        else:
            r = _draw(cum_kernel[prev_row], u[0])
        c = _draw(cum_style[p_team[alive]], u[1])
        rows[t, alive] = r
        cols[t, alive] = c
        length[alive] = t + 1
        ends = u[2] < end_prob[r, c]
        ending[alive[ends]] = _draw(cum_outcome[r[ends], c[ends]], u[3][ends])
        alive, prev_row = alive[~ends], r[~ends]

    offsets = np.concatenate([[0], np.cumsum(length)]).astype(np.int64)
    mask = np.arange(cfg.max_plays)[:, None] < length[None, :]
    play_rows = rows.T[mask.T].astype(np.int64)
    play_cols = cols.T[mask.T].astype(np.int64)
    col_edges = np.asarray(grid.column_edges)
    row_edges = np.asarray(grid.row_edges)
    lo_x = col_edges[play_cols]
    hi_x = col_edges[play_cols + 1]
    lo_y = row_edges[play_rows]
    u = rng.random((2, len(play_rows)))
    x = lo_x + np.floor(u[0] * (hi_x - lo_x))  # grid edges are whole metres
    y = lo_y + np.floor(u[1] * 5.0)
    rewards = ENDING_REWARDS[ending].astype(np.int64)
    table = PossessionTable(
        np.array([match_ids[m] for m in p_match], dtype=object),
        np.array([team_ids[k] for k in p_team], dtype=object),
        rewards,
        offsets,
        x.astype(float),
        y.astype(float),
    )
    zones = play_rows * N_COLS + play_cols + 1
    return Season(cfg, table, ending, p_team, p_match, tuple(match_ids), team_ids, zones)
