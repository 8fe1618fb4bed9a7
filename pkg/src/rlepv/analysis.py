"""Reward distributions, KL reproducibility and z-score dependence profiles."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ContractViolation, InsufficientTeams, ZeroReturnMatch
from .geometry import ZoneSystem
from .valuation import MatchReturnMatrix

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RewardDistribution:
    """Share of a team's return generated in each zone (``probs[s - 1]``)."""

    team_id: str
    source: tuple[str, ...]
    probs: np.ndarray
    system: ZoneSystem


def _same_system(a: ZoneSystem, b: ZoneSystem) -> bool:
    return a is b or a.same_as(b)


def reward_distribution(matrix: MatchReturnMatrix, system: ZoneSystem | None = None) -> RewardDistribution:
    if system is not None and not _same_system(matrix.system, system):
        raise ContractViolation("match returns are not on the requested zone system")
    total = matrix.returns.sum()
    if total <= 0:
        raise ZeroReturnMatch(f"team {matrix.team_id} generated no return in match {matrix.match_id}")
    return RewardDistribution(matrix.team_id, (matrix.match_id,), matrix.returns / total, matrix.system)


def pooled_distribution(matrices: Sequence[MatchReturnMatrix], system: ZoneSystem | None = None) -> RewardDistribution:
    """Distribution of the summed returns of several matches of one team."""
    if not matrices:
        raise ContractViolation("pooling needs at least one match")
    system = system or matrices[0].system
    teams = {m.team_id for m in matrices}
    if len(teams) > 1:
        raise ContractViolation(f"pooling matches of several teams: {sorted(teams)}")
    pooled = np.zeros(system.zone_count)
    for m in matrices:
        if not _same_system(m.system, system):
            raise ContractViolation("match returns are not on the requested zone system")
        pooled += m.returns
    total = pooled.sum()
    if total <= 0:
        raise ZeroReturnMatch(f"team {matrices[0].team_id} generated no return over the pooled matches")
    return RewardDistribution(matrices[0].team_id, tuple(m.match_id for m in matrices), pooled / total, system)


def kl_divergence(p: RewardDistribution, q: RewardDistribution) -> float:
    """D(p || q) in nats; ``inf`` when p has mass where q has none."""
    if p.probs.shape != q.probs.shape or not _same_system(p.system, q.system):
        raise ContractViolation("distributions are on different zone systems")
    support = p.probs > 0
    ps, qs = p.probs[support], q.probs[support]
    if (qs == 0).any():
        return math.inf
    return float(np.sum(ps * (np.log(ps) - np.log(qs))))


def by_team(matrices: Iterable[MatchReturnMatrix]) -> dict[str, list[MatchReturnMatrix]]:
    """Group match returns per team, keeping input (chronological) order."""
    out: dict[str, list[MatchReturnMatrix]] = {}
    for m in matrices:
        out.setdefault(m.team_id, []).append(m)
    return out


@dataclass(frozen=True)
class Comparison:
    target_match: str
    window: tuple[str, ...]
    kl: float

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.kl)


@dataclass(frozen=True)
class ReproReport:
    team_id: str
    k: int
    comparisons: tuple[Comparison, ...]

    @property
    def pct_non_infinity(self) -> float:
        if not self.comparisons:
            return math.nan
        finite = sum(not c.is_infinite for c in self.comparisons)
        return 100.0 * finite / len(self.comparisons)


@dataclass(frozen=True)
class ReproStudy:
    system_name: str
    reports: tuple[ReproReport, ...]

    def for_k(self, k: int) -> list[ReproReport]:
        return [r for r in self.reports if r.k == k]

    def summary(self, k: int) -> tuple[float, float]:
        """Mean and sample SD across teams of the % of non-infinite KL values."""
        pct = np.array([r.pct_non_infinity for r in self.for_k(k) if r.comparisons])
        if pct.size == 0:
            return math.nan, math.nan
        sd = float(pct.std(ddof=1)) if pct.size > 1 else 0.0
        return float(pct.mean()), sd

    def ks(self) -> list[int]:
        return sorted({r.k for r in self.reports})


def team_reproducibility(matrices: Sequence[MatchReturnMatrix], k: int) -> ReproReport:
    """Compare every match with the pooled distribution of the ``k`` matches before it.

    Matches with zero total return are dropped from the sequence first, so a
    team with ``N`` usable matches yields ``N - k`` comparisons.
    """
    if k < 1:
        raise ContractViolation("window length must be >= 1")
    usable = []
    for m in matrices:
        if m.total > 0:
            usable.append(m)
        else:
            log.info("team %s match %s: zero return, excluded from comparisons", m.team_id, m.match_id)
    team = matrices[0].team_id if matrices else ""
    comparisons = []
    for i in range(k, len(usable)):
        window = usable[i - k:i]
        q = pooled_distribution(window)
        p = reward_distribution(usable[i])
        comparisons.append(Comparison(usable[i].match_id, tuple(m.match_id for m in window), kl_divergence(p, q)))
    return ReproReport(team, k, tuple(comparisons))


def reproducibility_study(team_matrices: Mapping[str, Sequence[MatchReturnMatrix]],
                          k_range: Iterable[int] = range(1, 11)) -> ReproStudy:
    """Sliding-window reproducibility for every team and window length.

    Teams with too few usable matches for a window length are skipped for
    that length with a warning.
    """
    reports = []
    system_name = ""
    for team, matrices in team_matrices.items():
        if matrices:
            system_name = matrices[0].system.name
        n = sum(m.total > 0 for m in matrices)
        for k in k_range:
            if n <= k:
                log.warning("team %s: %d usable matches, skipping k=%d", team, n, k)
                continue
            reports.append(team_reproducibility(matrices, k))
    return ReproStudy(system_name, tuple(reports))


def repro_to_csv(study: ReproStudy) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["system", "team", "k", "target_match", "window", "kl", "is_infinite"])
    for r in study.reports:
        for c in r.comparisons:
            w.writerow([study.system_name, r.team_id, r.k, c.target_match, " ".join(c.window),
                        "inf" if c.is_infinite else repr(c.kl), int(c.is_infinite)])
    return buf.getvalue()


def repro_summary_to_csv(study: ReproStudy) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["system", "team", "k", "comparisons", "pct_non_infinity"])
    for r in study.reports:
        w.writerow([study.system_name, r.team_id, r.k, len(r.comparisons), repr(r.pct_non_infinity)])
    for k in study.ks():
        mean, sd = study.summary(k)
        w.writerow([study.system_name, "ALL_MEAN", k, "", repr(mean)])
        w.writerow([study.system_name, "ALL_SD", k, "", repr(sd)])
    return buf.getvalue()


def repro_to_json(study: ReproStudy) -> str:
    doc = {
        "system": study.system_name,
        "summary": [
            {"k": k, "mean_pct_non_infinity": study.summary(k)[0], "sd_pct_non_infinity": study.summary(k)[1]}
            for k in study.ks()
        ],
        "reports": [
            {
                "team": r.team_id,
                "k": r.k,
                "pct_non_infinity": r.pct_non_infinity,
                "comparisons": [
                    {"target_match": c.target_match, "window": list(c.window),
                     "kl": None if c.is_infinite else c.kl, "is_infinite": c.is_infinite}
                    for c in r.comparisons
                ],
            }
            for r in study.reports
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


@dataclass(frozen=True, eq=False)
class ZScoreProfile:
    """``z[i, s - 1]`` is team ``teams[i]``'s standardised reliance on zone ``s``.

    Zones where every team has the same share get z = 0 and are listed in
    ``flat_zones``.
    """

    teams: tuple[str, ...]
    system: ZoneSystem
    z: np.ndarray
    flat_zones: tuple[int, ...]

    def value(self, team: str, zone_id: int) -> float:
        return float(self.z[self.teams.index(team), zone_id - 1])

    @staticmethod
    def band(z: float) -> str:
        if z >= 2:
            return "very high"
        if z >= 1:
            return "high"
        if z <= -2:
            return "very low"
        if z <= -1:
            return "low"
        return "typical"


def zscore_profile(distributions: Mapping[str, RewardDistribution]) -> ZScoreProfile:
    if len(distributions) < 2:
        raise InsufficientTeams("z-scores need at least two teams")
    teams = tuple(distributions)
    first = distributions[teams[0]].system
    for d in distributions.values():
        if not _same_system(d.system, first):
            raise ContractViolation("team distributions are on different zone systems")
    p = np.stack([distributions[t].probs for t in teams])
    flat = np.ptp(p, axis=0) == 0
    mean = p.mean(axis=0)
    sd = p.std(axis=0, ddof=1)
    z = np.zeros_like(p)
    z[:, ~flat] = (p[:, ~flat] - mean[~flat]) / sd[~flat]
    return ZScoreProfile(teams, first, z, tuple(int(s) + 1 for s in np.flatnonzero(flat)))


def season_distributions(team_matrices: Mapping[str, Sequence[MatchReturnMatrix]]) -> dict[str, RewardDistribution]:
    """Whole-season pooled distribution per team."""
    return {team: pooled_distribution(list(ms)) for team, ms in team_matrices.items()}


def zscore_to_csv(profile: ZScoreProfile) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["team", "zone", "z", "band", "flat"])
    flat = set(profile.flat_zones)
    for i, team in enumerate(profile.teams):
        for s in profile.system.zone_ids():
            z = float(profile.z[i, s - 1])
            w.writerow([team, s, repr(z), ZScoreProfile.band(z), int(s in flat)])
    return buf.getvalue()


def zscore_to_json(profile: ZScoreProfile) -> str:
    doc = {
        "system": profile.system.name,
        "teams": list(profile.teams),
        "flat_zones": list(profile.flat_zones),
        "z": {team: [float(v) for v in profile.z[i]] for i, team in enumerate(profile.teams)},
    }
    return json.dumps(doc, indent=2) + "\n"
