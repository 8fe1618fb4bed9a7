"""Command-line interface.

Exit codes: 0 success, 1 analysis error, 2 input error.

Files:
  events CSV   match_id,team_id,set_number,play_number,x,y,action,outcome
               (optional direction, period columns)
  play store   possession,match_id,team_id,play,x,y,terminal,reward
               written by ``ingest``, read by every other command
  model JSON   {"system": {...}, "gamma": g, "zones": [{"id", "bounds", "epv", "visits"}]}
  system JSON  {"kind": "grid", "cell_length_m", "column_edges", "row_edges", "zones": [{"id", "bounds"}]}
               {"kind": "aggregated", "base_cell_length_m": 5,
                "zones": [{"id", "members", "full_width", "bounds"}], "column_groups", "row_groups"}
  repro CSV    system,team,k,target_match,window,kl,is_infinite
  z-score CSV  team,zone,z,band,flat
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import aggregation, analysis, synth
from .errors import AnalysisError, InputError, ParseError
from .events import normalize, parse_events
from .geometry import ZoneSystem, build_grid, system_from_dict
from .possessions import read_play_store, segment, write_play_store
from .svg import pitch_heatmap, zscore_heatmap
from .valuation import EPVModel, ValuationConfig, estimate_epv, season_returns

log = logging.getLogger("rlepv")


def _write(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _load_system(spec: str) -> ZoneSystem:
    if spec in ("5", "10"):
        return build_grid(int(spec))
    try:
        doc = json.loads(Path(spec).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{spec}: invalid JSON ({exc})") from None
    return system_from_dict(doc)


def _parse_k(text: str) -> list[int]:
    try:
        if ".." in text:
            lo, hi = text.split("..")
            ks = list(range(int(lo), int(hi) + 1))
        else:
            ks = [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad k range {text!r}; use e.g. 1..10 or 1,6") from None
    if not ks or min(ks) < 1:
        raise argparse.ArgumentTypeError("k values must be >= 1")
    return ks


def cmd_synth(args) -> int:
    maker = synth.PRESETS[args.preset]
    overrides = {}
    for name in ("n_teams", "n_matches_per_team", "possessions_per_match"):
        if getattr(args, name) is not None:
            overrides[name] = getattr(args, name)
    season = synth.generate_season(maker(seed=args.seed, **overrides))
    _write(args.events, season.events_csv())
    if args.truth:
        _write(args.truth, season.truth_json())
    print(f"{season.table.n_plays} plays, {season.possession_count} possessions", file=sys.stderr)
    return 0


def cmd_ingest(args) -> int:
    events = parse_events(args.events)
    plays = normalize(events, args.orient)
    possessions = segment(plays)
    write_play_store(possessions, args.out)
    matches = len({p.match_id for p in possessions})
    print(f"{len(events)} plays, {len(possessions)} possessions, {matches} matches")
    return 0


def cmd_epv(args) -> int:
    table = read_play_store(args.plays)
    config = ValuationConfig(args.gamma)
    kind = args.grid[0]
    if kind in ("5", "10") and len(args.grid) == 1:
        model = estimate_epv(table, build_grid(int(kind)), config, args.play_index)
    elif kind == "agg" and len(args.grid) == 2:
        system = _load_system(args.grid[1])
        if not isinstance(system, aggregation.AggregatedZoneSystem):
            raise InputError(f"{args.grid[1]} is not an aggregated zone system")
        base = estimate_epv(table, system.base, config, args.play_index)
        model = aggregation.aggregated_values(base, system)
    else:
        raise InputError("--grid takes 5, 10 or 'agg FILE'")
    _write(args.out, model.to_json())
    return 0


def cmd_aggregate(args) -> int:
    table = read_play_store(args.plays)
    matrices = season_returns(table, build_grid(5), ValuationConfig(args.gamma))
    system = aggregation.build_aggregated_system(
        matrices,
        aggregation.MinimalEffectConfig(args.threshold, args.alpha),
        aggregation.FullWidthRule(args.min_play_share, tuple(args.full_width_row or ())),
        fold=not args.no_fold,
    )
    _write(args.out, json.dumps(system.to_dict(), indent=2) + "\n")
    print(
        f"{system.zone_count} zones: {len(system.column_groups)} column groups, "
        f"{len(system.row_groups)} row groups, {sum(system.full_width)} full-width",
        file=sys.stderr,
    )
    return 0


def cmd_repro(args) -> int:
    table = read_play_store(args.plays)
    system = _load_system(args.system)
    matrices = season_returns(table, system, ValuationConfig(args.gamma))
    study = analysis.reproducibility_study(analysis.by_team(matrices), args.k)
    _write(args.out, analysis.repro_to_json(study) if args.json else analysis.repro_to_csv(study))
    if args.summary:
        _write(args.summary, analysis.repro_summary_to_csv(study))
    for k in study.ks():
        mean, sd = study.summary(k)
        print(f"k={k}: {mean:.1f} +/- {sd:.1f}% non-infinity", file=sys.stderr)
    return 0


def cmd_zscore(args) -> int:
    table = read_play_store(args.plays)
    system = _load_system(args.system)
    matrices = season_returns(table, system, ValuationConfig(args.gamma))
    profile = analysis.zscore_profile(analysis.season_distributions(analysis.by_team(matrices)))
    _write(args.out, analysis.zscore_to_json(profile) if args.json else analysis.zscore_to_csv(profile))
    if args.svg:
        _write(args.svg, zscore_heatmap(profile.teams, list(system.zone_ids()), profile.z, f"z-scores ({system.name})"))
    return 0


def cmd_heatmap(args) -> int:
    try:
        doc = json.loads(Path(args.model).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{args.model}: invalid JSON ({exc})") from None
    if "zones" in doc and "system" in doc:
        EPVModel.from_dict(doc)  # validates the document
    _write(args.out, pitch_heatmap(doc, args.title))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rlepv", description="Expected possession value models for rugby league.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic season with ground truth")
    s.add_argument("--preset", choices=sorted(synth.PRESETS), default="default")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--teams", dest="n_teams", type=int)
    s.add_argument("--matches", dest="n_matches_per_team", type=int, help="matches per team")
    s.add_argument("--possessions", dest="possessions_per_match", type=int, help="possessions per team per match")
    s.add_argument("--events", default="-", help="events CSV output (default stdout)")
    s.add_argument("--truth", help="ground-truth JSON output")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("ingest", help="validate events and write a play store")
    s.add_argument("--events", required=True)
    s.add_argument("--orient", choices=("attacking-frame", "raw"), default="attacking-frame")
    s.add_argument("--out", required=True, help="play store CSV")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("epv", help="estimate an EPV model")
    s.add_argument("--plays", required=True)
    s.add_argument("--grid", nargs="+", default=["5"], metavar="5|10|agg FILE")
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--play-index", type=int, help="only visits at this play of the possession")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_epv)

    s = sub.add_parser("aggregate", help="build the aggregated zone system")
    s.add_argument("--plays", required=True)
    s.add_argument("--threshold", type=float, default=1.0, help="smallest effect of interest (match-return units)")
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--min-play-share", type=float, default=0.05, help="rows below this share of plays stay full width")
    s.add_argument("--full-width-row", type=int, action="append", help="force a merged row group (1-based) full width")
    s.add_argument("--no-fold", action="store_true", help="do not fold mirrored columns")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_aggregate)

    s = sub.add_parser("repro", help="KL reproducibility over windows of previous matches")
    s.add_argument("--plays", required=True)
    s.add_argument("--system", required=True, help="5, 10, or a system/model JSON")
    s.add_argument("--k", type=_parse_k, default=list(range(1, 11)), help="window lengths, e.g. 1..10")
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--json", action="store_true", help="write JSON instead of CSV")
    s.add_argument("--summary", help="per-team and league summary CSV")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_repro)

    s = sub.add_parser("zscore", help="team zone-dependence z-scores")
    s.add_argument("--plays", required=True)
    s.add_argument("--system", required=True, help="5, 10, or a system/model JSON")
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--json", action="store_true")
    s.add_argument("--svg", help="heatmap output")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_zscore)

    s = sub.add_parser("heatmap", help="draw a model as an SVG pitch heatmap")
    s.add_argument("--model", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--title")
    s.set_defaults(func=cmd_heatmap)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AnalysisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
