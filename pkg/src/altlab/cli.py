"""Command-line entry points.

Exit codes: 0 success, 2 usage or configuration error, 3 unreadable or
insufficient data, 4 sweep finished with some runs failed.  The
``ALTLAB_OUT`` environment variable overrides the default output root.
"""

from __future__ import annotations

import argparse
import csv
import os
import statistics
import sys
from pathlib import Path

from . import analysis, harness
from .errors import ComparisonError, ConfigError, DataError, FitError
from .game import GameConfig, RewardScheme, StateType
from .metrics import VARIANTS, compute_panel

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_PARTIAL = 4


def _default_out(fallback: str = "runs") -> str:
    return os.environ.get("ALTLAB_OUT", fallback)


def _game_from_args(args) -> GameConfig:
    return GameConfig(
        n_agents=args.agents,
        state_type=StateType(args.state_type),
        reward_scheme=RewardScheme(args.reward),
        path_length=args.path_length,
        r_high=args.r_high,
        step_cap=args.step_cap,
    )


def _print_panel(panel) -> None:
    for name, value in panel.as_dict().items():
        print(f"{name}: {'undefined' if value is None else value}")


def _add_game_flags(sub, with_policy: bool) -> None:
    sub.add_argument("--agents", type=int, required=True, help="number of agents (>= 2)")
    if with_policy:
        sub.add_argument(
            "--policy", choices=("random", "qlearning"), default="qlearning"
        )
    sub.add_argument("--state-type", choices=("A", "B"), default="A")
    sub.add_argument("--reward", choices=("ilf", "iqf"), default="ilf")
    sub.add_argument("--episodes", type=int, default=None)
    sub.add_argument("--base", type=int, default=1000, help="episode budget at n=2")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--run-id", default=None)
    sub.add_argument("--out", default=None, help="runs directory (default: $ALTLAB_OUT or runs)")
    sub.add_argument("--overwrite", action="store_true")
    sub.add_argument("--path-length", type=int, default=2)
    sub.add_argument("--r-high", type=float, default=100.0)
    sub.add_argument("--step-cap", type=int, default=1000)


def _run_single(args, policy: str) -> int:
    game = _game_from_args(args)
    if args.episodes is not None:
        episodes = args.episodes
    elif policy == "qlearning":
        episodes = analysis.episodes_for(args.agents, analysis.ScalingConfig(args.base))
    else:
        episodes = 10_000
    prefix = "ql" if policy == "qlearning" else "rand"
    run_id = args.run_id or (
        f"{prefix}-n{args.agents}-{args.state_type}-{args.reward}-seed{args.seed}"
    )
    spec = harness.ExperimentSpec(
        game=game, policy=policy, episodes=episodes, seed=args.seed, run_id=run_id
    )
    runs_root = Path(args.out or _default_out())
    if policy == "qlearning":
        result = harness.run_training(spec, runs_root, overwrite=args.overwrite)
    else:
        result = harness.run_baseline(spec, runs_root, overwrite=args.overwrite)
    print(f"run: {result.run_dir}")
    _print_panel(result.panel)
    if result.greedy_panel is not None:
        print(f"greedy_eval_calt: {result.greedy_panel.calt}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    return _run_single(args, args.policy)


def cmd_baseline(args) -> int:
    return _run_single(args, "random")


def cmd_metrics(args) -> int:
    outcomes = harness.read_episode_log(Path(args.log))
    panel = compute_panel(outcomes, args.agents, args.r_high)
    _print_panel(panel)
    if args.csv:
        harness.write_panel_csv([("full", panel)], Path(args.csv))
        print(f"wrote {args.csv}")
    return EXIT_OK


def _int_list(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("expected at least one value")
    return values


def cmd_sweep(args) -> int:
    state_types = [StateType(s) for s in args.state_types.split(",") if s]
    schemes = [RewardScheme(s) for s in args.rewards.split(",") if s]
    result = harness.sweep(
        out_root=Path(args.out or _default_out("sweep")),
        agent_counts=args.agents,
        state_types=state_types,
        reward_schemes=schemes,
        base=args.base,
        baseline_episodes=args.baseline_episodes,
        seed_root=args.seed_root,
        seeds=args.seeds,
        workers=args.workers,
        reuse_baselines=not args.no_reuse_baselines,
        overwrite=args.overwrite,
    )
    print(f"completed {len(result.results)} runs, {len(result.failures)} failures")
    if result.summary_path is not None:
        print(f"summary: {result.summary_path}")
    for run_id, _ in result.failures:
        print(f"failed: {run_id} (see failures.txt)", file=sys.stderr)
    return EXIT_PARTIAL if result.failures else EXIT_OK


def cmd_analyze(args) -> int:
    if args.fit is not None:
        fit = analysis.fit_alt_ratio_regression(args.fit, (args.n_min, args.n_max))
        print(
            f"{fit.variant}: ratio = {fit.scale:.6g} * value^{fit.exponent:.6g} "
            f"(max fit error {fit.max_fit_error:.3g})"
        )
        if args.save:
            Path(args.save).write_text(fit.to_json() + "\n", encoding="utf-8")
            print(f"wrote {args.save}")
        return EXIT_OK
    if args.observed is None or args.random is None:
        raise ConfigError("analyze needs either --fit or both --observed and --random")
    record = analysis.compare(args.variant, args.observed, args.random, args.perfect)
    print(f"relative_change_pct: {record.rel_change_pct}")
    print(f"coordination_score_pct: {record.coord_score_pct}")
    if args.variant == "calt":
        ratio = analysis.alt_ratio_from_calt(args.observed)
        print(f"alt_ratio: {ratio}")
        if args.agents is not None:
            pa = analysis.pa_equivalent(ratio, args.agents)
            print(f"pa_equiv_agents: {pa.pa_equiv_agents}")
            print(f"pct_of_perfect: {pa.pct_of_perfect}")
    return EXIT_OK


def _mean(values) -> float | None:
    values = [v for v in values if v is not None]
    return statistics.fmean(values) if values else None


def _pstdev(values) -> float | None:
    values = [v for v in values if v is not None]
    if not values:
        return None
    return statistics.pstdev(values) if len(values) > 1 else 0.0


def _opt(row: dict, column: str) -> float | None:
    text = row[column]
    return None if text == "" else float(text)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if v is None else v for v in row])
    print(f"wrote {path}")


def _report_tables(summary: list[dict], out_dir: Path, sweep_root: Path) -> None:
    baselines = [r for r in summary if r["policy"] == "random"]
    trained = [r for r in summary if r["policy"] == "qlearning"]
    ns = sorted({int(r["n"]) for r in summary})

    rows = []
    for n in ns:
        group = [r for r in baselines if int(r["n"]) == n]
        if not group:
            continue
        rows.append(
            [
                n,
                _mean(_opt(r, "calt") for r in group),
                _mean(_opt(r, "falt") for r in group),
                _mean(_opt(r, "ealt") for r in group),
                _mean(_opt(r, "efficiency") for r in group if r["reward_scheme"] == "ilf"),
                _mean(_opt(r, "efficiency") for r in group if r["reward_scheme"] == "iqf"),
                _mean(_opt(r, "fairness") for r in group),
            ]
        )
    _write_csv(
        out_dir / "table2.csv",
        ("n", "calt", "falt", "ealt", "efficiency_ilf", "efficiency_iqf", "fairness"),
        rows,
    )

    rows = []
    for n in ns:
        ql = [r for r in trained if int(r["n"]) == n]
        rand = [r for r in baselines if int(r["n"]) == n]
        for metric in ("calt", "ealt", "aalt", "falt"):
            q = _mean(_opt(r, metric) for r in ql)
            b = _mean(_opt(r, metric) for r in rand)
            status = ""
            rel = coord = None
            if q is None:
                status = "missing_run"
            elif b is None:
                status = "missing_baseline"
            else:
                try:
                    rel = analysis.relative_change(q, b)
                    coord = analysis.coordination_score(q, b)
                except ComparisonError:
                    status = "degenerate_baseline"
            rows.append([n, metric, q, b, rel, coord, status])
    _write_csv(
        out_dir / "table3.csv",
        ("n", "metric", "qlearning", "random", "rel_change_pct", "coord_score_pct", "status"),
        rows,
    )

    rows = []
    for n in ns:
        for scheme in ("ilf", "iqf"):
            group = [
                r
                for r in trained
                if int(r["n"]) == n and r["reward_scheme"] == scheme and r["state_type"] == "B"
            ]
            status = ""
            if not group:
                group = [
                    r for r in trained if int(r["n"]) == n and r["reward_scheme"] == scheme
                ]
                status = "no_type_b"
            if not group:
                continue
            calt = _mean(_opt(r, "calt") for r in group)
            ratio = analysis.alt_ratio_from_calt(calt)
            pa = analysis.pa_equivalent(ratio, n)
            rows.append(
                [n, scheme, calt, pa.alt_ratio, pa.pa_equiv_agents, pa.pct_of_perfect, status]
            )
    _write_csv(
        out_dir / "table5.csv",
        ("n", "reward_scheme", "calt", "alt_ratio", "pa_equiv_agents", "pct_of_perfect", "status"),
        rows,
    )

    rows = []
    for n in ns:
        ql = [_opt(r, "calt") for r in trained if int(r["n"]) == n]
        rand = [_opt(r, "calt") for r in baselines if int(r["n"]) == n]
        rows.append([n, _mean(ql), _pstdev(ql), _mean(rand), _pstdev(rand)])
    _write_csv(
        out_dir / "fig1.csv",
        ("n", "calt_qlearning_mean", "calt_qlearning_std", "calt_random_mean", "calt_random_std"),
        rows,
    )

    rows = []
    for n in ns:
        ql = [100.0 * _opt(r, "alt_ratio") for r in trained if int(r["n"]) == n]
        rand = [100.0 * _opt(r, "alt_ratio") for r in baselines if int(r["n"]) == n]
        rows.append(
            [
                n,
                _mean(ql),
                min(ql, default=None),
                max(ql, default=None),
                _mean(rand),
                min(rand, default=None),
                max(rand, default=None),
            ]
        )
    _write_csv(
        out_dir / "fig2.csv",
        (
            "n",
            "pct_of_perfect_qlearning_mean",
            "pct_of_perfect_qlearning_min",
            "pct_of_perfect_qlearning_max",
            "pct_of_perfect_random_mean",
            "pct_of_perfect_random_min",
            "pct_of_perfect_random_max",
        ),
        rows,
    )

    rows = []
    for n in ns:
        for policy, group_all in (("qlearning", trained), ("random", baselines)):
            group = [r for r in group_all if int(r["n"]) == n]
            if not group:
                continue
            rows.append(
                [
                    n,
                    policy,
                    _mean(_opt(r, "efficiency") for r in group),
                    _mean(_opt(r, "reward_fairness") for r in group),
                    _mean(_opt(r, "calt") for r in group),
                ]
            )
    _write_csv(
        out_dir / "fig3.csv",
        ("n", "policy", "efficiency_mean", "reward_fairness_mean", "calt_mean"),
        rows,
    )

    curve_rows = []
    candidates = sorted(
        (r for r in trained if (sweep_root / "runs" / r["run_id"] / "curve.csv").exists()),
        key=lambda r: (int(r["n"]), r["state_type"] != "A", r["reward_scheme"] != "ilf", r["run_id"]),
    )
    if candidates:
        source = sweep_root / "runs" / candidates[0]["run_id"] / "curve.csv"
        for point in harness.read_curve_csv(source):
            curve_rows.append(
                [point.episode, point.epsilon, point.windowed_calt, point.windowed_efficiency]
            )
    else:
        print("gap: no training run with a curve, fig5.csv is header-only")
    _write_csv(out_dir / "fig5.csv", harness.CURVE_COLUMNS, curve_rows)


def cmd_report(args) -> int:
    sweep_root = Path(args.sweep_dir)
    summary = harness.read_summary(sweep_root / "summary.csv")
    out_dir = Path(args.out) if args.out else sweep_root / "report"
    out_dir.mkdir(parents=True, exist_ok=True)
    _report_tables(summary, out_dir, sweep_root)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="altlab",
        description="Simulate the episodic race game, score alternation, and reproduce "
        "the experiment grid.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("simulate", help="run one game (random or q-learning)")
    _add_game_flags(sub, with_policy=True)
    sub.set_defaults(func=cmd_simulate)

    sub = subs.add_parser("baseline", help="run one random-policy game")
    _add_game_flags(sub, with_policy=False)
    sub.set_defaults(func=cmd_baseline)

    sub = subs.add_parser("metrics", help="score an existing episode log")
    sub.add_argument("--log", required=True)
    sub.add_argument("--agents", type=int, required=True)
    sub.add_argument("--r-high", type=float, default=100.0)
    sub.add_argument("--csv", default=None, help="also write the panel as CSV")
    sub.set_defaults(func=cmd_metrics)

    sub = subs.add_parser("sweep", help="run the full experiment grid")
    sub.add_argument("--out", default=None)
    sub.add_argument("--agents", type=_int_list, default=[2, 3, 5, 8, 10])
    sub.add_argument("--state-types", default="A,B")
    sub.add_argument("--rewards", default="ilf,iqf")
    sub.add_argument("--base", type=int, default=1000)
    sub.add_argument("--baseline-episodes", type=int, default=10_000)
    sub.add_argument("--seed-root", type=int, default=0)
    sub.add_argument("--seeds", type=int, default=1)
    sub.add_argument("--workers", type=int, default=1)
    sub.add_argument("--no-reuse-baselines", action="store_true")
    sub.add_argument("--overwrite", action="store_true")
    sub.set_defaults(func=cmd_sweep)

    sub = subs.add_parser("analyze", help="compare scores or fit the ratio mapping")
    sub.add_argument("--observed", type=float, default=None)
    sub.add_argument("--random", type=float, default=None)
    sub.add_argument("--perfect", type=float, default=1.0)
    sub.add_argument("--variant", choices=VARIANTS, default="calt")
    sub.add_argument("--agents", type=int, default=None)
    sub.add_argument("--fit", choices=VARIANTS, default=None)
    sub.add_argument("--n-min", type=int, default=2)
    sub.add_argument("--n-max", type=int, default=10)
    sub.add_argument("--save", default=None)
    sub.set_defaults(func=cmd_analyze)

    sub = subs.add_parser("report", help="build summary tables and figure data")
    sub.add_argument("--sweep-dir", required=True)
    sub.add_argument("--out", default=None)
    sub.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ComparisonError, FitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
