"""Command-line front end.

Exit codes: 0 legal run or no profitable deviation, 1 configuration error
(or an enumeration too large to finish), 2 erroneous or aborted run,
3 profitable deviation found.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from . import bounds, plotting
from .engine import Verdict, derive_seed, run_seeded
from .engine.trace import to_plain, trace_records
from .errors import ConfigError, ExplosionCap, SybilEqError
from .protocols import REGISTRY
from .rationality import check_equilibrium
from .rationality.attack import default_h, run_attack
from .rationality.estimate import executions
from .rationality.utility import trace_utility
from .scenario import Scenario, load_scenario

OUT_ENV = "SYBILEQ_OUT"
DEFAULT_OUT = "sybileq-out"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ERRONEOUS = 2
EXIT_DEVIATION = 3


def _out_dir(args: argparse.Namespace, sub: str) -> Path:
    base = Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    path = base / sub
    path.mkdir(parents=True, exist_ok=True)
    return path


def _dump_json(obj: Any, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def _write_csv(rows: Sequence[Sequence[Any]], header: Sequence[str], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt(x: Any) -> str:
    return str(x) if isinstance(x, Fraction) else json.dumps(to_plain(x), ensure_ascii=False)


def _load(args: argparse.Namespace) -> Scenario:
    sc = load_scenario(args.scenario)
    if args.seed is not None:
        from dataclasses import replace

        sc = replace(sc, seed=args.seed)
    return sc


# run


def _run_seeded(sc: Scenario, trials: int, out: Path) -> int:
    p = sc.protocol()
    strategies = sc.strategies()
    summary: list[dict[str, Any]] = []
    code = EXIT_OK
    with open(out / "trace.jsonl", "w", encoding="utf-8") as fh:
        for i in range(trials):
            seed = sc.seed if trials == 1 else derive_seed(sc.seed, "trial", i)
            tr = run_seeded(sc.topology, p, strategies, seed, inputs=sc.inputs, preferences=sc.preferences, keep_memory=False)
            for rec in trace_records(tr):
                rec = {"trial": i, "seed": seed, **rec}
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
            row = {
                "trial": i,
                "seed": seed,
                "verdict": tr.verdict.value,
                "outputs": to_plain(tr.outputs),
                "messages": tr.message_count,
                "rounds": len(tr.rounds) - 1,
                "aborted": None if tr.aborted is None else tr.aborted.reason,
            }
            if tr.cheater is not None:
                row["cheater"] = tr.cheater
                row["cheater_utility"] = str(trace_utility(tr, tr.cheater, sc.preferences.get(tr.cheater)))
                row["strategy_log"] = to_plain(tr.strategy_log)
            summary.append(row)
            print(f"trial {i} seed {seed}: {tr.verdict.value}" + (f" (abort: {tr.aborted.reason})" if tr.aborted else ""))
            for a in sorted(tr.outputs):
                print(f"  {a}: {_fmt(tr.outputs[a])}")
            if tr.verdict is not Verdict.LEGAL:
                code = EXIT_ERRONEOUS
            if i == 0:
                plotting.messages_per_round(tr, out / "messages_per_round.png")
    _dump_json({"scenario": sc.name, "mode": "seeded", "trials": summary}, out / "summary.json")
    _write_csv(
        [(r["trial"], r["seed"], r["verdict"], r["messages"], r["rounds"], r.get("cheater_utility", "")) for r in summary],
        ("trial", "seed", "verdict", "messages", "rounds", "cheater_utility"),
        out / "summary.csv",
    )
    return code


def _run_enumerated(sc: Scenario, out: Path) -> int:
    setting = sc.setting()
    strategies = sc.strategies()
    cheater = sc.cheater.agent if sc.cheater else None
    pref = sc.preferences.get(cheater) if cheater is not None else None
    verdicts: dict[str, Fraction] = {}
    outcomes: dict[str, list[Fraction]] = {}
    eu = Fraction(0)
    branches = 0
    with open(out / "trace.jsonl", "w", encoding="utf-8") as fh:
        for pr, tr in executions(setting, strategies):
            for rec in trace_records(tr):
                rec = {"branch": branches, "probability": str(pr), **rec}
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
            branches += 1
            verdicts[tr.verdict.value] = verdicts.get(tr.verdict.value, Fraction(0)) + pr
            if cheater is not None:
                u = trace_utility(tr, cheater, pref)
                eu += pr * u
                key = str(tr.strategy_log.get("outcome", "none"))
                acc = outcomes.setdefault(key, [Fraction(0), Fraction(0)])
                acc[0] += pr
                acc[1] += pr * u
    summary: dict[str, Any] = {
        "scenario": sc.name,
        "mode": "enumerate",
        "branches": branches,
        "verdicts": {k: str(v) for k, v in sorted(verdicts.items())},
    }
    print(f"{branches} branches")
    for k, v in sorted(verdicts.items()):
        print(f"  {k}: {v}")
    rows = [("verdict", k, str(v), "") for k, v in sorted(verdicts.items())]
    if cheater is not None:
        summary["cheater"] = cheater
        summary["cheater_expected_utility"] = str(eu)
        summary["by_outcome"] = {
            k: {"probability": str(p), "cheater_utility": str(s / p) if p else None} for k, (p, s) in sorted(outcomes.items())
        }
        print(f"cheater {cheater} expected utility: {eu}")
        for k, (p, s) in sorted(outcomes.items()):
            print(f"  strategy outcome {k}: probability {p}, cheater utility {s / p if p else '-'}")
            rows.append(("outcome", k, str(p), str(s / p) if p else ""))
    _dump_json(summary, out / "summary.json")
    _write_csv(rows, ("kind", "name", "probability", "cheater_utility"), out / "summary.csv")
    dist = {f"verdict {k}": v for k, v in sorted(verdicts.items())}
    dist.update({f"strategy {k}": p for k, (p, _) in sorted(outcomes.items())})
    plotting.outcome_distribution(dist, out / "outcomes.png", f"{sc.name}: {branches} branches")
    return EXIT_OK if set(verdicts) <= {Verdict.LEGAL.value} else EXIT_ERRONEOUS


def cmd_run(args: argparse.Namespace) -> int:
    sc = _load(args)
    out = _out_dir(args, sc.name)
    if args.enumerate or (sc.enumerate and args.trials is None):
        return _run_enumerated(sc, out)
    return _run_seeded(sc, args.trials or sc.trials, out)


# check-equilibrium


def cmd_check_equilibrium(args: argparse.Namespace) -> int:
    sc = _load(args)
    eq = sc.equilibrium
    out = _out_dir(args, sc.name)
    agents = eq.agents or ((sc.cheater.agent,) if sc.cheater else None)
    mode = "exact" if args.enumerate else eq.mode
    samples = args.trials or eq.samples
    report = check_equilibrium(
        sc.setting(),
        sc.catalog(),
        agents,
        scenario=sc.name,
        mode=mode,
        own_inputs=eq.own_inputs,
        preference_values=eq.preference_values,
        samples=samples,
        seed=sc.seed,
        jobs=args.jobs,
        stop_at_first=eq.stop_at_first,
    )
    (out / "report.json").write_text(report.dumps() + "\n", encoding="utf-8")
    table = report.table()
    (out / "report.txt").write_text(table + "\n", encoding="utf-8")
    _write_csv(
        [(r.agent, r.label, _fmt(r.own_input), _fmt(r.preference), _num(r.honest), _num(r.deviating), _num(r.margin)) for r in report.results],
        ("agent", "deviation", "own_input", "preference", "honest", "deviating", "margin"),
        out / "deviations.csv",
    )
    if report.results:
        plotting.deviation_margins(report.results, out / "margins.png")
    print(table)
    if report.witness is not None:
        w = report.witness
        print(f"witness: agent {w.agent} gains {w.margin} with {w.label}")
        return EXIT_DEVIATION
    return EXIT_OK


def _num(x: Any) -> str:
    return str(x) if isinstance(x, Fraction) else repr(float(x))


# bounds-table


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _fractions(text: str) -> list[Fraction]:
    return [Fraction(x.strip()) for x in text.split(",") if x.strip()]


def cmd_bounds_table(args: argparse.Namespace) -> int:
    out = _out_dir(args, "bounds")
    if args.alpha_max < 3 or args.beta_max < 3:
        raise ConfigError("alpha-max and beta-max must be >= 3")
    reg = bounds.registry_rows(REGISTRY)
    _write_csv(reg, ("protocol", "problem", "bound"), out / "bounds.csv")
    md = ["| Bound | Problems |", "|---|---|"] + [f"| {b} | {p} |" for b, p in bounds.summary_rows()]
    (out / "summary.md").write_text("\n".join(md) + "\n", encoding="utf-8")
    grid = bounds.incentive_grid(range(3, args.alpha_max + 1), range(3, args.beta_max + 1), args.k, args.payoff)
    header = ("alpha", "beta", "k", "X", "d_star", "feasible", "payoff", "honest", "incentive", "classified_bound")
    _write_csv([[r[h] for h in header] for r in grid], header, out / "incentive_grid.csv")
    thresholds = []
    for a in range(3, args.alpha_max + 1):
        for k in args.k:
            for x in args.payoff:
                if Fraction(1, k) < x <= 1:
                    thresholds.append((a, k, str(x), bounds.ks_incentive_threshold(a, k, x, args.beta_max) or "", bounds.KS_BOUND(a)))
    _write_csv(thresholds, ("alpha", "k", "X", "first_beta_with_incentive", "classified_bound"), out / "thresholds.csv")
    if grid:
        plotting.incentive_grid(grid, out / "incentive.png")
    print("\n".join(md))
    print()
    print(f"{'protocol':<16} {'problem':<20} bound")
    for name, prob, b in reg:
        print(f"{name:<16} {prob:<20} {b}")
    print(f"\nincentive grid: {len(grid)} cells, {sum(r['incentive'] for r in grid)} with an incentive to duplicate")
    return EXIT_OK


# attack-demo


def cmd_attack_demo(args: argparse.Namespace) -> int:
    out = _out_dir(args, "attack-demo")
    if args.size < 2:
        raise ConfigError("--size must be >= 2")
    g, scheme = default_h(args.size)
    report = run_attack(g, scheme, k=args.k, preference=args.preference, own_input=args.own_input)
    _dump_json(report.to_json(), out / "attack.json")
    plotting.attack_summary(report, out / "attack.png")
    print(f"ring {sorted(g.nodes)}; cheater {scheme.cheater} emulates {list(scheme.virtual_ids)}")
    print(f"honest expected utility:    {report.honest_eu}")
    print(f"emulation expected utility: {report.attack_eu}  (margin {report.margin}, {report.branches} branches)")
    print(f"substitution fired with probability {report.substituted}")
    print(f"segment could compute the result strictly before the honest agents with probability {report.strictly_earlier}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sybileq", description="Simulate protocols among rational agents that may duplicate themselves.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for Monte Carlo estimates")
    sub = ap.add_subparsers(dest="command", required=True)

    def scenario_parser(name: str, help_: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("scenario", help="scenario TOML file")
        sp.add_argument("--seed", type=int, help="override the scenario seed")
        sp.add_argument("--trials", type=int, help="seeded trials (run) or Monte Carlo samples (check-equilibrium)")
        sp.add_argument("--enumerate", action="store_true", help="enumerate every randomness branch exactly")
        return sp

    scenario_parser("run", "execute a scenario").set_defaults(func=cmd_run)
    scenario_parser("check-equilibrium", "search the deviation catalog for a profitable deviation").set_defaults(func=cmd_check_equilibrium)

    bp = sub.add_parser("bounds-table", parents=[common], help="bound classes and the duplication incentive grid")
    bp.add_argument("--alpha-max", type=int, default=12)
    bp.add_argument("--beta-max", type=int, default=24)
    bp.add_argument("--k", type=_ints, default=[2, 3, 4, 10], help="comma-separated output-space sizes")
    bp.add_argument("--payoff", type=_fractions, default=[Fraction(1, 2), Fraction(1)], help="comma-separated success payoffs")
    bp.set_defaults(func=cmd_bounds_table)

    dp = sub.add_parser("attack-demo", parents=[common], help="segment emulation against knowledge sharing")
    dp.add_argument("--size", type=int, default=3, help="number of honest agents in the original ring")
    dp.add_argument("--k", type=int, default=4)
    dp.add_argument("--preference", type=int, default=0)
    dp.add_argument("--own-input", type=int, default=0)
    dp.add_argument("--seed", type=int, help="unused: the demo enumerates exactly")
    dp.add_argument("--trials", type=int, help="unused: the demo enumerates exactly")
    dp.add_argument("--enumerate", action="store_true", help="always on for the demo")
    dp.set_defaults(func=cmd_attack_demo)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ExplosionCap as e:
        print(f"error: {e}", file=sys.stderr)
        print("hint: shrink the ring, lower field_size or k, narrow [equilibrium] families/max_d, or use mode = \"monte-carlo\"", file=sys.stderr)
        return EXIT_CONFIG
    except SybilEqError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
