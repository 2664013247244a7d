"""Command-line front end: ``run``, ``params`` and ``replay``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import binomial
from .simnet import (Scenario, ScenarioError, check_consistency, claim3_violations,
                     run_scenario, scenario_from_dict, summary)

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


def parse_seeds(text: str) -> list[int]:
    """``7``, ``1..50`` (inclusive) or a comma list of either."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            a, b = int(lo), int(hi)
            if b < a:
                raise ValueError(f"empty seed range {part!r}")
            seeds.extend(range(a, b + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise ValueError("no seeds given")
    return seeds


def load_config(path) -> Scenario:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    return scenario_from_dict(data)


def scenario_from_record(rec: dict) -> Scenario:
    data = {k: v for k, v in rec["scenario"].items() if v is not None}
    return scenario_from_dict(data)


def write_run(result, out: Path) -> tuple[Path, Path]:
    sc = result.scenario
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{sc.name}-seed{sc.seed}"
    trace_path = out / f"{stem}.trace.jsonl"
    trace_path.write_text(result.trace.dump())
    m = result.metrics
    ok, problems = check_consistency(m)
    summ = summary(m)
    summ["problems_detail"] = problems[:20]
    summ["claim3_violations"] = len(claim3_violations(m))
    summ["scenario"] = sc.name
    summ_path = out / f"{stem}.summary.json"
    summ_path.write_text(json.dumps(summ, indent=2, sort_keys=True) + "\n")
    return trace_path, summ_path


def cmd_run(args) -> int:
    try:
        base = load_config(args.config)
    except (ScenarioError, tomllib.TOMLDecodeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.seeds:
            seeds = parse_seeds(args.seeds)
        elif args.seed is not None:
            seeds = [args.seed]
        else:
            seeds = [base.seed]
    except ValueError as exc:
        print(f"bad seeds: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out)
    worst = EXIT_OK
    print(f"{'seed':>6} {'ticks':>6} {'epoch':>5} {'blocks':>6} {'claim3':>6}  consistency")
    for seed in seeds:
        sc = base.with_(seed=seed)
        if args.horizon is not None:
            sc = sc.with_(horizon=args.horizon)
        result = run_scenario(sc)
        write_run(result, out)
        m = result.metrics
        ok, _ = check_consistency(m)
        c3 = len(claim3_violations(m))
        blocks = min(m.final_blocks.values(), default=0)
        print(f"{seed:>6} {m.ticks:>6} {max(m.max_epoch, default=0):>5} {blocks:>6} "
              f"{c3:>6}  {'ok' if ok else 'VIOLATED'}")
        if not ok:
            worst = EXIT_VIOLATION
    verdict = "all consistent" if worst == EXIT_OK else "consistency violated"
    print(f"{len(seeds)} run(s): {verdict}; artifacts in {out}")
    return worst


def cmd_params(args) -> int:
    report = binomial.param_safety_report(k=args.k, alpha3=args.a3, f_frac=args.f,
                                          gamma=args.gamma)
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(binomial.format_report(report))
    return EXIT_OK if report["ok"] else EXIT_VIOLATION


def cmd_replay(args) -> int:
    path = Path(args.trace)
    try:
        lines = path.read_text().splitlines()
        head = json.loads(lines[0])
        sc = scenario_from_record(head)
    except (OSError, IndexError, KeyError, ValueError) as exc:
        print(f"cannot read scenario from {path}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    fresh = list(run_scenario(sc).trace.lines())
    for i, (a, b) in enumerate(zip(lines, fresh)):
        if a != b:
            print(f"traces differ at record {i}:\n- {a}\n+ {b}")
            return EXIT_VIOLATION
    if len(lines) != len(fresh):
        print(f"traces differ in length: {len(lines)} vs {len(fresh)}")
        return EXIT_VIOLATION
    print(f"replay identical: {len(fresh)} records")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="frosty", description="Epoch-alternating consensus simulator.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    run = sub.add_parser("run", help="run a scenario file for one or more seeds")
    run.add_argument("--config", required=True, help="TOML scenario file")
    group = run.add_mutually_exclusive_group()
    group.add_argument("--seed", type=int)
    group.add_argument("--seeds", help="e.g. 1..50 or 1,4,9")
    run.add_argument("--horizon", type=int)
    run.add_argument("--out", default="out", help="directory for traces and summaries")
    run.set_defaults(func=cmd_run)

    par = sub.add_parser("params", help="binomial safety report for a parameter set")
    par.add_argument("--k", type=int, default=80)
    par.add_argument("--a3", type=int, default=48)
    par.add_argument("--f", default="0.2", help="Byzantine fraction, e.g. 0.2 or 1/5")
    par.add_argument("--gamma", type=int, default=300)
    par.add_argument("--json", action="store_true")
    par.set_defaults(func=cmd_params)

    rep = sub.add_parser("replay", help="re-run a trace's scenario and diff the result")
    rep.add_argument("trace")
    rep.set_defaults(func=cmd_replay)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
