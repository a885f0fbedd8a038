"""Command line entry points.

  intenttrack run --config cfg.json --seeds 0..9 --out results/
  intenttrack bench --variants coex,coop,hit --reps 30 [--out results/]
  intenttrack serve --port 8765 [--config cfg.json]
  intenttrack accuracy --log results/trial_0003.jsonl
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ScenarioConfig, VARIANT_ALIASES, default_config
from .errors import ConfigError
from .metrics import (
    compute_metrics,
    format_summary_table,
    frame_accuracy,
    summaries_to_csv,
    summarize,
    trials_to_csv,
)
from .runner import run_batch, run_trial
from .triallog import read_log, write_log


def _parse_seeds(text: str) -> list[int]:
    if ".." in text:
        lo, _, hi = text.partition("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in text.split(",") if s]


def _load_config(path: str | None, variant: str | None = None) -> ScenarioConfig:
    if path is None:
        return default_config(variant or "hit")
    cfg = ScenarioConfig.load(path)
    if variant is not None:
        cfg = cfg.replace(variant=VARIANT_ALIASES[variant]).validate()
    return cfg


def cmd_run(args) -> int:
    cfg = _load_config(args.config)
    seeds = _parse_seeds(args.seeds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for seed in seeds:
        trial_cfg = cfg.replace(seed=seed).validate()
        log = run_trial(trial_cfg)
        write_log(log, out / f"trial_{seed:04d}.jsonl")
        rows.append(compute_metrics(log))
        status = "complete" if log.completed else "capped"
        print(f"seed {seed}: {status} in {log.duration:.2f} s")
    csv_text = trials_to_csv(cfg.variant, rows, seeds)
    (out / "metrics.csv").write_text(csv_text)
    summary = summarize(cfg.variant, rows)
    print(format_summary_table([summary]))
    return 0


def cmd_bench(args) -> int:
    variants = []
    for token in args.variants.split(","):
        token = token.strip()
        if token not in VARIANT_ALIASES:
            print(f"unknown variant {token!r}", file=sys.stderr)
            return 2
        variants.append(VARIANT_ALIASES[token])
    base = _load_config(args.config)
    results = run_batch(variants, args.reps, base=base, seed0=args.seed0)
    summaries = [summarize(v, rows) for v, (_, rows) in results.items()]
    csv_text = summaries_to_csv(summaries)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "ablation.csv").write_text(csv_text)
        for variant, (seeds, rows) in results.items():
            (out / f"trials_{variant}.csv").write_text(trials_to_csv(variant, rows, seeds))
    print(format_summary_table(summaries))
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    cfg = _load_config(args.config)
    print(f"serving live sessions on ws://127.0.0.1:{args.port} (ctrl-c to stop)")
    serve(cfg, args.port)
    return 0


def cmd_accuracy(args) -> int:
    log = read_log(args.log)
    low, high = frame_accuracy(log)
    fmt = lambda v: "N/A" if v is None else f"{100 * v:.1f}%"
    print(f"task-level frame accuracy:        {fmt(low)}")
    print(f"interactive-level frame accuracy: {fmt(high)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="intenttrack", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run trials over a seed range")
    run_p.add_argument("--config", required=True, help="scenario config JSON")
    run_p.add_argument("--seeds", default="0..0", help="range a..b or comma list")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.set_defaults(func=cmd_run)

    bench_p = sub.add_parser("bench", help="ablation benchmark across variants")
    bench_p.add_argument("--variants", default="coex,coop,hit")
    bench_p.add_argument("--reps", type=int, default=30)
    bench_p.add_argument("--seed0", type=int, default=0)
    bench_p.add_argument("--config", default=None)
    bench_p.add_argument("--out", default=None)
    bench_p.set_defaults(func=cmd_bench)

    serve_p = sub.add_parser("serve", help="live session WebSocket service")
    serve_p.add_argument("--port", type=int, required=True)
    serve_p.add_argument("--config", default=None)
    serve_p.set_defaults(func=cmd_serve)

    acc_p = sub.add_parser("accuracy", help="frame accuracy of a trial log")
    acc_p.add_argument("--log", required=True)
    acc_p.set_defaults(func=cmd_accuracy)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
