"""Command line front end.

Subcommands:
  train     one learning run on one drop; writes trace.csv
  sweep     drop-averaged user sweep over methods; writes throughput.csv, summary.csv
  baseline  a non-learning policy across drops; writes throughput.csv, summary.csv
  oracle    exhaustive optimum on one (tiny) drop

Exit codes: 0 success, 1 configuration problem, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import dqn, tabular
from .baselines import brute_force_optimum
from .experiments import (
    ConfigError,
    ExperimentConfig,
    fast_profile,
    load_config,
    parse_overrides,
    policy_stream,
    run_drop,
    run_scenario,
    run_sweep,
    summarize,
    topology_for_drop,
    write_summary_csv,
    write_throughput_csv,
    write_trace_csv,
)

__all__ = ["main", "build_parser"]


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems through ConfigError (exit code 1)."""

    def error(self, message):
        raise ConfigError(message)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="key=value config file")
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config field (repeatable), e.g. --set network.k_max=2",
    )
    p.add_argument(
        "--fast",
        action="store_true",
        help="reduced profile: 10 drops, short hot training schedule",
    )
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--out", default="results", metavar="DIR", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="udnsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train one method on one drop")
    _add_common(p_train)
    p_train.add_argument("--method", choices=("madqn", "tabular"), default="madqn")
    p_train.add_argument("--drop", type=int, default=0, help="drop index (default 0)")
    p_train.add_argument("--users", type=int, help="number of users")
    p_train.add_argument("--aps", type=int, help="number of access points")
    p_train.add_argument(
        "--checkpoint", metavar="FILE", help="save trained networks (madqn only)"
    )
    p_train.set_defaults(handler=_cmd_train)

    p_sweep = sub.add_parser("sweep", help="user sweep averaged over drops")
    _add_common(p_sweep)
    p_sweep.add_argument("--methods", help="comma-separated methods (default from config)")
    p_sweep.add_argument("--drops", type=int, help="drops per scenario")
    p_sweep.add_argument("--workers", type=int, default=1, help="worker processes")
    p_sweep.set_defaults(handler=_cmd_sweep)

    p_base = sub.add_parser("baseline", help="run a non-learning policy across drops")
    _add_common(p_base)
    p_base.add_argument(
        "--method", choices=("max_rsrp", "random", "brute_force"), default="max_rsrp"
    )
    p_base.add_argument("--drops", type=int, help="number of drops")
    p_base.add_argument("--users", type=int, help="number of users")
    p_base.add_argument("--aps", type=int, help="number of access points")
    p_base.set_defaults(handler=_cmd_baseline)

    p_oracle = sub.add_parser(
        "oracle", help="exhaustive optimum on one drop (tiny instances only)"
    )
    _add_common(p_oracle)
    p_oracle.add_argument("--drop", type=int, default=0, help="drop index (default 0)")
    p_oracle.add_argument("--users", type=int, help="number of users")
    p_oracle.add_argument("--aps", type=int, help="number of access points")
    p_oracle.set_defaults(handler=_cmd_oracle)

    return parser


def _build_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.config:
        cfg = load_config(args.config, cfg)
    if args.fast:
        cfg = fast_profile(cfg)
    if args.overrides:
        cfg = parse_overrides(args.overrides, cfg)
    direct = {}
    if args.seed is not None:
        direct["seed"] = args.seed
    if getattr(args, "users", None) is not None:
        direct["num_users"] = args.users
    if getattr(args, "aps", None) is not None:
        direct["num_aps"] = args.aps
    if getattr(args, "drops", None) is not None:
        direct["drops"] = args.drops
    if getattr(args, "methods", None):
        direct["methods"] = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    if direct:
        cfg = replace(cfg, **direct)
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_train(cfg: ExperimentConfig, args) -> int:
    out = _out_dir(args)
    topology = topology_for_drop(cfg, args.drop)
    stream = policy_stream(cfg, args.drop, args.method)
    if args.method == "madqn":
        result = dqn.train(topology, cfg.network, cfg.train, stream)
    else:
        result = tabular.train_tabular(topology, cfg.network, cfg.tabular, stream)
    window = min(cfg.eval_window, result.final_step_utilities.size)
    total = float(np.mean(result.final_step_utilities[-window:]))

    write_trace_csv(out / "trace.csv", result.reward_trace)
    if args.checkpoint:
        if args.method != "madqn":
            raise ConfigError("--checkpoint only applies to --method madqn")
        dqn.save_checkpoint(args.checkpoint, result.networks)
    print(f"{args.method} drop {args.drop}: {total:.4g} bits/s total "
          f"({total / cfg.num_users:.4g} per user)")
    print(f"wrote {out / 'trace.csv'}")
    return 0


def _cmd_sweep(cfg: ExperimentConfig, args) -> int:
    out = _out_dir(args)
    records = run_sweep(cfg, out, workers=args.workers)
    for row in summarize(records, cfg.methods):
        print(f"N={row['N']:>3} {row['method']:<10} "
              f"mean total {row['mean_total_bps']:.4g} bits/s")
    print(f"wrote {out / 'throughput.csv'} and {out / 'summary.csv'}")
    return 0


def _cmd_baseline(cfg: ExperimentConfig, args) -> int:
    out = _out_dir(args)
    records = run_scenario(args.method, cfg)
    write_throughput_csv(out / "throughput.csv", records)
    write_summary_csv(out / "summary.csv", summarize(records, (args.method,)))
    mean_total = float(np.mean([r.total_bps for r in records]))
    print(f"{args.method} over {cfg.drops} drops: {mean_total:.4g} bits/s mean total")
    print(f"wrote {out / 'throughput.csv'} and {out / 'summary.csv'}")
    return 0


def _cmd_oracle(cfg: ExperimentConfig, args) -> int:
    topology = topology_for_drop(cfg, args.drop)
    verdict = brute_force_optimum(topology, cfg.network)
    print(f"optimum total {verdict.utility:.6g} bits/s on drop {args.drop}")
    for user, (aps, sc) in enumerate(zip(verdict.ap_sets, verdict.subcarriers)):
        if aps:
            print(f"  user {user}: APs {list(aps)} on subcarrier {int(sc)}")
        else:
            print(f"  user {user}: unassociated")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _build_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.handler(cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # infeasible geometry, search budget, diverged nets, I/O
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
