"""Experiment orchestration: seeded drops, method runs, averaging, CSV output.

Seeding discipline: one master seed fans out through SeedSequence spawn keys.
Drop d's topology stream is keyed (0, d) and every method run on that drop is
keyed (1, d, method_id), so all methods see identical geometry, methods never
share a policy stream, and adding or reordering methods cannot shift anyone
else's draws. Reruns with the same master seed are byte-identical.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, is_dataclass, replace
from pathlib import Path

import numpy as np

from . import dqn, tabular
from .baselines import brute_force_optimum, max_rsrp_policy, random_policy
from .channel import Topology, generate_topology
from .env import NetworkConfig

__all__ = [
    "METHOD_IDS",
    "ExperimentConfig",
    "ConfigError",
    "DropRecord",
    "fast_profile",
    "save_config",
    "load_config",
    "topology_for_drop",
    "policy_stream",
    "parse_overrides",
    "summarize",
    "run_drop",
    "run_scenario",
    "mean_total_bps",
    "run_sweep",
    "normalize_trace",
    "write_trace_csv",
    "write_throughput_csv",
    "write_summary_csv",
]

# Stable per-method stream keys. Append only; renumbering breaks replay.
METHOD_IDS = {
    "madqn": 0,
    "tabular": 1,
    "max_rsrp": 2,
    "random": 3,
    "brute_force": 4,
}


class ConfigError(ValueError):
    """A config file or override could not be parsed."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an experiment run needs, defaults at the reference scale."""

    num_aps: int = 10
    num_users: int = 10
    area_side_m: float = 50.0
    coverage_radius_m: float = 15.0
    drops: int = 50
    eval_window: int = 50           # final-episode steps averaged into throughput
    seed: int = 0
    methods: tuple[str, ...] = ("madqn", "max_rsrp")
    user_sweep: tuple[int, ...] = (2, 4, 6, 8, 10)
    network: NetworkConfig = NetworkConfig()
    train: dqn.TrainConfig = dqn.TrainConfig()
    tabular: tabular.TabularConfig = tabular.TabularConfig()

    def __post_init__(self):
        for name in ("num_aps", "num_users", "drops", "eval_window"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        for m in self.methods:
            if m not in METHOD_IDS:
                raise ConfigError(f"unknown method {m!r}; pick from {sorted(METHOD_IDS)}")


def fast_profile(cfg: ExperimentConfig | None = None) -> ExperimentConfig:
    """Reduced-cost profile: fewer drops, short training runs tuned to settle fast.

    A 2,400-step schedule cannot climb to the Q magnitudes the reference
    settings imply (RMSProp moves parameters roughly learning_rate per update),
    so the profile shrinks the targets instead of chasing them: a lower
    discount and a smaller reward scale cut the fixed point by an order of
    magnitude, and the raised learning rate covers the remaining distance.
    Exploration starts lower because the short run cannot afford many
    fully random episodes. Architecture and defaults elsewhere stay at the
    reference values.
    """
    cfg = cfg or ExperimentConfig()
    return replace(
        cfg,
        drops=10,
        eval_window=30,
        train=replace(
            cfg.train,
            learning_rate=1e-3,
            discount=0.5,
            reward_scale=1e-7,
            episodes=40,
            steps_per_episode=60,
            epsilon_start=0.6,
            epsilon_end=1e-3,
        ),
        tabular=replace(cfg.tabular, episodes=60, steps_per_episode=80),
    )


# --- flat key=value config files -------------------------------------------

def _flatten(cfg) -> dict[str, object]:
    out = {}
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if is_dataclass(value):
            for sub, subvalue in _flatten(value).items():
                out[f"{f.name}.{sub}"] = subvalue
        else:
            out[f.name] = value
    return out


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def _coerce(text: str, template):
    """Parse text into the type of the field's current value."""
    if isinstance(template, bool):
        lowered = text.lower()
        if lowered in ("true", "1", "yes"):
            return True
        if lowered in ("false", "0", "no"):
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if isinstance(template, int):
        return int(text)
    if isinstance(template, float):
        return float(text)
    if isinstance(template, tuple):
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if template and isinstance(template[0], int):
            return tuple(int(p) for p in parts)
        return tuple(parts)
    return text


def save_config(cfg: ExperimentConfig, path) -> None:
    """Write the config as flat key=value lines; nesting via dotted keys."""
    lines = [f"{key}={_format_value(value)}" for key, value in _flatten(cfg).items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _apply_updates(cfg, updates: dict[str, object]):
    direct: dict[str, object] = {}
    nested: dict[str, dict[str, object]] = {}
    for key, value in updates.items():
        if "." in key:
            head, rest = key.split(".", 1)
            nested.setdefault(head, {})[rest] = value
        else:
            direct[key] = value
    for head, sub in nested.items():
        direct[head] = _apply_updates(getattr(cfg, head), sub)
    try:
        return replace(cfg, **direct)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def parse_overrides(pairs, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Apply "key=value" override strings on top of a base config."""
    cfg = base or ExperimentConfig()
    known = _flatten(cfg)
    updates = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"expected key=value, got {pair!r}")
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            updates[key] = _coerce(value.strip(), known[key])
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from exc
    return _apply_updates(cfg, updates)


def load_config(path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Read a key=value file (# comments, blank lines allowed) over the defaults."""
    pairs = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        pairs.append(line)
    return parse_overrides(pairs, base)


# --- running drops -----------------------------------------------------------

@dataclass(frozen=True)
class DropRecord:
    """One method's result on one drop."""

    drop: int
    method: str
    num_users: int
    num_aps: int
    k_max: int
    f_max: int
    total_bps: float
    avg_user_bps: float


def topology_for_drop(cfg: ExperimentConfig, drop: int) -> Topology:
    """The geometry every method shares on a given drop index."""
    seq = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(0, drop))
    return generate_topology(
        cfg.num_aps,
        cfg.num_users,
        cfg.area_side_m,
        cfg.coverage_radius_m,
        seq,
    )


def policy_stream(cfg: ExperimentConfig, drop: int, method: str) -> np.random.SeedSequence:
    """The method-private random stream for one drop; disjoint from the geometry."""
    return np.random.SeedSequence(
        entropy=cfg.seed, spawn_key=(1, drop, METHOD_IDS[method])
    )


def run_drop(method: str, cfg: ExperimentConfig, drop: int):
    """Run one method on one drop. Returns (DropRecord, per-episode trace or None)."""
    if method not in METHOD_IDS:
        raise ConfigError(f"unknown method {method!r}")
    topology = topology_for_drop(cfg, drop)
    stream = policy_stream(cfg, drop, method)

    trace = None
    if method == "madqn":
        result = dqn.train(topology, cfg.network, cfg.train, stream)
        window = min(cfg.eval_window, result.final_step_utilities.size)
        total = float(np.mean(result.final_step_utilities[-window:]))
        trace = result.reward_trace
    elif method == "tabular":
        result = tabular.train_tabular(topology, cfg.network, cfg.tabular, stream)
        window = min(cfg.eval_window, result.final_step_utilities.size)
        total = float(np.mean(result.final_step_utilities[-window:]))
        trace = result.reward_trace
    elif method == "max_rsrp":
        total = max_rsrp_policy(topology, cfg.network, np.random.default_rng(stream)).utility
    elif method == "random":
        total = random_policy(topology, cfg.network, np.random.default_rng(stream)).utility
    else:
        total = brute_force_optimum(topology, cfg.network).utility

    record = DropRecord(
        drop=drop,
        method=method,
        num_users=cfg.num_users,
        num_aps=cfg.num_aps,
        k_max=cfg.network.k_max,
        f_max=cfg.network.f_max,
        total_bps=total,
        avg_user_bps=total / cfg.num_users,
    )
    return record, trace


def _run_drop_task(args):
    method, cfg, drop = args
    return run_drop(method, cfg, drop)[0]


def run_scenario(method: str, cfg: ExperimentConfig, workers: int = 1) -> list[DropRecord]:
    """All drops of one method under one config, in drop order."""
    tasks = [(method, cfg, drop) for drop in range(cfg.drops)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_drop_task, tasks))
    else:
        records = [_run_drop_task(t) for t in tasks]
    return sorted(records, key=lambda r: r.drop)


def mean_total_bps(records) -> float:
    return float(np.mean([r.total_bps for r in records]))


def run_sweep(cfg: ExperimentConfig, out_dir, workers: int = 1) -> list[DropRecord]:
    """Sweep the user counts for every configured method; write the CSV pair.

    Rows land in (user count, configured method order, drop) order regardless
    of worker scheduling, so output files are reproducible byte for byte.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    tasks = []
    for n_users in cfg.user_sweep:
        scenario = replace(cfg, num_users=n_users)
        for method in cfg.methods:
            for drop in range(cfg.drops):
                tasks.append((method, scenario, drop))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_drop_task, tasks))
    else:
        records = [_run_drop_task(t) for t in tasks]

    order = {m: i for i, m in enumerate(cfg.methods)}
    records.sort(key=lambda r: (r.num_users, order[r.method], r.drop))

    write_throughput_csv(out_dir / "throughput.csv", records)
    write_summary_csv(out_dir / "summary.csv", summarize(records, cfg.methods))
    return records


def summarize(records, method_order=None):
    """Per (method, user count) means across drops, in stable order."""
    groups: dict[tuple[str, int], list[DropRecord]] = {}
    for rec in records:
        groups.setdefault((rec.method, rec.num_users), []).append(rec)
    if method_order is None:
        method_order = sorted({rec.method for rec in records})
    rank = {m: i for i, m in enumerate(method_order)}
    rows = []
    for (method, n_users) in sorted(groups, key=lambda k: (k[1], rank[k[0]])):
        bucket = groups[(method, n_users)]
        rows.append(
            {
                "method": method,
                "N": n_users,
                "mean_total_bps": float(np.mean([r.total_bps for r in bucket])),
                "mean_avg_user_bps": float(np.mean([r.avg_user_bps for r in bucket])),
            }
        )
    return rows


# --- CSV output --------------------------------------------------------------
# Floats are written with str(), the shortest representation that parses back
# to the identical double, so files diff cleanly across runs.

def normalize_trace(trace: np.ndarray) -> np.ndarray:
    """Trace scaled into [0, 1] by its peak; an all-zero trace stays zero."""
    trace = np.asarray(trace, dtype=np.float64)
    peak = trace.max() if trace.size else 0.0
    if peak <= 0.0:
        return np.zeros_like(trace)
    return trace / peak


def write_trace_csv(path, trace: np.ndarray) -> None:
    norm = normalize_trace(trace)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode", "reward", "normalized_reward"])
        for ep, (raw, scaled) in enumerate(zip(np.asarray(trace, dtype=np.float64), norm)):
            writer.writerow([ep, str(float(raw)), str(float(scaled))])


def write_throughput_csv(path, records) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["drop", "method", "N", "M", "k", "f", "total_bps", "avg_user_bps"])
        for r in records:
            writer.writerow(
                [
                    r.drop,
                    r.method,
                    r.num_users,
                    r.num_aps,
                    r.k_max,
                    r.f_max,
                    str(r.total_bps),
                    str(r.avg_user_bps),
                ]
            )


def write_summary_csv(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "N", "mean_total_bps", "mean_avg_user_bps"])
        for row in rows:
            writer.writerow(
                [
                    row["method"],
                    row["N"],
                    str(row["mean_total_bps"]),
                    str(row["mean_avg_user_bps"]),
                ]
            )
