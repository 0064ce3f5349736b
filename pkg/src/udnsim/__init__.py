"""Desk-scale simulator for dense small-cell downlinks.

Drops APs and users in a square, builds per-link channel gains, and searches
for joint association and subcarrier allocations under per-user and per-AP
limits. Allocation policies range from a greedy strongest-signal baseline
through independent tabular Q-learners to per-user deep Q-networks trained
against the shared network utility, plus an exhaustive optimum for instances
small enough to enumerate.
"""

from .association import (
    ActionOutcome,
    AssociationState,
    UserAction,
    apply_action,
    apply_action_inplace,
    transmit_power,
    validate,
)
from .baselines import (
    PolicyVerdict,
    SearchSpaceError,
    brute_force_optimum,
    max_rsrp_policy,
    random_policy,
)
from .channel import (
    LOS,
    NLOS,
    InfeasibleGeometryError,
    PathlossParams,
    Topology,
    channel_gain,
    dbm_to_watts,
    generate_topology,
    noise_power,
    pathloss_db,
)
from .dqn import (
    QNetwork,
    ReplayMemory,
    RMSProp,
    TrainConfig,
    TrainResult,
    load_checkpoint,
    save_checkpoint,
    td_target,
)
from .dqn import train as train_madqn
from .env import EnvState, NetworkConfig, StepResult, UdnEnv, discounted_return
from .experiments import (
    ConfigError,
    DropRecord,
    ExperimentConfig,
    fast_profile,
    load_config,
    run_drop,
    run_scenario,
    run_sweep,
    save_config,
    topology_for_drop,
)
from .rates import LinkMetrics, link_capacity, link_metrics, network_utility, sinr, user_rates
from .tabular import QTable, TabularConfig, TabularResult, greedy_rollout, train_tabular

__version__ = "0.1.0"

__all__ = [
    "ActionOutcome",
    "AssociationState",
    "ConfigError",
    "DropRecord",
    "EnvState",
    "ExperimentConfig",
    "InfeasibleGeometryError",
    "LOS",
    "LinkMetrics",
    "NLOS",
    "NetworkConfig",
    "PathlossParams",
    "PolicyVerdict",
    "QNetwork",
    "QTable",
    "RMSProp",
    "ReplayMemory",
    "SearchSpaceError",
    "StepResult",
    "TabularConfig",
    "TabularResult",
    "Topology",
    "TrainConfig",
    "TrainResult",
    "UdnEnv",
    "UserAction",
    "apply_action",
    "apply_action_inplace",
    "brute_force_optimum",
    "channel_gain",
    "dbm_to_watts",
    "discounted_return",
    "fast_profile",
    "generate_topology",
    "greedy_rollout",
    "link_capacity",
    "link_metrics",
    "load_checkpoint",
    "load_config",
    "max_rsrp_policy",
    "network_utility",
    "noise_power",
    "pathloss_db",
    "random_policy",
    "run_drop",
    "run_scenario",
    "run_sweep",
    "save_checkpoint",
    "save_config",
    "sinr",
    "td_target",
    "topology_for_drop",
    "train_madqn",
    "train_tabular",
    "transmit_power",
    "user_rates",
    "validate",
]
