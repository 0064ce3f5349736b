"""Multi-agent environment: joint actions in, shared utility reward out.

All users act simultaneously; actions are applied sequentially in agent-index
order through the association projection, rates are recomputed once on the
resulting state, and every agent receives the same reward (the network
utility). The learning state is the per-user QoS bit vector: bit i is 1 iff
user i currently meets the minimum rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .association import AssociationState, UserAction, apply_action_inplace
from .channel import Topology, dbm_to_watts, noise_power
from .rates import network_utility, user_rates

__all__ = ["NetworkConfig", "EnvState", "StepResult", "UdnEnv", "discounted_return"]


@dataclass(frozen=True)
class NetworkConfig:
    """Radio and constraint parameters shared by the environment and baselines."""

    num_subcarriers: int = 4
    k_max: int = 4                       # APs per user
    f_max: int = 4                       # users per AP
    ap_power_dbm: float = 23.0
    bandwidth_hz: float = 180e3          # per subcarrier
    noise_density_dbm_hz: float = -174.0
    qos_rate_bps: float = 2e6
    co_subcarrier_interference: bool = True

    def __post_init__(self):
        if self.num_subcarriers < 1:
            raise ValueError("num_subcarriers must be positive")
        if self.k_max < 1 or self.f_max < 1:
            raise ValueError("k_max and f_max must be positive")
        if self.bandwidth_hz <= 0.0:
            raise ValueError("bandwidth_hz must be positive")
        if self.qos_rate_bps < 0.0:
            raise ValueError("qos_rate_bps must be nonnegative")

    @property
    def ap_power_watts(self) -> float:
        return dbm_to_watts(self.ap_power_dbm)

    @property
    def noise_watts(self) -> float:
        return noise_power(self.noise_density_dbm_hz, self.bandwidth_hz)


@dataclass(frozen=True)
class EnvState:
    qos_bits: np.ndarray        # (N,) int8, bit i = 1 iff user i meets QoS
    assoc: AssociationState
    t: int = 0


@dataclass(frozen=True)
class StepResult:
    next_state: EnvState
    reward: float                       # shared network utility, bits/s
    per_user_rates: np.ndarray = field(repr=False)


class UdnEnv:
    """One topology, one config; states are passed explicitly and never shared."""

    def __init__(self, topology: Topology, cfg: NetworkConfig = NetworkConfig()):
        self.topology = topology
        self.cfg = cfg

    @property
    def num_users(self) -> int:
        return self.topology.num_users

    @property
    def num_actions(self) -> int:
        return self.topology.num_aps * self.cfg.num_subcarriers

    def reset(self) -> EnvState:
        assoc = AssociationState(
            self.topology.num_users,
            self.topology.num_aps,
            self.cfg.num_subcarriers,
            self.cfg.k_max,
            self.cfg.f_max,
        )
        return EnvState(
            qos_bits=np.zeros(self.topology.num_users, dtype=np.int8),
            assoc=assoc,
            t=0,
        )

    def rates(self, assoc: AssociationState) -> np.ndarray:
        return user_rates(
            self.topology,
            assoc,
            self.cfg.ap_power_watts,
            self.cfg.noise_watts,
            self.cfg.bandwidth_hz,
            self.cfg.co_subcarrier_interference,
        )

    def step(self, state: EnvState, joint_action: Sequence[UserAction]) -> StepResult:
        """Apply one action per user (agent-index order), then re-score the network."""
        if len(joint_action) != self.num_users:
            raise ValueError(
                f"joint action has {len(joint_action)} entries for {self.num_users} users"
            )
        assoc = state.assoc.copy()
        for user, action in enumerate(joint_action):
            apply_action_inplace(assoc, user, action, self.topology)

        rates = self.rates(assoc)
        qos_bits = (rates >= self.cfg.qos_rate_bps).astype(np.int8)
        next_state = EnvState(qos_bits=qos_bits, assoc=assoc, t=state.t + 1)
        return StepResult(
            next_state=next_state,
            reward=network_utility(rates),
            per_user_rates=rates,
        )


def discounted_return(rewards: Sequence[float], gamma: float) -> float:
    """Discounted sum with the discount applied from the first step (gamma^1)."""
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    return float(sum(gamma ** (t + 1) * u for t, u in enumerate(rewards)))
