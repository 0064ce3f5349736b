"""Tabular multi-agent Q-learning: the verifiable learning path for tiny instances.

Each user keeps its own table over (global QoS bit vector, flat action) pairs
and updates with the standard max-bootstrap rule on the shared team reward.
With every agent paid the identical network utility, independent max-updates
are coherent and the joint greedy policy is what gets evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .association import UserAction
from .channel import Topology
from .env import NetworkConfig, UdnEnv

__all__ = ["QTable", "TabularConfig", "TabularResult", "train_tabular"]


class QTable:
    """Sparse state-action value table; unseen entries read as zero."""

    def __init__(self, num_actions, learning_rate=0.5, discount=0.9, epsilon=0.1):
        if not 0.0 < learning_rate <= 1.0:
            raise ValueError("learning rate must lie in (0, 1]")
        if not 0.0 <= discount < 1.0:
            raise ValueError("discount must lie in [0, 1)")
        if not 0.0 <= epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        self.num_actions = int(num_actions)
        self.learning_rate = float(learning_rate)
        self.discount = float(discount)
        self.epsilon = float(epsilon)
        self.values: dict[tuple, np.ndarray] = {}

    def row(self, state) -> np.ndarray:
        key = tuple(int(b) for b in state)
        row = self.values.get(key)
        if row is None:
            row = np.zeros(self.num_actions)
            self.values[key] = row
        return row

    def q_update(self, state, action, reward, next_state) -> float:
        """Max-bootstrap update; returns the new Q(state, action)."""
        row = self.row(state)
        target = reward + self.discount * self.row(next_state).max()
        row[action] += self.learning_rate * (target - row[action])
        return float(row[action])

    def best_action(self, state) -> int:
        # argmax with ties broken toward the lowest flat index
        return int(np.argmax(self.row(state)))

    def epsilon_greedy(self, state, rng: np.random.Generator) -> int:
        if rng.random() < self.epsilon:
            return int(rng.integers(self.num_actions))
        return self.best_action(state)


@dataclass(frozen=True)
class TabularConfig:
    learning_rate: float = 0.5
    discount: float = 0.9
    epsilon_start: float = 0.99
    epsilon_end: float = 0.01
    episodes: int = 200
    steps_per_episode: int = 200
    reward_scale: float = 1e-6          # learner sees utility in Mbps


@dataclass(frozen=True)
class TabularResult:
    tables: list[QTable]
    reward_trace: np.ndarray            # (episodes,) summed utility, bits/s
    final_step_utilities: np.ndarray = field(repr=False)   # (steps,) of last episode


def linear_epsilon(episode, num_episodes, start, end) -> float:
    if num_episodes <= 1:
        return start
    return start + (end - start) * episode / (num_episodes - 1)


def train_tabular(
    topology: Topology,
    net_cfg: NetworkConfig,
    cfg: TabularConfig = TabularConfig(),
    seed: int = 0,
) -> TabularResult:
    """Train one table per user with a shared reward; same loop shape as the DQN path."""
    env = UdnEnv(topology, net_cfg)
    rng = np.random.default_rng(seed)
    sc = net_cfg.num_subcarriers
    tables = [
        QTable(env.num_actions, cfg.learning_rate, cfg.discount, cfg.epsilon_start)
        for _ in range(env.num_users)
    ]

    trace = np.zeros(cfg.episodes)
    final_utilities = np.zeros(cfg.steps_per_episode)
    for episode in range(cfg.episodes):
        eps = linear_epsilon(episode, cfg.episodes, cfg.epsilon_start, cfg.epsilon_end)
        for table in tables:
            table.epsilon = eps
        state = env.reset()
        last = episode == cfg.episodes - 1
        for t in range(cfg.steps_per_episode):
            bits = state.qos_bits
            flat = [table.epsilon_greedy(bits, rng) for table in tables]
            result = env.step(state, [UserAction.from_flat(a, sc) for a in flat])
            scaled = result.reward * cfg.reward_scale
            for table, action in zip(tables, flat):
                table.q_update(bits, action, scaled, result.next_state.qos_bits)
            state = result.next_state
            trace[episode] += result.reward
            if last:
                final_utilities[t] = result.reward

    return TabularResult(tables=tables, reward_trace=trace, final_step_utilities=final_utilities)


def greedy_rollout(
    topology: Topology,
    net_cfg: NetworkConfig,
    tables: list[QTable],
    steps: int = 10,
) -> float:
    """Run the joint greedy policy from reset and return the settled per-step utility."""
    env = UdnEnv(topology, net_cfg)
    sc = net_cfg.num_subcarriers
    state = env.reset()
    reward = 0.0
    for _ in range(steps):
        actions = [
            UserAction.from_flat(table.best_action(state.qos_bits), sc) for table in tables
        ]
        result = env.step(state, actions)
        state = result.next_state
        reward = result.reward
    return reward
