"""From-scratch deep Q-learning: network, replay memory, RMSProp, training loop.

Each user owns an independent feed-forward Q-network (QoS bit vector in,
one Q-value per flat (AP, subcarrier) action out) plus a delayed target copy
used for bootstrap targets. Learning is the classic loop: epsilon-greedy
action from the evaluated network, store the transition, sample a uniform
minibatch, regress toward reward + gamma * max target-Q, hard-sync the target
every fixed number of steps.

Rewards fed to the learner are scaled to Mbps to keep regression targets at a
numerically comfortable magnitude; a common positive scale is argmax-neutral
for every agent, and emitted metrics stay in bits/s.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .association import UserAction
from .channel import Topology
from .env import NetworkConfig, UdnEnv

__all__ = [
    "param_count",
    "QNetwork",
    "ReplayMemory",
    "RMSProp",
    "TrainConfig",
    "TrainResult",
    "td_target",
    "loss_and_gradients",
    "train",
    "save_checkpoint",
    "load_checkpoint",
]


def param_count(layer_sizes) -> int:
    """Total parameter count for a stack of dense layers."""
    return sum(
        fan_in * fan_out + fan_out
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:])
    )


class QNetwork:
    """Fully connected net: rectified-linear hidden layers, linear output head.

    All parameters live in one flat float64 vector (``params``); weights and
    biases are reshaped views into it, ordered W0, b0, W1, b1, ... Gradients
    use the same flat layout, so the optimizer and any finite-difference
    probe touch a single contiguous array. Weights are (fan_in, fan_out) so a
    batch of row-vector states maps through plain matmuls; initialization is
    uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)] with zero biases.
    """

    def __init__(self, input_dim, output_dim, hidden_sizes=(100, 200, 50), rng=None):
        sizes = [int(input_dim), *map(int, hidden_sizes), int(output_dim)]
        if rng is None:
            rng = np.random.default_rng()
        self.layer_sizes = sizes
        self.params = np.zeros(param_count(sizes))
        self._attach_views()
        for w in self.weights:
            bound = 1.0 / np.sqrt(w.shape[0])
            w[...] = rng.uniform(-bound, bound, size=w.shape)

    def _attach_views(self):
        self.weights, self.biases = [], []
        offset = 0
        for fan_in, fan_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            self.weights.append(
                self.params[offset:offset + fan_in * fan_out].reshape(fan_in, fan_out)
            )
            offset += fan_in * fan_out
            self.biases.append(self.params[offset:offset + fan_out])
            offset += fan_out

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_dim(self) -> int:
        return self.layer_sizes[-1]

    def forward(self, states: np.ndarray) -> np.ndarray:
        """Q-values for one state vector or a (B, input_dim) batch."""
        x = np.asarray(states, dtype=np.float64)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[1] != self.input_dim:
            raise ValueError(f"expected input dim {self.input_dim}, got {x.shape[1]}")
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            x = np.maximum(x @ w + b, 0.0)
        x = x @ self.weights[-1] + self.biases[-1]
        return x[0] if squeeze else x

    def _forward_cached(self, x):
        pre, post = [], [x]
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            z = post[-1] @ w + b
            pre.append(z)
            post.append(np.maximum(z, 0.0))
        out = post[-1] @ self.weights[-1] + self.biases[-1]
        return pre, post, out

    def copy(self) -> "QNetwork":
        dup = QNetwork.__new__(QNetwork)
        dup.layer_sizes = list(self.layer_sizes)
        dup.params = self.params.copy()
        dup._attach_views()
        return dup

    def params_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.params)))


def td_target(rewards, next_states, target_net: QNetwork, gamma: float) -> np.ndarray:
    """Bootstrap targets y = u + gamma * max_a' Q(s', a'; target).

    Episodes end purely by step count, so the bootstrap term is always present.
    Accepts scalars or batches; targets are constants with respect to the
    evaluated network.
    """
    q_next = target_net.forward(np.atleast_2d(np.asarray(next_states, dtype=np.float64)))
    return np.asarray(rewards, dtype=np.float64) + gamma * q_next.max(axis=1)


def loss_and_gradients(net: QNetwork, states, actions, targets):
    """Mean squared TD error over the minibatch and its parameter gradients.

    Only the taken action's output coordinate carries gradient. Returns
    (loss, grad) with grad a flat vector in the layout of net.params.
    """
    x = np.atleast_2d(np.asarray(states, dtype=np.float64))
    actions = np.asarray(actions, dtype=np.int64)
    targets = np.asarray(targets, dtype=np.float64)
    batch = x.shape[0]
    if batch == 0:
        raise ValueError("minibatch is empty")

    pre, post, q = net._forward_cached(x)
    rows = np.arange(batch)
    err = q[rows, actions] - targets
    loss = float(np.mean(err ** 2))

    dq = np.zeros_like(q)
    dq[rows, actions] = 2.0 * err / batch

    grad = np.empty_like(net.params)
    shadow = QNetwork.__new__(QNetwork)
    shadow.layer_sizes = net.layer_sizes
    shadow.params = grad
    shadow._attach_views()

    delta = dq
    for layer in reversed(range(len(net.weights))):
        np.matmul(post[layer].T, delta, out=shadow.weights[layer])
        np.sum(delta, axis=0, out=shadow.biases[layer])
        if layer > 0:
            delta = (delta @ net.weights[layer].T) * (pre[layer - 1] > 0.0)
    return loss, grad


class RMSProp:
    """Root-mean-square propagation on one flat parameter vector."""

    def __init__(self, learning_rate=1e-4, decay=0.9, epsilon=1e-8):
        self.learning_rate = float(learning_rate)
        self.decay = float(decay)
        self.epsilon = float(epsilon)
        self.cache: np.ndarray | None = None    # running mean of squared gradients

    def step(self, params: np.ndarray, grad: np.ndarray) -> None:
        """In-place update: v <- decay*v + (1-decay)*g^2; p -= lr*g/(sqrt(v)+eps)."""
        if self.cache is None:
            self.cache = np.zeros_like(params)
            self._scratch = np.empty_like(params)
        v, t = self.cache, self._scratch
        v *= self.decay
        np.multiply(grad, grad, out=t)
        t *= 1.0 - self.decay
        v += t
        np.sqrt(v, out=t)
        t += self.epsilon
        np.divide(grad, t, out=t)
        t *= self.learning_rate
        params -= t


class ReplayMemory:
    """Fixed-capacity ring buffer of (state, action, reward, next_state) transitions."""

    def __init__(self, capacity: int, state_dim: int):
        self.capacity = int(capacity)
        self.states = np.zeros((capacity, state_dim), dtype=np.int8)
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim), dtype=np.int8)
        self._size = 0
        self._cursor = 0

    def __len__(self) -> int:
        return self._size

    def push(self, state, action, reward, next_state) -> None:
        i = self._cursor
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self._cursor = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform draw of distinct stored indices (no replacement within a batch)."""
        if batch_size > self._size:
            raise ValueError(f"cannot sample {batch_size} of {self._size} transitions")
        picked = np.unique(rng.integers(0, self._size, batch_size))
        while picked.size < batch_size:
            extra = rng.integers(0, self._size, batch_size - picked.size)
            picked = np.unique(np.concatenate([picked, extra]))
        return picked

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = self.sample_indices(batch_size, rng)
        return (
            self.states[idx].astype(np.float64),
            self.actions[idx],
            self.rewards[idx],
            self.next_states[idx].astype(np.float64),
        )


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for the multi-agent DQN loop."""

    learning_rate: float = 1e-4
    discount: float = 0.9
    epsilon_start: float = 0.99
    epsilon_end: float = 1e-4
    episodes: int = 400
    steps_per_episode: int = 500
    target_sync_period: int = 100       # steps between hard target syncs
    minibatch_size: int = 32
    replay_capacity: int = 10_000
    hidden_sizes: tuple[int, ...] = (100, 200, 50)
    rmsprop_decay: float = 0.9
    rmsprop_epsilon: float = 1e-8
    reward_scale: float = 1e-6          # bits/s -> Mbps for the learner
    epsilon_anneal_fraction: float = 1.0  # decay over this first share of episodes, then hold

    def __post_init__(self):
        if self.epsilon_end > self.epsilon_start:
            raise ValueError("epsilon schedule must be nonincreasing")
        if not 0.0 < self.epsilon_anneal_fraction <= 1.0:
            raise ValueError("epsilon_anneal_fraction must be in (0, 1]")
        for name in ("learning_rate", "episodes", "steps_per_episode",
                     "target_sync_period", "minibatch_size", "replay_capacity"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def epsilon(self, episode: int) -> float:
        """Linear decay in the episode index from start to end, flat afterwards."""
        if self.episodes <= 1:
            return self.epsilon_start
        horizon = max(1.0, self.epsilon_anneal_fraction * (self.episodes - 1))
        frac = min(1.0, episode / horizon)
        return self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac


@dataclass(frozen=True)
class TrainResult:
    networks: list[QNetwork]
    target_networks: list[QNetwork] = field(repr=False)
    reward_trace: np.ndarray = field(repr=False)            # (episodes,) bits/s
    final_step_utilities: np.ndarray = field(repr=False)    # (steps,) last episode


def train(
    topology: Topology,
    net_cfg: NetworkConfig,
    cfg: TrainConfig = TrainConfig(),
    seed: int = 0,
) -> TrainResult:
    """Run the multi-agent DQN loop and return the trained nets plus reward trace.

    Per step, in agent-index order: every agent picks epsilon-greedily from its
    evaluated network, the joint action drives the environment once, every agent
    stores its transition and (once its buffer holds a full minibatch) takes one
    RMSProp descent step toward the bootstrap target. Target networks hard-sync
    every ``target_sync_period`` steps, with a finiteness check at each sync.
    """
    env = UdnEnv(topology, net_cfg)
    rng = np.random.default_rng(seed)
    n_users = env.num_users
    n_actions = env.num_actions
    sc = net_cfg.num_subcarriers

    nets = [
        QNetwork(n_users, n_actions, cfg.hidden_sizes, rng) for _ in range(n_users)
    ]
    targets = [net.copy() for net in nets]
    optimizers = [
        RMSProp(cfg.learning_rate, cfg.rmsprop_decay, cfg.rmsprop_epsilon)
        for _ in range(n_users)
    ]
    buffers = [ReplayMemory(cfg.replay_capacity, n_users) for _ in range(n_users)]

    trace = np.zeros(cfg.episodes)
    final_utilities = np.zeros(cfg.steps_per_episode)
    global_step = 0

    for episode in range(cfg.episodes):
        eps = cfg.epsilon(episode)
        state = env.reset()
        last_episode = episode == cfg.episodes - 1

        for t in range(cfg.steps_per_episode):
            bits = state.qos_bits.astype(np.float64)

            flat_actions = np.empty(n_users, dtype=np.int64)
            for i in range(n_users):
                if rng.random() < eps:
                    flat_actions[i] = rng.integers(n_actions)
                else:
                    flat_actions[i] = int(np.argmax(nets[i].forward(bits)))

            result = env.step(
                state, [UserAction.from_flat(int(a), sc) for a in flat_actions]
            )
            next_bits = result.next_state.qos_bits
            scaled_reward = result.reward * cfg.reward_scale

            for i in range(n_users):
                buffers[i].push(state.qos_bits, flat_actions[i], scaled_reward, next_bits)

            for i in range(n_users):
                if len(buffers[i]) < cfg.minibatch_size:
                    continue
                s_batch, a_batch, r_batch, s2_batch = buffers[i].sample(
                    cfg.minibatch_size, rng
                )
                y = td_target(r_batch, s2_batch, targets[i], cfg.discount)
                _, grad = loss_and_gradients(nets[i], s_batch, a_batch, y)
                optimizers[i].step(nets[i].params, grad)

            global_step += 1
            if global_step % cfg.target_sync_period == 0:
                for i in range(n_users):
                    if not nets[i].params_finite():
                        raise ArithmeticError(
                            f"non-finite parameters in agent {i} network at step {global_step}"
                        )
                    targets[i] = nets[i].copy()

            state = result.next_state
            trace[episode] += result.reward
            if last_episode:
                final_utilities[t] = result.reward

    return TrainResult(
        networks=nets,
        target_networks=targets,
        reward_trace=trace,
        final_step_utilities=final_utilities,
    )


_CHECKPOINT_MAGIC = "udnsim-qnets"


def save_checkpoint(path, networks: list[QNetwork]) -> None:
    """Dump networks as a JSON header line plus raw little-endian float64 tensors."""
    if not networks:
        raise ValueError("nothing to save")
    header = {
        "format": _CHECKPOINT_MAGIC,
        "version": 1,
        "agents": len(networks),
        "layer_sizes": list(networks[0].layer_sizes),
    }
    for net in networks:
        if list(net.layer_sizes) != header["layer_sizes"]:
            raise ValueError("all checkpointed networks must share one architecture")
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for net in networks:
            for w, b in zip(net.weights, net.biases):
                fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
                fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_checkpoint(path) -> list[QNetwork]:
    """Inverse of save_checkpoint; round-trips parameters bit-exactly."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("format") != _CHECKPOINT_MAGIC:
            raise ValueError(f"{path} is not a network checkpoint")
        sizes = [int(s) for s in header["layer_sizes"]]
        total = param_count(sizes)
        networks = []
        for _ in range(int(header["agents"])):
            raw = fh.read(8 * total)
            if len(raw) != 8 * total:
                raise ValueError(f"{path} is truncated")
            net = QNetwork.__new__(QNetwork)
            net.layer_sizes = list(sizes)
            # Tensor bytes appear in flat parameter order: W0, b0, W1, b1, ...
            net.params = np.frombuffer(raw, dtype="<f8").astype(np.float64)
            net._attach_views()
            networks.append(net)
        if fh.read(1):
            raise ValueError(f"{path} has trailing bytes beyond the declared tensors")
    return networks
