import numpy as np
import pytest

import udnsim as u
from udnsim.dqn import (
    QNetwork,
    ReplayMemory,
    RMSProp,
    TrainConfig,
    load_checkpoint,
    loss_and_gradients,
    param_count,
    save_checkpoint,
    td_target,
    train,
)


def central_difference_gradient(net, states, actions, targets, h=1e-6):
    grad = np.empty_like(net.params)
    for idx in range(net.params.size):
        orig = net.params[idx]
        net.params[idx] = orig + h
        up, _ = loss_and_gradients(net, states, actions, targets)
        net.params[idx] = orig - h
        down, _ = loss_and_gradients(net, states, actions, targets)
        net.params[idx] = orig
        grad[idx] = (up - down) / (2.0 * h)
    return grad


def relative_vector_error(a, b):
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-300)
    return float(np.linalg.norm(a - b) / scale)


def test_param_count_and_layout():
    assert param_count([3, 5, 2]) == 3 * 5 + 5 + 5 * 2 + 2
    net = QNetwork(3, 2, (5,), np.random.default_rng(0))
    assert net.params.size == param_count([3, 5, 2])
    # views alias the flat vector
    net.params[:] = 0.0
    net.weights[0][0, 0] = 7.0
    assert net.params[0] == 7.0


def test_forward_batch_matches_single():
    net = QNetwork(4, 3, (6, 5), np.random.default_rng(1))
    states = np.random.default_rng(2).random((8, 4))
    batch = net.forward(states)
    assert batch.shape == (8, 3)
    # BLAS picks different kernels for 1-row and 8-row products, so the
    # summation order (and hence the last ulp) can differ; near-exact only.
    for row in range(8):
        assert np.allclose(net.forward(states[row]), batch[row], rtol=1e-12, atol=0)


def test_forward_rejects_wrong_width():
    net = QNetwork(4, 3, (6,), np.random.default_rng(1))
    with pytest.raises(ValueError):
        net.forward(np.zeros(5))


def test_forward_linear_when_no_hidden_layers():
    net = QNetwork(2, 2, (), np.random.default_rng(3))
    net.params[:] = 0.0
    net.biases[0][:] = [0.5, 2.0]
    assert np.allclose(net.forward(np.array([3.0, -1.0])), [0.5, 2.0])


def test_copy_is_independent():
    net = QNetwork(3, 2, (4,), np.random.default_rng(4))
    dup = net.copy()
    dup.params[:] += 1.0
    assert not np.allclose(net.params, dup.params)


def test_td_target_frozen_value():
    target = QNetwork(2, 2, (), np.random.default_rng(0))
    target.params[:] = 0.0
    target.biases[0][:] = [0.5, 2.0]
    y = td_target(1.0, np.array([[0.0, 1.0]]), target, gamma=0.9)
    assert y.shape == (1,)
    assert y[0] == pytest.approx(2.8, rel=1e-12)

    batch = td_target(
        np.array([1.0, -1.0]), np.zeros((2, 2)), target, gamma=0.5
    )
    assert np.allclose(batch, [2.0, 0.0])


def test_loss_matches_direct_computation():
    rng = np.random.default_rng(7)
    net = QNetwork(3, 4, (5,), rng)
    states = rng.random((6, 3))
    actions = rng.integers(0, 4, 6)
    targets = rng.random(6)
    loss, _ = loss_and_gradients(net, states, actions, targets)
    q = net.forward(states)
    want = float(np.mean((q[np.arange(6), actions] - targets) ** 2))
    assert loss == pytest.approx(want, rel=1e-12)
    with pytest.raises(ValueError):
        loss_and_gradients(net, np.zeros((0, 3)), [], [])


def test_gradients_match_central_differences():
    # The check runs at random points in parameter space, not at the init
    # point: zero biases can park a whole layer's pre-activations exactly on
    # the rectifier kink (dead inputs propagate zeros), where central
    # differences see a one-sided slope and no tolerance saves the comparison.
    rng = np.random.default_rng(11)
    for _ in range(20):
        sizes = rng.integers(2, 6, size=2)
        net = QNetwork(int(sizes[0]), int(sizes[1]), (4, 5), rng)
        net.params[:] = rng.uniform(-0.7, 0.7, net.params.size)
        batch = int(rng.integers(1, 6))
        states = rng.standard_normal((batch, int(sizes[0])))
        actions = rng.integers(0, int(sizes[1]), batch)
        targets = rng.standard_normal(batch)
        _, analytic = loss_and_gradients(net, states, actions, targets)
        numeric = central_difference_gradient(net, states, actions, targets)
        err = relative_vector_error(analytic, numeric)
        assert err < 1e-7, f"gradient mismatch: {err}"


def test_rmsprop_first_step_formula():
    opt = RMSProp(learning_rate=0.01, decay=0.9, epsilon=1e-8)
    params = np.array([1.0, -2.0])
    grad = np.array([2.0, 0.5])
    opt.step(params, grad)
    v = 0.1 * grad**2
    want = np.array([1.0, -2.0]) - 0.01 * grad / (np.sqrt(v) + 1e-8)
    assert np.allclose(params, want, rtol=1e-12)
    assert np.allclose(opt.cache, v, rtol=1e-12)


def test_rmsprop_second_step_accumulates():
    opt = RMSProp(learning_rate=0.01, decay=0.9, epsilon=1e-8)
    params = np.zeros(1)
    g1, g2 = np.array([1.0]), np.array([3.0])
    opt.step(params, g1)
    opt.step(params, g2)
    v = 0.9 * (0.1 * 1.0) + 0.1 * 9.0
    step2 = 0.01 * 3.0 / (np.sqrt(v) + 1e-8)
    step1 = 0.01 * 1.0 / (np.sqrt(0.1) + 1e-8)
    assert params[0] == pytest.approx(-step1 - step2, rel=1e-12)


def test_replay_memory_ring_and_sampling():
    mem = ReplayMemory(capacity=8, state_dim=2)
    rng = np.random.default_rng(0)
    for i in range(12):
        mem.push([i % 2, 1], i % 3, float(i), [1, 0])
    assert len(mem) == 8
    # oldest entries were overwritten: rewards now 4..11
    assert set(mem.rewards.tolist()) == {float(i) for i in range(4, 12)}

    idx = mem.sample_indices(8, rng)
    assert sorted(idx.tolist()) == list(range(8)), "full draw touches every slot once"
    states, actions, rewards, next_states = mem.sample(5, rng)
    assert states.shape == (5, 2) and states.dtype == np.float64
    assert actions.shape == (5,) and rewards.shape == (5,)
    assert next_states.shape == (5, 2)
    with pytest.raises(ValueError):
        mem.sample(9, rng)


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epsilon_start=0.1, epsilon_end=0.5)
    with pytest.raises(ValueError):
        TrainConfig(minibatch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(epsilon_anneal_fraction=0.0)
    with pytest.raises(ValueError):
        TrainConfig(epsilon_anneal_fraction=1.5)
    cfg = TrainConfig(episodes=5, epsilon_start=0.9, epsilon_end=0.1)
    assert cfg.epsilon(0) == pytest.approx(0.9)
    assert cfg.epsilon(4) == pytest.approx(0.1)
    assert TrainConfig(episodes=1).epsilon(0) == pytest.approx(0.99)


def test_epsilon_anneal_fraction_holds_at_floor():
    cfg = TrainConfig(episodes=11, epsilon_start=1.0, epsilon_end=0.2,
                      epsilon_anneal_fraction=0.5)
    assert cfg.epsilon(0) == pytest.approx(1.0)
    # floor reached at half the run, held flat afterwards
    assert cfg.epsilon(5) == pytest.approx(0.2)
    assert cfg.epsilon(7) == pytest.approx(0.2)
    assert cfg.epsilon(10) == pytest.approx(0.2)
    # midpoint of the annealing leg
    assert cfg.epsilon(2) == pytest.approx(1.0 - 0.8 * 2 / 5)


def test_train_smoke_and_determinism(small_topology, small_net_cfg):
    cfg = TrainConfig(
        learning_rate=1e-3, episodes=3, steps_per_episode=20, minibatch_size=8
    )
    a = train(small_topology, small_net_cfg, cfg, seed=2)
    b = train(small_topology, small_net_cfg, cfg, seed=2)
    assert len(a.networks) == 4
    assert a.reward_trace.shape == (3,)
    assert a.final_step_utilities.shape == (20,)
    assert np.all(np.isfinite(a.reward_trace))
    assert np.array_equal(a.reward_trace, b.reward_trace)
    assert all(
        np.array_equal(x.params, y.params) for x, y in zip(a.networks, b.networks)
    )


def test_train_raises_on_divergence(small_topology, small_net_cfg):
    # The step size must blow the forward pass past float range in one move:
    # anything smaller and the squared-gradient cache saturates to inf first,
    # which zeroes the update and freezes the parameters at finite values.
    cfg = TrainConfig(
        learning_rate=1e300,
        episodes=1,
        steps_per_episode=60,
        minibatch_size=4,
        target_sync_period=8,
    )
    with np.errstate(over="ignore", invalid="ignore"), pytest.raises(ArithmeticError):
        train(small_topology, small_net_cfg, cfg, seed=0)


def test_checkpoint_round_trip(tmp_path):
    rng = np.random.default_rng(9)
    nets = [QNetwork(3, 5, (4,), rng) for _ in range(3)]
    path = tmp_path / "nets.bin"
    save_checkpoint(path, nets)
    back = load_checkpoint(path)
    assert len(back) == 3
    for a, b in zip(nets, back):
        assert a.layer_sizes == b.layer_sizes
        assert np.array_equal(a.params, b.params)


def test_checkpoint_rejects_garbage(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b'{"format": "something-else"}\n')
    with pytest.raises(ValueError):
        load_checkpoint(path)
    with pytest.raises(ValueError):
        save_checkpoint(tmp_path / "empty.bin", [])

    rng = np.random.default_rng(0)
    nets = [QNetwork(2, 2, (3,), rng), QNetwork(2, 3, (3,), rng)]
    with pytest.raises(ValueError):
        save_checkpoint(tmp_path / "mixed.bin", nets)

    good = tmp_path / "good.bin"
    save_checkpoint(good, [QNetwork(2, 2, (3,), rng)])
    clipped = good.read_bytes()[:-8]
    bad = tmp_path / "clipped.bin"
    bad.write_bytes(clipped)
    with pytest.raises(ValueError):
        load_checkpoint(bad)
