import json

import numpy as np
import pytest

import mdqn

TINY = {
    "environment": {"name": "sync", "size": 5},
    "experience_replay_buffer_size": 2000,
    "experience_replay_burn_in": 200,
    "batch_size": 8,
    "total_updates": 120,
    "evaluation_frequency": 60,
    "number_of_episodes_for_evaluation": 5,
    "network": {"hidden": [8, 8]},
    "seed": 2,
}


def test_sync_synchronised_entry_pays_both():
    env = mdqn.Environment("sync", normalize=False)
    obs = env.reset(3)
    assert len(obs) == 2 and len(obs[0]) == env.observation_dim == 4
    # Self-first: agent 1 sees its own coordinates first.
    assert obs[1] == obs[0][2:] + obs[0][:2]
    assert env.num_actions == 5


def test_warehouse_steps_and_renders():
    env = mdqn.Environment("warehouse", size=7, boxes=2)
    env.reset(0)
    next_obs, rewards, terminal = env.step([0, 2])
    assert len(next_obs[0]) == 8
    assert rewards[0] == rewards[1]
    assert "A0" in env.render()
    with pytest.raises(mdqn.UsageError):
        env.step([4, 0])


def test_game_solver():
    pennies = np.array([[1.0, -1.0], [-1.0, 1.0]])
    assert mdqn.pure_nash(pennies, -pennies) == []
    coord1 = np.array([[2.0, 0.0], [0.0, 3.0]])
    coord2 = np.array([[3.0, 0.0], [0.0, 4.0]])
    assert mdqn.pure_nash(coord1, coord2) == [(0, 0), (1, 1)]
    assert mdqn.select_nash_q(coord1, coord2, 0) == 1
    assert mdqn.select_nash_q(pennies, -pennies, 1, "greedy", "greedy") == 1
    assert mdqn.select_friend([0, 5, 1, 2], 2, 1) == 1
    assert mdqn.select_set_controller([0, 0, 9, 0], 2) == (1, 0)


def test_loss_and_schedule():
    assert mdqn.huber_loss(0.5, 0.0) == pytest.approx((0.125, 0.5))
    assert mdqn.huber_loss(2.0, 0.0) == pytest.approx((1.5, 1.0))
    assert mdqn.epsilon_at(0, 1000) == 1.0
    assert mdqn.epsilon_at(750, 1000) == 0.1


def test_network_forward_and_gradient():
    net = mdqn.Network.create("single", 4, 5, seed=1, hidden=[6])
    q = net.forward([0.1, 0.2, 0.3, 0.4])
    assert q.shape == (5,)
    inputs = np.array([[0.1], [0.2], [0.3], [0.4]])
    loss, grad = net.backward(inputs, [2], [q[2] + 0.5])
    assert loss == pytest.approx(0.125)
    assert grad.shape == net.values.shape
    clone = mdqn.Network.from_json(net.to_json())
    assert clone == net
    split = mdqn.Network.create("split", 4, 25, width=8, self_indices=[0, 1], other_indices=[2, 3])
    assert split.forward([0, 0, 0, 0]).shape == (25,)


def test_train_evaluate_and_checkpoint(tmp_path):
    seen = []
    reports, networks = mdqn.train(TINY, str(tmp_path), on_report=lambda r: seen.append(r["updates"]))
    assert [r["updates"] for r in reports] == [0, 60, 120]
    assert seen == [0, 60, 120]
    assert len(networks) == 2
    config_text, updates, restored = mdqn.load_checkpoint(str(tmp_path / "checkpoint.json"))
    assert updates == 120
    assert restored[0] == networks[0]
    report = mdqn.evaluate(json.loads(config_text), restored, episodes=4, seed=1)
    assert report["episodes"] == 4
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["convergence_updates"] == "n/a"


def test_config_errors_name_the_field():
    with pytest.raises(mdqn.ConfigError, match="batch_size"):
        mdqn.normalize_config(json.dumps({"batch_size": -1}))
    with pytest.raises(ValueError, match="mystery"):
        mdqn.normalize_config(json.dumps({"mystery": 1}))
