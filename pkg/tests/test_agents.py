import numpy as np
import pytest

from gridnovelty.agents import (
    EpsilonSchedule,
    FrozenQPolicy,
    QLearningAgent,
    RandomAgent,
    epsilon_greedy_act,
    q_update,
)
from gridnovelty.core import Action, generate_grid
from gridnovelty.layouts import LAYOUTS, get_layout, parse_char_map
from gridnovelty.ontology import optimal_plan_length
from gridnovelty.runner import AgentSpec, build_agent, evaluate


def test_q_update_worked_examples():
    table = {b"s": np.zeros(7)}
    assert q_update(table, b"s", 0, 1.0, b"s", True, alpha=0.5, gamma=0.9) == 0.5
    table = {b"s": np.array([0.5, 0, 0, 0, 0, 0, 0]), b"t": np.array([0, 0, 0.5, 0, 0, 0, 0])}
    assert q_update(table, b"s", 0, 0.0, b"t", False, alpha=0.5, gamma=0.9) == pytest.approx(0.475)
    # only the updated entry moves
    assert table[b"s"][1:].tolist() == [0.0] * 6 and table[b"t"].tolist() == [0, 0, 0.5, 0, 0, 0, 0]


def test_two_state_chain_reaches_the_fixed_point():
    # s -> t -> s ... with reward 1 on every step and one action: Q* = r / (1 - gamma)
    table, gamma = {}, 0.9
    for _ in range(2000):
        q_update(table, b"s", 0, 1.0, b"t", False, 0.5, gamma)
        q_update(table, b"t", 0, 1.0, b"s", False, 0.5, gamma)
    assert abs(table[b"s"][0] - 1.0 / (1.0 - gamma)) < 1e-6
    assert abs(table[b"t"][0] - 1.0 / (1.0 - gamma)) < 1e-6


def test_q_update_by_hand():
    table = {b"s": np.zeros(7), b"t": np.array([0.0, 0.5, 0, 0, 0, 0, 0])}
    # target 0 + 0.5 * 0.5 = 0.25; halfway from 0 is 0.125
    assert q_update(table, b"s", 2, 0.0, b"t", False, alpha=0.5, gamma=0.5) == 0.125
    # terminal transitions ignore the successor
    assert q_update(table, b"s", 3, 1.0, b"t", True, alpha=0.5, gamma=0.5) == 0.5
    # unseen successors count as zero and get no row
    assert q_update(table, b"u", 0, 0.25, b"never", False, alpha=1.0, gamma=0.9) == 0.25
    assert b"never" not in table


def test_epsilon_extremes():
    rng = np.random.default_rng(1)
    table = {b"s": np.array([0, 0, 0, 0, 0.5, 0, 0])}
    assert {epsilon_greedy_act(table, b"s", 0.0, rng) for _ in range(50)} == {Action.DROP}
    counts = np.bincount([int(epsilon_greedy_act(table, b"s", 1.0, rng)) for _ in range(7000)], minlength=7)
    assert counts.min() > 850 and counts[4] < 1150


def test_greedy_ties_go_to_the_lowest_index():
    rng = np.random.default_rng(0)
    table = {b"s": np.array([0, 0.5, 0.5, 0, 0, 0, 0.5])}
    assert epsilon_greedy_act(table, b"s", 0.0, rng) == Action.TURN_RIGHT
    assert epsilon_greedy_act(table, b"unseen", 0.0, rng) == Action.TURN_LEFT


def test_epsilon_schedule_with_hold():
    sched = EpsilonSchedule(start=1.0, end=0.0, decay_steps=100, offset=50)
    assert [sched.value(t) for t in (0, 50, 100, 150, 10_000)] == [1.0, 1.0, 0.5, 0.0, 0.0]


def test_rewarm_restarts_the_decay_from_the_current_step():
    agent = QLearningAgent(schedule=EpsilonSchedule(1.0, 0.1, decay_steps=10), rewarm=0.6)
    agent.steps = 40
    assert agent.epsilon == pytest.approx(0.1)
    agent.on_novelty()
    assert agent.epsilon == 0.6
    agent.steps = 45
    assert agent.epsilon == pytest.approx(0.35)
    keep = QLearningAgent(schedule=EpsilonSchedule(1.0, 0.1, decay_steps=10), rewarm=None)
    keep.steps = 40
    keep.on_novelty()
    assert keep.epsilon == pytest.approx(0.1)


def test_frozen_table_never_changes():
    agent = QLearningAgent(alpha=1.0)
    agent.table[b"s"] = np.array([0.0, 1.0, 0, 0, 0, 0, 0])
    frozen = agent.freeze()
    before = {k: v.copy() for k, v in frozen.table.items()}
    world = generate_grid(get_layout("open_5x5"), np.random.default_rng(0))
    obs = world.observe()
    for action in Action:
        frozen.observe(obs, action, 1.0, obs, False)
    assert frozen.table.keys() == before.keys()
    assert all(np.array_equal(frozen.table[k], before[k]) for k in before)


def test_freeze_is_a_snapshot():
    agent = QLearningAgent(alpha=1.0)
    agent.table[b"s"] = np.zeros(7)
    frozen = agent.freeze()
    agent.table[b"s"][4] = 1.0
    assert isinstance(frozen, FrozenQPolicy) and frozen.table[b"s"][4] == 0.0
    frozen.observe(None, Action.DROP, 1.0, None, True)
    assert frozen.freeze() is frozen


def test_argument_validation():
    for kwargs in ({"alpha": 0.0}, {"alpha": 1.5}, {"gamma": 1.0}, {"rewarm": 2.0}):
        with pytest.raises(ValueError):
            QLearningAgent(**kwargs)


def test_random_agent_is_uniform():
    rng = np.random.default_rng(5)
    agent = RandomAgent()
    counts = np.bincount([int(agent.act(None, rng)) for _ in range(70_000)], minlength=7)
    assert np.all(np.abs(counts / 70_000 - 1 / 7) <= 0.01)
    assert agent.freeze() is agent
    a, b = np.random.default_rng(9), np.random.default_rng(9)
    assert [agent.act(None, a) for _ in range(20)] == [agent.act(None, b) for _ in range(20)]


LOCKED = [n for n in sorted(LAYOUTS) if any(d.locked for d in get_layout(n).doors.values())]


@pytest.mark.parametrize("name", LOCKED)
def test_random_agent_rarely_reaches_a_locked_goal(name):
    returns = [r for r, _ in evaluate(get_layout(name), RandomAgent(), list(range(1000)))]
    assert np.mean(returns) <= 0.01


def test_q_learning_solves_a_corridor():
    config = parse_char_map("# # # # # #\n# @> . . G #\n# # # # # #")
    agent = QLearningAgent(alpha=0.5, gamma=0.9, schedule=EpsilonSchedule(1.0, 0.0, 2000))
    rng = np.random.default_rng(3)
    world = generate_grid(config, rng)
    for _ in range(3000):
        obs = world.observe()
        action = agent.act(obs, rng)
        result = world.step(action)
        agent.observe(obs, action, result.reward, result.observation, result.terminated)
        if world.done:
            world.reset()
    world = generate_grid(config, rng)
    policy = agent.freeze()
    while not world.done:
        world.step(policy.act(world.observe(), rng))
    assert world.step_count == 3


@pytest.mark.parametrize("seed", range(5))
def test_tabular_q_learning_finds_the_optimal_plan_on_4x4(seed):
    # 40% of the budget at epsilon 1 before the decay: with zero-initialised
    # values and lowest-index ties the greedy policy only turns left, so the
    # goal has to be found by exploration first.
    config = get_layout("doorkey_4x4")
    steps = 50_000
    agent = build_agent(AgentSpec(epsilon_hold_fraction=0.4, epsilon_decay_fraction=0.3), steps)
    rng = np.random.default_rng(seed)
    world = generate_grid(config, rng)
    obs = world.observe()
    for _ in range(steps):
        action = agent.act(obs, rng)
        result = world.step(action)
        agent.observe(obs, action, result.reward, result.observation, result.terminated)
        obs = result.observation
        if world.done:
            world = generate_grid(config, rng)
            obs = world.observe()
    policy = agent.freeze()
    world = generate_grid(config, rng)
    while not world.done:
        result = world.step(policy.act(world.observe(), rng))
    assert result.terminated and world.step_count == optimal_plan_length(config)
