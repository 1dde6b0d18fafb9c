"""Baseline agents: uniform random and tabular Q-learning."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .core import NUM_ACTIONS, Action, Observation


class AgentPolicy(Protocol):
    def act(self, observation: Observation, rng: np.random.Generator) -> Action: ...

    def observe(
        self,
        observation: Observation,
        action: Action,
        reward: float,
        next_observation: Observation,
        terminal: bool,
    ) -> None: ...

    def begin_episode(self) -> None: ...

    def freeze(self) -> AgentPolicy: ...


def random_act(rng: np.random.Generator) -> Action:
    return Action(int(rng.integers(NUM_ACTIONS)))


class RandomAgent:
    """Uniform over the seven actions; the reference point for every metric."""

    def act(self, observation: Observation, rng: np.random.Generator) -> Action:
        return random_act(rng)

    def observe(self, observation, action, reward, next_observation, terminal) -> None:
        pass

    def begin_episode(self) -> None:
        pass

    def on_novelty(self) -> None:
        pass

    def freeze(self) -> RandomAgent:
        return self


QTable = dict[bytes, np.ndarray]


def q_update(
    table: QTable,
    state: bytes,
    action: int,
    reward: float,
    next_state: bytes,
    terminal: bool,
    alpha: float,
    gamma: float,
) -> float:
    """One-step TD update of ``table[state][action]``; returns the new value.

    Terminal transitions do not bootstrap.
    """
    row = table.get(state)
    if row is None:
        row = table[state] = np.zeros(NUM_ACTIONS)
    target = reward
    if not terminal:
        nxt = table.get(next_state)
        if nxt is not None:
            target += gamma * nxt.max()
    row[action] += alpha * (target - row[action])
    return float(row[action])


def epsilon_greedy_act(
    table: QTable, state: bytes, epsilon: float, rng: np.random.Generator
) -> Action:
    """Random action with probability ``epsilon``, else the greedy one.

    Greedy ties go to the lowest action index; unseen states count as all-zero.
    """
    if rng.random() < epsilon:
        return random_act(rng)
    row = table.get(state)
    if row is None:
        return Action(0)
    return Action(int(np.argmax(row)))


@dataclass
class EpsilonSchedule:
    """Linear decay from ``start`` to ``end`` over ``decay_steps`` steps."""

    start: float = 1.0
    end: float = 0.05
    decay_steps: int = 1
    offset: int = 0

    def value(self, step: int) -> float:
        t = (step - self.offset) / max(self.decay_steps, 1)
        t = min(max(t, 0.0), 1.0)
        return self.start + t * (self.end - self.start)


class QLearningAgent:
    def __init__(
        self,
        alpha: float = 0.1,
        gamma: float = 0.95,
        schedule: EpsilonSchedule | None = None,
        rewarm: float | None = 0.5,
    ) -> None:
        if not 0.0 < alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
        if not 0.0 <= gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
        if rewarm is not None and not 0.0 <= rewarm <= 1.0:
            raise ValueError(f"rewarm epsilon must lie in [0, 1], got {rewarm}")
        self.alpha = alpha
        self.gamma = gamma
        self.schedule = schedule or EpsilonSchedule()
        self.rewarm = rewarm
        self.table: QTable = {}
        self.steps = 0

    @property
    def epsilon(self) -> float:
        return self.schedule.value(self.steps)

    def act(self, observation: Observation, rng: np.random.Generator) -> Action:
        return epsilon_greedy_act(self.table, observation.key(), self.epsilon, rng)

    def observe(self, observation, action, reward, next_observation, terminal) -> None:
        q_update(
            self.table, observation.key(), int(action), reward,
            next_observation.key(), terminal, self.alpha, self.gamma,
        )
        self.steps += 1

    def begin_episode(self) -> None:
        pass

    def on_novelty(self) -> None:
        """Re-raise exploration when the world changes, if configured to."""
        if self.rewarm is None:
            return
        self.schedule = EpsilonSchedule(
            start=self.rewarm,
            end=self.schedule.end,
            decay_steps=self.schedule.decay_steps,
            offset=self.steps,
        )

    def freeze(self) -> FrozenQPolicy:
        return FrozenQPolicy({k: v.copy() for k, v in self.table.items()})


class FrozenQPolicy:
    """Greedy evaluator over a snapshot of a Q-table. Never learns."""

    def __init__(self, table: QTable, epsilon: float = 0.0) -> None:
        self.table = table
        self.epsilon = epsilon

    def act(self, observation: Observation, rng: np.random.Generator) -> Action:
        return epsilon_greedy_act(self.table, observation.key(), self.epsilon, rng)

    def observe(self, observation, action, reward, next_observation, terminal) -> None:
        pass

    def begin_episode(self) -> None:
        pass

    def freeze(self) -> FrozenQPolicy:
        return self
