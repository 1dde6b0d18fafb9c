"""Episode-indexed novelty injection.

The wrapper owns two configs. Resets before the injection episode generate
pre-novelty worlds; the reset numbered ``injection_episode`` and every later
one generate post-novelty worlds, with both layout and dynamics swapped. A
running episode is never touched: the swap only happens at a reset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    NUM_ACTIONS,
    ConfigurationError,
    EnvironmentConfig,
    GridWorld,
    Observation,
    StepResult,
    UsageError,
    generate_grid,
    observation_shape,
)
from .catalog import apply_novelty
from .ontology import NoveltyDescriptor


class ScheduleError(ConfigurationError):
    pass


@dataclass(frozen=True)
class NoveltySchedule:
    """The first reset with ``episode >= injection_episode`` is post-novelty."""

    injection_episode: int

    def __post_init__(self) -> None:
        if isinstance(self.injection_episode, bool) or not isinstance(self.injection_episode, int):
            raise ScheduleError(f"injection_episode must be an int, got {self.injection_episode!r}")
        if self.injection_episode < 1:
            raise ScheduleError(f"injection_episode must be >= 1, got {self.injection_episode}")

    def is_post(self, episode: int) -> bool:
        return episode >= self.injection_episode


class WrappedEnvironment:
    """A pre/post pair of configs behind a single reset/step interface.

    ``episode_counter`` counts training resets only. Evaluation should build
    its own worlds from :attr:`pre_config` / :attr:`post_config` so that it
    never shifts the injection point.
    """

    def __init__(
        self,
        pre_config: EnvironmentConfig,
        post_config: EnvironmentConfig,
        schedule: NoveltySchedule,
        rng: np.random.Generator,
        descriptor: NoveltyDescriptor | None = None,
    ) -> None:
        pre_shape, post_shape = observation_shape(pre_config), observation_shape(post_config)
        if pre_shape != post_shape:
            raise ConfigurationError(
                f"novelty changes the observation shape: {pre_shape} -> {post_shape}"
            )
        self.pre_config = pre_config
        self.post_config = post_config
        self.schedule = schedule
        self.descriptor = descriptor
        self.rng = rng
        self.episode_counter = 0
        self.inner: GridWorld | None = None
        self.injection_timestep: int | None = None
        self.timestep = 0

    @property
    def num_actions(self) -> int:
        return NUM_ACTIONS

    @property
    def is_post_novelty(self) -> bool:
        return self.schedule.is_post(self.episode_counter)

    @property
    def active_config(self) -> EnvironmentConfig:
        return self.post_config if self.is_post_novelty else self.pre_config

    def reset(self) -> Observation:
        self.episode_counter += 1
        if self.is_post_novelty and self.injection_timestep is None:
            self.injection_timestep = self.timestep
        self.inner = generate_grid(self.active_config, self.rng)
        return self.inner.observe()

    def step(self, action: int) -> StepResult:
        if self.inner is None:
            raise UsageError("call reset() before step()")
        result = self.inner.step(action)
        self.timestep += 1
        return result


def wrap(
    pre: EnvironmentConfig,
    descriptor: NoveltyDescriptor,
    schedule: NoveltySchedule,
    rng: np.random.Generator | None = None,
) -> WrappedEnvironment:
    """Apply ``descriptor`` to ``pre`` now, so bad parameters fail before training."""
    post = apply_novelty(pre, descriptor)
    return WrappedEnvironment(
        pre, post, schedule, rng if rng is not None else np.random.default_rng(), descriptor
    )
