"""Adaptation metrics over performance curves.

A curve is a sequence of episode records carrying the cumulative timestep at
which each episode ended. Resilience and one-shot performance are measured on
frozen-policy evaluations; asymptotic performance and adaptive efficiency on
the post-novelty part of a curve, once :func:`detect_convergence` finds where
it settles.

Convergence is tail-anchored: episode ``e`` has converged when every sliding
window that starts at or after ``e`` has a mean within ``tolerance`` of the
final full window's mean. Windows that start within the last ``window``
episodes are truncated at the end of the curve, down to ``min_tail`` episodes.
With ``min_tail=1`` a curve whose last few returns keep swinging never
converges; with ``min_tail=window`` only full windows are compared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class MetricError(ValueError):
    pass


class InsufficientDataError(MetricError):
    pass


class NotConvergedError(MetricError):
    """No convergence point; ``tail_mean`` is the mean of the final window."""

    def __init__(self, tail_mean: float, message: str = "curve did not converge") -> None:
        super().__init__(f"{message} (tail mean {tail_mean:.4f})")
        self.tail_mean = tail_mean


@dataclass(frozen=True)
class CurveRecord:
    episode: int
    timestep: int
    ret: float
    post_novelty: bool


class PerformanceCurve:
    """Ordered episode records. ``timestep`` is cumulative at episode end."""

    def __init__(self, records: Iterable[CurveRecord]) -> None:
        self.records: tuple[CurveRecord, ...] = tuple(records)
        for prev, cur in zip(self.records, self.records[1:]):
            if cur.episode <= prev.episode:
                raise MetricError(
                    f"episode indices must increase: {prev.episode} then {cur.episode}"
                )
            if cur.timestep < prev.timestep:
                raise MetricError(
                    f"timesteps must not decrease: {prev.timestep} then {cur.timestep}"
                )
        for r in self.records:
            if not (0.0 <= r.ret <= 1.0) or math.isnan(r.ret):
                raise MetricError(f"episode {r.episode}: return {r.ret} outside [0, 1]")

    @classmethod
    def from_lists(
        cls,
        returns: Sequence[float],
        steps: Sequence[int] | int = 1,
        injection_episode: int | None = None,
        first_episode: int = 1,
    ) -> PerformanceCurve:
        """Build a curve from returns and per-episode lengths.

        Episode ``first_episode + i`` gets ``returns[i]``; it is post-novelty
        when its index is at least ``injection_episode``.
        """
        if isinstance(steps, int):
            steps = [steps] * len(returns)
        if len(steps) != len(returns):
            raise MetricError("returns and steps differ in length")
        records, t = [], 0
        for i, (ret, n) in enumerate(zip(returns, steps)):
            t += int(n)
            ep = first_episode + i
            post = injection_episode is not None and ep >= injection_episode
            records.append(CurveRecord(ep, t, float(ret), post))
        return cls(records)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def returns(self) -> np.ndarray:
        return np.array([r.ret for r in self.records], dtype=float)

    def post_novelty(self) -> PerformanceCurve:
        return PerformanceCurve(r for r in self.records if r.post_novelty)

    def start_timestep(self, index: int) -> int:
        """Cumulative timestep at which record ``index`` began (0 for the first)."""
        return self.records[index - 1].timestep if index > 0 else 0

    def first_post_index(self) -> int:
        for i, r in enumerate(self.records):
            if r.post_novelty:
                return i
        raise InsufficientDataError("curve has no post-novelty episodes")


@dataclass(frozen=True)
class EvalSummary:
    mean: float
    variance: float
    count: int

    def __post_init__(self) -> None:
        if self.count < 1:
            raise MetricError(f"evaluation needs at least one episode, got {self.count}")

    @classmethod
    def from_returns(cls, returns: Sequence[float]) -> EvalSummary:
        arr = np.asarray(returns, dtype=float)
        if arr.size == 0:
            raise MetricError("evaluation needs at least one episode")
        return cls(float(arr.mean()), float(arr.var()), int(arr.size))


def _window_means(values: np.ndarray, window: int, min_tail: int) -> np.ndarray:
    """Mean of ``values[i:i+window]`` for every start ``i`` up to ``n - min_tail``."""
    n = len(values)
    csum = np.concatenate(([0.0], np.cumsum(values)))
    starts = np.arange(n - min_tail + 1)
    ends = np.minimum(starts + window, n)
    return (csum[ends] - csum[starts]) / (ends - starts)


def detect_convergence(
    curve: PerformanceCurve,
    window: int = 100,
    tolerance: float = 0.05,
    min_tail: int = 1,
) -> int:
    """Earliest episode index after which the curve stays near its final level.

    Raises :class:`InsufficientDataError` if the curve is shorter than
    ``window`` and :class:`NotConvergedError` if no such episode exists.
    """
    if window < 1:
        raise MetricError(f"window must be >= 1, got {window}")
    if not tolerance > 0:
        raise MetricError(f"tolerance must be > 0, got {tolerance}")
    if not 1 <= min_tail <= window:
        raise MetricError(f"min_tail must lie in [1, window], got {min_tail}")
    values = curve.returns
    if len(values) < window:
        raise InsufficientDataError(f"curve has {len(values)} episodes, window is {window}")
    final = float(values[-window:].mean())
    ok = np.abs(_window_means(values, window, min_tail) - final) <= tolerance
    if not ok[-1]:
        raise NotConvergedError(final)
    bad = np.flatnonzero(~ok)
    first = int(bad[-1]) + 1 if bad.size else 0
    return curve.records[first].episode


def _converged_index(curve: PerformanceCurve, episode: int) -> int:
    for i, r in enumerate(curve.records):
        if r.episode == episode:
            return i
    raise AssertionError(episode)  # pragma: no cover


def resilience(frozen_eval: EvalSummary, random_eval: EvalSummary) -> float:
    """Frozen pre-novelty policy minus random agent, both on the post-novelty world."""
    return frozen_eval.mean - random_eval.mean


def asymptotic_adaptive_performance(
    curve: PerformanceCurve,
    random_eval: EvalSummary,
    window: int = 100,
    tolerance: float = 0.05,
    min_tail: int = 1,
) -> float:
    """Converged post-novelty mean (final window) above the random agent."""
    post = curve.post_novelty()
    if len(post) == 0:
        raise InsufficientDataError("curve has no post-novelty episodes")
    detect_convergence(post, window, tolerance, min_tail)
    return float(post.returns[-window:].mean()) - random_eval.mean


def adaptive_efficiency(
    curve: PerformanceCurve,
    window: int = 100,
    tolerance: float = 0.05,
    min_tail: int = 1,
) -> int:
    """Timesteps from the start of the first post-novelty episode to the start
    of the episode where the post-novelty curve converges."""
    first = curve.first_post_index()
    post = curve.post_novelty()
    episode = detect_convergence(post, window, tolerance, min_tail)
    conv = _converged_index(curve, episode)
    return curve.start_timestep(conv) - curve.start_timestep(first)


def one_shot_adaptive_performance(curve: PerformanceCurve) -> float:
    """Return of the second post-novelty record.

    On an evaluation curve the first post-novelty record is the frozen
    zero-shot evaluation and the second is taken after one post-novelty
    training episode. On a training curve the second post-novelty episode is
    the first one played after learning from a post-novelty episode.
    """
    post = curve.post_novelty()
    if len(post) < 2:
        raise InsufficientDataError(
            f"one-shot needs two post-novelty records, curve has {len(post)}"
        )
    return post.records[1].ret


def moving_average(values: Sequence[float], window: int) -> np.ndarray:
    """Trailing mean over up to ``window`` values (shorter at the start)."""
    if window < 1:
        raise MetricError(f"window must be >= 1, got {window}")
    arr = np.asarray(values, dtype=float)
    csum = np.concatenate(([0.0], np.cumsum(arr)))
    ends = np.arange(1, arr.size + 1)
    starts = np.maximum(ends - window, 0)
    return (csum[ends] - csum[starts]) / (ends - starts)
