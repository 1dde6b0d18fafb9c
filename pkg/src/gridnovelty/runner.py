"""Experiment runner: train, inject, adapt, evaluate, and write artifacts.

An experiment file is YAML::

    run_id: doorkeychange_6x6
    layout: doorkey_6x6            # shipped name, or {map: "...", dynamics: {...}}
    novelty: {name: DoorKeyChange, params: {color: blue}}
    schedule: {injection_episode: 4000}
    agent: {name: q_learning, alpha: 0.1, gamma: 0.95, rewarm: 0.5}
    total_timesteps: 1000000
    evaluation: {cadence: 50, episodes: 20}
    convergence: {window: 100, tolerance: 0.05}
    seeds: [1, 2, 3]
    output_dir: runs/doorkeychange_6x6

Each seed writes ``episodes_seed<S>.jsonl``; the run writes ``metrics.csv``,
``curve.csv``, ``classification.jsonl`` and ``run.json``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
import yaml

from .agents import EpsilonSchedule, FrozenQPolicy, QLearningAgent, RandomAgent
from .catalog import (
    TransformError,
    UnknownNoveltyError,
    apply_novelty,
    get_entry,
    make_novelty,
)
from .core import ConfigurationError, EnvironmentConfig, generate_grid
from .injection import NoveltySchedule, ScheduleError, wrap
from .layouts import get_layout, layout_from_dict
from .metrics import (
    CurveRecord,
    EvalSummary,
    InsufficientDataError,
    NotConvergedError,
    PerformanceCurve,
    adaptive_efficiency,
    asymptotic_adaptive_performance,
    moving_average,
    one_shot_adaptive_performance,
    resilience,
)
from .ontology import OracleInapplicableError, optimal_plan_length, validate_declaration

log = logging.getLogger(__name__)

AGENTS = ("q_learning", "random")
METRIC_COLUMNS = (
    "run_id", "novelty", "seed", "resilience", "one_shot", "asymptotic",
    "adaptive_efficiency", "converged", "injection_episode", "injection_timestep",
)
# Log block labels. Training episodes are "train"; the rest are evaluations.
BLOCKS = ("train", "pre_injection", "post_injection", "one_shot", "cadence", "random", "final")


@dataclass(frozen=True)
class AgentSpec:
    name: str = "q_learning"
    alpha: float = 0.1
    gamma: float = 0.95
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_fraction: float = 0.2
    epsilon_hold_fraction: float = 0.0  # share of the budget spent at epsilon_start first
    rewarm: float | None = 0.5


@dataclass(frozen=True)
class ExperimentConfig:
    layout: str | Mapping[str, Any]
    novelty: str
    novelty_params: Mapping[str, Any] = field(default_factory=dict)
    injection_episode: int = 1
    agent: AgentSpec = AgentSpec()
    total_timesteps: int = 100_000
    eval_cadence: int = 50
    eval_episodes: int = 20
    convergence_window: int = 100
    convergence_tolerance: float = 0.05
    convergence_min_tail: int | None = None  # None: half the window
    smoothing_window: int = 100
    curve_points: int = 200
    seeds: tuple[int, ...] = (0,)
    output_dir: str = "runs"
    run_id: str = "run"
    workers: int = 1
    log_wall_clock: bool = False

    @property
    def min_tail(self) -> int:
        if self.convergence_min_tail is not None:
            return self.convergence_min_tail
        return max(1, self.convergence_window // 2)

    def to_dict(self) -> dict[str, Any]:
        return {
            "run_id": self.run_id,
            "layout": self.layout if isinstance(self.layout, str) else dict(self.layout),
            "novelty": {"name": self.novelty, "params": _plain(self.novelty_params)},
            "schedule": {"injection_episode": self.injection_episode},
            "agent": asdict(self.agent),
            "total_timesteps": self.total_timesteps,
            "evaluation": {"cadence": self.eval_cadence, "episodes": self.eval_episodes},
            "convergence": {
                "window": self.convergence_window,
                "tolerance": self.convergence_tolerance,
                "min_tail": self.min_tail,
            },
            "plot": {"smoothing_window": self.smoothing_window, "points": self.curve_points},
            "seeds": list(self.seeds),
            "output_dir": self.output_dir,
            "workers": self.workers,
            "log_wall_clock": self.log_wall_clock,
        }


def _plain(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, frozenset, set)):
        return [_plain(v) for v in value]
    return value


_TOP_KEYS = {
    "run_id", "layout", "novelty", "schedule", "agent", "total_timesteps", "evaluation",
    "convergence", "plot", "seeds", "output_dir", "workers", "log_wall_clock",
}


def _section(data: Mapping[str, Any], key: str, allowed: set[str]) -> dict[str, Any]:
    section = data.get(key) or {}
    if not isinstance(section, Mapping):
        raise ConfigurationError(f"{key}: expected a mapping, got {type(section).__name__}")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigurationError(f"{key}: unknown fields {sorted(unknown)}")
    return dict(section)


def config_from_dict(data: Mapping[str, Any], base_dir: Path | None = None) -> ExperimentConfig:
    """Parse a config mapping. Shape errors raise; semantic checks are in
    :func:`validate_config`."""
    if not isinstance(data, Mapping):
        raise ConfigurationError("experiment config must be a mapping")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigurationError(f"unknown config fields: {sorted(unknown)}")
    for key in ("layout", "novelty", "total_timesteps", "seeds"):
        if key not in data:
            raise ConfigurationError(f"missing required field {key!r}")

    novelty = data["novelty"]
    if isinstance(novelty, str):
        novelty = {"name": novelty}
    novelty = _section({"novelty": novelty}, "novelty", {"name", "params"})
    if "name" not in novelty:
        raise ConfigurationError("novelty: missing 'name'")
    schedule = _section(data, "schedule", {"injection_episode"})
    agent = _section(data, "agent", set(AgentSpec.__dataclass_fields__))
    evaluation = _section(data, "evaluation", {"cadence", "episodes"})
    convergence = _section(data, "convergence", {"window", "tolerance", "min_tail"})
    plot = _section(data, "plot", {"smoothing_window", "points"})

    seeds = data["seeds"]
    if isinstance(seeds, int):
        seeds = [seeds]
    output_dir = str(data.get("output_dir", "runs"))
    if base_dir is not None and not Path(output_dir).is_absolute():
        output_dir = str(base_dir / output_dir)
    try:
        return ExperimentConfig(
            layout=data["layout"],
            novelty=str(novelty["name"]),
            novelty_params=dict(novelty.get("params") or {}),
            injection_episode=schedule.get("injection_episode", 1),
            agent=AgentSpec(**agent),
            total_timesteps=data["total_timesteps"],
            eval_cadence=evaluation.get("cadence", 50),
            eval_episodes=evaluation.get("episodes", 20),
            convergence_window=convergence.get("window", 100),
            convergence_tolerance=convergence.get("tolerance", 0.05),
            convergence_min_tail=convergence.get("min_tail"),
            smoothing_window=plot.get("smoothing_window", 100),
            curve_points=plot.get("points", 200),
            seeds=tuple(seeds),
            output_dir=output_dir,
            run_id=str(data.get("run_id", "run")),
            workers=data.get("workers", 1),
            log_wall_clock=bool(data.get("log_wall_clock", False)),
        )
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a YAML experiment file. ``output_dir`` is relative to the working directory."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: not valid YAML: {exc}") from exc
    if isinstance(data, Mapping) and "run_id" not in data:
        data = {**data, "run_id": path.stem}
    return config_from_dict(data)


def resolve_layout(config: ExperimentConfig) -> EnvironmentConfig:
    if isinstance(config.layout, str):
        return get_layout(config.layout)
    if isinstance(config.layout, Mapping):
        return layout_from_dict(config.layout)
    raise ConfigurationError(f"layout: expected a name or a mapping, got {config.layout!r}")


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _is_int(value: Any) -> bool:
    return isinstance(value, (int, np.integer)) and not isinstance(value, bool)


def validate_config(config: ExperimentConfig) -> ValidationReport:
    """Every cross-field check, collected rather than raised."""
    report = ValidationReport()
    bad = report.violations.append

    if not _is_int(config.total_timesteps) or config.total_timesteps <= 0:
        bad(f"total_timesteps must be a positive integer, got {config.total_timesteps!r}")
    if not config.seeds:
        bad("seeds must not be empty")
    elif not all(_is_int(s) and s >= 0 for s in config.seeds):
        bad(f"seeds must be non-negative integers, got {list(config.seeds)}")
    elif len(set(config.seeds)) != len(config.seeds):
        bad(f"seeds must be distinct, got {list(config.seeds)}")
    try:
        NoveltySchedule(config.injection_episode)
    except ScheduleError as exc:
        bad(str(exc))
    if not _is_int(config.eval_cadence) or config.eval_cadence < 1:
        bad(f"evaluation.cadence must be >= 1, got {config.eval_cadence!r}")
    if not _is_int(config.eval_episodes) or config.eval_episodes < 1:
        bad(f"evaluation.episodes must be >= 1, got {config.eval_episodes!r}")
    if not _is_int(config.convergence_window) or config.convergence_window < 1:
        bad(f"convergence.window must be >= 1, got {config.convergence_window!r}")
    elif not 1 <= config.min_tail <= config.convergence_window:
        bad(f"convergence.min_tail must lie in [1, window], got {config.min_tail}")
    if not config.convergence_tolerance > 0:
        bad(f"convergence.tolerance must be > 0, got {config.convergence_tolerance!r}")
    if not _is_int(config.smoothing_window) or config.smoothing_window < 1:
        bad(f"plot.smoothing_window must be >= 1, got {config.smoothing_window!r}")
    if not _is_int(config.curve_points) or config.curve_points < 2:
        bad(f"plot.points must be >= 2, got {config.curve_points!r}")
    if not _is_int(config.workers) or config.workers < 1:
        bad(f"workers must be >= 1, got {config.workers!r}")

    a = config.agent
    if a.name not in AGENTS:
        bad(f"agent.name must be one of {list(AGENTS)}, got {a.name!r}")
    if not 0.0 < a.alpha <= 1.0:
        bad(f"agent.alpha must lie in (0, 1], got {a.alpha}")
    if not 0.0 <= a.gamma < 1.0:
        bad(f"agent.gamma must lie in [0, 1), got {a.gamma}")
    for name in ("epsilon_start", "epsilon_end", "epsilon_decay_fraction", "epsilon_hold_fraction"):
        if not 0.0 <= getattr(a, name) <= 1.0:
            bad(f"agent.{name} must lie in [0, 1], got {getattr(a, name)}")
    if a.rewarm is not None and not 0.0 <= a.rewarm <= 1.0:
        bad(f"agent.rewarm must lie in [0, 1] or be null, got {a.rewarm}")
    if a.epsilon_hold_fraction + a.epsilon_decay_fraction > 1.0:
        bad("agent.epsilon_hold_fraction + agent.epsilon_decay_fraction must not exceed 1")

    try:
        pre = resolve_layout(config)
        pre.validate()
    except ConfigurationError as exc:
        bad(f"layout: {exc}")
        return report
    try:
        entry = get_entry(config.novelty)
    except UnknownNoveltyError as exc:
        bad(str(exc))
        return report
    missing = entry.missing_features(pre)
    if missing:
        bad(f"{entry.name} needs {', '.join(missing)} in layout {pre.name!r}")
        return report
    try:
        apply_novelty(pre, entry.describe(**config.novelty_params))
    except (TransformError, ConfigurationError, TypeError) as exc:
        bad(f"novelty: {exc}")
        return report

    if _is_int(config.total_timesteps) and _is_int(config.injection_episode):
        try:
            shortest = optimal_plan_length(pre) or 1
        except OracleInapplicableError:
            shortest = 1
        if config.injection_episode > config.total_timesteps // shortest:
            report.warnings.append(
                f"injection_episode {config.injection_episode} cannot be reached: "
                f"{config.total_timesteps} timesteps allow at most "
                f"{config.total_timesteps // shortest} episodes of length {shortest}"
            )
        elif config.injection_episode > config.total_timesteps // pre.max_steps:
            report.warnings.append(
                f"injection_episode {config.injection_episode} is beyond "
                f"{config.total_timesteps // pre.max_steps} episodes, the count if every "
                f"episode ran to max_steps={pre.max_steps}; injection may not happen"
            )
    return report


def check_config(config: ExperimentConfig) -> ValidationReport:
    report = validate_config(config)
    if not report.ok:
        raise ConfigurationError("; ".join(report.violations))
    for warning in report.warnings:
        log.warning(warning)
    return report


def build_agent(spec: AgentSpec, total_timesteps: int):
    if spec.name == "random":
        return RandomAgent()
    schedule = EpsilonSchedule(
        spec.epsilon_start,
        spec.epsilon_end,
        max(1, int(round(spec.epsilon_decay_fraction * total_timesteps))),
        offset=int(round(spec.epsilon_hold_fraction * total_timesteps)),
    )
    return QLearningAgent(spec.alpha, spec.gamma, schedule, spec.rewarm)


def _play(config: EnvironmentConfig, policy, rng: np.random.Generator) -> tuple[float, int]:
    world = generate_grid(config, rng)
    obs = world.observe()
    reward = 0.0
    while not world.done:
        result = world.step(policy.act(obs, rng))
        obs, reward = result.observation, result.reward
    return float(reward), world.step_count


def _deterministic(config: EnvironmentConfig, policy) -> bool:
    return (
        isinstance(policy, FrozenQPolicy)
        and policy.epsilon == 0.0
        and config.dynamics.determinism_p == 1.0
        and config.layout_policy == "fixed"
        and config.agent_start != "random"
    )


def evaluate(
    config: EnvironmentConfig, policy, seeds: Sequence[int]
) -> list[tuple[float, int]]:
    """Play one episode per evaluation seed; each episode owns its generator.

    When neither the world nor the policy can vary, one episode stands in for
    all of them (the outcome is identical by construction).
    """
    if _deterministic(config, policy):
        return [_play(config, policy, np.random.default_rng(seeds[0]))] * len(seeds)
    return [_play(config, policy, np.random.default_rng(s)) for s in seeds]


@dataclass
class SeedResult:
    seed: int
    log_path: str
    records: list[dict[str, Any]]
    injection_timestep: int | None
    metrics: dict[str, Any]


def _record(
    episode: int, timestep: int, ret: float, steps: int, post: bool,
    evaluation: bool, seed: int, block: str, wall_ms: float | None,
) -> dict[str, Any]:
    return {
        "episode": episode,
        "timestep": timestep,
        "return": ret,
        "steps": steps,
        "post_novelty": post,
        "evaluation": evaluation,
        "seed": seed,
        "wall_ms": wall_ms,
        "block": block,
    }


def run_seed(config: ExperimentConfig, seed: int) -> SeedResult:
    """Train one seed end to end and write its episode log."""
    pre = resolve_layout(config)
    descriptor = make_novelty(config.novelty, **config.novelty_params)
    env_ss, agent_ss, eval_ss = np.random.SeedSequence(seed).spawn(3)
    # Every evaluation block replays the same seeds, so blocks are paired.
    eval_seeds = [int(s) for s in eval_ss.generate_state(config.eval_episodes, dtype=np.uint64)]
    env = wrap(pre, descriptor, NoveltySchedule(config.injection_episode), np.random.default_rng(env_ss))
    agent_rng = np.random.default_rng(agent_ss)
    agent = build_agent(config.agent, config.total_timesteps)

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"episodes_seed{seed}.jsonl"
    records: list[dict[str, Any]] = []
    t_start = time.perf_counter()
    clock = config.log_wall_clock

    def emit(block_records: list[dict[str, Any]]) -> None:
        records.extend(block_records)

    def eval_block(cfg: EnvironmentConfig, policy, block: str, episode: int, t: int, post: bool):
        t0 = time.perf_counter()
        results = evaluate(cfg, policy, eval_seeds)
        ms = (time.perf_counter() - t0) * 1000.0 / len(results) if clock else None
        emit([_record(episode, t, r, n, post, True, seed, block, ms) for r, n in results])

    t = 0
    episode = 0
    total = config.total_timesteps
    inj = config.injection_episode
    while t < total:
        if episode + 1 == inj:
            frozen = agent.freeze()
            eval_block(env.pre_config, frozen, "pre_injection", episode, t, False)
            eval_block(env.post_config, frozen, "post_injection", episode, t, True)
            eval_block(env.post_config, RandomAgent(), "random", episode, t, True)
            if hasattr(agent, "on_novelty"):
                agent.on_novelty()
        t0 = time.perf_counter()
        obs = env.reset()
        world = env.inner
        episode += 1
        reward, done = 0.0, False
        while t < total:
            action = agent.act(obs, agent_rng)
            result = env.step(action)
            t += 1
            reward = result.reward
            done = result.terminated or result.truncated
            agent.observe(obs, action, reward, result.observation, result.terminated)
            obs = result.observation
            if done:
                break
        if not done:
            break  # cut off by the budget; never recorded
        post = env.is_post_novelty
        ms = (time.perf_counter() - t0) * 1000.0 if clock else None
        emit([_record(episode, t, float(reward), world.step_count, post, False, seed, "train", ms)])
        if post and episode == inj:
            eval_block(env.post_config, agent.freeze(), "one_shot", episode, t, True)
        elif episode % config.eval_cadence == 0:
            eval_block(env.active_config, agent.freeze(), "cadence", episode, t, post)
    eval_block(env.active_config, agent.freeze(), "final", episode, t, env.is_post_novelty)

    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    log.info(
        "seed %d: %d episodes, %d timesteps in %.1fs", seed, episode, t,
        time.perf_counter() - t_start,
    )
    metrics = compute_metrics(
        records, config.convergence_window, config.convergence_tolerance, config.min_tail
    )
    metrics.update(run_id=config.run_id, novelty=descriptor.name, seed=seed)
    return SeedResult(seed, str(path), records, env.injection_timestep, metrics)


def training_curve(records: Sequence[Mapping[str, Any]]) -> PerformanceCurve:
    return PerformanceCurve(
        CurveRecord(r["episode"], r["timestep"], r["return"], r["post_novelty"])
        for r in records
        if not r["evaluation"]
    )


def eval_blocks(records: Sequence[Mapping[str, Any]]) -> list[tuple[str, dict[str, Any], EvalSummary]]:
    """Group consecutive evaluation records into (label, first record, summary)."""
    blocks: list[tuple[str, dict[str, Any], list[float]]] = []
    prev = None
    for r in records:
        if not r["evaluation"]:
            prev = None
            continue
        key = (r["block"], r["episode"], r["timestep"])
        if key != prev:
            blocks.append((r["block"], dict(r), []))
            prev = key
        blocks[-1][2].append(r["return"])
    return [(label, first, EvalSummary.from_returns(rets)) for label, first, rets in blocks]


def evaluation_curve(records: Sequence[Mapping[str, Any]]) -> PerformanceCurve:
    """Frozen-policy evaluation means in order, indexed by block number.

    The random-agent block is left out: it is a reference, not the learner.
    """
    points = []
    for i, (label, first, summary) in enumerate(eval_blocks(records)):
        if label != "random":
            points.append(CurveRecord(i, first["timestep"], summary.mean, first["post_novelty"]))
    return PerformanceCurve(points)


def compute_metrics(
    records: Sequence[Mapping[str, Any]],
    window: int = 100,
    tolerance: float = 0.05,
    min_tail: int = 50,
) -> dict[str, Any]:
    """Metric summary of one seed's log. Missing pieces come back as ``None``."""
    out: dict[str, Any] = {
        "resilience": None, "one_shot": None, "asymptotic": None,
        "adaptive_efficiency": None, "converged": False,
        "injection_episode": None, "injection_timestep": None,
    }
    train = training_curve(records)
    post_train = [r for r in train if r.post_novelty]
    if post_train:
        first = post_train[0]
        out["injection_episode"] = first.episode
        out["injection_timestep"] = train.start_timestep(train.records.index(first))
    blocks = {label: summary for label, _, summary in eval_blocks(records)}
    random_eval = blocks.get("random")
    if "post_injection" in blocks and random_eval is not None:
        out["resilience"] = resilience(blocks["post_injection"], random_eval)
    try:
        out["one_shot"] = one_shot_adaptive_performance(evaluation_curve(records))
    except InsufficientDataError:
        pass
    if post_train and random_eval is not None:
        try:
            out["asymptotic"] = asymptotic_adaptive_performance(
                train, random_eval, window, tolerance, min_tail
            )
            out["adaptive_efficiency"] = adaptive_efficiency(train, window, tolerance, min_tail)
            out["converged"] = True
        except NotConvergedError as exc:
            out["asymptotic"] = exc.tail_mean - random_eval.mean
        except InsufficientDataError:
            pass
    return out


def read_log(path: str | Path) -> list[dict[str, Any]]:
    try:
        with open(path) as fh:
            return [json.loads(line) for line in fh if line.strip()]
    except OSError as exc:
        raise ConfigurationError(f"cannot read log {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: malformed log line: {exc}") from exc


def emit_plot_data(
    logs: Mapping[int, Sequence[Mapping[str, Any]]],
    path: str | Path | None = None,
    smoothing: int = 100,
    points: int = 200,
) -> list[dict[str, Any]]:
    """Smoothed training return against timestep, per seed and averaged.

    Each seed's returns get a trailing ``smoothing``-episode mean; the curve
    is then read off at ``points`` evenly spaced timesteps (the value of the
    latest episode finished by then). ``injection_timestep`` is the mean over
    seeds that reached the injection.
    """
    if not logs or not any(
        not r["evaluation"] for records in logs.values() for r in records
    ):
        raise InsufficientDataError("no training episodes to plot")
    seeds = sorted(logs)
    series = {}
    injections = []
    horizon = 0
    for s in seeds:
        train = training_curve(logs[s])
        steps = np.array([r.timestep for r in train], dtype=np.int64)
        series[s] = (steps, moving_average(train.returns, smoothing))
        if len(steps):
            horizon = max(horizon, int(steps[-1]))
        post = [i for i, r in enumerate(train.records) if r.post_novelty]
        if post:
            injections.append(train.start_timestep(post[0]))
    injection = float(np.mean(injections)) if injections else None
    grid = np.unique(np.linspace(0, horizon, points).round().astype(np.int64))

    rows = []
    for t in grid:
        row: dict[str, Any] = {"timestep": int(t)}
        values = []
        for s in seeds:
            steps, smooth = series[s]
            i = int(np.searchsorted(steps, t, side="right")) - 1
            v = float(smooth[i]) if i >= 0 else None
            row[f"seed_{s}"] = v
            if v is not None:
                values.append(v)
        row["mean"] = float(np.mean(values)) if values else None
        row["injection_timestep"] = injection
        rows.append(row)
    if path is not None:
        columns = ["timestep", *[f"seed_{s}" for s in seeds], "mean", "injection_timestep"]
        _write_csv(path, columns, rows)
    return rows


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else ""
    return str(value)


def _write_csv(path: str | Path, columns: Sequence[str], rows: Sequence[Mapping[str, Any]]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    try:
        Path(path).write_text(buf.getvalue())
    except OSError as exc:
        raise ConfigurationError(f"cannot write {path}: {exc}") from exc


def metrics_csv(rows: Sequence[Mapping[str, Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRIC_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in METRIC_COLUMNS])
    return buf.getvalue()


def classify(config: ExperimentConfig) -> list[dict[str, Any]]:
    """Oracle check of the configured novelty's declared solution effect."""
    pre = resolve_layout(config)
    descriptor = make_novelty(config.novelty, **config.novelty_params)
    return [validate_declaration(descriptor, pre).as_record()]


@dataclass
class RunResult:
    output_dir: Path
    seeds: list[SeedResult]
    metrics: list[dict[str, Any]]
    classification: list[dict[str, Any]]


def run_experiment(config: ExperimentConfig) -> RunResult:
    """Validate, run every seed, then write metrics, curve, classification and manifest."""
    check_config(config)
    out = Path(config.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(f"cannot create output directory {out}: {exc}") from exc

    if config.workers > 1 and len(config.seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(config.workers, len(config.seeds))) as pool:
            results = list(pool.map(run_seed, [config] * len(config.seeds), config.seeds))
    else:
        results = [run_seed(config, s) for s in config.seeds]

    metrics = [r.metrics for r in results]
    (out / "metrics.csv").write_text(metrics_csv(metrics))
    emit_plot_data(
        {r.seed: r.records for r in results}, out / "curve.csv",
        config.smoothing_window, config.curve_points,
    )
    classification = classify(config)
    with open(out / "classification.jsonl", "w") as fh:
        for rec in classification:
            fh.write(json.dumps(rec) + "\n")
    manifest = {
        "config": config.to_dict(),
        "seeds": {
            str(r.seed): {
                "log": Path(r.log_path).name,
                "episodes": sum(1 for x in r.records if not x["evaluation"]),
                "timesteps": max((x["timestep"] for x in r.records), default=0),
                "injection_episode": config.injection_episode,
                "injection_timestep": r.injection_timestep,
            }
            for r in results
        },
    }
    (out / "run.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return RunResult(out, results, metrics, classification)
