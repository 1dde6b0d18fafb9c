"""Grid-world dynamics.

Worlds are built from an immutable :class:`EnvironmentConfig`. Everything a
novelty may alter about how actions behave lives in :class:`DynamicsParams`,
so a post-novelty world is just another config.

Coordinates are ``(x, y)`` with ``x`` the column and ``y`` the row, origin at
the top-left. Directions follow the usual grid-world convention: 0 = east,
1 = south, 2 = west, 3 = north.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Iterator, Literal, Union

import numpy as np


class ConfigurationError(ValueError):
    """An environment config violates one of its invariants."""


class UsageError(RuntimeError):
    """An operation was called in a state that does not allow it."""


class Action(IntEnum):
    TURN_LEFT = 0
    TURN_RIGHT = 1
    FORWARD = 2
    PICKUP = 3
    DROP = 4
    TOGGLE = 5
    DONE = 6


NUM_ACTIONS = len(Action)
MOVEMENT_ACTIONS = (Action.TURN_LEFT, Action.TURN_RIGHT, Action.FORWARD)


class Direction(IntEnum):
    EAST = 0
    SOUTH = 1
    WEST = 2
    NORTH = 3


DIR_VEC = ((1, 0), (0, 1), (-1, 0), (0, -1))

COLORS = ("red", "green", "blue", "purple", "yellow", "grey")
COLOR_CODE = {c: i for i, c in enumerate(COLORS)}

OBJECT_KINDS = ("wall", "floor", "door", "key", "ball", "goal", "lava")
PICKUP_KINDS = frozenset({"key", "ball"})
# Kinds the agent cannot share a cell with. Closed doors are handled separately.
BLOCKING_KINDS = frozenset({"wall", "key", "ball"})

KIND_CODE = {
    "unseen": 0,
    "empty": 1,
    "wall": 2,
    "floor": 3,
    "door": 4,
    "key": 5,
    "ball": 6,
    "goal": 8,
    "lava": 9,
    "agent": 10,
}
DEFAULT_COLOR = {
    "wall": "grey",
    "floor": "grey",
    "door": "yellow",
    "key": "yellow",
    "ball": "blue",
    "goal": "green",
    "lava": "red",
}
DOOR_OPEN, DOOR_CLOSED, DOOR_LOCKED = 0, 1, 2

# Inventory summary slots, one per (kind, color).
INVENTORY_SLOTS = tuple((k, c) for k in ("key", "ball") for c in COLORS)
_INVENTORY_INDEX = {slot: i for i, slot in enumerate(INVENTORY_SLOTS)}


@dataclass(frozen=True)
class DynamicsParams:
    """Action dynamics that novelties may change.

    ``action_repetition`` is indexed by :class:`Action`. ``burdening`` is an
    ``(empty_forward_step, laden_repetition)`` pair: with an empty inventory a
    forward command covers ``forward_step * empty_forward_step`` cells, while
    carrying anything it needs ``laden_repetition`` times as many consecutive
    issuances.
    """

    forward_step: int = 1
    action_repetition: tuple[int, ...] = (1,) * NUM_ACTIONS
    action_radius: int = 1
    determinism_p: float = 1.0
    color_allowlist: frozenset[str] | None = None
    lava_harmful: bool = True
    burdening: tuple[int, int] | None = None
    inventory_capacity: int = 1

    def validate(self) -> None:
        if self.forward_step < 1:
            raise ConfigurationError(f"forward_step must be >= 1, got {self.forward_step}")
        if len(self.action_repetition) != NUM_ACTIONS:
            raise ConfigurationError("action_repetition needs one entry per action")
        if min(self.action_repetition) < 1:
            raise ConfigurationError(f"repetition counts must be >= 1: {self.action_repetition}")
        if self.action_radius < 0:
            raise ConfigurationError(f"action_radius must be >= 0, got {self.action_radius}")
        if not 0.0 < self.determinism_p <= 1.0:
            raise ConfigurationError(f"determinism_p must lie in (0, 1], got {self.determinism_p}")
        if self.color_allowlist is not None:
            if not self.color_allowlist:
                raise ConfigurationError("color_allowlist must not be empty")
            unknown = set(self.color_allowlist) - set(COLORS)
            if unknown:
                raise ConfigurationError(f"unknown colors in allowlist: {sorted(unknown)}")
        if self.burdening is not None and min(self.burdening) < 1:
            raise ConfigurationError(f"burdening parameters must be >= 1: {self.burdening}")
        if self.inventory_capacity < 1:
            raise ConfigurationError("inventory_capacity must be >= 1")

    def repetition(self, action: Action, laden: bool = False) -> int:
        k = self.action_repetition[action]
        if laden and action == Action.FORWARD and self.burdening is not None:
            k *= self.burdening[1]
        return k

    def forward_cells(self, laden: bool) -> int:
        if self.burdening is not None and not laden:
            return self.forward_step * self.burdening[0]
        return self.forward_step

    def allows(self, color: str) -> bool:
        return self.color_allowlist is None or color in self.color_allowlist

    def with_repetition(self, action: Action, k: int) -> DynamicsParams:
        reps = list(self.action_repetition)
        reps[action] = k
        return replace(self, action_repetition=tuple(reps))


@dataclass(frozen=True)
class DoorSpec:
    """Unlocking requirement of one door."""

    id: str
    key_color: str
    keys_required: int = 1
    locked: bool = True


@dataclass(frozen=True)
class Placement:
    kind: str
    x: int
    y: int
    color: str = ""
    door: DoorSpec | None = None

    def __post_init__(self) -> None:
        if not self.color:
            object.__setattr__(self, "color", DEFAULT_COLOR.get(self.kind, "grey"))

    @property
    def pos(self) -> tuple[int, int]:
        return (self.x, self.y)


AgentStart = Union[tuple[int, int, int], Literal["random"]]


@dataclass(frozen=True)
class EnvironmentConfig:
    """Declarative description of a world and its dynamics.

    ``layout_policy="random"`` re-samples the goal position on every reset;
    ``agent_start="random"`` samples the start cell and heading. When
    ``perimeter_walls`` is set, border cells without a placement become walls.
    ``max_steps`` defaults to ``4 * width * height``.
    """

    width: int
    height: int
    placements: tuple[Placement, ...]
    agent_start: AgentStart = (1, 1, 0)
    max_steps: int = 0
    dynamics: DynamicsParams = field(default_factory=DynamicsParams)
    layout_policy: Literal["fixed", "random"] = "fixed"
    perimeter_walls: bool = True
    view: Literal["full", "egocentric"] = "full"
    view_size: int = 7
    name: str = ""

    def __post_init__(self) -> None:
        if not self.max_steps:
            object.__setattr__(self, "max_steps", 4 * self.width * self.height)

    @property
    def doors(self) -> dict[str, DoorSpec]:
        return {p.door.id: p.door for p in self.placements if p.door is not None}

    def door_placement(self, door_id: str) -> Placement:
        for p in self.placements:
            if p.door is not None and p.door.id == door_id:
                return p
        raise KeyError(door_id)

    def placements_of(self, kind: str) -> list[Placement]:
        return [p for p in self.placements if p.kind == kind]

    def border(self, x: int, y: int) -> bool:
        return x in (0, self.width - 1) or y in (0, self.height - 1)

    def occupied(self) -> set[tuple[int, int]]:
        cells = {p.pos for p in self.placements}
        if self.perimeter_walls:
            cells |= {
                (x, y)
                for y in range(self.height)
                for x in range(self.width)
                if self.border(x, y)
            }
        return cells

    def free_cells(self) -> list[tuple[int, int]]:
        """Empty cells in row-major order, excluding a fixed agent start."""
        taken = self.occupied()
        if self.agent_start != "random":
            taken.add(tuple(self.agent_start[:2]))
        return [
            (x, y)
            for y in range(self.height)
            for x in range(self.width)
            if (x, y) not in taken
        ]

    def validate(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ConfigurationError(f"grid must be at least 1x1, got {self.width}x{self.height}")
        if self.max_steps < 1:
            raise ConfigurationError(f"max_steps must be positive, got {self.max_steps}")
        if self.layout_policy not in ("fixed", "random"):
            raise ConfigurationError(f"unknown layout policy {self.layout_policy!r}")
        if self.view not in ("full", "egocentric") or self.view_size < 1:
            raise ConfigurationError(f"bad view settings {self.view!r}/{self.view_size}")
        self.dynamics.validate()

        seen: dict[tuple[int, int], Placement] = {}
        door_ids: set[str] = set()
        for p in self.placements:
            if p.kind not in OBJECT_KINDS:
                raise ConfigurationError(f"unknown object kind {p.kind!r} at {p.pos}")
            if p.color not in COLOR_CODE:
                raise ConfigurationError(f"unknown color {p.color!r} at {p.pos}")
            if not (0 <= p.x < self.width and 0 <= p.y < self.height):
                raise ConfigurationError(f"{p.kind} at {p.pos} is out of bounds")
            if p.pos in seen:
                raise ConfigurationError(
                    f"{p.kind} at {p.pos} overlaps {seen[p.pos].kind}"
                )
            seen[p.pos] = p
            if p.kind == "door":
                if p.door is None:
                    raise ConfigurationError(f"door at {p.pos} has no door spec")
                if p.door.id in door_ids:
                    raise ConfigurationError(f"duplicate door id {p.door.id!r}")
                door_ids.add(p.door.id)
            elif p.door is not None:
                raise ConfigurationError(f"{p.kind} at {p.pos} carries a door spec")

        goals = self.placements_of("goal")
        if len(goals) != 1:
            raise ConfigurationError(f"expected exactly one goal, found {len(goals)}")

        for spec in self.doors.values():
            if spec.key_color not in COLOR_CODE:
                raise ConfigurationError(f"door {spec.id!r}: unknown key color {spec.key_color!r}")
            if spec.keys_required < 1:
                raise ConfigurationError(f"door {spec.id!r}: keys_required must be >= 1")
            if spec.locked:
                keys = sum(1 for p in self.placements_of("key") if p.color == spec.key_color)
                if keys < spec.keys_required:
                    raise ConfigurationError(
                        f"door {spec.id!r} needs {spec.keys_required} {spec.key_color} key(s), "
                        f"layout has {keys}"
                    )

        if self.agent_start == "random":
            if not self.free_cells():
                raise ConfigurationError("no free cell for a random agent start")
        else:
            x, y, d = self.agent_start
            if not (0 <= x < self.width and 0 <= y < self.height):
                raise ConfigurationError(f"agent start {(x, y)} is out of bounds")
            if d not in range(4):
                raise ConfigurationError(f"agent direction must be 0..3, got {d}")
            under = seen.get((x, y))
            if under is not None and under.kind != "floor":
                raise ConfigurationError(f"agent start {(x, y)} overlaps {under.kind}")
            if self.perimeter_walls and self.border(x, y) and under is None:
                raise ConfigurationError(f"agent start {(x, y)} overlaps the perimeter wall")


@dataclass(slots=True)
class WorldObject:
    kind: str
    color: str
    door_id: str = ""
    key_color: str = ""
    keys_required: int = 1
    locked: bool = False
    is_open: bool = False

    def blocks(self) -> bool:
        if self.kind == "door":
            return not self.is_open
        return self.kind in BLOCKING_KINDS

    def encode(self) -> tuple[int, int, int]:
        state = 0
        if self.kind == "door":
            state = DOOR_OPEN if self.is_open else (DOOR_LOCKED if self.locked else DOOR_CLOSED)
        return (KIND_CODE[self.kind], COLOR_CODE[self.color], state)


@dataclass(frozen=True)
class Observation:
    """Symbolic view of the world: a ``(rows, cols, 3)`` code grid holding
    (kind, color, state) per cell with the agent drawn in, plus the heading
    and per-(kind, color) inventory counts."""

    grid: np.ndarray
    direction: int
    inventory: tuple[int, ...]

    def key(self) -> bytes:
        return self.grid.tobytes() + bytes((self.direction, *self.inventory))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Observation):
            return NotImplemented
        return self.key() == other.key() and self.grid.shape == other.grid.shape

    def __hash__(self) -> int:
        return hash(self.key())


@dataclass(frozen=True)
class StepResult:
    observation: Observation
    reward: float
    terminated: bool
    truncated: bool
    info: dict = field(default_factory=dict)


class GridWorld:
    """Live simulation state. Build with :func:`generate_grid`."""

    def __init__(
        self,
        config: EnvironmentConfig,
        cells: list[list[WorldObject | None]],
        agent_pos: tuple[int, int],
        agent_dir: int,
        rng: np.random.Generator,
    ) -> None:
        self.config = config
        self.cells = cells
        self.agent_pos = agent_pos
        self.agent_dir = agent_dir
        self.rng = rng
        self.inventory: list[WorldObject] = []
        self.step_count = 0
        self.ledger: tuple[int, int] = (-1, 0)
        self.terminated = False
        self.truncated = False
        self._encoded: np.ndarray | None = None

    @property
    def width(self) -> int:
        return self.config.width

    @property
    def height(self) -> int:
        return self.config.height

    @property
    def done(self) -> bool:
        return self.terminated or self.truncated

    @property
    def rng_state(self) -> dict:
        return self.rng.bit_generator.state

    def get(self, x: int, y: int) -> WorldObject | None:
        return self.cells[y][x]

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.config.width and 0 <= y < self.config.height

    def front(self) -> tuple[int, int]:
        dx, dy = DIR_VEC[self.agent_dir]
        return (self.agent_pos[0] + dx, self.agent_pos[1] + dy)

    def objects(self) -> Iterator[tuple[int, int, WorldObject]]:
        for y, row in enumerate(self.cells):
            for x, obj in enumerate(row):
                if obj is not None:
                    yield x, y, obj

    def clone(self) -> GridWorld:
        return copy.deepcopy(self)

    def reset(self) -> Observation:
        """Regenerate the grid from the config, drawing from this world's rng."""
        fresh = generate_grid(self.config, self.rng)
        self.__dict__.update(fresh.__dict__)
        return self.observe()

    def step(self, action: int) -> StepResult:
        if self.done:
            raise UsageError("step() called on a finished episode; call reset() first")
        action = Action(action)
        dyn = self.config.dynamics
        self.step_count += 1

        executed = action
        slipped = False
        if dyn.determinism_p < 1.0 and self.rng.random() >= dyn.determinism_p:
            slipped = True
            executed = MOVEMENT_ACTIONS[int(self.rng.integers(len(MOVEMENT_ACTIONS)))]

        last, count = self.ledger
        count = count + 1 if last == executed else 1
        reward = 0.0
        applied = count >= dyn.repetition(executed, laden=bool(self.inventory))
        if applied:
            self.ledger = (int(executed), 0)
            reward = self._apply(executed)
        else:
            self.ledger = (int(executed), count)

        if not self.terminated and self.step_count >= self.config.max_steps:
            self.truncated = True
        info = {"executed": executed, "slipped": slipped, "applied": applied}
        return StepResult(self.observe(), reward, self.terminated, self.truncated, info)

    def _apply(self, action: Action) -> float:
        dyn = self.config.dynamics
        if action == Action.TURN_LEFT:
            self.agent_dir = (self.agent_dir - 1) % 4
        elif action == Action.TURN_RIGHT:
            self.agent_dir = (self.agent_dir + 1) % 4
        elif action == Action.FORWARD:
            dx, dy = DIR_VEC[self.agent_dir]
            for _ in range(dyn.forward_cells(laden=bool(self.inventory))):
                nx, ny = self.agent_pos[0] + dx, self.agent_pos[1] + dy
                if not self.in_bounds(nx, ny):
                    break
                obj = self.cells[ny][nx]
                if obj is not None and obj.blocks():
                    break
                self.agent_pos = (nx, ny)
                if obj is None:
                    continue
                if obj.kind == "goal":
                    self.terminated = True
                    return 1.0 - 0.9 * (self.step_count / self.config.max_steps)
                if obj.kind == "lava" and dyn.lava_harmful:
                    self.terminated = True
                    return 0.0
        elif action == Action.PICKUP:
            if len(self.inventory) < dyn.inventory_capacity:
                target = self._target(PICKUP_KINDS)
                if target is not None:
                    x, y = target
                    self.inventory.append(self.cells[y][x])
                    self.cells[y][x] = None
                    self._encoded = None
        elif action == Action.DROP:
            fx, fy = self.front()
            if self.inventory and self.in_bounds(fx, fy) and self.cells[fy][fx] is None:
                self.cells[fy][fx] = self.inventory.pop()
                self._encoded = None
        elif action == Action.TOGGLE:
            target = self._target(frozenset({"door"}))
            if target is not None:
                door = self.cells[target[1]][target[0]]
                if door.locked:
                    held = sum(1 for o in self.inventory if o.kind == "key" and o.color == door.key_color)
                    if held >= door.keys_required:
                        door.locked = False
                        door.is_open = True
                else:
                    door.is_open = not door.is_open
                self._encoded = None
        return 0.0

    def _target(self, kinds: frozenset[str]) -> tuple[int, int] | None:
        """Nearest interactable object of the given kinds within the action radius."""
        dyn = self.config.dynamics
        ax, ay = self.agent_pos
        for dx, dy in interaction_offsets(self.agent_dir, dyn.action_radius):
            x, y = ax + dx, ay + dy
            if not self.in_bounds(x, y):
                continue
            obj = self.cells[y][x]
            if obj is not None and obj.kind in kinds and dyn.allows(obj.color):
                return (x, y)
        return None

    def observe(self) -> Observation:
        """Encode the world. Pure function of the world state; ignores the rng."""
        if self._encoded is None:
            grid = np.zeros((self.height, self.width, 3), dtype=np.uint8)
            grid[:, :, 0] = KIND_CODE["empty"]
            for x, y, obj in self.objects():
                grid[y, x] = obj.encode()
            self._encoded = grid
        grid = self._encoded.copy()
        ax, ay = self.agent_pos
        grid[ay, ax] = (KIND_CODE["agent"], COLOR_CODE["red"], self.agent_dir)
        if self.config.view == "egocentric":
            grid = _egocentric(grid, self.agent_pos, self.agent_dir, self.config.view_size)
        counts = [0] * len(INVENTORY_SLOTS)
        for obj in self.inventory:
            counts[_INVENTORY_INDEX[(obj.kind, obj.color)]] += 1
        return Observation(grid, self.agent_dir, tuple(counts))

    def state_key(self) -> tuple:
        """Hashable snapshot of every mutable world feature (rng excluded)."""
        objs = tuple(
            (x, y, o.kind, o.color, o.locked, o.is_open) for x, y, o in self.objects()
        )
        inv = tuple((o.kind, o.color) for o in self.inventory)
        return (self.agent_pos, self.agent_dir, inv, objs, self.ledger)


def _egocentric(grid: np.ndarray, pos: tuple[int, int], direction: int, size: int) -> np.ndarray:
    # Agent sits at the bottom-centre of the view, facing up.
    view = np.zeros((size, size, 3), dtype=np.uint8)
    fx, fy = DIR_VEC[direction]
    rx, ry = DIR_VEC[(direction + 1) % 4]
    h, w = grid.shape[:2]
    for vy in range(size):
        ahead = size - 1 - vy
        for vx in range(size):
            side = vx - size // 2
            x = pos[0] + ahead * fx + side * rx
            y = pos[1] + ahead * fy + side * ry
            if 0 <= x < w and 0 <= y < h:
                view[vy, vx] = grid[y, x]
    return view


_OFFSET_CACHE: dict[tuple[int, int], tuple[tuple[int, int], ...]] = {}


def interaction_offsets(direction: int, radius: int) -> tuple[tuple[int, int], ...]:
    """Cell offsets where pickup/toggle can act, nearest first.

    A cell qualifies when it lies ``f >= 1`` cells ahead with at most ``f - 1``
    cells of sideways offset and ``f <= radius``; its Chebyshev distance is
    then ``f``. Radius 1 is exactly the faced cell, radius 0 disables
    interaction. Ties at equal distance break in row-major order.
    """
    cached = _OFFSET_CACHE.get((direction, radius))
    if cached is not None:
        return cached
    fx, fy = DIR_VEC[direction]
    rx, ry = DIR_VEC[(direction + 1) % 4]
    offsets = []
    for ahead in range(1, radius + 1):
        for side in range(-(ahead - 1), ahead):
            offsets.append((ahead * fx + side * rx, ahead * fy + side * ry))
    offsets.sort(key=lambda o: (max(abs(o[0]), abs(o[1])), o[1], o[0]))
    result = tuple(offsets)
    _OFFSET_CACHE[(direction, radius)] = result
    return result


def generate_grid(config: EnvironmentConfig, rng: np.random.Generator) -> GridWorld:
    """Realize ``config`` into a fresh world.

    Deterministic given the config and the generator state. Raises
    :class:`ConfigurationError` naming the offending placement.
    """
    config.validate()
    cells: list[list[WorldObject | None]] = [
        [None] * config.width for _ in range(config.height)
    ]
    if config.perimeter_walls:
        for y in range(config.height):
            for x in range(config.width):
                if config.border(x, y):
                    cells[y][x] = WorldObject("wall", "grey")

    placements = list(config.placements)
    if config.layout_policy == "random":
        free = config.free_cells()
        goal = next(p for p in placements if p.kind == "goal")
        if free:
            free.append(goal.pos)
            free.sort(key=lambda c: (c[1], c[0]))
            x, y = free[int(rng.integers(len(free)))]
            placements = [p for p in placements if p is not goal] + [replace(goal, x=x, y=y)]

    for p in placements:
        if p.kind == "door":
            spec = p.door
            obj = WorldObject(
                "door", p.color, door_id=spec.id, key_color=spec.key_color,
                keys_required=spec.keys_required, locked=spec.locked,
            )
        else:
            obj = WorldObject(p.kind, p.color)
        cells[p.y][p.x] = obj

    if config.agent_start == "random":
        free = [
            (x, y)
            for y in range(config.height)
            for x in range(config.width)
            if cells[y][x] is None
        ]
        if not free:
            raise ConfigurationError("no free cell left for a random agent start")
        x, y = free[int(rng.integers(len(free)))]
        pos, direction = (x, y), int(rng.integers(4))
    else:
        x, y, direction = config.agent_start
        pos = (x, y)
        under = cells[y][x]
        if under is not None and under.kind != "floor":
            raise ConfigurationError(f"agent start {pos} overlaps {under.kind}")

    return GridWorld(config, cells, pos, direction, rng)


def observation_shape(config: EnvironmentConfig) -> tuple[int, int, int]:
    if config.view == "egocentric":
        return (config.view_size, config.view_size, 3)
    return (config.height, config.width, 3)
