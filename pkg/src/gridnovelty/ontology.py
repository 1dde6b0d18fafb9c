"""Novelty ontology and the planning oracle that checks solution effects.

A novelty is placed on three axes: what it targets (objects or actions),
whether it changes a single entity's property or a relation between entities,
and what it does to the shortest solution. The last axis is layout dependent,
so it is measured here with an exact breadth-first search rather than taken on
faith.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Mapping, NamedTuple

from .core import (
    Action,
    ConfigurationError,
    DIR_VEC,
    EnvironmentConfig,
    PICKUP_KINDS,
    interaction_offsets,
)


class OracleInapplicableError(Exception):
    """The oracle needs deterministic dynamics and a fixed layout."""


class Target(str, Enum):
    OBJECT = "object"
    ACTION = "action"


class Arity(str, Enum):
    UNARY = "unary"
    NON_UNARY = "non_unary"


class SolutionEffect(str, Enum):
    BARRIER = "barrier"
    DELTA = "delta"
    SHORTCUT = "shortcut"


@dataclass(frozen=True)
class OntologyCell:
    target: Target
    arity: Arity
    solution_effect: SolutionEffect


@dataclass(frozen=True)
class NoveltyDescriptor:
    """A named, parameterized config transform with its declared ontology cell."""

    name: str
    parameters: Mapping[str, Any]
    declared_cell: OntologyCell
    transform: Callable[..., EnvironmentConfig] = field(compare=False)

    def apply(self, config: EnvironmentConfig) -> EnvironmentConfig:
        return self.transform(config, **dict(self.parameters))


class SearchState(NamedTuple):
    pos: tuple[int, int]
    direction: int
    inventory: tuple[tuple[str, str], ...]
    items: frozenset[tuple[int, int, str, str]]
    doors: tuple[tuple[bool, bool], ...]
    ledger: tuple[int, int]


_GOAL, _DEAD = "goal", "dead"


class _Model:
    """Quotient transition model: only agent pose, inventory, movable items,
    door states and the repetition ledger change during an episode."""

    def __init__(self, config: EnvironmentConfig) -> None:
        config.validate()
        if config.dynamics.determinism_p < 1.0:
            raise OracleInapplicableError("stochastic transitions (determinism_p < 1)")
        if config.layout_policy != "fixed":
            raise OracleInapplicableError("per-episode random layout")
        if config.agent_start == "random":
            raise OracleInapplicableError("random agent start")

        self.dyn = dyn = config.dynamics
        self.width, self.height = config.width, config.height
        self.static: dict[tuple[int, int], str] = {}
        if config.perimeter_walls:
            for y in range(config.height):
                for x in range(config.width):
                    if config.border(x, y):
                        self.static[(x, y)] = "wall"
        self.door_at: dict[tuple[int, int], int] = {}
        self.door_info: list[tuple[str, str, int]] = []
        items = set()
        doors = []
        for p in config.placements:
            if p.kind == "door":
                self.static.pop(p.pos, None)
                self.door_at[p.pos] = len(self.door_info)
                self.door_info.append((p.color, p.door.key_color, p.door.keys_required))
                doors.append((p.door.locked, False))
            elif p.kind in PICKUP_KINDS:
                self.static.pop(p.pos, None)
                items.add((p.x, p.y, p.kind, p.color))
            else:
                self.static[p.pos] = p.kind

        self.track_ledger = max(dyn.action_repetition) > 1 or (
            dyn.burdening is not None and dyn.burdening[1] > 1
        )
        x, y, d = config.agent_start
        self.start = SearchState((x, y), d, (), frozenset(items), tuple(doors), (-1, 0))

    def _blocked(self, s: SearchState, x: int, y: int) -> bool:
        if not (0 <= x < self.width and 0 <= y < self.height):
            return True
        if self.static.get((x, y)) == "wall":
            return True
        door = self.door_at.get((x, y))
        if door is not None:
            return not s.doors[door][1]
        return any(ix == x and iy == y for ix, iy, _, _ in s.items)

    def successor(self, s: SearchState, action: Action) -> tuple[SearchState, str | None]:
        dyn = self.dyn
        laden = bool(s.inventory)
        ledger = (-1, 0)
        if self.track_ledger:
            last, count = s.ledger
            count = count + 1 if last == action else 1
            if count < dyn.repetition(action, laden):
                return s._replace(ledger=(int(action), count)), None
            ledger = (int(action), 0)
        s = s._replace(ledger=ledger)

        if action == Action.TURN_LEFT:
            return s._replace(direction=(s.direction - 1) % 4), None
        if action == Action.TURN_RIGHT:
            return s._replace(direction=(s.direction + 1) % 4), None
        if action == Action.FORWARD:
            dx, dy = DIR_VEC[s.direction]
            x, y = s.pos
            for _ in range(dyn.forward_cells(laden)):
                if self._blocked(s, x + dx, y + dy):
                    break
                x, y = x + dx, y + dy
                kind = self.static.get((x, y))
                if kind == "goal":
                    return s._replace(pos=(x, y)), _GOAL
                if kind == "lava" and dyn.lava_harmful:
                    return s._replace(pos=(x, y)), _DEAD
            return s._replace(pos=(x, y)), None
        if action == Action.PICKUP:
            if len(s.inventory) >= dyn.inventory_capacity:
                return s, None
            for ox, oy in interaction_offsets(s.direction, dyn.action_radius):
                tx, ty = s.pos[0] + ox, s.pos[1] + oy
                for item in s.items:
                    if item[0] == tx and item[1] == ty and dyn.allows(item[3]):
                        return s._replace(
                            inventory=s.inventory + ((item[2], item[3]),),
                            items=s.items - {item},
                        ), None
            return s, None
        if action == Action.DROP:
            dx, dy = DIR_VEC[s.direction]
            tx, ty = s.pos[0] + dx, s.pos[1] + dy
            if (
                s.inventory
                and 0 <= tx < self.width
                and 0 <= ty < self.height
                and (tx, ty) not in self.static
                and (tx, ty) not in self.door_at
                and not any(ix == tx and iy == ty for ix, iy, _, _ in s.items)
            ):
                kind, color = s.inventory[-1]
                return s._replace(
                    inventory=s.inventory[:-1],
                    items=s.items | {(tx, ty, kind, color)},
                ), None
            return s, None
        if action == Action.TOGGLE:
            for ox, oy in interaction_offsets(s.direction, dyn.action_radius):
                door = self.door_at.get((s.pos[0] + ox, s.pos[1] + oy))
                if door is None or not dyn.allows(self.door_info[door][0]):
                    continue
                locked, is_open = s.doors[door]
                _, key_color, needed = self.door_info[door]
                if locked:
                    held = sum(1 for k, c in s.inventory if k == "key" and c == key_color)
                    if held < needed:
                        return s, None
                    new = (False, True)
                else:
                    new = (False, not is_open)
                doors = s.doors[:door] + (new,) + s.doors[door + 1:]
                return s._replace(doors=doors), None
            return s, None
        return s, None  # DONE


def optimal_plan(config: EnvironmentConfig) -> list[Action] | None:
    """Shortest command sequence from the start to the goal, or ``None``.

    Counts every issued command, so turns and repetition padding are included.
    ``max_steps`` is ignored. Raises :class:`OracleInapplicableError` for
    stochastic dynamics or randomized layouts.
    """
    model = _Model(config)
    start = model.start
    parent: dict[SearchState, tuple[SearchState, Action] | None] = {start: None}
    frontier = deque([start])
    while frontier:
        state = frontier.popleft()
        for action in Action:
            nxt, outcome = model.successor(state, action)
            if outcome == _GOAL:
                plan = [action]
                while parent[state] is not None:
                    state, a = parent[state]
                    plan.append(a)
                return plan[::-1]
            if outcome == _DEAD or nxt in parent:
                continue
            parent[nxt] = (state, action)
            frontier.append(nxt)
    return None


def optimal_plan_length(config: EnvironmentConfig) -> int | None:
    plan = optimal_plan(config)
    return None if plan is None else len(plan)


def classify_solution_effect(pre: EnvironmentConfig, post: EnvironmentConfig) -> SolutionEffect:
    before = optimal_plan_length(pre)
    if before is None:
        raise ConfigurationError("goal is unreachable before the novelty")
    after = optimal_plan_length(post)
    if after is None or after > before:
        return SolutionEffect.BARRIER
    if after < before:
        return SolutionEffect.SHORTCUT
    return SolutionEffect.DELTA


@dataclass(frozen=True)
class DeclarationReport:
    novelty: str
    layout: str
    declared: SolutionEffect
    observed: SolutionEffect | None
    pre_length: int | None
    post_length: int | None
    status: str  # "match", "mismatch" or "unverifiable"
    reason: str = ""

    def as_record(self) -> dict[str, Any]:
        return {
            "novelty": self.novelty,
            "layout": self.layout,
            "declared": self.declared.value,
            "observed": None if self.observed is None else self.observed.value,
            "pre_length": self.pre_length,
            "post_length": self.post_length,
            "status": self.status,
            "reason": self.reason,
        }


def validate_declaration(descriptor: NoveltyDescriptor, pre: EnvironmentConfig) -> DeclarationReport:
    """Compare a declared solution effect with what the oracle measures on ``pre``.

    A mismatch is reported, not raised: solution effects depend on the layout.
    """
    post = descriptor.apply(pre)
    declared = descriptor.declared_cell.solution_effect
    try:
        before = optimal_plan_length(pre)
        after = optimal_plan_length(post)
    except OracleInapplicableError as exc:
        return DeclarationReport(
            descriptor.name, pre.name, declared, None, None, None, "unverifiable", str(exc)
        )
    if before is None:
        return DeclarationReport(
            descriptor.name, pre.name, declared, None, None, after,
            "unverifiable", "goal unreachable before the novelty",
        )
    observed = classify_solution_effect(pre, post)
    status = "match" if observed == declared else "mismatch"
    return DeclarationReport(descriptor.name, pre.name, declared, observed, before, after, status)
