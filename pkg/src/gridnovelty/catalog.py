"""The eleven exemplar novelties as pure config transforms.

Every transform takes a pre-novelty :class:`EnvironmentConfig` plus keyword
parameters and returns a new config; the input is never modified. Parameter
problems raise :class:`TransformError` naming the parameter or object.
"""

from __future__ import annotations

import difflib
import inspect
from dataclasses import dataclass, field, replace
from typing import Any, Callable

from .core import (
    COLORS,
    Action,
    ConfigurationError,
    EnvironmentConfig,
    Placement,
)
from .ontology import (
    Arity,
    NoveltyDescriptor,
    OntologyCell,
    OracleInapplicableError,
    SolutionEffect,
    Target,
    optimal_plan_length,
)


class TransformError(ValueError):
    pass


class UnknownNoveltyError(KeyError):
    def __str__(self) -> str:
        return str(self.args[0])


def _dynamics(pre: EnvironmentConfig, **changes: Any) -> EnvironmentConfig:
    return replace(pre, dynamics=replace(pre.dynamics, **changes))


def _door(pre: EnvironmentConfig, door: str | None) -> Placement:
    doors = [p for p in pre.placements if p.kind == "door"]
    if not doors:
        raise TransformError("layout has no door")
    if door is None:
        if len(doors) > 1:
            raise TransformError(
                f"layout has {len(doors)} doors; pass door= one of {[p.door.id for p in doors]}"
            )
        return doors[0]
    for p in doors:
        if p.door.id == door:
            return p
    raise TransformError(f"door {door!r} not found; layout has {[p.door.id for p in doors]}")


def _swap(pre: EnvironmentConfig, old: Placement, new: Placement) -> EnvironmentConfig:
    return replace(pre, placements=tuple(new if p is old else p for p in pre.placements))


def _key_count(pre: EnvironmentConfig, color: str) -> int:
    return sum(1 for p in pre.placements if p.kind == "key" and p.color == color)


def goal_location_change(
    pre: EnvironmentConfig, location: str | tuple[int, int] = "mirror"
) -> EnvironmentConfig:
    """Move the goal.

    ``location`` is an ``(x, y)`` cell, ``"mirror"`` (reflect across the
    vertical centre line) or ``"resample"`` (a fresh random cell every episode).
    """
    goal = pre.placements_of("goal")
    if len(goal) != 1:
        raise TransformError("layout needs exactly one goal")
    goal = goal[0]
    if location == "resample":
        return replace(pre, layout_policy="random")
    if location == "mirror":
        x, y = pre.width - 1 - goal.x, goal.y
        if (x, y) == goal.pos:
            raise TransformError("location: goal sits on the mirror axis")
    elif isinstance(location, str):
        raise TransformError(f"location: expected (x, y), 'mirror' or 'resample', got {location!r}")
    else:
        x, y = (int(v) for v in location)
    if not (0 <= x < pre.width and 0 <= y < pre.height):
        raise TransformError(f"location: {(x, y)} is out of bounds")
    if (x, y) != goal.pos and (x, y) not in pre.free_cells():
        raise TransformError(f"location: {(x, y)} is occupied")
    return _swap(pre, goal, replace(goal, x=x, y=y))


def door_lock_toggle(
    pre: EnvironmentConfig, door: str | None = None, direction: str = "unlock"
) -> EnvironmentConfig:
    """Lock an unlocked door or unlock a locked one."""
    if direction not in ("lock", "unlock"):
        raise TransformError(f"direction: expected 'lock' or 'unlock', got {direction!r}")
    p = _door(pre, door)
    want_locked = direction == "lock"
    if p.door.locked == want_locked:
        raise TransformError(f"direction: door {p.door.id!r} is already {direction}ed")
    if want_locked and _key_count(pre, p.door.key_color) < p.door.keys_required:
        raise TransformError(
            f"door {p.door.id!r}: no {p.door.key_color} key in the layout to open it once locked"
        )
    return _swap(pre, p, replace(p, door=replace(p.door, locked=want_locked)))


def door_key_change(
    pre: EnvironmentConfig, door: str | None = None, color: str | None = None
) -> EnvironmentConfig:
    """Make a different key color open a locked door.

    Without ``color`` the first other key color present in the layout is used.
    """
    p = _door(pre, door)
    if not p.door.locked:
        raise TransformError(f"door {p.door.id!r} is not locked")
    if color is None:
        present = [c for c in COLORS if c != p.door.key_color and _key_count(pre, c)]
        if not present:
            raise TransformError("color: layout has no key of another color")
        color = present[0]
    if color not in COLORS:
        raise TransformError(f"color: unknown color {color!r}")
    if _key_count(pre, color) < p.door.keys_required:
        raise TransformError(f"color: layout has too few {color} keys for door {p.door.id!r}")
    return _swap(pre, p, replace(p, door=replace(p.door, key_color=color)))


def door_num_keys(pre: EnvironmentConfig, door: str | None = None, n: int = 2) -> EnvironmentConfig:
    """Require ``n`` keys held at once to unlock a door.

    Missing keys are added at the first free cells in row-major order, and
    the inventory capacity is raised to at least ``n``.
    """
    if n < 1:
        raise TransformError(f"n: must be >= 1, got {n}")
    p = _door(pre, door)
    if not p.door.locked:
        raise TransformError(f"door {p.door.id!r} is not locked")
    post = _swap(pre, p, replace(p, door=replace(p.door, keys_required=n)))
    missing = n - _key_count(pre, p.door.key_color)
    if missing > 0:
        free = pre.free_cells()
        if len(free) < missing:
            raise TransformError(f"n: no room for {missing} more {p.door.key_color} key(s)")
        extra = tuple(Placement("key", x, y, p.door.key_color) for x, y in free[:missing])
        post = replace(post, placements=post.placements + extra)
    if pre.dynamics.inventory_capacity < n:
        post = _dynamics(post, inventory_capacity=n)
    return post


def impervious_to_lava(pre: EnvironmentConfig) -> EnvironmentConfig:
    return _dynamics(pre, lava_harmful=False)


def action_repetition(pre: EnvironmentConfig, action: str = "pickup", k: int = 2) -> EnvironmentConfig:
    """Require ``k`` consecutive issuances of ``action`` before it takes effect."""
    try:
        act = Action[str(action).upper()]
    except KeyError:
        raise TransformError(f"action: unknown action {action!r}") from None
    if k < 1:
        raise TransformError(f"k: must be >= 1, got {k}")
    return replace(pre, dynamics=pre.dynamics.with_repetition(act, k))


def forward_movement_speed(pre: EnvironmentConfig, step: int = 2) -> EnvironmentConfig:
    if step < 1:
        raise TransformError(f"step: must be >= 1, got {step}")
    return _dynamics(pre, forward_step=step)


def action_radius(pre: EnvironmentConfig, radius: int = 2) -> EnvironmentConfig:
    if radius < 0:
        raise TransformError(f"radius: must be >= 0, got {radius}")
    return _dynamics(pre, action_radius=radius)


def color_restriction(pre: EnvironmentConfig, colors: Any = ("blue",)) -> EnvironmentConfig:
    """Only objects of ``colors`` can be picked up or toggled."""
    allowed = frozenset([colors] if isinstance(colors, str) else colors)
    if not allowed:
        raise TransformError("colors: allowlist must not be empty")
    unknown = allowed - set(COLORS)
    if unknown:
        raise TransformError(f"colors: unknown colors {sorted(unknown)}")
    return _dynamics(pre, color_allowlist=None if allowed == set(COLORS) else allowed)


def burdening(
    pre: EnvironmentConfig, empty_forward_step: int = 2, laden_repetition: int = 2
) -> EnvironmentConfig:
    """Faster forward motion with an empty inventory, slower when carrying."""
    if empty_forward_step < 1 or laden_repetition < 1:
        raise TransformError(
            "empty_forward_step/laden_repetition: must be >= 1, got "
            f"{empty_forward_step}/{laden_repetition}"
        )
    profile = (empty_forward_step, laden_repetition)
    return _dynamics(pre, burdening=None if profile == (1, 1) else profile)


def transition_determinism(pre: EnvironmentConfig, p: float = 0.9) -> EnvironmentConfig:
    """Commanded actions execute with probability ``p``; otherwise a random
    turn or forward move happens instead."""
    if not 0.0 < p <= 1.0:
        raise TransformError(f"p: must lie in (0, 1], got {p}")
    return _dynamics(pre, determinism_p=float(p))


def identity(pre: EnvironmentConfig) -> EnvironmentConfig:
    return pre


def _cell(target: Target, arity: Arity, effect: SolutionEffect) -> Callable[[dict], OntologyCell]:
    cell = OntologyCell(target, arity, effect)
    return lambda params: cell


def _lock_toggle_cell(params: dict) -> OntologyCell:
    effect = SolutionEffect.BARRIER if params["direction"] == "lock" else SolutionEffect.SHORTCUT
    return OntologyCell(Target.OBJECT, Arity.UNARY, effect)


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    transform: Callable[..., EnvironmentConfig]
    cell: Callable[[dict], OntologyCell]
    requires: tuple[str, ...] = ()
    fields: tuple[str, ...] = ()  # config fields the transform may touch
    defaults: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        sig = inspect.signature(self.transform)
        defaults = {
            k: v.default for k, v in list(sig.parameters.items())[1:]
        }
        object.__setattr__(self, "defaults", defaults)

    def describe(self, **params: Any) -> NoveltyDescriptor:
        unknown = set(params) - set(self.defaults)
        if unknown:
            raise TransformError(
                f"{self.name}: unknown parameter(s) {sorted(unknown)}; "
                f"accepted: {sorted(self.defaults)}"
            )
        merged = {**self.defaults, **params}
        return NoveltyDescriptor(self.name, merged, self.cell(merged), self.transform)

    def missing_features(self, config: EnvironmentConfig) -> list[str]:
        missing = []
        doors = list(config.doors.values())
        for feature in self.requires:
            if feature == "door" and not doors:
                missing.append("at least one door")
            elif feature == "locked_door" and not any(d.locked for d in doors):
                missing.append("at least one locked door")
            elif feature == "second_key_color":
                colors = {p.color for p in config.placements_of("key")}
                if len(colors) < 2:
                    missing.append("keys of at least two colors")
        return missing


_O, _A = Target.OBJECT, Target.ACTION
_U, _N = Arity.UNARY, Arity.NON_UNARY
_B, _D, _S = SolutionEffect.BARRIER, SolutionEffect.DELTA, SolutionEffect.SHORTCUT

CATALOG: dict[str, CatalogEntry] = {
    e.name: e
    for e in [
        CatalogEntry("GoalLocationChange", goal_location_change, _cell(_O, _U, _D),
                     fields=("placements", "layout_policy")),
        CatalogEntry("DoorLockToggle", door_lock_toggle, _lock_toggle_cell,
                     requires=("door",), fields=("placements",)),
        CatalogEntry("DoorKeyChange", door_key_change, _cell(_O, _N, _D),
                     requires=("locked_door", "second_key_color"), fields=("placements",)),
        CatalogEntry("DoorNumKeys", door_num_keys, _cell(_O, _N, _B),
                     requires=("locked_door",), fields=("placements", "dynamics.inventory_capacity")),
        CatalogEntry("ImperviousToLava", impervious_to_lava, _cell(_O, _N, _S),
                     fields=("dynamics.lava_harmful",)),
        CatalogEntry("ActionRepetition", action_repetition, _cell(_A, _U, _B),
                     fields=("dynamics.action_repetition",)),
        CatalogEntry("ForwardMovementSpeed", forward_movement_speed, _cell(_A, _N, _S),
                     fields=("dynamics.forward_step",)),
        CatalogEntry("ActionRadius", action_radius, _cell(_A, _U, _S),
                     fields=("dynamics.action_radius",)),
        CatalogEntry("ColorRestriction", color_restriction, _cell(_A, _U, _D),
                     fields=("dynamics.color_allowlist",)),
        CatalogEntry("Burdening", burdening, _cell(_A, _N, _D),
                     fields=("dynamics.burdening",)),
        CatalogEntry("TransitionDeterminism", transition_determinism, _cell(_A, _N, _B),
                     fields=("dynamics.determinism_p",)),
    ]
}

# Not an exemplar: a no-op control for checking the experiment pipeline.
IDENTITY = CatalogEntry("Identity", identity, _cell(_O, _U, _D))

ALIASES = {"ForwardMoveSpeed": "ForwardMovementSpeed"}


def resolve_name(name: str) -> str:
    """Canonical catalog name for ``name`` (case-insensitive, aliases allowed)."""
    known = {**{n: n for n in CATALOG}, **ALIASES, IDENTITY.name: IDENTITY.name}
    for candidate, canonical in known.items():
        if candidate.lower() == name.lower():
            return canonical
    close = difflib.get_close_matches(name, list(known), n=1, cutoff=0.0)
    hint = f"; did you mean {close[0]!r}?" if close else ""
    raise UnknownNoveltyError(f"unknown novelty {name!r}{hint}")


def get_entry(name: str) -> CatalogEntry:
    canonical = resolve_name(name)
    return IDENTITY if canonical == IDENTITY.name else CATALOG[canonical]


def make_novelty(name: str, **params: Any) -> NoveltyDescriptor:
    return get_entry(name).describe(**params)


def apply_novelty(pre: EnvironmentConfig, descriptor: NoveltyDescriptor) -> EnvironmentConfig:
    """Apply, re-validate and check solvability, so a broken post-config fails
    before training.

    When the oracle applies and the goal was reachable before the novelty, a
    post-config with an unreachable goal is rejected.
    """
    post = descriptor.apply(pre)
    try:
        post.validate()
    except ConfigurationError as exc:
        raise TransformError(f"{descriptor.name}: post-novelty config invalid: {exc}") from exc
    try:
        solvable_after = optimal_plan_length(post) is not None
        solvable_before = solvable_after or optimal_plan_length(pre) is not None
    except OracleInapplicableError:
        return post
    if solvable_before and not solvable_after:
        raise TransformError(
            f"{descriptor.name} {dict(descriptor.parameters)}: goal unreachable after the novelty"
        )
    return post


# (novelty, layout, parameters) triples on which each declared solution
# effect is reproduced by the planning oracle.
REFERENCE_CASES: list[tuple[str, str, dict[str, Any]]] = [
    ("DoorLockToggle", "doorkey_6x6_unlocked", {"direction": "lock"}),
    ("DoorLockToggle", "doorkey_6x6", {"direction": "unlock"}),
    ("DoorKeyChange", "doorkey_6x6", {"color": "blue"}),
    ("DoorNumKeys", "doorkey_6x6", {"n": 2}),
    ("ImperviousToLava", "lava_shortcut_6x6", {}),
    ("ActionRepetition", "doorkey_6x6", {"action": "pickup", "k": 2}),
    ("ForwardMovementSpeed", "doorkey_6x6", {"step": 2}),
    ("ActionRadius", "key_ahead_6x5", {"radius": 2}),
    ("ColorRestriction", "two_doors_7x7", {"colors": ["blue"]}),
    ("Burdening", "burden_8x6", {"empty_forward_step": 2, "laden_repetition": 2}),
    ("GoalLocationChange", "open_5x5", {"location": "mirror"}),
    ("TransitionDeterminism", "doorkey_6x6", {"p": 0.9}),
]
