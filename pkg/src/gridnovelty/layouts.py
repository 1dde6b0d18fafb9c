"""Character-map layouts.

A map is whitespace-separated tokens, one row per line::

    #   wall            .   empty
    G   goal            L   lava           F   floor
    K<c> key            B<c> ball
    D<c> locked door    d<c> closed, unlocked door
    @>  @v  @<  @^      agent start facing east / south / west / north

Colors are single letters: r(ed) g(reen) b(lue) p(urple) y(ellow) e (grey).
Doors are numbered ``door0``, ``door1``... in row-major order and are opened
by keys of their own color unless a novelty changes that.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

from .core import (
    COLORS,
    ConfigurationError,
    DoorSpec,
    DynamicsParams,
    EnvironmentConfig,
    NUM_ACTIONS,
    Action,
    Placement,
)

COLOR_LETTERS = {"r": "red", "g": "green", "b": "blue", "p": "purple", "y": "yellow", "e": "grey"}
LETTER_OF = {v: k for k, v in COLOR_LETTERS.items()}
AGENT_DIRS = {">": 0, "v": 1, "<": 2, "^": 3}
DIR_GLYPH = {v: k for k, v in AGENT_DIRS.items()}


def parse_char_map(text: str, **overrides: Any) -> EnvironmentConfig:
    """Build a config from a character map; ``overrides`` go to the config."""
    rows = [line.split() for line in text.strip("\n").splitlines() if line.strip()]
    if not rows:
        raise ConfigurationError("empty character map")
    width = len(rows[0])
    for y, row in enumerate(rows):
        if len(row) != width:
            raise ConfigurationError(f"row {y} has {len(row)} cells, expected {width}")

    placements: list[Placement] = []
    start = None
    doors = 0
    for y, row in enumerate(rows):
        for x, tok in enumerate(row):
            head, tail = tok[0], tok[1:]
            if tok == ".":
                continue
            if tok == "#":
                placements.append(Placement("wall", x, y))
            elif tok == "G":
                placements.append(Placement("goal", x, y))
            elif tok == "L":
                placements.append(Placement("lava", x, y))
            elif tok == "F":
                placements.append(Placement("floor", x, y))
            elif head == "@":
                if start is not None:
                    raise ConfigurationError(f"second agent start at {(x, y)}")
                if tail and tail not in AGENT_DIRS:
                    raise ConfigurationError(f"bad agent token {tok!r} at {(x, y)}")
                start = (x, y, AGENT_DIRS.get(tail, 0))
            elif head in "KBDd" and tail in COLOR_LETTERS:
                color = COLOR_LETTERS[tail]
                if head == "K":
                    placements.append(Placement("key", x, y, color))
                elif head == "B":
                    placements.append(Placement("ball", x, y, color))
                else:
                    spec = DoorSpec(f"door{doors}", key_color=color, locked=head == "D")
                    placements.append(Placement("door", x, y, color, door=spec))
                    doors += 1
            else:
                raise ConfigurationError(f"unknown token {tok!r} at {(x, y)}")
    if start is None:
        raise ConfigurationError("character map has no agent start '@'")

    kwargs: dict[str, Any] = dict(perimeter_walls=False, agent_start=start)
    kwargs.update(overrides)
    return EnvironmentConfig(width, len(rows), tuple(placements), **kwargs)


def to_char_map(config: EnvironmentConfig) -> str:
    """Render a fixed-start config back to a character map.

    Door requirements that differ from the door's own color, keys_required and
    dynamics are not representable and are dropped.
    """
    grid = [["." for _ in range(config.width)] for _ in range(config.height)]
    if config.perimeter_walls:
        for y in range(config.height):
            for x in range(config.width):
                if config.border(x, y):
                    grid[y][x] = "#"
    for p in config.placements:
        c = LETTER_OF[p.color]
        tok = {
            "wall": "#", "goal": "G", "lava": "L", "floor": "F",
            "key": "K" + c, "ball": "B" + c,
        }.get(p.kind)
        if p.kind == "door":
            tok = ("D" if p.door.locked else "d") + c
        grid[p.y][p.x] = tok
    if config.agent_start != "random":
        x, y, d = config.agent_start
        grid[y][x] = "@" + DIR_GLYPH[d]
    return "\n".join(" ".join(row) for row in grid)


def dynamics_from_dict(data: dict[str, Any] | None) -> DynamicsParams:
    """Parse the ``dynamics`` mapping of a layout or experiment file."""
    if not data:
        return DynamicsParams()
    data = dict(data)
    unknown = set(data) - set(DynamicsParams.__dataclass_fields__)
    if unknown:
        raise ConfigurationError(f"unknown dynamics fields: {sorted(unknown)}")
    reps = data.pop("action_repetition", None)
    if isinstance(reps, dict):
        table = [1] * NUM_ACTIONS
        for name, k in reps.items():
            table[Action[name.upper()]] = int(k)
        data["action_repetition"] = tuple(table)
    elif reps is not None:
        data["action_repetition"] = tuple(int(k) for k in reps)
    if data.get("color_allowlist") is not None:
        data["color_allowlist"] = frozenset(data["color_allowlist"])
    if data.get("burdening") is not None:
        data["burdening"] = tuple(int(v) for v in data["burdening"])
    return DynamicsParams(**data)


@dataclass(frozen=True)
class LayoutSpec:
    name: str
    char_map: str
    description: str
    dynamics: dict[str, Any] = field(default_factory=dict)
    max_steps: int = 0

    def build(self) -> EnvironmentConfig:
        return parse_char_map(
            self.char_map,
            name=self.name,
            max_steps=self.max_steps,
            dynamics=dynamics_from_dict(self.dynamics),
        )


_SHIPPED = [
    LayoutSpec(
        "doorkey_6x6",
        """
        # # # # # #
        # Ky . # . #
        # @> . Dy . #
        # Kb . # . #
        # . . # G #
        # # # # # #
        """,
        "Two keys and one locked yellow door on a 6x6 grid; keys equidistant from the start.",
    ),
    LayoutSpec(
        "doorkey_6x6_unlocked",
        """
        # # # # # #
        # Ky . # . #
        # @> . dy . #
        # Kb . # . #
        # . . # G #
        # # # # # #
        """,
        "doorkey_6x6 with the door closed but unlocked.",
    ),
    LayoutSpec(
        "lava_shortcut_6x6",
        """
        # # # # # #
        # Ky . # . #
        # @> . Dy . #
        # . . # . #
        # . . L G #
        # # # # # #
        """,
        "Locked door route, plus a lava cell in the dividing wall next to the goal.",
    ),
    LayoutSpec(
        "key_ahead_6x5",
        """
        # # # # # #
        # @> . Ky # #
        # Dy # # # #
        # . . . G #
        # # # # # #
        """,
        "Key in a dead-end two cells ahead of the start; the door is behind the agent's right shoulder.",
    ),
    LayoutSpec(
        "two_doors_7x7",
        """
        # # # # # # #
        # Ky . @v . Kb #
        # . . . . . #
        # # Dy # Db # #
        # . . . . . #
        # . . G . . #
        # # # # # # #
        """,
        "Mirror-symmetric yellow and blue routes; the agent starts restricted to yellow objects.",
        dynamics={"color_allowlist": ["yellow"]},
    ),
    LayoutSpec(
        "burden_8x6",
        """
        # # # # # # # #
        # @> . . . . Ky #
        # # # # # Dy # #
        # # # # # . # #
        # # # # # G # #
        # # # # # # # #
        """,
        "Long empty corridor to the key, short laden stretch through the door to the goal.",
    ),
    LayoutSpec(
        "open_5x5",
        """
        # # # # #
        # G . . #
        # . @^ . #
        # . . . #
        # # # # #
        """,
        "Open room, goal in a corner; mirror-symmetric about the start column.",
    ),
    LayoutSpec(
        "doorkey_4x4",
        """
        @v Dy . #
        Ky # G .
        . # . .
        . # . .
        """,
        "Single key beside the start, goal two cells past a locked door; no perimeter walls.",
    ),
    LayoutSpec(
        "lava_4x4",
        """
        @> L . G
        . # # .
        . . . .
        # # # #
        """,
        "Lava sits on the direct route to the goal; the safe route detours below.",
    ),
    LayoutSpec(
        "corridor_4x4",
        """
        # # # #
        @> . . G
        # # # #
        . . . .
        """,
        "Straight corridor from the start to the goal.",
    ),
]

LAYOUTS: dict[str, LayoutSpec] = {spec.name: spec for spec in _SHIPPED}


def get_layout(name: str) -> EnvironmentConfig:
    try:
        return LAYOUTS[name].build()
    except KeyError:
        raise ConfigurationError(
            f"unknown layout {name!r}; shipped layouts: {sorted(LAYOUTS)}"
        ) from None


def layout_from_dict(data: dict[str, Any]) -> EnvironmentConfig:
    """Inline layout: ``{map: <char map>, max_steps:, dynamics: {...}, ...}``."""
    data = dict(data)
    if "map" not in data:
        raise ConfigurationError("inline layout needs a 'map' entry")
    text = data.pop("map")
    dynamics = dynamics_from_dict(data.pop("dynamics", None))
    name = data.pop("name", "inline")
    allowed = {"max_steps", "layout_policy", "view", "view_size", "perimeter_walls"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigurationError(f"unknown inline layout fields: {sorted(unknown)}")
    config = parse_char_map(text, name=name, dynamics=dynamics, **data)
    return config


def with_dynamics(config: EnvironmentConfig, **changes: Any) -> EnvironmentConfig:
    return replace(config, dynamics=replace(config.dynamics, **changes))


__all__ = [
    "COLORS",
    "LAYOUTS",
    "LayoutSpec",
    "dynamics_from_dict",
    "get_layout",
    "layout_from_dict",
    "parse_char_map",
    "to_char_map",
    "with_dynamics",
]
