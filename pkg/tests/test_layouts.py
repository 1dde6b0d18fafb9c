import pytest

from gridnovelty.core import Action, ConfigurationError
from gridnovelty.layouts import (
    LAYOUTS,
    dynamics_from_dict,
    get_layout,
    layout_from_dict,
    parse_char_map,
    to_char_map,
)


def test_parse_tokens():
    config = parse_char_map(
        """
        # # # # #
        # @v Kr dg #
        # Bb L F #
        # Dp . G #
        # # # # #
        """
    )
    assert (config.width, config.height) == (5, 5)
    assert config.agent_start == (1, 1, 1)
    by_pos = {p.pos: p for p in config.placements}
    assert by_pos[(2, 1)].kind == "key" and by_pos[(2, 1)].color == "red"
    assert by_pos[(3, 1)].door.locked is False and by_pos[(3, 1)].color == "green"
    assert by_pos[(1, 2)].kind == "ball" and by_pos[(1, 2)].color == "blue"
    assert by_pos[(2, 2)].kind == "lava" and by_pos[(3, 2)].kind == "floor"
    door = by_pos[(1, 3)].door
    assert door.id == "door1" and door.locked and door.key_color == "purple"
    assert by_pos[(3, 3)].kind == "goal"


@pytest.mark.parametrize(
    "text, message",
    [
        ("# # #\n# G", "row 1 has 2 cells"),
        ("# G #\n# X #", "unknown token"),
        ("G . .", "no agent start"),
        ("@> @< G", "second agent start"),
        ("@x . G", "bad agent token"),
        ("", "empty character map"),
    ],
)
def test_parse_errors(text, message):
    with pytest.raises(ConfigurationError, match=message):
        parse_char_map(text)


@pytest.mark.parametrize("name", sorted(LAYOUTS))
def test_shipped_layouts_validate_and_round_trip(name):
    config = get_layout(name)
    config.validate()
    assert config.name == name
    again = parse_char_map(to_char_map(config))
    assert again.placements == config.placements
    assert again.agent_start == config.agent_start


def test_unknown_layout_lists_choices():
    with pytest.raises(ConfigurationError, match="doorkey_6x6"):
        get_layout("nope")


def test_dynamics_from_dict():
    dyn = dynamics_from_dict(
        {"action_repetition": {"pickup": 3}, "color_allowlist": ["red"], "burdening": [2, 2]}
    )
    assert dyn.action_repetition[Action.PICKUP] == 3 and sum(dyn.action_repetition) == 9
    assert dyn.color_allowlist == frozenset({"red"})
    assert dyn.burdening == (2, 2)
    with pytest.raises(ConfigurationError, match="unknown dynamics"):
        dynamics_from_dict({"speed": 2})


def test_inline_layout():
    config = layout_from_dict(
        {"map": "@> . G", "max_steps": 9, "dynamics": {"forward_step": 2}, "name": "tiny"}
    )
    assert config.max_steps == 9 and config.dynamics.forward_step == 2 and config.name == "tiny"
    with pytest.raises(ConfigurationError, match="needs a 'map'"):
        layout_from_dict({"max_steps": 3})
    with pytest.raises(ConfigurationError, match="unknown inline"):
        layout_from_dict({"map": "@> G", "colour": "red"})


def test_default_max_steps():
    assert get_layout("doorkey_6x6").max_steps == 4 * 6 * 6
