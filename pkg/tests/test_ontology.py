from dataclasses import replace

import pytest
from hypothesis import assume, given, settings, strategies as st

from gridnovelty.catalog import REFERENCE_CASES, apply_novelty, make_novelty
from gridnovelty.core import Action, ConfigurationError, DynamicsParams, EnvironmentConfig, Placement
from gridnovelty.layouts import LAYOUTS, get_layout, parse_char_map
from gridnovelty.ontology import (
    OracleInapplicableError,
    SolutionEffect,
    classify_solution_effect,
    optimal_plan,
    optimal_plan_length,
    validate_declaration,
)

from oracles import brute_force_shortest, enumerate_shortest, reaches_goal

SMALL_LAYOUTS = [n for n in sorted(LAYOUTS) if get_layout(n).width * get_layout(n).height <= 16]


def test_straight_line():
    config = EnvironmentConfig(5, 5, (Placement("goal", 3, 1),), agent_start=(1, 1, 0))
    assert optimal_plan(config) == [Action.FORWARD, Action.FORWARD]


def test_key_before_door_on_4x4():
    config = get_layout("doorkey_4x4")
    plan = optimal_plan(config)
    # hand trace: pick up the key below, turn to face the door, open it, walk
    # through, turn south and step onto the goal
    assert plan == [
        Action.PICKUP, Action.TURN_LEFT, Action.TOGGLE, Action.FORWARD, Action.FORWARD,
        Action.TURN_RIGHT, Action.FORWARD,
    ]
    assert enumerate_shortest(config, len(plan)) == len(plan)
    assert enumerate_shortest(config, len(plan) - 1) is None


def test_enclosed_goal_is_unreachable():
    config = parse_char_map("# # # # # #\n# @> . # G #\n# # # # # #")
    assert optimal_plan_length(config) is None


@pytest.mark.parametrize("name", SMALL_LAYOUTS)
def test_bfs_matches_exhaustive_enumeration(name):
    config = get_layout(name)
    length = optimal_plan_length(config)
    assert length is not None
    assert enumerate_shortest(config, length) == length
    assert enumerate_shortest(config, length - 1) is None


def test_enumeration_agrees_with_pure_brute_force_where_feasible():
    for name in SMALL_LAYOUTS:
        config = get_layout(name)
        length = optimal_plan_length(config)
        if length <= 5:
            assert brute_force_shortest(config, length) == length


@pytest.mark.parametrize("name", sorted(LAYOUTS))
def test_plans_replay_through_the_step_function(name):
    config = get_layout(name)
    plan = optimal_plan(config)
    assert plan is not None and reaches_goal(config, plan)


@pytest.mark.parametrize("novelty, layout, params", [c for c in REFERENCE_CASES if c[0] != "TransitionDeterminism"])
def test_post_novelty_plans_replay(novelty, layout, params):
    post = apply_novelty(get_layout(layout), make_novelty(novelty, **params))
    plan = optimal_plan(post)
    assert plan is not None and reaches_goal(post, plan)


def test_oracle_refuses_stochastic_and_random_worlds():
    base = get_layout("doorkey_6x6")
    with pytest.raises(OracleInapplicableError, match="stochastic"):
        optimal_plan_length(replace(base, dynamics=DynamicsParams(determinism_p=0.9)))
    with pytest.raises(OracleInapplicableError, match="layout"):
        optimal_plan_length(replace(base, layout_policy="random"))
    with pytest.raises(OracleInapplicableError, match="start"):
        optimal_plan_length(replace(base, agent_start="random"))


def test_classification_examples():
    pre = get_layout("doorkey_6x6")
    assert classify_solution_effect(pre, pre) == SolutionEffect.DELTA
    more_keys = apply_novelty(pre, make_novelty("DoorNumKeys", n=2))
    assert classify_solution_effect(pre, more_keys) == SolutionEffect.BARRIER
    lava = get_layout("lava_shortcut_6x6")
    safe = apply_novelty(lava, make_novelty("ImperviousToLava"))
    assert classify_solution_effect(lava, safe) == SolutionEffect.SHORTCUT


def test_unreachable_post_is_a_barrier_and_unreachable_pre_an_error():
    open_ = parse_char_map("# # # # # #\n# @> . . G #\n# # # # # #")
    closed = parse_char_map("# # # # # #\n# @> . # G #\n# # # # # #")
    assert classify_solution_effect(open_, closed) == SolutionEffect.BARRIER
    with pytest.raises(ConfigurationError, match="unreachable"):
        classify_solution_effect(closed, open_)


def test_declaration_reports():
    pre = get_layout("doorkey_6x6")
    report = validate_declaration(make_novelty("DoorKeyChange", color="blue"), pre)
    assert report.status == "match" and report.observed == SolutionEffect.DELTA
    report = validate_declaration(make_novelty("DoorLockToggle", direction="unlock"), pre)
    assert report.status == "match" and report.observed == SolutionEffect.SHORTCUT
    report = validate_declaration(make_novelty("TransitionDeterminism", p=0.9), pre)
    assert report.status == "unverifiable" and report.observed is None
    record = report.as_record()
    assert record["declared"] == "barrier" and record["status"] == "unverifiable"


def test_mismatch_is_reported_not_raised():
    # On an open room, moving the goal next to the start is a shortcut, not the declared delta.
    pre = get_layout("open_5x5")
    report = validate_declaration(make_novelty("GoalLocationChange", location=(2, 1)), pre)
    assert report.status == "mismatch" and report.observed == SolutionEffect.SHORTCUT


# Random small worlds: 4x4 without a perimeter, walls plus one goal.
cells = st.tuples(st.integers(0, 3), st.integers(0, 3))


@st.composite
def small_worlds(draw):
    start = draw(cells)
    goal = draw(cells.filter(lambda c: c != start))
    walls = draw(st.sets(cells.filter(lambda c: c not in (start, goal)), max_size=6))
    direction = draw(st.integers(0, 3))
    dyn = draw(st.sampled_from([
        DynamicsParams(),
        DynamicsParams(forward_step=2),
        DynamicsParams().with_repetition(Action.FORWARD, 2),
    ]))
    placements = (Placement("goal", *goal),) + tuple(Placement("wall", *w) for w in sorted(walls))
    return EnvironmentConfig(
        4, 4, placements, agent_start=(*start, direction), perimeter_walls=False, dynamics=dyn
    )


@settings(max_examples=40, deadline=None)
@given(small_worlds())
def test_bfs_matches_enumeration_on_random_worlds(config):
    length = optimal_plan_length(config)
    assume(length is not None and length <= 9)
    assert enumerate_shortest(config, length) == length
    assert enumerate_shortest(config, length - 1) is None


@settings(max_examples=60, deadline=None)
@given(small_worlds(), st.data())
def test_removing_a_wall_never_lengthens_the_plan(config, data):
    # Only for one-cell moves: with forward_step > 1 a wall can serve as a
    # stopper, and removing it can lengthen the plan.
    assume(config.dynamics.forward_step == 1)
    walls = [p for p in config.placements if p.kind == "wall"]
    assume(walls)
    gone = data.draw(st.sampled_from(walls))
    fewer = replace(config, placements=tuple(p for p in config.placements if p is not gone))
    before, after = optimal_plan_length(config), optimal_plan_length(fewer)
    if before is not None:
        assert after is not None and after <= before


@settings(max_examples=40, deadline=None)
@given(small_worlds(), small_worlds())
def test_swapping_arguments_mirrors_the_label(a, b):
    assume(optimal_plan_length(a) is not None and optimal_plan_length(b) is not None)
    mirror = {
        SolutionEffect.BARRIER: SolutionEffect.SHORTCUT,
        SolutionEffect.SHORTCUT: SolutionEffect.BARRIER,
        SolutionEffect.DELTA: SolutionEffect.DELTA,
    }
    assert classify_solution_effect(b, a) == mirror[classify_solution_effect(a, b)]
    assert classify_solution_effect(a, a) == SolutionEffect.DELTA
