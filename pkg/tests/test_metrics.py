import pytest
from hypothesis import given, settings, strategies as st

from gridnovelty.metrics import (
    CurveRecord,
    EvalSummary,
    InsufficientDataError,
    MetricError,
    NotConvergedError,
    PerformanceCurve,
    adaptive_efficiency,
    asymptotic_adaptive_performance,
    detect_convergence,
    moving_average,
    one_shot_adaptive_performance,
    resilience,
)

from oracles import convergence_by_definition, trailing_mean

# Hand-worked curves. Returns are multiples of 1/8 so every window sum is exact.


def test_curve_a_ramp_to_plateau():
    curve = PerformanceCurve.from_lists([0, 0, 0, 0, 1, 1, 1, 1])
    # full windows of 4: means 0, .25, .5, .75, 1; only the last is within .1 of 1
    assert detect_convergence(curve, window=4, tolerance=0.1, min_tail=4) == 5
    # truncated tails [1,1,1], [1,1], [1] all sit on the plateau too
    assert detect_convergence(curve, window=4, tolerance=0.1, min_tail=1) == 5
    # at tolerance .25 the window starting on episode 4 (mean .75) also counts
    assert detect_convergence(curve, window=4, tolerance=0.25, min_tail=4) == 4


def test_curve_b_swinging_tail():
    curve = PerformanceCurve.from_lists([1, 1, 1, 1, 0, 1])
    # final window [0, 1] has mean .5; the lone trailing 1 is .5 away from it
    with pytest.raises(NotConvergedError) as info:
        detect_convergence(curve, window=2, tolerance=0.25, min_tail=1)
    assert info.value.tail_mean == 0.5
    # ignoring the one-episode tail, windows from episode 4 on have mean .5
    assert detect_convergence(curve, window=2, tolerance=0.25, min_tail=2) == 4


def test_curve_c_post_novelty_metrics():
    curve = PerformanceCurve.from_lists(
        [0.5, 0.5, 0, 0.25, 1, 1, 1, 1],
        steps=[10, 10, 20, 20, 5, 5, 5, 5],
        injection_episode=3,
    )
    assert [r.timestep for r in curve] == [10, 20, 40, 60, 65, 70, 75, 80]
    assert [r.post_novelty for r in curve] == [False, False] + [True] * 6
    # post returns 0, .25, 1, 1, 1, 1: windows of 2 settle from episode 5
    assert detect_convergence(curve.post_novelty(), window=2, tolerance=0.1, min_tail=2) == 5
    # episode 3 starts at t=20, episode 5 at t=60
    assert adaptive_efficiency(curve, window=2, tolerance=0.1, min_tail=2) == 40
    random = EvalSummary.from_returns([0, 0, 0, 0.5])
    assert asymptotic_adaptive_performance(curve, random, window=2, tolerance=0.1, min_tail=2) == 0.875
    assert one_shot_adaptive_performance(curve) == 0.25


def test_curve_d_flat_converges_immediately():
    curve = PerformanceCurve.from_lists([0.5] * 10, steps=3, injection_episode=1, first_episode=1)
    assert detect_convergence(curve, window=4, tolerance=0.01) == 1
    assert adaptive_efficiency(curve, window=4, tolerance=0.01) == 0
    assert asymptotic_adaptive_performance(curve, EvalSummary(0.0, 0.0, 1), window=4) == 0.5


def test_curve_e_step_with_truncated_tails():
    returns = [0.0] * 16 + [1.0] * 128
    curve = PerformanceCurve.from_lists(returns)
    # a window starting at index i <= 16 holds 16 - i zeros: mean (112 + i) / 128,
    # within 1/16 of the plateau once i >= 8; later windows are all ones
    assert detect_convergence(curve, window=128, tolerance=1 / 16) == 9
    assert convergence_by_definition(returns, 128, 1 / 16) == 8
    # halving the tolerance needs i >= 12
    assert detect_convergence(curve, window=128, tolerance=1 / 32) == 13


def test_curve_f_not_converged_asymptotic_raises():
    curve = PerformanceCurve.from_lists([0, 1] * 8, injection_episode=1)
    with pytest.raises(NotConvergedError) as info:
        asymptotic_adaptive_performance(curve, EvalSummary(0.0, 0.0, 1), window=4, tolerance=0.25)
    assert info.value.tail_mean == 0.5


def test_resilience_and_eval_summary():
    frozen = EvalSummary.from_returns([0.5, 0.25, 0, 0.25])
    random = EvalSummary.from_returns([0, 0, 0, 0.125])
    assert (frozen.mean, frozen.variance, frozen.count) == (0.25, 0.03125, 4)
    assert resilience(frozen, random) == 0.21875
    assert resilience(random, frozen) == -0.21875
    with pytest.raises(MetricError):
        EvalSummary.from_returns([])


def test_one_shot_needs_two_post_records():
    curve = PerformanceCurve.from_lists([1, 1, 0], injection_episode=3)
    with pytest.raises(InsufficientDataError, match="two post-novelty"):
        one_shot_adaptive_performance(curve)
    with pytest.raises(InsufficientDataError):
        adaptive_efficiency(PerformanceCurve.from_lists([1, 1]), window=1)


def test_curve_validation():
    with pytest.raises(MetricError, match="episode indices"):
        PerformanceCurve([CurveRecord(2, 1, 0.0, False), CurveRecord(2, 2, 0.0, False)])
    with pytest.raises(MetricError, match="timesteps"):
        PerformanceCurve([CurveRecord(1, 5, 0.0, False), CurveRecord(2, 4, 0.0, False)])
    with pytest.raises(MetricError, match="outside"):
        PerformanceCurve.from_lists([1.5])
    with pytest.raises(InsufficientDataError, match="window is 4"):
        detect_convergence(PerformanceCurve.from_lists([1, 1]), window=4)
    for kwargs in ({"window": 0}, {"tolerance": 0}, {"min_tail": 5}):
        with pytest.raises(MetricError):
            detect_convergence(PerformanceCurve.from_lists([1] * 8), **{"window": 4, **kwargs})


def test_moving_average_matches_loop():
    values = [0, 0.5, 1, 0.25, 0.75, 0]
    assert moving_average(values, 3).tolist() == trailing_mean(values, 3)
    assert moving_average(values, 1).tolist() == values


# Randomized curves: dyadic returns and power-of-two windows keep sums exact,
# so the vectorised detector and the loop oracle must agree bit for bit.
dyadic = st.integers(0, 4).map(lambda k: k / 8)
windows = st.sampled_from([1, 2, 4, 8])
taus = st.integers(1, 8).map(lambda k: k / 16)


@st.composite
def curves(draw):
    window = draw(windows)
    returns = draw(st.lists(dyadic, min_size=window, max_size=48))
    return returns, window


def _detect(returns, window, tau, min_tail=1, first_episode=1):
    curve = PerformanceCurve.from_lists(returns, first_episode=first_episode)
    try:
        return detect_convergence(curve, window, tau, min_tail)
    except NotConvergedError:
        return None


@settings(max_examples=1000, deadline=None)
@given(curves(), taus, st.integers(0, 10_000), dyadic)
def test_detector_properties(curve, tau, shift, lift):
    returns, window = curve
    found = _detect(returns, window, tau)
    oracle = convergence_by_definition(returns, window, tau)
    assert found == (None if oracle is None else oracle + 1)
    # translation in episode index moves the answer by the same amount
    moved = _detect(returns, window, tau, first_episode=1 + shift)
    assert moved == (None if found is None else found + shift)
    # translation in return level leaves it unchanged (full windows, so every
    # mean is a dyadic sum over a power of two and stays exact)
    full = _detect(returns, window, tau, min_tail=window)
    assert _detect([r + lift for r in returns], window, tau, min_tail=window) == full
    # a looser tolerance never converges later
    looser = _detect(returns, window, 2 * tau)
    if found is not None:
        assert looser is not None and looser <= found


@settings(max_examples=200, deadline=None)
@given(curves(), taus, st.lists(st.integers(1, 50), min_size=1, max_size=5))
def test_adaptive_efficiency_ignores_pre_novelty_history(curve, tau, pre_steps):
    returns, window = curve
    steps = [(i % 7) + 1 for i in range(len(returns))]
    base = PerformanceCurve.from_lists(returns, steps, injection_episode=1)
    longer = PerformanceCurve.from_lists(
        [0.0] * len(pre_steps) + returns, pre_steps + steps, injection_episode=len(pre_steps) + 1
    )
    try:
        expected = adaptive_efficiency(base, window, tau)
    except NotConvergedError:
        with pytest.raises(NotConvergedError):
            adaptive_efficiency(longer, window, tau)
        return
    assert adaptive_efficiency(longer, window, tau) == expected
