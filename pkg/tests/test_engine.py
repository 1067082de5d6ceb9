from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from alma_learning import AssignmentInstance, BackoffModel, IntervalConflicts, backoff_probability, run_stage
from alma_learning.engine import Arena, default_round_cap


def test_power_backoff_examples():
    m = BackoffModel.power(2.0, 0.01)
    assert backoff_probability(m, 0.005) == pytest.approx(0.9801)
    assert backoff_probability(m, 0.995) == pytest.approx(0.0001)
    assert backoff_probability(m, 0.5) == pytest.approx(0.25)


def test_logistic_backoff_midpoint_and_beta_ignored():
    assert backoff_probability(BackoffModel.logistic(15.72), 0.5) == pytest.approx(0.5)
    a = BackoffModel("logistic", beta=5.0, gamma=15.72)
    assert backoff_probability(a, 0.3) == pytest.approx(1 / (1 + np.exp(-15.72 * 0.2)))


@pytest.mark.parametrize("loss", [-0.01, 1.01, np.nan])
def test_backoff_rejects_bad_loss(loss):
    with pytest.raises(ValueError):
        backoff_probability(BackoffModel(), loss)


@pytest.mark.parametrize("model", [BackoffModel.power(), BackoffModel.power(3, 0.2), BackoffModel.logistic()])
def test_backoff_monotone_and_bounded(model):
    losses = np.linspace(0, 1, 2001)
    p = np.array([backoff_probability(model, x) for x in losses])
    assert np.all(np.diff(p) <= 1e-15)
    assert np.all((p > 0) & (p < 1))


def test_single_agent_wins_start_in_one_round():
    inst = AssignmentInstance([[0.2, 0.9, 0.4]])
    res = run_stage(inst, r_start=[2], seed=3)
    assert res.won.tolist() == [2] and res.rounds == 1 and not res.anomaly


square = st.integers(1, 7).flatmap(
    lambda n: arrays(np.float64, (n, n), elements=st.floats(0, 1, allow_nan=False)))


@given(square, st.integers(0, 2**32))
def test_stage_full_matching_without_duplicates(u, seed):
    inst = AssignmentInstance(u)
    res = run_stage(inst, seed=seed)
    assert not res.anomaly
    won = res.won
    assert np.all(won >= 0)
    assert len(set(won.tolist())) == len(won)


@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 1000))
def test_stage_rectangular_never_double_assigns(n, r, seed):
    u = np.random.default_rng(seed).random((n, r))
    res = run_stage(AssignmentInstance(u), seed=seed)
    matched = res.won[res.won >= 0]
    assert len(set(matched.tolist())) == len(matched)
    assert len(matched) == min(n, r)


def test_stage_is_deterministic(adversarial_a):
    a = [run_stage(adversarial_a, seed=s).won.tolist() for s in range(50)]
    b = [run_stage(adversarial_a, seed=s).won.tolist() for s in range(50)]
    assert a == b


def test_two_stubborn_agents_still_terminate():
    inst = AssignmentInstance([[1.0, 0.0], [1.0, 0.0]])
    cap = default_round_cap(2)
    finished = 0
    trials = 100_000
    for s in range(trials):
        res = run_stage(inst, loss=np.ones((2, 2)), seed=s, round_cap=cap)
        finished += not res.anomaly
        if not res.anomaly:
            assert sorted(res.won.tolist()) == [0, 1]
    assert finished / trials >= 0.999


def test_adversarial_a_modal_outcome(adversarial_a):
    counts = Counter(tuple(run_stage(adversarial_a, seed=s).won.tolist()) for s in range(10_000))
    outcome, _ = counts.most_common(1)[0]
    assert outcome == (0, 1, 2)
    sw = sum(adversarial_a.utility[a, r] for a, r in enumerate(outcome))
    assert sw == pytest.approx(2.0)


def test_round_cap_sets_anomaly():
    inst = AssignmentInstance([[1.0], [1.0]])
    res = run_stage(inst, loss=np.ones((2, 1)), seed=0, round_cap=1)
    assert res.anomaly and res.won.tolist() == [-1, -1]


def test_unmatched_agents_give_up_when_resources_run_out():
    # loss 0.5 gives back-off 0.25, so contests resolve quickly
    inst = AssignmentInstance(np.full((3, 1), 0.5))
    res = run_stage(inst, seed=4)
    assert not res.anomaly
    assert sorted(res.won.tolist()) == [-1, -1, 0]


def test_interval_conflicts():
    inst = AssignmentInstance([[1.0, 0.5], [1.0, 0.5]])
    arena = Arena.from_instance(inst)
    # disjoint participants: both may start at 0
    free = IntervalConflicts(np.zeros((2, 2), bool), np.array([2, 1]))
    assert run_stage(arena, conflicts=free, seed=1).won.tolist() == [0, 0]
    share = np.array([[False, True], [True, False]])
    res = run_stage(arena, conflicts=IntervalConflicts(share, np.array([2, 1])), seed=1)
    # length 2 at 0 overlaps position 1, so one event is left without a slot
    assert sorted(res.won.tolist()) == [-1, 0]
    res = run_stage(arena, conflicts=IntervalConflicts(share, np.array([1, 1])), seed=1)
    assert sorted(res.won.tolist()) == [0, 1]


def test_random_tie_break_keeps_preference_order():
    inst = AssignmentInstance([[1.0, 1.0, 0.5, 1.0]])
    arena = Arena.from_instance(inst, "random", seed=5)
    assert sorted(arena.cand[0, :3].tolist()) == [0, 1, 3]
    assert arena.cand[0, 3] == 2
    with pytest.raises(ValueError):
        Arena.from_instance(inst, "bogus")


def test_run_stage_argument_checks(adversarial_a):
    with pytest.raises(ValueError):
        run_stage(adversarial_a, r_start=[0, 1])
    with pytest.raises(ValueError):
        run_stage(adversarial_a, loss=np.full((3, 3), 2.0))
    with pytest.raises(TypeError):
        run_stage(np.eye(2))
