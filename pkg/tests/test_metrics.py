"""Alternation and traditional metrics against independent oracles."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import (
    make_outcome,
    naive_alt_scores,
    naive_window_betas,
    relabel_outcomes,
)

from altlab.analysis import synth_pa_mixture
from altlab.errors import ConfigError, InsufficientDataError
from altlab.metrics import (
    VARIANTS,
    BatchStats,
    alt_score,
    alt_scores,
    batch_stats,
    beta_aalt,
    beta_calt,
    beta_ealt,
    beta_falt,
    beta_qealt,
    beta_qfalt,
    compute_panel,
    efficiency,
    fairness,
    iter_batch_stats,
    reward_fairness,
    tt_fairness,
)


@st.composite
def outcome_logs(draw):
    n = draw(st.integers(min_value=2, max_value=6))
    nu = draw(st.integers(min_value=n, max_value=30))
    episodes = []
    for i in range(nu):
        if draw(st.integers(0, 9)) == 0:
            arrivals = set()
        else:
            arrivals = draw(
                st.sets(st.integers(0, n - 1), min_size=1, max_size=n)
            )
        episodes.append(make_outcome(i, n, arrivals))
    return n, episodes


def test_batch_stats_counts():
    # three episodes for three agents: win by 0, tie {0,1}, win by 0
    window = [
        make_outcome(0, 3, {0}),
        make_outcome(1, 3, {0, 1}),
        make_outcome(2, 3, {0}),
    ]
    stats = batch_stats(window, 3)
    assert stats == BatchStats(f=2, tau=4, w=2, g=0, y=(1, 2, 1))


def test_batch_stats_requires_exact_window():
    with pytest.raises(ConfigError):
        batch_stats([make_outcome(0, 2, {0})], 2)


def test_beta_values_hand_computed():
    stats = BatchStats(f=3, tau=4, w=2, g=2, y=(1, 2, 1))
    assert beta_falt(stats) == pytest.approx(0.75)
    assert beta_qfalt(stats) == pytest.approx(0.5625)
    assert beta_ealt(stats, 3) == pytest.approx(2 / 3)
    assert beta_qealt(stats, 3) == pytest.approx(4 / 9)
    # tie_sum = (3-1) + (3-2) + (3-1) = 5
    assert beta_calt(stats, 3) == pytest.approx(5 * 0.5625 / 6)
    assert beta_aalt(stats) == pytest.approx(0.5)


def test_empty_batch_scores_zero():
    stats = BatchStats(f=0, tau=0, w=0, g=0, y=(0, 0))
    assert beta_falt(stats) == 0.0
    assert beta_qfalt(stats) == 0.0
    assert beta_ealt(stats, 2) == 0.0
    assert beta_calt(stats, 2) == 0.0
    assert beta_aalt(stats) == 0.0


def test_calt_is_clamped_when_capped_episodes_inflate_ties():
    # capped episode contributes n to the tie sum, pushing the raw value
    # past 1 next to an exclusive win
    window = [make_outcome(0, 2, set()), make_outcome(1, 2, {0})]
    stats = batch_stats(window, 2)
    assert stats.tau == 1 and stats.f == 1
    assert beta_calt(stats, 2) == 1.0


def test_iter_batch_stats_short_log_and_bad_n():
    with pytest.raises(InsufficientDataError):
        list(iter_batch_stats([make_outcome(0, 3, {0})], 3))
    with pytest.raises(ConfigError):
        list(iter_batch_stats([make_outcome(0, 1, {0})], 1))


@given(outcome_logs())
@settings(max_examples=80, deadline=None)
def test_rolling_windows_match_direct_slices(data):
    n, episodes = data
    rolled = list(iter_batch_stats(episodes, n))
    direct = [batch_stats(episodes[i : i + n], n) for i in range(len(episodes) - n + 1)]
    assert rolled == direct


@given(outcome_logs())
@settings(max_examples=80, deadline=None)
def test_scores_match_exact_fraction_oracle(data):
    n, episodes = data
    ours = alt_scores(episodes, n)
    oracle = naive_alt_scores(episodes, n)
    for variant in VARIANTS:
        assert ours[variant] == pytest.approx(float(oracle[variant]), abs=1e-12)


@given(outcome_logs())
@settings(max_examples=80, deadline=None)
def test_scores_are_bounded(data):
    n, episodes = data
    for stats in iter_batch_stats(episodes, n):
        assert 0.0 <= beta_falt(stats) <= 1.0
        assert beta_qfalt(stats) <= beta_falt(stats)
        assert 0.0 <= beta_ealt(stats, n) <= 1.0
        assert beta_qealt(stats, n) <= beta_ealt(stats, n)
        assert 0.0 <= beta_calt(stats, n) <= 1.0
        assert 0.0 <= beta_aalt(stats) <= 1.0
    for value in alt_scores(episodes, n).values():
        assert 0.0 <= value <= 1.0


@given(outcome_logs(), st.randoms(use_true_random=False))
@settings(max_examples=50, deadline=None)
def test_scores_invariant_under_agent_relabeling(data, rnd):
    n, episodes = data
    ids = list(range(n))
    rnd.shuffle(ids)
    perm = dict(zip(range(n), ids))
    shuffled = relabel_outcomes(episodes, perm)
    assert alt_scores(shuffled, n) == alt_scores(episodes, n)
    assert fairness(shuffled, n) == fairness(episodes, n)
    assert tt_fairness(shuffled, n) == tt_fairness(episodes, n)
    assert reward_fairness(shuffled, n) == reward_fairness(episodes, n)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_perfect_alternation_scores_one(n):
    log = synth_pa_mixture(n, n, 8 * n)
    assert all(v == 1.0 for v in alt_scores(log, n).values())


@pytest.mark.parametrize("n", [2, 3, 5])
def test_breaking_one_episode_degrades_alternation(n):
    log = synth_pa_mixture(n, n, 6 * n)
    clean = alt_scores(log, n)
    broken = list(log)
    broken[len(log) // 2] = make_outcome(len(log) // 2, n, set(range(n)))
    degraded = alt_scores(broken, n)
    for variant in ("calt", "ealt", "aalt"):
        assert degraded[variant] < clean[variant]


def test_monopoly_and_all_tie_fixtures():
    monopoly = [make_outcome(i, 2, {0}) for i in range(12)]
    scores = alt_scores(monopoly, 2)
    assert scores["calt"] == 0.25
    assert scores["falt"] == 0.5
    assert scores["ealt"] == 0.5
    assert scores["aalt"] == 0.0

    ties = [make_outcome(i, 2, {0, 1}) for i in range(12)]
    scores = alt_scores(ties, 2)
    assert scores["calt"] == 0.0
    assert scores["ealt"] == 0.0
    assert scores["falt"] == 0.5
    assert efficiency(ties, 100.0) == 0.0
    assert fairness(ties, 2) is None


def test_alt_score_variant_validation():
    log = synth_pa_mixture(2, 2, 10)
    assert alt_score(log, 2, "calt") == 1.0
    with pytest.raises(ConfigError):
        alt_score(log, 2, "nope")


def test_fairness_counts_exclusive_wins_only():
    log = [
        make_outcome(0, 2, {0}),
        make_outcome(1, 2, {0}),
        make_outcome(2, 2, {1}),
        make_outcome(3, 2, {0, 1}),
    ]
    assert fairness(log, 2) == pytest.approx(0.5)


def test_tt_fairness_counts_all_arrivals():
    log = [make_outcome(0, 2, {0}), make_outcome(1, 2, {0, 1})]
    # arrivals: agent 0 twice, agent 1 once
    assert tt_fairness(log, 2) == pytest.approx(0.5)
    # only agent 0 ever wins exclusively
    assert fairness(log, 2) == 0.0


def test_reward_fairness_and_undefined_cases():
    log = [make_outcome(0, 3, {0}), make_outcome(1, 3, {1})]
    assert reward_fairness(log, 3) == 0.0
    assert reward_fairness([make_outcome(0, 2, {0, 1})], 2) is None
    assert tt_fairness([make_outcome(0, 2, set())], 2) is None


def test_efficiency_counts_capped_episodes_in_denominator():
    log = [make_outcome(0, 2, {0}), make_outcome(1, 2, set())]
    assert efficiency(log, 100.0) == pytest.approx(0.5)
    partial = [make_outcome(0, 3, {0}), make_outcome(1, 3, {0, 1})]
    assert efficiency(partial, 100.0) == pytest.approx((100.0 + 200.0 / 3) / 200.0)


def test_efficiency_validation():
    with pytest.raises(ConfigError):
        efficiency([make_outcome(0, 2, {0})], 0.0)
    with pytest.raises(InsufficientDataError):
        efficiency([], 100.0)


def test_compute_panel_is_consistent_with_parts():
    n = 3
    log = [make_outcome(i, n, {i % n}) for i in range(10)]
    log[4] = make_outcome(4, n, {0, 1})
    panel = compute_panel(log, n, 100.0)
    assert panel.nu == 10
    assert panel.batches == 8
    scores = alt_scores(log, n)
    for variant in VARIANTS:
        assert getattr(panel, variant) == scores[variant]
    assert panel.fairness == fairness(log, n)
    assert panel.efficiency == efficiency(log, 100.0)
    assert panel.tt_fairness == tt_fairness(log, n)
    assert panel.reward_fairness == reward_fairness(log, n)
    assert set(panel.as_dict()) == {
        "nu",
        "batches",
        "fairness",
        "efficiency",
        "tt_fairness",
        "reward_fairness",
        *VARIANTS,
    }


def test_constant_window_mean_is_exact():
    # every window scores the same awkward float; the run mean must not
    # pick up summation error
    n = 4
    log = synth_pa_mixture(3, n, 40)
    per_window = naive_window_betas(log[:n], n)
    assert alt_score(log, n, "calt") == float(
        per_window["calt"].numerator
    ) / float(per_window["calt"].denominator)
    assert alt_score(log, n, "calt") == (3 / 4) ** 2
    assert alt_score(log, n, "falt") == 0.75
