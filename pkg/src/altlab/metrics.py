"""Alternation metrics over sliding batches, plus traditional outcome metrics.

An episode log of length nu is scanned with overlapping batches of n
consecutive episodes (n = agent count), giving b = nu - n + 1 batches.
Each batch yields counting statistics:

    f    distinct agents with at least one arrival in the batch
         (tie participants included)
    tau  total arrivals in the batch, summed over episodes
    w    episodes in the batch with an exclusive winner
    g    agents with exactly one exclusive win in the batch
    y    per-episode arrival counts

Six per-batch alternation scores are derived from these counts, each in
[0, 1] with 1 attained exactly by perfect alternation (every agent wins
exclusively once per batch):

    falt   f / tau
    qfalt  (f / tau)^2
    ealt   w * f / n^2
    qealt  (w * f / n^2)^2
    calt   [sum_l (n - y_l)] * qfalt / (n * (n - 1))
    aalt   g / tau

A batch with no arrivals (all capped) scores 0 on all six.  A run-level
score is the mean over all batches.

Traditional metrics summarize whole logs: win-count fairness, reward
efficiency, turn-taking fairness over per-agent total arrivals, and
reward fairness.  Ratios with a zero denominator are undefined and
reported as None.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .errors import ConfigError, InsufficientDataError
from .game import EpisodeOutcome

VARIANTS = ("falt", "qfalt", "ealt", "qealt", "calt", "aalt")


@dataclass(frozen=True)
class BatchStats:
    """Counting statistics of one batch of n consecutive episodes."""

    f: int
    tau: int
    w: int
    g: int
    y: tuple[int, ...]


def batch_stats(episodes: Sequence[EpisodeOutcome], n: int) -> BatchStats:
    """Statistics of a single batch; the slice must hold exactly n episodes."""
    if len(episodes) != n:
        raise ConfigError(f"batch must hold exactly {n} episodes, got {len(episodes)}")
    arrival_counts: dict[int, int] = {}
    win_counts: dict[int, int] = {}
    w = 0
    for ep in episodes:
        for agent in ep.arrivals:
            arrival_counts[agent] = arrival_counts.get(agent, 0) + 1
        if ep.exclusive_winner is not None:
            w += 1
            win_counts[ep.exclusive_winner] = win_counts.get(ep.exclusive_winner, 0) + 1
    return BatchStats(
        f=len(arrival_counts),
        tau=sum(len(ep.arrivals) for ep in episodes),
        w=w,
        g=sum(1 for c in win_counts.values() if c == 1),
        y=tuple(len(ep.arrivals) for ep in episodes),
    )


def iter_batch_stats(episodes: Sequence[EpisodeOutcome], n: int) -> Iterator[BatchStats]:
    """Yield :class:`BatchStats` for every window of n consecutive episodes.

    Counters roll forward as the window slides, so a full scan costs
    O(total arrivals) instead of O(nu * n).
    """
    if n < 2:
        raise ConfigError(f"need at least 2 agents, got {n}")
    if len(episodes) < n:
        raise InsufficientDataError(
            f"log of {len(episodes)} episodes is shorter than the batch size {n}"
        )
    arrival_counts: dict[int, int] = {}
    win_counts: dict[int, int] = {}
    f = tau = w = g = 0
    y: deque[int] = deque()
    window: deque[EpisodeOutcome] = deque()

    def add(ep: EpisodeOutcome) -> None:
        nonlocal f, tau, w, g
        for agent in ep.arrivals:
            c = arrival_counts.get(agent, 0)
            if c == 0:
                f += 1
            arrival_counts[agent] = c + 1
        tau += len(ep.arrivals)
        if ep.exclusive_winner is not None:
            w += 1
            c = win_counts.get(ep.exclusive_winner, 0)
            if c == 0:
                g += 1
            elif c == 1:
                g -= 1
            win_counts[ep.exclusive_winner] = c + 1
        y.append(len(ep.arrivals))
        window.append(ep)

    def drop() -> None:
        nonlocal f, tau, w, g
        ep = window.popleft()
        for agent in ep.arrivals:
            c = arrival_counts[agent] - 1
            if c == 0:
                f -= 1
                del arrival_counts[agent]
            else:
                arrival_counts[agent] = c
        tau -= len(ep.arrivals)
        if ep.exclusive_winner is not None:
            w -= 1
            c = win_counts[ep.exclusive_winner] - 1
            if c == 0:
                g -= 1
                del win_counts[ep.exclusive_winner]
            else:
                if c == 1:
                    g += 1
                win_counts[ep.exclusive_winner] = c
        y.popleft()

    for ep in episodes[: n - 1]:
        add(ep)
    for ep in episodes[n - 1 :]:
        add(ep)
        yield BatchStats(f=f, tau=tau, w=w, g=g, y=tuple(y))
        drop()


def beta_falt(stats: BatchStats) -> float:
    """f / tau, or 0 for an empty batch."""
    return stats.f / stats.tau if stats.tau else 0.0


def beta_qfalt(stats: BatchStats) -> float:
    """(f / tau)^2."""
    b = beta_falt(stats)
    return b * b


def beta_ealt(stats: BatchStats, n: int) -> float:
    """w * f / n^2."""
    return stats.w * stats.f / (n * n)


def beta_qealt(stats: BatchStats, n: int) -> float:
    """(w * f / n^2)^2."""
    b = beta_ealt(stats, n)
    return b * b


def beta_calt(stats: BatchStats, n: int) -> float:
    """Tie-discounted qfalt: [sum_l (n - y_l)] * qfalt / (n * (n - 1)).

    Capped episodes push the tie-sum above n * (n - 1), so the score is
    clamped to keep it within [0, 1].
    """
    if stats.tau == 0:
        return 0.0
    tie_sum = sum(n - count for count in stats.y)
    # Dividing the integer tie_sum first keeps perfect-alternation and
    # fixed-rotation batches exact (tie_sum == n * (n - 1) there).
    return min(1.0, (tie_sum / (n * (n - 1))) * beta_qfalt(stats))


def beta_aalt(stats: BatchStats) -> float:
    """g / tau, or 0 for an empty batch."""
    return stats.g / stats.tau if stats.tau else 0.0


def _shifted_mean(values: Sequence[float]) -> float:
    # Mean as base + mean deviation: exact when all values coincide,
    # which run-level scores of perfectly alternating logs rely on.
    base = values[0]
    return base + math.fsum(v - base for v in values) / len(values)


def alt_scores(episodes: Sequence[EpisodeOutcome], n: int) -> dict[str, float]:
    """All six run-level alternation scores in a single scan of the log."""
    betas: dict[str, list[float]] = {v: [] for v in VARIANTS}
    for stats in iter_batch_stats(episodes, n):
        betas["falt"].append(beta_falt(stats))
        betas["qfalt"].append(beta_qfalt(stats))
        betas["ealt"].append(beta_ealt(stats, n))
        betas["qealt"].append(beta_qealt(stats, n))
        betas["calt"].append(beta_calt(stats, n))
        betas["aalt"].append(beta_aalt(stats))
    return {v: _shifted_mean(vals) for v, vals in betas.items()}


def alt_score(episodes: Sequence[EpisodeOutcome], n: int, variant: str) -> float:
    """Run-level score of one variant (falt, qfalt, ealt, qealt, calt, aalt)."""
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
    return alt_scores(episodes, n)[variant]


def per_agent_tallies(
    episodes: Iterable[EpisodeOutcome], n: int
) -> tuple[list[int], list[int], list[float]]:
    """Per-agent exclusive wins, total arrivals, and total payoffs."""
    wins = [0] * n
    turns = [0] * n
    payoffs = [0.0] * n
    for ep in episodes:
        if ep.exclusive_winner is not None:
            wins[ep.exclusive_winner] += 1
        for agent in ep.arrivals:
            turns[agent] += 1
        for agent, r in enumerate(ep.rewards):
            payoffs[agent] += r
    return wins, turns, payoffs


def _min_max_ratio(values: Sequence[float]) -> float | None:
    top = max(values)
    if top == 0:
        return None
    return min(values) / top


def fairness(episodes: Sequence[EpisodeOutcome], n: int) -> float | None:
    """min_i w_i / max_i w_i over exclusive win counts; None if nobody won."""
    wins, _, _ = per_agent_tallies(episodes, n)
    return _min_max_ratio(wins)


def tt_fairness(episodes: Sequence[EpisodeOutcome], n: int) -> float | None:
    """min_i t_i / max_i t_i over per-agent total arrivals; None if none."""
    _, turns, _ = per_agent_tallies(episodes, n)
    return _min_max_ratio(turns)


def reward_fairness(episodes: Sequence[EpisodeOutcome], n: int) -> float | None:
    """min_i p_i / max_i p_i over accumulated payoffs; None if all zero."""
    _, _, payoffs = per_agent_tallies(episodes, n)
    return _min_max_ratio(payoffs)


def efficiency(
    episodes: Sequence[EpisodeOutcome], r_high: float, nu: int | None = None
) -> float:
    """Total collected reward over the nu * r_high optimum.

    Capped episodes collect nothing but still count toward nu.
    """
    if not r_high > 0:
        raise ConfigError(f"r_high must be positive, got {r_high}")
    episodes = list(episodes)
    if nu is None:
        nu = len(episodes)
    if nu < 1:
        raise InsufficientDataError("efficiency needs at least one episode")
    total = math.fsum(r for ep in episodes for r in ep.rewards)
    return total / (nu * r_high)


@dataclass(frozen=True)
class MetricPanel:
    """All run-level metrics of one episode log."""

    nu: int
    batches: int
    fairness: float | None
    efficiency: float
    tt_fairness: float | None
    reward_fairness: float | None
    falt: float
    qfalt: float
    ealt: float
    qealt: float
    calt: float
    aalt: float

    def as_dict(self) -> dict:
        return {
            "nu": self.nu,
            "batches": self.batches,
            "fairness": self.fairness,
            "efficiency": self.efficiency,
            "tt_fairness": self.tt_fairness,
            "reward_fairness": self.reward_fairness,
            "falt": self.falt,
            "qfalt": self.qfalt,
            "ealt": self.ealt,
            "qealt": self.qealt,
            "calt": self.calt,
            "aalt": self.aalt,
        }


def compute_panel(episodes: Sequence[EpisodeOutcome], n: int, r_high: float) -> MetricPanel:
    """Alternation scores plus traditional metrics for one log."""
    episodes = list(episodes)
    scores = alt_scores(episodes, n)
    return MetricPanel(
        nu=len(episodes),
        batches=len(episodes) - n + 1,
        fairness=fairness(episodes, n),
        efficiency=efficiency(episodes, r_high),
        tt_fairness=tt_fairness(episodes, n),
        reward_fairness=reward_fairness(episodes, n),
        **scores,
    )
