"""Single-learner bandits with hints: probe two arms, pull the better draw.

The index is a mean-plus-scaled-population-variance score; ranking by it (or
by the raw mean) selects two adjacent ranks to probe each round, alongside a
round-robin observation that is never pulled. Regret is measured against the
target rank's true mean, crediting a round whenever the expected maximum of
the two probed draws reaches it.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ParameterError
from .market import RewardModel, draw_reward


@dataclass
class ArmState:
    """Welford accumulator for one arm: mean plus population variance."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def record(self, x: float) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    @property
    def variance(self) -> float:
        return self.m2 / self.count if self.count else 0.0


def ucb_prime(arm: ArmState, epsilon: float) -> float:
    """Mean plus epsilon times population variance; needs at least one pull."""
    if arm.count == 0:
        raise ParameterError("index undefined for an unobserved arm")
    return arm.mean + epsilon * arm.variance


def _ranked(arms: Sequence[ArmState], epsilon: Optional[float]) -> list[int]:
    """Arm indices best-first; unobserved arms rank first, ties by index.

    ``epsilon=None`` ranks by empirical mean alone.
    """

    def key(j: int):
        arm = arms[j]
        if arm.count == 0:
            return (0, 0.0, j)
        score = arm.mean if epsilon is None else arm.mean + epsilon * arm.variance
        return (1, -score, j)

    return sorted(range(len(arms)), key=key)


@dataclass(frozen=True)
class StepRecord:
    t: int
    rr_arm: int
    probes: tuple[int, int]
    pulled: int


@dataclass
class HintedBandit:
    """One learner over m arms with a fixed reward model."""

    means: tuple[float, ...]
    model: RewardModel = field(default_factory=RewardModel)
    epsilon: float = 0.1

    def __post_init__(self):
        if len(self.means) < 2:
            raise ParameterError("need at least two arms")
        self.arms = [ArmState() for _ in self.means]

    def _step(self, t: int, rank: int, rng: random.Random, by_mean: bool) -> StepRecord:
        m = len(self.means)
        order = _ranked(self.arms, None if by_mean else self.epsilon)
        lo, hi = order[rank - 1], order[rank]
        rr = t % m
        draw_rr = draw_reward(self.means[rr], self.model, rng)
        draw_lo = draw_reward(self.means[lo], self.model, rng)
        draw_hi = draw_reward(self.means[hi], self.model, rng)
        if draw_hi > draw_lo:
            pulled = hi
        elif draw_lo > draw_hi:
            pulled = lo
        else:
            pulled = min(lo, hi)
        self.arms[rr].record(draw_rr)
        self.arms[lo].record(draw_lo)
        self.arms[hi].record(draw_hi)
        return StepRecord(t, rr, (lo, hi), pulled)

    def allprobe_step(self, t: int, rng: random.Random) -> StepRecord:
        return self._step(t, 1, rng, by_mean=False)

    def eap_step(self, t: int, rank: int, rng: random.Random) -> StepRecord:
        if not 1 <= rank <= len(self.means) - 1:
            raise ParameterError(
                f"target rank must be in 1..{len(self.means) - 1}, got {rank}"
            )
        return self._step(t, rank, rng, by_mean=False)

    def apem_step(self, t: int, rng: random.Random) -> StepRecord:
        return self._step(t, 1, rng, by_mean=True)


def bernoulli_max_expectation(p: float, q: float) -> float:
    """E[max(X, Y)] for independent Bernoulli draws with means p and q."""
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise ParameterError("Bernoulli means must lie in [0, 1]")
    return p + (1.0 - p) * q


def _phi(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def _gaussian_cdf(z: float, mean: float, model: RewardModel) -> float:
    cap = min(mean, 1.0 - mean)
    if cap <= 0.0:
        return 0.0 if z < mean else 1.0
    sigma = min(model.sigma, cap / 3.0)
    if z <= mean - cap:
        return 0.0
    if z >= mean + cap:
        return 1.0
    lo, hi = _phi(-cap / sigma), _phi(cap / sigma)
    return (_phi((z - mean) / sigma) - lo) / (hi - lo)


def expected_max(mean_x: float, mean_y: float, model: RewardModel) -> float:
    """E[max] of two independent draws from the pair's reward family."""
    if model.kind == "bernoulli":
        return bernoulli_max_expectation(mean_x, mean_y)
    if model.kind == "point":
        return max(mean_x, mean_y)
    # E[max] = integral of 1 - F_X F_Y over [0, 1] (nonnegative support)
    grid = 2001
    total = 0.0
    for k in range(grid + 1):
        z = k / grid
        w = 1.0 if 0 < k < grid else 0.5
        total += w * (1.0 - _gaussian_cdf(z, mean_x, model) * _gaussian_cdf(z, mean_y, model))
    return total / grid


def hinted_regret(
    trajectory: Sequence[StepRecord],
    means: Sequence[float],
    model: RewardModel,
    target_rank: int = 1,
) -> np.ndarray:
    """Cumulative regret series against the target rank's true mean.

    A round's increment is max(0, u_(rank) - E[max of the two probed arms]).
    """
    target = sorted(means, reverse=True)[target_rank - 1]
    out = np.empty(len(trajectory))
    acc = 0.0
    for k, step in enumerate(trajectory):
        lo, hi = step.probes
        acc += max(0.0, target - expected_max(means[lo], means[hi], model))
        out[k] = acc
    return out


@dataclass
class HintedRunResult:
    cumulative_regret: np.ndarray  # length T
    pull_counts: np.ndarray  # per arm, whole horizon
    last_quarter_pulls: np.ndarray  # per arm, final quarter only
    final_ranking: list[int]


def run_hinted(
    algorithm: str,
    means: Sequence[float],
    model: RewardModel,
    T: int,
    rng: random.Random,
    epsilon: float = 0.1,
    target_rank: int = 1,
) -> HintedRunResult:
    """Run one replication of allprobe/eap/apem and return its regret series."""
    if T < 1:
        raise ParameterError(f"horizon must be >= 1, got {T}")
    bandit = HintedBandit(tuple(means), model, epsilon)
    m = len(means)
    target_sorted = sorted(range(m), key=lambda j: (-means[j], j))
    rank = target_rank if algorithm == "eap" else 1
    regret_target = means[target_sorted[rank - 1]]
    cum = np.empty(T)
    pulls = np.zeros(m, dtype=np.int64)
    last_quarter = np.zeros(m, dtype=np.int64)
    quarter_start = T - T // 4
    acc = 0.0
    for t in range(1, T + 1):
        if algorithm == "allprobe":
            step = bandit.allprobe_step(t, rng)
        elif algorithm == "eap":
            step = bandit.eap_step(t, rank, rng)
        elif algorithm == "apem":
            step = bandit.apem_step(t, rng)
        else:
            raise ParameterError(f"unknown hinted algorithm {algorithm!r}")
        lo, hi = step.probes
        acc += max(0.0, regret_target - expected_max(means[lo], means[hi], model))
        cum[t - 1] = acc
        pulls[step.pulled] += 1
        if t > quarter_start:
            last_quarter[step.pulled] += 1
    final_ranking = _ranked(bandit.arms, None if algorithm == "apem" else epsilon)
    return HintedRunResult(cum, pulls, last_quarter, final_ranking)
