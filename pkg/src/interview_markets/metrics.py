"""Regret accounting, reward gaps, convergence and validity instrumentation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .engine import RoundOutcome
from .errors import ParameterError
from .estimation import validity
from .market import Market, PrefList, StableSet, ground_truth_prefs


@dataclass
class RegretSeries:
    """Cumulative optimal/pessimal regret per agent, one entry per round."""

    baseline_opt: tuple[float, ...]
    baseline_pess: tuple[float, ...]

    def __post_init__(self):
        n = len(self.baseline_opt)
        self._cum_opt = np.zeros(n)
        self._cum_pess = np.zeros(n)
        self._rows_opt: list[np.ndarray] = []
        self._rows_pess: list[np.ndarray] = []

    def update(self, rewards: Sequence[float]) -> "RegretSeries":
        r = np.asarray(rewards)
        self._cum_opt = self._cum_opt + (np.asarray(self.baseline_opt) - r)
        self._cum_pess = self._cum_pess + (np.asarray(self.baseline_pess) - r)
        self._rows_opt.append(self._cum_opt)
        self._rows_pess.append(self._cum_pess)
        return self

    def optimal_series(self) -> np.ndarray:  # shape (T, n)
        return np.vstack(self._rows_opt)

    def pessimal_series(self) -> np.ndarray:
        return np.vstack(self._rows_pess)


def stable_baselines(market: Market, stable_set: StableSet) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Per-agent means of the best and worst stable partners."""
    opt = tuple(
        market.agent_means[a][stable_set.best_partner[a]] for a in range(market.n)
    )
    pess = tuple(
        market.agent_means[a][stable_set.worst_partner[a]] for a in range(market.n)
    )
    return opt, pess


@dataclass(frozen=True)
class GapTable:
    """Absolute mean differences to the stable baselines, both sides.

    Firm-side gaps pair crosswise with the lattice: a firm's optimal-side
    baseline is its partner in the agent-optimal matching (the firm-pessimal
    one) and vice versa. Firms left unmatched by the stable set use the
    vacancy utility 0 as baseline.
    """

    agent_optimal: tuple[tuple[float, ...], ...]
    agent_pessimal: tuple[tuple[float, ...], ...]
    firm_optimal: tuple[tuple[float, ...], ...]
    firm_pessimal: tuple[tuple[float, ...], ...]
    agent_min_gap: tuple[float, ...]
    firm_min_gap: tuple[float, ...]


def gap_table(market: Market, stable_set: StableSet) -> GapTable:
    n, m = market.n, market.m
    agent_opt_rows, agent_pess_rows, a_min = [], [], []
    for a in range(n):
        u = market.agent_means[a]
        base_o = u[stable_set.best_partner[a]]
        base_p = u[stable_set.worst_partner[a]]
        row_o = tuple(abs(base_o - u[f]) for f in range(m))
        row_p = tuple(abs(base_p - u[f]) for f in range(m))
        agent_opt_rows.append(row_o)
        agent_pess_rows.append(row_p)
        a_min.append(min(g for f, g in enumerate(row_o) if f != stable_set.best_partner[a]) if m > 1 else 0.0)

    # firm partners under the two lattice extremes
    def partner_of_firm(extreme: str) -> list[Optional[int]]:
        partners: list[Optional[int]] = [None] * m
        source = stable_set.best_partner if extreme == "agent_optimal" else stable_set.worst_partner
        for a, f in enumerate(source):
            partners[f] = a
        return partners

    in_agent_opt = partner_of_firm("agent_optimal")
    in_agent_pess = partner_of_firm("agent_pessimal")
    firm_opt_rows, firm_pess_rows, f_min = [], [], []
    for f in range(m):
        u = market.firm_means[f]
        base_o = u[in_agent_opt[f]] if in_agent_opt[f] is not None else 0.0
        base_p = u[in_agent_pess[f]] if in_agent_pess[f] is not None else 0.0
        firm_opt_rows.append(tuple(abs(base_o - u[a]) for a in range(n)))
        firm_pess_rows.append(tuple(abs(base_p - u[a]) for a in range(n)))
        anchor = in_agent_opt[f]
        others = [abs(base_o - u[a]) for a in range(n) if a != anchor]
        f_min.append(min(others) if others else 0.0)
    return GapTable(
        tuple(agent_opt_rows),
        tuple(agent_pess_rows),
        tuple(firm_opt_rows),
        tuple(firm_pess_rows),
        tuple(a_min),
        tuple(f_min),
    )


def convergence_round(matchings: Sequence[Sequence[Optional[int]]]) -> Optional[int]:
    """Smallest round index (1-based) from which the matching is constant,
    perfect on agents, and stays so through the end; None otherwise."""
    if not matchings:
        return None
    final = tuple(matchings[-1])
    if any(f is None for f in final):
        return None
    start = len(matchings)
    for k in range(len(matchings) - 1, -1, -1):
        if tuple(matchings[k]) != final:
            break
        start = k + 1
    return start


@dataclass(frozen=True)
class PlateauResult:
    ratio: float
    zero_denominator: bool = False

    def within(self, bound: float) -> bool:
        return self.ratio <= bound


def plateau_from_values(
    early: float, late: float, floor: float = 1.0, slack: float = 1.0
) -> PlateauResult:
    """Ratio late/early with a guard for tiny, zero, or negative denominators:
    below ``floor`` the series counts as flat (ratio 1) iff it grew by at most
    ``slack`` between the checkpoints, else infinity."""
    if early < floor:
        flat = late <= early + slack
        return PlateauResult(1.0 if flat else float("inf"), True)
    return PlateauResult(late / early, False)


def plateau_ratio(
    series: np.ndarray,
    t_early: int,
    t_late: int,
    floor: float = 1.0,
    slack: float = 1.0,
) -> PlateauResult:
    """Cumulative value at t_late over the value at t_early (1-based rounds)."""
    if not 1 <= t_early < t_late <= len(series):
        raise ParameterError(
            f"need 1 <= t_early < t_late <= {len(series)}, got ({t_early}, {t_late})"
        )
    return plateau_from_values(
        float(series[t_early - 1]), float(series[t_late - 1]), floor, slack
    )


def count_invalid_rounds(
    est_lists: Sequence[PrefList], truth_list: PrefList, target: int
) -> int:
    """How many of the recorded estimated lists are invalid for the target."""
    return sum(1 for lst in est_lists if not validity(lst, truth_list, target).valid)


class InvalidityCounter:
    """Online invalid-round counter for chosen (owner, target) pairs.

    ``side`` is "agent" or "firm"; owners index into that side's estimator.
    """

    def __init__(self, market: Market, pairs: Sequence[tuple[str, int, int]]):
        agent_truth, firm_truth = ground_truth_prefs(market)
        self._truth = {"agent": agent_truth, "firm": firm_truth}
        self.pairs = tuple(pairs)
        self.counts = {pair: 0 for pair in self.pairs}
        self.rounds = 0

    def observe(self, agent_est, firm_est) -> None:
        self.rounds += 1
        for side, owner, target in self.pairs:
            est = agent_est if side == "agent" else firm_est
            lst = est.pref_list(owner)
            if not validity(lst, self._truth[side][owner], target).valid:
                self.counts[(side, owner, target)] += 1


SERIES_KINDS = ("optimal", "pessimal", "pseudo_optimal", "pseudo_pessimal")


class RunRecorder:
    """Aggregates one replication: regret series, invariants, logs.

    Checks every round: the vacancy set is contained in the hiring-change
    set, at least m-n firms are vacant, at most one application per firm
    when `expect_no_collisions`, gamma stays 1 in certain mode, and no firm
    abstains twice in a row.
    """

    KINDS = SERIES_KINDS

    def __init__(
        self,
        market: Market,
        baseline_opt: Sequence[float],
        baseline_pess: Sequence[float],
        T: int,
        expect_no_collisions: bool = False,
        certain_firms: bool = False,
        invalidity: Optional[InvalidityCounter] = None,
        agent_est=None,
        firm_est=None,
        keep_matchings: bool = False,
        retain_rounds: Optional[Sequence[int]] = None,
    ):
        self.market = market
        n = market.n
        self._retain = frozenset(retain_rounds) if retain_rounds is not None else None
        self._stored: dict[int, tuple] = {}  # t -> one row per series kind
        # the pseudo twins accumulate baseline minus the matched firm's mean:
        # same expectation as the realized series, far lower variance
        self._cum_opt = [0.0] * n
        self._cum_pess = [0.0] * n
        self._cum_pseudo_opt = [0.0] * n
        self._cum_pseudo_pess = [0.0] * n
        self._base_opt = tuple(baseline_opt)
        self._base_pess = tuple(baseline_pess)
        self.rounds_seen = 0
        self.expect_no_collisions = expect_no_collisions
        self.certain_firms = certain_firms
        self.collision_rounds = 0
        self.vprime_subset_violations = 0
        self.vprime_size_violations = 0
        self.gamma_zero_rounds = 0
        self.certain_gamma_violations = 0
        self.consecutive_abstentions = 0
        self._prev_gamma = [1] * market.m
        self._prev_pool = [0] * market.m
        self.invalidity = invalidity
        self._agent_est = agent_est
        self._firm_est = firm_est
        self.matchings: Optional[list[tuple[Optional[int], ...]]] = (
            [] if keep_matchings else None
        )
        self.outcomes: Optional[list[RoundOutcome]] = None

    def keep_outcomes(self) -> "RunRecorder":
        self.outcomes = []
        return self

    def __call__(self, outcome: RoundOutcome) -> None:
        self.rounds_seen += 1
        market = self.market
        match = outcome.matching.agent_match
        rewards = outcome.rewards
        co, cp = self._cum_opt, self._cum_pess
        cpo, cpp = self._cum_pseudo_opt, self._cum_pseudo_pess
        agent_means = market.agent_means
        for a, (bo, bp) in enumerate(zip(self._base_opt, self._base_pess)):
            x = rewards[a]
            co[a] += bo - x
            cp[a] += bp - x
            f = match[a]
            u = agent_means[a][f] if f is not None else 0.0
            cpo[a] += bo - u
            cpp[a] += bp - u
        t = outcome.t
        if self._retain is None or t in self._retain:
            self._stored[t] = (tuple(co), tuple(cp), tuple(cpo), tuple(cpp))

        if not outcome.vprime <= outcome.v:
            self.vprime_subset_violations += 1
        if len(outcome.vprime) < market.m - market.n:
            self.vprime_size_violations += 1
        pool_sizes = [0] * market.m
        for apps in outcome.applications:
            for f in apps:
                pool_sizes[f] += 1
        if self.expect_no_collisions and any(s > 1 for s in pool_sizes):
            self.collision_rounds += 1
        prev_gamma = self._prev_gamma
        prev_pool = self._prev_pool
        for f, g in enumerate(outcome.gamma):
            if g == 0:
                self.gamma_zero_rounds += 1
                if self.certain_firms:
                    self.certain_gamma_violations += 1
                if prev_gamma[f] == 0 and prev_pool[f] > 0 and pool_sizes[f] > 0:
                    self.consecutive_abstentions += 1
            prev_gamma[f] = g
            prev_pool[f] = pool_sizes[f]
        if self.invalidity is not None:
            self.invalidity.observe(self._agent_est, self._firm_est)
        if self.matchings is not None:
            self.matchings.append(match)
        if self.outcomes is not None:
            self.outcomes.append(outcome)

    # -- results -----------------------------------------------------------
    def stored_rounds(self) -> list[int]:
        return sorted(self._stored)

    def stored_rows(self) -> dict[int, tuple]:
        return dict(self._stored)

    def row_at(self, t: int, kind: str = "optimal") -> tuple[float, ...]:
        return self._stored[t][self.KINDS.index(kind)]

    def _series(self, slot: int) -> np.ndarray:
        return np.asarray([self._stored[t][slot] for t in sorted(self._stored)])

    def optimal_series(self) -> np.ndarray:
        return self._series(0)

    def pessimal_series(self) -> np.ndarray:
        return self._series(1)

    def pseudo_optimal_series(self) -> np.ndarray:
        return self._series(2)

    def pseudo_pessimal_series(self) -> np.ndarray:
        return self._series(3)
