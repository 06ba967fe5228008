"""Noncooperative quota equilibria by sequential best responses.

"Fictitious play" here means round-robin exact best responses, not belief
averaging: each state in turn replaces its strategy with a best response to
the current strategies of the others.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import Scenario, player_utility
from .response import (PlayerStrategy, ResponseOptions, best_response, evaluate_strategy, legal_strategy,
                       profile_arrays)
from .subgame import SubgameAllocation, solve_subgame, verify_sge

logger = logging.getLogger(__name__)


@dataclass
class IterationRecord:
    round: int
    mover: str
    strategy_delta: float
    utility_delta: float


@dataclass
class EquilibriumResult:
    strategies: list[PlayerStrategy]
    utilities: np.ndarray
    allocation: SubgameAllocation
    trace: list[IterationRecord]
    converged: bool
    rounds: int
    quotas: np.ndarray  # per fishery
    mcs: np.ndarray  # per player
    epsilon: float  # largest unilateral utility gain known at the returned profile
    cycle: list[list[PlayerStrategy]] = field(default_factory=list)  # end-of-round profiles of a detected cycle


def default_initial(scenario: Scenario, options: ResponseOptions | None = None) -> list[PlayerStrategy]:
    """Legal-optimum quotas for every player, with MCS at zero."""
    return [PlayerStrategy(legal_strategy(scenario, k, options)[0].quotas, 0.0)
            for k in range(scenario.n_players)]


def _delta(a: PlayerStrategy, b: PlayerStrategy) -> float:
    return float(max(np.max(np.abs(np.subtract(a.quotas, b.quotas))), abs(a.m - b.m)))


def _profile_key(strategies: Sequence[PlayerStrategy]) -> tuple:
    return tuple(round(v, 6) for s in strategies for v in (*s.quotas, s.m))


def find_equilibrium(scenario: Scenario, initial: Sequence[PlayerStrategy] | None = None,
                     order: Sequence[str | int] | None = None, *, tol: float = 0.5, max_rounds: int = 50,
                     options: ResponseOptions | None = None, free_mcs: bool = False,
                     improvement_tol: float = 1e-12) -> EquilibriumResult:
    """Round-robin best responses until a full round moves no strategy by ``tol`` or more.

    A mover keeps its current strategy unless the best response improves its
    utility by more than ``improvement_tol``; this keeps play from drifting
    along payoff-flat ridges. Play that revisits an earlier end-of-round
    profile is stopped as a cycle. Without convergence the returned profile is
    the least exploitable one of the cycle (or the last profile), and
    ``epsilon`` is its largest unilateral gain.
    """
    strategies = list(initial) if initial is not None else default_initial(scenario)
    movers = [scenario.player_index(p) for p in (order if order is not None else range(scenario.n_players))]
    trace: list[IterationRecord] = []
    history = [list(strategies)]
    seen: dict[tuple, int] = {_profile_key(strategies): 0}
    converged = False
    cycle: list[list[PlayerStrategy]] = []
    rounds = 0
    last_gains = [np.inf]
    for rounds in range(1, max_rounds + 1):
        biggest = 0.0
        last_gains = []
        for k in movers:
            current = evaluate_strategy(scenario, k, strategies[k], strategies)
            br = best_response(scenario, k, strategies, options, free_mcs=free_mcs)
            if br.exhausted:
                logger.warning("best response of %s hit its evaluation budget", scenario.players[k].name)
            gain = br.utility - current
            last_gains.append(max(gain, 0.0))
            if gain > improvement_tol * max(1.0, abs(current)):
                delta = _delta(br.strategy, strategies[k])
                strategies[k] = br.strategy
            else:
                delta, gain = 0.0, 0.0
            biggest = max(biggest, delta)
            trace.append(IterationRecord(rounds, scenario.players[k].name, delta, gain))
        logger.debug("round %d: max strategy change %.4g", rounds, biggest)
        history.append(list(strategies))
        if biggest < tol:
            converged = True
            break
        key = _profile_key(strategies)
        if key in seen:
            cycle = history[seen[key]:rounds]
            logger.warning("fictitious play revisited the profile of round %d at round %d", seen[key], rounds)
            break
        seen[key] = rounds
    epsilon = float(max(last_gains))
    if not converged:
        # report the least exploitable profile among the cycle (or the final profile)
        best = None
        for profile in cycle or [strategies]:
            ver = verify_equilibrium(scenario, profile, options=options, free_mcs=free_mcs)
            eps = float(ver.gains.max())
            if best is None or eps < best[0]:
                best = (eps, profile)
        epsilon, strategies = best
    quotas, mcs = profile_arrays(scenario, strategies)
    sol = solve_subgame(scenario, quotas, mcs)
    return EquilibriumResult(list(strategies), player_utility(scenario, sol.F, mcs=mcs), sol, trace,
                             converged, rounds, quotas, mcs, epsilon, cycle)


@dataclass
class EquilibriumVerification:
    gains: np.ndarray
    responses: list[PlayerStrategy]
    sge_ok: bool
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.gains <= self.tol)) and self.sge_ok


def verify_equilibrium(scenario: Scenario, strategies: Sequence[PlayerStrategy], tol: float = 1e-4,
                       options: ResponseOptions | None = None, *, free_mcs: bool = False) -> EquilibriumVerification:
    """Largest unilateral utility gain of each player; passes iff every gain is at most ``tol``."""
    quotas, mcs = profile_arrays(scenario, strategies)
    sol = solve_subgame(scenario, quotas, mcs)
    u = player_utility(scenario, sol.F, mcs=mcs)
    gains = np.zeros(scenario.n_players)
    responses = []
    for k in range(scenario.n_players):
        br = best_response(scenario, k, strategies, options, free_mcs=free_mcs)
        gains[k] = max(0.0, br.utility - u[k])
        responses.append(br.strategy)
    return EquilibriumVerification(gains, responses, verify_sge(scenario, quotas, mcs, sol).ok, tol)
