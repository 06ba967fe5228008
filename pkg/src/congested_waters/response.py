"""Legal optima and best responses of one state to fixed opponent strategies."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .model import FisheryParams, PlayerParams, Scenario, cost_matrix, player_utility
from .search import BoxOptions, SearchResult, maximize_box, maximize_line
from .subgame import ACTIVITY_EPS, _pour, _tolerances, solve_subgame


@dataclass(frozen=True)
class PlayerStrategy:
    """Quotas for each owned fishery (owner order) and an MCS level."""

    quotas: tuple[float, ...]
    m: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "quotas", tuple(float(v) for v in np.atleast_1d(self.quotas)))
        object.__setattr__(self, "m", float(self.m))
        if any(not np.isfinite(v) or v < 0 for v in (*self.quotas, self.m)):
            raise ValueError(f"strategy entries must be finite and nonnegative: {self}")


@dataclass
class ResponseOptions:
    """Search settings for best responses.

    ``line_points`` is the sample count for one-dimensional searches; ``box``
    configures the multi-dimensional grid search. ``m_max`` bounds the MCS
    level when it is optimized.
    """

    line_points: int = 129
    box: BoxOptions = field(default_factory=BoxOptions)
    m_max: float = 150.0
    budget: int = 200_000


@dataclass
class BestResponseResult:
    strategy: PlayerStrategy
    utility: float
    evaluations: int
    depth: int
    exhausted: bool = False


def legal_optimum(fishery: FisheryParams, owner: PlayerParams) -> tuple[float, float, float]:
    """Rent-maximizing quota when no one else can fish here: (quota, biomass, utility)."""
    R0 = fishery.p * fishery.q * fishery.Z
    if R0 <= owner.c:
        return 0.0, fishery.Z, 0.0
    F = fishery.r / (2 * fishery.q) * (1 - owner.c / R0)
    x = fishery.Z * (1 - fishery.q * F / fishery.r)
    return F, x, (fishery.p * fishery.q * x - owner.c) * F


def profile_arrays(scenario: Scenario, strategies: Sequence[PlayerStrategy]) -> tuple[np.ndarray, np.ndarray]:
    """Flatten per-player strategies to (quota per fishery, MCS per player)."""
    if len(strategies) != scenario.n_players:
        raise ValueError(f"expected {scenario.n_players} strategies, got {len(strategies)}")
    quotas = np.zeros(scenario.n_fisheries)
    for k, s in enumerate(strategies):
        own = scenario.owned(k)
        if len(s.quotas) != len(own):
            raise ValueError(f"player {scenario.players[k].name} owns {len(own)} fisheries, "
                             f"strategy has {len(s.quotas)} quotas")
        quotas[own] = s.quotas
    return quotas, np.array([s.m for s in strategies])


def strategies_from_arrays(scenario: Scenario, quotas, mcs=None) -> list[PlayerStrategy]:
    quotas = scenario.quota_vector(quotas)
    m = scenario.mcs_vector(mcs)
    return [PlayerStrategy(quotas[scenario.owned(k)], m[k]) for k in range(scenario.n_players)]


class _Game:
    """Fast utility of one player as a function of its own quotas and MCS level."""

    def __init__(self, R0, slope, cost0, illegal, Q, own, mine, beta_m, a1, a2):
        self.R0, self.slope, self.cost0, self.illegal = R0, slope, cost0, illegal
        self.Q, self.own, self.mine = Q, own, mine
        self.beta_m, self.a1, self.a2 = beta_m, a1, a2

    @classmethod
    def for_player(cls, scenario: Scenario, k: int, quotas, mcs):
        a = scenario.arrays
        types = scenario.default_types()
        m = scenario.mcs_vector(mcs).copy()
        m[k] = 0.0
        nat = np.array([t.nationality for t in types])
        lic = np.array([t.licensed for t in types])
        illegal = (nat[None, :] == k) & (np.arange(scenario.n_fisheries)[:, None] != lic[None, :])
        return cls(a["revenue0"], a["slope"], cost_matrix(scenario, types, m), illegal,
                   scenario.quota_vector(quotas), scenario.owned(k), nat == k,
                   scenario.beta_m, a["a1"][k], a["a2"][k])

    @classmethod
    def solo(cls, player: PlayerParams, beta_m: float):
        """The player alone with its own fisheries (no foreign fleets or waters)."""
        fs = player.fisheries
        n = len(fs)
        R0 = np.array([f.p * f.q * f.Z for f in fs])
        slope = np.array([f.slope for f in fs])
        illegal = ~np.eye(n, dtype=bool)
        cost0 = np.where(illegal, player.c + player.beta * player.P, player.c)
        return cls(R0, slope, cost0, illegal, np.zeros(n), np.arange(n), np.ones(n, bool),
                   beta_m, player.a1, player.a2)

    def __call__(self, own_quotas, m: float = 0.0):
        Q = self.Q.copy()
        Q[self.own] = own_quotas
        cost = self.cost0 + self.beta_m * m * self.illegal if m else self.cost0
        F, _, _ = _pour(self.R0, self.slope, cost, Q)
        rents = (self.R0 - self.slope * F.sum(axis=1))[:, None] - cost
        u = float((F * rents)[:, self.mine].sum()) - self.a1 * m ** self.a2
        tol = _tolerances(self.R0, Q)
        regime = ((F > ACTIVITY_EPS).tobytes(), (Q - F.sum(axis=0) <= tol.effort).tobytes())
        return u, regime


def _maximize(game: _Game, upper: np.ndarray, free_mcs: bool, m_fixed: float,
              opt: ResponseOptions) -> SearchResult:
    d = len(upper)
    if d == 1 and not free_mcs:
        return maximize_line(lambda F: game(np.array([F]), m_fixed), 0.0, float(upper[0]),
                             points=opt.line_points, budget=opt.budget)
    if free_mcs:
        lo, hi = np.zeros(d + 1), np.append(upper, opt.m_max)
        f = lambda z: game(z[:d], z[d])  # noqa: E731
    else:
        lo, hi = np.zeros(d), upper
        f = lambda z: game(z, m_fixed)  # noqa: E731
    return maximize_box(f, lo, hi, replace(opt.box, budget=opt.budget))


def legal_strategy(scenario: Scenario, player: str | int, options: ResponseOptions | None = None
                   ) -> tuple[PlayerStrategy, float]:
    """Best strategy (quotas and MCS) if foreign fleets could not fish in the player's waters.

    With one fishery this is the closed form. With several, the player's own
    fleets may still drift between its fisheries, which MCS can deter.
    """
    k = scenario.player_index(player)
    pl = scenario.players[k]
    if len(pl.fisheries) == 1:
        F, _, u = legal_optimum(pl.fisheries[0], pl)
        return PlayerStrategy((F,), 0.0), u
    opt = options or ResponseOptions(box=BoxOptions(grid=17, candidates=4))
    game = _Game.solo(pl, scenario.beta_m)
    res = _maximize(game, np.array([f.max_effort for f in pl.fisheries]), True, 0.0, opt)
    d = len(pl.fisheries)
    return PlayerStrategy(res.x[:d], res.x[d]), res.value


def solo_utility(scenario: Scenario, player: str | int, strategy: PlayerStrategy) -> float:
    """Utility of ``strategy`` with foreign fleets and waters removed."""
    k = scenario.player_index(player)
    return _Game.solo(scenario.players[k], scenario.beta_m)(np.array(strategy.quotas), strategy.m)[0]


def best_response(scenario: Scenario, player: str | int, strategies: Sequence[PlayerStrategy],
                  options: ResponseOptions | None = None, *, free_mcs: bool = False) -> BestResponseResult:
    """Utility-maximizing quotas (and MCS level if ``free_mcs``) against fixed opponents.

    The player's own entry in ``strategies`` supplies the MCS level held
    fixed when ``free_mcs`` is false; its quotas are ignored.
    """
    opt = options or ResponseOptions()
    k = scenario.player_index(player)
    quotas, mcs = profile_arrays(scenario, strategies)
    game = _Game.for_player(scenario, k, quotas, mcs)
    upper = scenario.arrays["max_effort"][scenario.owned(k)]
    res = _maximize(game, upper, free_mcs, mcs[k], opt)
    d = len(upper)
    m = float(res.x[d]) if free_mcs else float(mcs[k])
    strategy = PlayerStrategy(res.x[:d], m)
    return BestResponseResult(strategy, evaluate_strategy(scenario, k, strategy, strategies),
                              res.evaluations, res.depth, res.exhausted)


def evaluate_strategy(scenario: Scenario, player: str | int, strategy: PlayerStrategy,
                      strategies: Sequence[PlayerStrategy]) -> float:
    """Utility of ``player`` playing ``strategy`` against the others in ``strategies``."""
    k = scenario.player_index(player)
    profile = list(strategies)
    profile[k] = strategy
    quotas, mcs = profile_arrays(scenario, profile)
    sol = solve_subgame(scenario, quotas, mcs)
    return float(player_utility(scenario, sol.F, mcs=mcs)[k])


@dataclass
class Theorem3Report:
    player: str
    experimental: bool  # player owns several fisheries
    utility_at_zero: float
    probes: dict[float, float]
    free_mcs: BestResponseResult
    violations: list[str]

    @property
    def passed(self) -> bool:
        return not self.violations


def theorem3_check(scenario: Scenario, player: str | int, strategies: Sequence[PlayerStrategy],
                   m_grid=(10.0, 50.0, 100.0), options: ResponseOptions | None = None) -> Theorem3Report:
    """Compare best responses with MCS fixed at zero against fixed positive levels and a free level."""
    k = scenario.player_index(player)
    pl = scenario.players[k]
    profile = list(strategies)
    profile[k] = replace(profile[k], m=0.0)
    base = best_response(scenario, k, profile, options)
    probes = {}
    violations = []
    for m in m_grid:
        profile[k] = replace(profile[k], m=float(m))
        u = best_response(scenario, k, profile, options).utility
        probes[float(m)] = u
        strict = pl.a1 > 0 and m > 0
        if u > base.utility + 1e-12 or (strict and not u < base.utility):
            violations.append(f"m={m}: utility {u:.10g} vs {base.utility:.10g} at m=0")
    free = best_response(scenario, k, profile, options, free_mcs=True)
    if free.strategy.m > 0 and free.utility >= base.utility - 1e-12 and pl.a1 > 0:
        violations.append(f"free MCS search chose m={free.strategy.m:.6g}")
    if free.utility > base.utility + 1e-9:
        violations.append(f"free MCS utility {free.utility:.10g} exceeds m=0 utility {base.utility:.10g}")
    return Theorem3Report(pl.name, len(pl.fisheries) > 1, base.utility, probes, free, violations)
