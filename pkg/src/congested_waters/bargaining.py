"""Nash bargaining over licensed cross-quotas and MCS levels.

In the cooperative setting a quota F[i, k] licenses nation k's fishermen to
fish in fishery i. Utilities come from the same subgame as the
noncooperative game: a fisherman pays c_k in its licensed fishery and the
deterrence cost (patrols plus MCS) anywhere else, so an agreement that is not
self-enforcing needs MCS to hold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .model import FishermanType, Scenario, cost_matrix
from .subgame import _pour

MODES = ("subgame", "direct")


def cooperative_types(scenario: Scenario) -> tuple[FishermanType, ...]:
    """One type per (nationality, licensed fishery), nationality-major."""
    return tuple(FishermanType(i, k) for k in range(scenario.n_players) for i in range(scenario.n_fisheries))


@dataclass
class CooperativeDecision:
    cross: np.ndarray  # (fishery, nationality) licensed quotas
    mcs: np.ndarray  # per player

    def __post_init__(self):
        self.cross = np.asarray(self.cross, float)
        self.mcs = np.asarray(self.mcs, float)
        if np.any(~np.isfinite(self.cross)) or np.any(self.cross < 0):
            raise ValueError("cross-quotas must be finite and nonnegative")
        if np.any(~np.isfinite(self.mcs)) or np.any(self.mcs < 0):
            raise ValueError("MCS levels must be finite and nonnegative")

    @classmethod
    def from_vector(cls, scenario: Scenario, x) -> "CooperativeDecision":
        x = np.asarray(x, float)
        nF, nP = scenario.n_fisheries, scenario.n_players
        return cls(x[:nF * nP].reshape(nP, nF).T.copy(), x[nF * nP:].copy())

    def vector(self) -> np.ndarray:
        return np.r_[self.cross.T.ravel(), self.mcs]

    def as_dict(self, scenario: Scenario) -> dict:
        return {"quotas": {f"{fid}:{name}": float(self.cross[i, k])
                           for k, name in enumerate(scenario.player_names)
                           for i, fid in enumerate(scenario.fishery_ids)},
                "mcs": dict(zip(scenario.player_names, map(float, self.mcs)))}


class _CoopGame:
    """Fast repeated evaluation of cooperative utilities for one scenario."""

    def __init__(self, scenario: Scenario, mode: str = "subgame"):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        self.scenario = scenario
        self.mode = mode
        self.types = cooperative_types(scenario)
        a = scenario.arrays
        self.a = a
        self.base = cost_matrix(scenario, self.types)
        lic = np.array([t.licensed for t in self.types])
        self.nat = np.array([t.nationality for t in self.types])
        self.illegal = np.arange(scenario.n_fisheries)[:, None] != lic[None, :]
        self.lic = lic
        self.beta_m = scenario.beta_m

    def allocation(self, x: np.ndarray) -> np.ndarray:
        nQ = len(self.types)
        Q, m = x[:nQ], x[nQ:]
        if self.mode == "direct":
            F = np.zeros((self.scenario.n_fisheries, nQ))
            F[self.lic, np.arange(nQ)] = Q
            return F
        cost = self.base + self.illegal * (self.beta_m * m[self.nat])[None, :]
        F, _, _ = _pour(self.a["revenue0"], self.a["slope"], cost, Q)
        return F

    def utilities(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        nQ = len(self.types)
        m = x[nQ:]
        F = self.allocation(x)
        a = self.a
        cost = self.base + self.illegal * (self.beta_m * m[self.nat])[None, :]
        xbio = a["Z"] * (1 - a["q"] * F.sum(axis=1) / a["r"])
        per_type = (F * ((a["p"] * a["q"] * xbio)[:, None] - cost)).sum(axis=0)
        u = np.bincount(self.nat, per_type, minlength=self.scenario.n_players)
        return u - a["a1"] * np.power(m, a["a2"])


def evaluate_cooperative(scenario: Scenario, cross, mcs=None, *, mode: str = "subgame") -> np.ndarray:
    """Utilities per player under licensed cross-quotas ``cross[i, k]`` and MCS levels.

    ``mode="direct"`` skips the subgame: every fisherman fishes exactly its
    licensed quota in its licensed fishery.
    """
    mcs = np.zeros(scenario.n_players) if mcs is None else mcs
    d = CooperativeDecision(cross, mcs)
    if d.cross.shape != (scenario.n_fisheries, scenario.n_players) or d.mcs.shape != (scenario.n_players,):
        raise ValueError("cross-quotas must be (fisheries x players) and MCS one per player")
    return _CoopGame(scenario, mode).utilities(d.vector())


# generic optimizer


@dataclass
class NPConfig:
    budget: int = 20_000
    partitions: int = 2
    samples: int = 8
    tol: float = 1e-6  # relative region diameter that ends partitioning
    polish: float = 0.3  # budget share reserved for the final pattern search
    seed: int = 0


@dataclass
class NPResult:
    x: np.ndarray
    value: float
    evaluations: int
    regions: int
    max_depth: int
    seed: int
    history: list[float] = field(default_factory=list)  # incumbent value after each partitioning step


class _Budget(Exception):
    pass


def nested_partitions(objective: Callable[[np.ndarray], float], lo, hi, config: NPConfig | None = None, *,
                      starts: Sequence = ()) -> NPResult:
    """Maximize ``objective`` over the box [lo, hi] by nested partitioning, then pattern search.

    Each step splits the most promising region in ``partitions`` pieces along
    its relatively widest side, samples every piece and the surrounding
    region uniformly, and moves into the winning piece or back to the parent
    if the surroundings win. A piece holding the incumbent counts the
    incumbent's value. Partitioning stops when its budget is spent or the
    region is smaller than ``tol``; the remaining budget refines the
    incumbent by compass search.
    """
    cfg = config or NPConfig()
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    width = np.where(hi > lo, hi - lo, 1.0)
    rng = np.random.default_rng(cfg.seed)
    count = 0
    best_x, best_v = None, -math.inf

    def ev(x, limit):
        nonlocal count, best_x, best_v
        if count >= limit:
            raise _Budget
        count += 1
        v = float(objective(x))
        if v > best_v:
            best_x, best_v = x.copy(), v
        return v

    np_budget = max(1, int(cfg.budget * (1 - cfg.polish)))
    path = [(lo.copy(), hi.copy())]
    regions = 0
    depth = 0
    history = []
    try:
        for s in starts:
            ev(np.clip(np.asarray(s, float), lo, hi), np_budget)
        while True:
            rlo, rhi = path[-1]
            rel = (rhi - rlo) / width
            if rel.max() < cfg.tol:
                break
            d = int(np.argmax(rel))
            cuts = np.linspace(rlo[d], rhi[d], cfg.partitions + 1)
            scores = []
            pieces = []
            for j in range(cfg.partitions):
                plo, phi = rlo.copy(), rhi.copy()
                plo[d], phi[d] = cuts[j], cuts[j + 1]
                pieces.append((plo, phi))
                score = -math.inf
                if best_x is not None and np.all(best_x >= plo) and np.all(best_x <= phi):
                    score = best_v
                for _ in range(cfg.samples):
                    score = max(score, ev(plo + rng.random(len(lo)) * (phi - plo), np_budget))
                scores.append(score)
            if len(path) > 1:
                # surrounding region: whole box minus the current region, by rejection
                score = -math.inf
                if best_x is not None and not (np.all(best_x >= rlo) and np.all(best_x <= rhi)):
                    score = best_v
                for _ in range(cfg.samples):
                    for _ in range(100):
                        y = lo + rng.random(len(lo)) * (hi - lo)
                        if not (np.all(y >= rlo) and np.all(y <= rhi)):
                            break
                    score = max(score, ev(y, np_budget))
                scores.append(score)
            regions += 1
            win = int(np.argmax(scores))
            if win < cfg.partitions:
                path.append(pieces[win])
            else:
                path.pop()
            depth = max(depth, len(path) - 1)
            history.append(best_v)
    except _Budget:
        pass
    # compass search around the incumbent with what is left
    if best_x is None:
        return NPResult(lo.copy(), -math.inf, count, regions, depth, cfg.seed, history)
    step = 0.05 * width
    try:
        while np.max(step / width) > 1e-9:
            improved = False
            for i in range(len(lo)):
                if hi[i] <= lo[i]:
                    continue
                for sign in (1.0, -1.0):
                    y = best_x.copy()
                    y[i] = np.clip(y[i] + sign * step[i], lo[i], hi[i])
                    if y[i] == best_x[i]:
                        continue
                    before = best_v
                    ev(y, cfg.budget)
                    if best_v > before:
                        improved = True
                        break
            if not improved:
                step = step / 2
    except _Budget:
        pass
    return NPResult(best_x, best_v, count, regions, depth, cfg.seed, history)


# bargaining problem


@dataclass
class BargainSpec:
    """Threat utilities, bargaining powers and the decision box (flattened as in ``CooperativeDecision.vector``)."""

    threat: np.ndarray
    alpha: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        self.threat = np.asarray(self.threat, float)
        self.alpha = np.asarray(self.alpha, float)
        if np.any(~np.isfinite(self.threat)):
            raise ValueError("threat utilities must be finite")
        if np.any(self.alpha < 0) or np.any(self.alpha > 1) or abs(self.alpha.sum() - 1) > 1e-9:
            raise ValueError("bargaining powers must lie in [0, 1] and sum to 1")
        if self.threat.shape != self.alpha.shape:
            raise ValueError("one threat value and one bargaining power per player")

    def box(self, scenario: Scenario, m_max: float = 150.0) -> tuple[np.ndarray, np.ndarray]:
        a = scenario.arrays
        nP = scenario.n_players
        upper = np.r_[np.tile(a["r"] / a["q"], nP), np.full(nP, m_max)]
        lo = np.zeros_like(upper) if self.lower is None else np.asarray(self.lower, float)
        hi = upper if self.upper is None else np.asarray(self.upper, float)
        if lo.shape != upper.shape or hi.shape != upper.shape or np.any(hi < lo) or np.any(lo < 0):
            raise ValueError(f"decision box must have {len(upper)} entries with 0 <= lower <= upper")
        return lo, hi


def normalize_alpha(values) -> np.ndarray:
    """Scale bargaining powers to sum to one (the CLI accepts e.g. .33,.33,.33)."""
    v = np.asarray(values, float)
    if np.any(v < 0) or v.sum() <= 0:
        raise ValueError("bargaining powers must be nonnegative and not all zero")
    return v / v.sum()


@dataclass
class BargainOutcome:
    decision: CooperativeDecision | None
    utilities: np.ndarray | None
    nash_product: float  # prod (u_k - threat_k)^alpha_k, 0 when infeasible
    log_nash_product: float
    feasible: bool
    evaluations: int
    regions: int
    seed: int
    mode: str
    shortfall: np.ndarray | None = None  # threat minus utility at the least infeasible point, when infeasible
    message: str = ""


MARGIN = 1e-9


def log_nash_product(u, threat, alpha) -> float:
    gap = np.asarray(u) - threat
    if np.any(gap <= MARGIN):
        return -math.inf
    return float(np.dot(alpha, np.log(gap)))


def nash_bargain(scenario: Scenario, spec: BargainSpec, config: NPConfig | None = None, *,
                 mode: str = "subgame", m_max: float = 150.0, starts: Sequence = ()) -> BargainOutcome:
    """Maximize the weighted Nash product subject to every player beating its threat value.

    Infeasible samples score below every feasible one (ordered by total
    shortfall) so the search is steered toward the feasible set. The
    diagonal decision that licenses each nation at its legal optimum, with
    no MCS, is always among the starting points.
    """
    from .response import legal_strategy

    cfg = config or NPConfig()
    game = _CoopGame(scenario, mode)
    lo, hi = spec.box(scenario, m_max)
    nF, nP = scenario.n_fisheries, scenario.n_players
    diag = np.zeros((nF, nP))
    for k in range(nP):
        diag[scenario.owned(k), k] = legal_strategy(scenario, k)[0].quotas
    seeds = [CooperativeDecision(diag, np.zeros(nP)).vector(), *[np.asarray(s, float) for s in starts]]
    worst = {"x": None, "short": math.inf}

    def objective(x):
        u = game.utilities(x)
        gap = u - spec.threat
        if np.all(gap > MARGIN):
            return float(np.dot(spec.alpha, np.log(gap)))
        short = float(np.sum(np.maximum(MARGIN - gap, 0.0)))
        if short < worst["short"]:
            worst.update(x=x.copy(), short=short)
        return -1e6 - short

    res = nested_partitions(objective, lo, hi, cfg, starts=[np.clip(s, lo, hi) for s in seeds])
    feasible = math.isfinite(res.value) and res.value > -1e6
    if not feasible:
        x = worst["x"] if worst["x"] is not None else res.x
        u = game.utilities(x)
        return BargainOutcome(CooperativeDecision.from_vector(scenario, x), u, 0.0, -math.inf, False,
                              res.evaluations, res.regions, cfg.seed, mode, spec.threat - u,
                              "no decision found with every utility above its threat value")
    u = game.utilities(res.x)
    lnp = log_nash_product(u, spec.threat, spec.alpha)
    return BargainOutcome(CooperativeDecision.from_vector(scenario, res.x), u, math.exp(lnp), lnp, True,
                          res.evaluations, res.regions, cfg.seed, mode)
