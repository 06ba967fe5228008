"""Fishermen's relocation subgame.

Given quotas and MCS levels, fishermen holding quota choose where to fish.
``solve_subgame`` builds an equilibrium constructively: effort is poured in
at the highest achievable rent, all active pairs are kept at equal rent while
that rent declines, and the process stops once no fisherman type with unused
quota can earn a positive rent. Between events every rent is affine in the
pour parameter, so events are located exactly.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import FishermanType, Scenario, cost_matrix, player_utility

logger = logging.getLogger(__name__)

ACTIVITY_EPS = 1e-7
RENT_TOL = 1e-9
BUDGET_TOL = 1e-6


class SubgameError(RuntimeError):
    """The constructive solver failed to terminate or hit an inconsistent rate system."""

    def __init__(self, message: str, state: dict | None = None):
        super().__init__(message)
        self.state = state or {}


@dataclass
class SubgameAllocation:
    """Effort F[i, t] of fisherman type t in fishery i, with induced quantities."""

    F: np.ndarray
    types: tuple[FishermanType, ...]
    quotas: np.ndarray
    biomass: np.ndarray
    rents: np.ndarray
    values: np.ndarray  # realized (or best available) rent per type
    slack: np.ndarray  # unused quota remains
    trace: list[float] = field(default_factory=list)  # tier value after each event
    events: list[str] = field(default_factory=list)

    @property
    def effort(self) -> np.ndarray:
        return self.F.sum(axis=1)

    @property
    def used(self) -> np.ndarray:
        return self.F.sum(axis=0)

    def occupancy(self, eps: float = ACTIVITY_EPS) -> tuple:
        """Hashable signature of which pairs are active and which types are saturated."""
        return (tuple(map(tuple, self.F > eps)), tuple(~self.slack))

    def as_dict(self, scenario: Scenario) -> dict[tuple[str, str], float]:
        """Map (fishery id, type label) -> effort."""
        return {(scenario.fishery_ids[i], type_label(scenario, t)): float(self.F[i, j])
                for j, t in enumerate(self.types) for i in range(self.F.shape[0])}


def type_label(scenario: Scenario, t: FishermanType) -> str:
    lic = scenario.fishery_ids[t.licensed]
    if scenario.owner[t.licensed] == t.nationality:
        return lic
    pl = scenario.players[t.nationality]
    return f"{pl.code or pl.name}@{lic}"


@dataclass
class TierState:
    """Snapshot of the pour: current tier rent and the pairs being filled."""

    value: float
    active: list[tuple[int, int]]
    slopes: np.ndarray
    open_types: np.ndarray
    saturated: dict[int, list[int]]  # saturated type -> fisheries it may shuffle among


@dataclass
class _Tols:
    rent: float
    effort: float


def _tolerances(revenue0: np.ndarray, quotas: np.ndarray) -> _Tols:
    return _Tols(rent=1e-11 * max(float(revenue0.max()), 1e-300),
                 effort=1e-10 * max(float(quotas.max(initial=0.0)), 1.0))


def _tier(R0, slope, cost, Q, F, tol: _Tols) -> TierState:
    rents = (R0 - slope * F.sum(axis=1))[:, None] - cost
    live = Q > tol.effort
    open_ = live & (Q - F.sum(axis=0) > tol.effort)
    value = 0.0
    if open_.any():
        value = max(0.0, float(rents[:, open_].max()))
    active = []
    if value > tol.rent:
        for t in np.flatnonzero(open_):
            for i in np.flatnonzero(rents[:, t] >= value - tol.rent):
                active.append((int(i), int(t)))
    saturated = {}
    for t in np.flatnonzero(live & ~open_):
        v = rents[:, t].max()
        members = np.flatnonzero((F[:, t] > tol.effort) | (rents[:, t] >= v - tol.rent))
        saturated[int(t)] = [int(i) for i in members]
    return TierState(value, active, slope, open_, saturated)


def max_rent_tier(scenario: Scenario, quotas, mcs=None, F=None, types=None) -> TierState:
    """Current maximum achievable rent and the set of pairs sharing it."""
    types = scenario.default_types() if types is None else tuple(types)
    Q = _type_quotas(scenario, quotas, types)
    a = scenario.arrays
    cost = cost_matrix(scenario, types, mcs)
    F = np.zeros(cost.shape) if F is None else np.asarray(F, dtype=float)
    return _tier(a["revenue0"], a["slope"], cost, Q, F, _tolerances(a["revenue0"], Q))


def _rates(state: TierState, F, tol: _Tols, W=None):
    """Effort rates per unit decline of the tier rent.

    Every fishery hosting an active pair loses revenue at unit rate; saturated
    types keep their totals fixed and their rents equal across the fisheries
    they occupy. Among the (generally many) consistent rate vectors the
    minimum-norm one is used, optionally with random weights to exercise the
    non-uniqueness of allocations.
    """
    edges = list(state.active)
    fixed_lb = [True] * len(edges)  # rate must be >= 0
    for t, members in state.saturated.items():
        for i in members:
            edges.append((i, t))
            fixed_lb.append(F[i, t] <= tol.effort)
    optional = [k for k, e in enumerate(edges) if fixed_lb[k] and e[1] in state.saturated]
    # fast path: repeatedly drop idle members of saturated types with negative rates
    dropped: set[int] = set()
    for _ in range(len(edges) + 1):
        res = _try_rates(edges, fixed_lb, dropped, state, W)
        if res is None or res[2] or not res[3]:
            break
        dropped.update(res[3])
    if res is None or not res[2]:
        # exhaustive search over which idle members stay out
        res = None
        if len(optional) <= 12:
            for size in range(len(optional) + 1):
                for combo in itertools.combinations(optional, size):
                    res = _try_rates(edges, fixed_lb, set(combo), state, W)
                    if res is not None and res[2]:
                        break
                else:
                    continue
                break
        if res is None or not res[2]:
            raise SubgameError("could not settle saturated-type memberships", {"edges": edges})
    return res[0], res[1]


def _try_rates(edges, fixed_lb, dropped, state: TierState, W):
    """Rates with ``dropped`` idle members excluded.

    Returns (edges, rates, complementary, negative idle members) or None when
    the reduced system is inconsistent. Complementary means every included
    idle member has a nonnegative rate and no excluded member would see its
    rent overtake the type's occupied fisheries.
    """
    use = [k for k in range(len(edges)) if k not in dropped]
    sub = [edges[k] for k in use]
    try:
        x = _solve_rates(sub, state, W)
    except SubgameError:
        return None
    lb = np.array([fixed_lb[k] for k in use], dtype=bool)
    scale = max(np.abs(x).max(initial=0.0), 1.0)
    sat_idle = np.array([fixed_lb[k] and edges[k][1] in state.saturated for k in use], dtype=bool)
    negative = [use[j] for j in np.flatnonzero(sat_idle & (x < -1e-9 * scale))]
    if negative:
        return sub, x, False, negative
    if np.any(lb & (x < -1e-9 * scale)):
        try:
            x = _solve_rates_bounded(sub, state, lb)
        except SubgameError:
            return None
    x = np.where(lb & (x < 0), 0.0, x)
    flow = np.zeros(state.slopes.shape)
    for (i, _), xe in zip(sub, x):
        flow[i] += xe
    rho = -state.slopes * flow
    for k in dropped:
        i, t = edges[k]
        occ = [ii for ii, tt in sub if tt == t]
        if occ and rho[i] - rho[occ[0]] > 1e-9:
            return sub, x, False, []
    return sub, x, True, []


def _rate_system(edges, state: TierState):
    n = len(edges)
    s = state.slopes
    rows, rhs = [], []
    active_fish = sorted({i for i, _ in state.active})
    by_fish: dict[int, list[int]] = {}
    for k, (i, _) in enumerate(edges):
        by_fish.setdefault(i, []).append(k)
    for i in active_fish:
        row = np.zeros(n)
        row[by_fish[i]] = s[i]
        rows.append(row)
        rhs.append(1.0)
    by_type: dict[int, list[int]] = {}
    for k, (i, t) in enumerate(edges):
        if t in state.saturated:
            by_type.setdefault(t, []).append(k)
    for t, ks in by_type.items():
        row = np.zeros(n)
        row[ks] = 1.0
        rows.append(row)
        rhs.append(0.0)
        fish = sorted({edges[k][0] for k in ks})
        for i in fish[1:]:
            row = np.zeros(n)
            row[by_fish[fish[0]]] += s[fish[0]]
            row[by_fish[i]] -= s[i]
            rows.append(row)
            rhs.append(0.0)
    return np.array(rows), np.array(rhs)


def _normalized_system(edges, state: TierState):
    A, b = _rate_system(edges, state)
    unit = 1.0 / state.slopes.max()  # rates in units of 1/slope are O(1)
    A = A * unit
    norm = np.abs(A).max(axis=1)
    return A / norm[:, None], b / norm, unit


def _solve_rates(edges, state: TierState, W=None):
    A, b, unit = _normalized_system(edges, state)
    w = np.ones(len(edges)) if W is None else np.array([W[e] for e in edges])
    # weighted minimum norm: min sum x^2 / w  s.t.  A x = b
    sw = np.sqrt(w)
    y, *_ = np.linalg.lstsq(A * sw, b, rcond=None)
    x = y * sw
    resid = np.abs(A @ x - b).max() if len(b) else 0.0
    if resid > 1e-9:
        raise SubgameError("inconsistent rate system", {"edges": edges, "residual": float(resid)})
    return x * unit


def _solve_rates_bounded(edges, state: TierState, lb):
    from scipy.optimize import lsq_linear

    A, b, unit = _normalized_system(edges, state)
    n = len(edges)
    # small ridge keeps the solution unique
    A_aug = np.vstack([A, 1e-8 * np.eye(n)])
    b_aug = np.concatenate([b, np.zeros(n)])
    res = lsq_linear(A_aug, b_aug, bounds=(np.where(lb, 0.0, -np.inf), np.full(n, np.inf)))
    if np.abs(A @ res.x - b).max() > 1e-7:
        raise SubgameError("no sign-feasible rate vector", {"edges": edges})
    return res.x * unit


def _type_quotas(scenario: Scenario, quotas, types) -> np.ndarray:
    if isinstance(quotas, np.ndarray) and quotas.shape == (len(types),) and quotas.dtype == float:
        if np.any(quotas < 0) or not np.all(np.isfinite(quotas)):
            raise ValueError("quotas must be finite and nonnegative")
        return quotas
    default = tuple(types) == scenario.default_types()
    if default:
        return scenario.quota_vector(quotas)
    Q = np.asarray(quotas, dtype=float)
    if Q.shape != (len(types),) or np.any(Q < 0) or not np.all(np.isfinite(Q)):
        raise ValueError("quotas must be a nonnegative vector with one entry per type")
    return Q


def solve_subgame(scenario: Scenario, quotas, mcs=None, types: Sequence[FishermanType] | None = None,
                  *, seed: int | None = None, max_events: int = 10_000) -> SubgameAllocation:
    """Subgame equilibrium for fixed quotas (one per type) and MCS levels.

    ``types`` defaults to one type per fishery licensed by its owner. ``seed``
    randomizes how flows are split where the equilibrium allocation is not
    unique; utilities do not depend on it.
    """
    types = scenario.default_types() if types is None else tuple(types)
    Q = _type_quotas(scenario, quotas, types)
    a = scenario.arrays
    cost = cost_matrix(scenario, types, mcs)
    F, trace, events = _pour(a["revenue0"], a["slope"], cost, Q, seed=seed, max_events=max_events)
    return _finish(scenario, F, types, Q, mcs, cost, trace, events)


def _finish(scenario, F, types, Q, mcs, cost, trace, events) -> SubgameAllocation:
    a = scenario.arrays
    E = F.sum(axis=1)
    x = a["Z"] * (1 - a["q"] * E / a["r"])
    rents = (a["p"] * a["q"] * x)[:, None] - cost
    tol = _tolerances(a["revenue0"], Q)
    slack = Q - F.sum(axis=0) > max(tol.effort, BUDGET_TOL * 1e-3)
    occupied = F > ACTIVITY_EPS
    values = np.where(occupied.any(axis=0), np.where(occupied, rents, -np.inf).max(axis=0), rents.max(axis=0))
    return SubgameAllocation(F, tuple(types), Q, x, rents, values, slack, list(trace), list(events))


def _split_weights(shape, seed):
    if seed is None:
        return None
    return np.random.default_rng(seed).uniform(0.2, 5.0, shape)


def _reference_step(R0, slope, cost, Q, F, tol, W):
    """One event of the pour in plain numpy; mutates F. Returns (tier value, event kind)."""
    state = _tier(R0, slope, cost, Q, F, tol)
    if state.value <= tol.rent:
        return state.value, "terminate"
    edges, x = _rates(state, F, tol, W)
    tau, kind, hit = _next_event(state, edges, x, R0, slope, cost, Q, F, tol)
    for (i, t), xe in zip(edges, x):
        F[i, t] += tau * xe
    if kind == "decreasing-effort-hits-zero":
        F[hit] = 0.0
    elif kind == "quota-exhausted":
        col = F[:, hit]
        col[int(np.argmax(col))] += Q[hit] - col.sum()
    np.maximum(F, 0.0, out=F)
    return state.value, kind


def _pour_reference(R0, slope, cost, Q, *, seed=None, max_events=10_000):
    """Pure-numpy pour; returns (F, tier trace, event log)."""
    F = np.zeros(cost.shape)
    tol = _tolerances(R0, Q)
    W = _split_weights(cost.shape, seed)
    trace: list[float] = []
    events: list[str] = []
    for _ in range(max_events):
        value, kind = _reference_step(R0, slope, cost, Q, F, tol, W)
        trace.append(value)
        events.append(kind)
        if kind == "terminate":
            return F, trace, events
    raise SubgameError(f"no equilibrium after {max_events} events",
                       {"F": F.copy(), "trace": trace[-10:], "events": events[-10:]})


def _pour(R0, slope, cost, Q, *, seed=None, max_events=10_000):
    """Compiled pour, falling back to the reference stepper for sign-constrained rate solves."""
    from . import _kernel

    F = np.zeros(cost.shape)
    tol = _tolerances(R0, Q)
    W = _split_weights(cost.shape, seed)
    Wk = np.ones(cost.shape) if W is None else W
    trace_buf = np.empty(max_events + 1)
    code_buf = np.empty(max_events + 1, dtype=np.int64)
    trace: list[float] = []
    events: list[str] = []
    while len(events) < max_events:
        status, n = _kernel.pour(R0, slope, cost, Q, Wk, F, tol.rent, tol.effort,
                                 max_events - len(events), trace_buf, code_buf)
        trace.extend(trace_buf[:n].tolist())
        events.extend(_kernel.EVENT_NAMES[c] for c in code_buf[:n])
        if status == _kernel.DONE:
            return F, trace, events
        if status == _kernel.INCONSISTENT:
            raise SubgameError("inconsistent rate system", {"F": F.copy(), "events": events[-10:]})
        if status == _kernel.NEEDS_BOUNDS:
            value, kind = _reference_step(R0, slope, cost, Q, F, tol, W)
            trace.append(value)
            events.append(kind)
            if kind == "terminate":
                return F, trace, events
    raise SubgameError(f"no equilibrium after {max_events} events",
                       {"F": F.copy(), "trace": trace[-10:], "events": events[-10:]})


def _next_event(state, edges, x, R0, slope, cost, Q, F, tol):
    nF, nT = cost.shape
    flow = np.zeros((nF, nT))
    for (i, t), xe in zip(edges, x):
        flow[i, t] += xe
    rho = -slope * flow.sum(axis=1)  # revenue (hence rent) rate per fishery
    rents = (R0 - slope * F.sum(axis=1))[:, None] - cost
    pi = state.value
    best = (pi, "rent-hits-zero", None)
    tiny = 1e-12

    def consider(tau, kind, hit):
        nonlocal best
        if tau < best[0]:
            best = (max(tau, 0.0), kind, hit)

    is_edge = flow != 0
    for i, t in edges:
        is_edge[i, t] = True
    for t in np.flatnonzero(state.open_types):
        w = flow[:, t].sum()
        if w > tiny:
            consider((Q[t] - F[:, t].sum()) / w, "quota-exhausted", int(t))
        for i in range(nF):
            if not is_edge[i, t] and 1.0 + rho[i] > 1e-9:
                consider((pi - rents[i, t]) / (1.0 + rho[i]), "type-enters-tier", (i, int(t)))
    for t, _members in state.saturated.items():
        occ = [i for i, tt in edges if tt == t]
        if not occ:
            continue
        mu = rho[occ[0]]
        v = rents[occ[0], t]
        for i in range(nF):
            if not is_edge[i, t] and rho[i] - mu > 1e-9:
                consider((v - rents[i, t]) / (rho[i] - mu), "type-enters-tier", (i, int(t)))
    for (i, t), xe in zip(edges, x):
        if xe < 0 and F[i, t] > 0:
            consider(F[i, t] / -xe, "decreasing-effort-hits-zero", (i, int(t)))
    return best


def advance_tier(scenario: Scenario, quotas, mcs=None, F=None, types=None) -> tuple[str, np.ndarray, float]:
    """Advance one event from partial allocation ``F``; returns (event kind, new F, step in rent units)."""
    types = scenario.default_types() if types is None else tuple(types)
    Q = _type_quotas(scenario, quotas, types)
    a = scenario.arrays
    cost = cost_matrix(scenario, types, mcs)
    F = np.zeros(cost.shape) if F is None else np.array(F, dtype=float)
    tol = _tolerances(a["revenue0"], Q)
    state = _tier(a["revenue0"], a["slope"], cost, Q, F, tol)
    if state.value <= tol.rent:
        raise ValueError("tier value is zero; nothing to advance")
    edges, x = _rates(state, F, tol)
    tau, kind, hit = _next_event(state, edges, x, a["revenue0"], a["slope"], cost, Q, F, tol)
    for (i, t), xe in zip(edges, x):
        F[i, t] += tau * xe
    np.maximum(F, 0.0, out=F)
    return kind, F, tau


# verification


@dataclass
class SgeVerification:
    budget: float  # worst overuse of a quota
    profitability: float  # worst negative rent among active pairs
    best_alternative: float  # worst rent shortfall of an active pair vs the type's best fishery
    unused_quota: float  # worst positive rent available to a type with idle quota
    nonnegativity: float  # most negative effort
    active: np.ndarray  # stands in for y_{ij,kl}
    idle: np.ndarray  # stands in for y_kl
    passed: dict[str, bool]

    @property
    def ok(self) -> bool:
        return all(self.passed.values())


def verify_sge(scenario: Scenario, quotas, mcs, allocation, *, rent_tol: float = RENT_TOL,
               budget_tol: float = BUDGET_TOL, eps: float = ACTIVITY_EPS, types=None) -> SgeVerification:
    """Check the subgame-equilibrium conditions for an allocation.

    ``allocation`` may be a SubgameAllocation or a raw (fishery x type) matrix.
    """
    if isinstance(allocation, SubgameAllocation):
        types = allocation.types
        F = allocation.F
    else:
        F = np.asarray(allocation, dtype=float)
    types = scenario.default_types() if types is None else tuple(types)
    Q = _type_quotas(scenario, quotas, types)
    a = scenario.arrays
    E = F.sum(axis=1)
    x = a["Z"] * (1 - a["q"] * E / a["r"])
    rents = (a["p"] * a["q"] * x)[:, None] - cost_matrix(scenario, types, mcs)
    active = F > eps
    # quota below the solver's effort resolution counts as spent
    idle = Q - F.sum(axis=0) > max(eps, _tolerances(a["revenue0"], Q).effort)
    best = rents.max(axis=0)
    budget = float(max(0.0, (F.sum(axis=0) - Q).max(initial=0.0)))
    prof = float(np.where(active, np.maximum(0.0, -rents), 0.0).max(initial=0.0))
    alt = float(np.where(active, best[None, :] - rents, 0.0).max(initial=0.0))
    unused = float(np.where(idle, np.maximum(0.0, best), 0.0).max(initial=0.0))
    neg = float(max(0.0, -F.min(initial=0.0)))
    if np.any(x < 0):
        neg = max(neg, float(-x.min()))  # extinct stocks are inconsistent
    passed = {
        "budget": budget <= budget_tol,
        "profitability": prof <= rent_tol,
        "best_alternative": alt <= rent_tol,
        "unused_quota": unused <= rent_tol,
        "nonnegativity": neg <= budget_tol,
    }
    return SgeVerification(budget, prof, alt, unused, neg, active, idle, passed)


def subgame_utility(scenario: Scenario, quotas, mcs=None, types=None, **kw) -> np.ndarray:
    sol = solve_subgame(scenario, quotas, mcs, types, **kw)
    return player_utility(scenario, sol.F, sol.types, mcs)


# independent oracles (used by the test-suite)


def _violation(F, R0, slope, cost, Q, eps):
    """Worst equilibrium-condition violation, in rent units, for a stack of allocations."""
    E = F.sum(axis=-1)
    rents = (R0 - slope * E)[..., :, None] - cost
    best = rents.max(axis=-2)
    active = F > eps
    idle = (Q - F.sum(axis=-2)) > eps
    v1 = np.where(active, np.maximum(-rents, best[..., None, :] - rents), 0.0).max(axis=(-2, -1))
    v2 = np.where(idle, np.maximum(best, 0.0), 0.0).max(axis=-1)
    return np.maximum(v1, v2)


def brute_force_sge_oracle(scenario: Scenario, quotas, mcs=None, step: float = 1.0, types=None,
                           max_points: int = 5_000_000) -> SubgameAllocation:
    """Exhaustive grid search for the allocation with the smallest condition violation.

    Every type's effort vector ranges over the grid points of its budget
    simplex; the joint grid is enumerated in full, so only tiny instances are
    admissible.
    """
    types = scenario.default_types() if types is None else tuple(types)
    Q = _type_quotas(scenario, quotas, types)
    a = scenario.arrays
    cost = cost_matrix(scenario, types, mcs)
    nF, nT = cost.shape
    if nF > 3 or nT > 3:
        raise ValueError("brute-force oracle supports at most 3 fisheries and 3 types")
    per_type = []
    for t in range(nT):
        n = int(np.floor(Q[t] / step + 1e-9))
        pts = [c for c in itertools.product(range(n + 1), repeat=nF) if sum(c) <= n]
        per_type.append(np.array(pts, dtype=float) * step)
    total = int(np.prod([len(p) for p in per_type]))
    if total > max_points:
        raise ValueError(f"instance too large for brute force ({total} grid points)")
    grids = np.meshgrid(*[np.arange(len(p)) for p in per_type], indexing="ij")
    idx = [g.ravel() for g in grids]
    F = np.stack([per_type[t][idx[t]] for t in range(nT)], axis=-1)  # (N, nF, nT)
    viol = _violation(F, a["revenue0"], a["slope"], cost, Q, step / 2)
    k = int(np.argmin(viol))
    return _finish(scenario, F[k].copy(), types, Q, mcs, cost, [], [f"grid-violation={viol[k]:.3e}"])


def support_enumeration_sge(scenario: Scenario, quotas, mcs=None, types=None) -> SubgameAllocation:
    """Equilibrium by enumerating, per type, its set of occupied fisheries.

    For each candidate support pattern the equal-rent and budget equations are
    linear; a pattern is accepted when its solution satisfies every
    inequality. Exponential in size, meant for small instances.
    """
    types = scenario.default_types() if types is None else tuple(types)
    Q = _type_quotas(scenario, quotas, types)
    a = scenario.arrays
    R0, s = a["revenue0"], a["slope"]
    cost = cost_matrix(scenario, types, mcs)
    nF, nT = cost.shape
    if nF * nT > 16:
        raise ValueError("support enumeration is limited to 16 (fishery, type) pairs")
    live = [t for t in range(nT) if Q[t] > 0]
    subsets = [c for n in range(nF + 1) for c in itertools.combinations(range(nF), n)]
    best, best_viol = None, np.inf
    for pattern in itertools.product(subsets, repeat=len(live)):
        supp = {t: S for t, S in zip(live, pattern)}
        pairs = [(i, t) for t in live for i in supp[t]]
        typed = [t for t in live if supp[t]]
        for sat_flags in itertools.product((True, False), repeat=len(typed)):
            sat = dict(zip(typed, sat_flags))
            n = len(pairs) + len(typed)  # unknowns: efforts, then type rents
            A = np.zeros((n, n))
            b = np.zeros(n)
            row = 0
            for k, (i, t) in enumerate(pairs):
                # R0_i - s_i * sum_u F[i,u] - cost[i,t] = v_t
                for kk, (ii, _) in enumerate(pairs):
                    if ii == i:
                        A[row, kk] = s[i]
                A[row, len(pairs) + typed.index(t)] = 1.0
                b[row] = R0[i] - cost[i, t]
                row += 1
            for j, t in enumerate(typed):
                if sat[t]:
                    for k, (_, tt) in enumerate(pairs):
                        if tt == t:
                            A[row, k] = 1.0
                    b[row] = Q[t]
                else:
                    A[row, len(pairs) + j] = 1.0
                row += 1
            if n == 0:
                sol = np.zeros(0)
            else:
                # efforts in units of 1/slope and rents in units of revenue keep A well scaled
                D = np.concatenate([np.full(len(pairs), 1.0 / s.max()), np.full(len(typed), R0.max())])
                As = A * D
                norm = np.abs(As).max(axis=1)
                y, *_ = np.linalg.lstsq(As / norm[:, None], b / norm, rcond=None)
                if np.abs((As / norm[:, None]) @ y - b / norm).max() > 1e-10:
                    continue
                sol = y * D
            F = np.zeros((nF, nT))
            for k, (i, t) in enumerate(pairs):
                F[i, t] = sol[k]
            if np.any(F < -1e-9) or np.any(F.sum(axis=0) > Q + 1e-6):
                continue
            F = np.maximum(F, 0.0)
            viol = float(_violation(F, R0, s, cost, Q, 1e-7))
            if viol < best_viol:
                best, best_viol = F, viol
            if viol < 1e-12:
                return _finish(scenario, F, types, Q, mcs, cost, [], ["support-enumeration"])
    if best is None:
        raise SubgameError("no consistent support pattern found")
    return _finish(scenario, best, types, Q, mcs, cost, [], [f"support-enumeration viol={best_viol:.3e}"])
