"""When is the legal optimum an equilibrium? Analytic tools for three one-fishery states.

With the two opponents at their legal quotas, the deviator's utility as a
function of its own quota is piecewise quadratic: inside each regime every
fisherman type that fishes in two places keeps its rents equal there, which
is a linear system in the efforts, so biomasses are affine in the quota.
Regimes change where a type starts (or stops) fishing in another state's
waters. This module computes the encroachment thresholds and marginal
allocations in closed form, follows the regimes exactly, and evaluates the
two equilibrium conditions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .model import Scenario
from .response import legal_optimum, strategies_from_arrays

REGIMES = ("foreign-inflow", "no-encroachment", "one-foreign", "two-foreign", "cascade", "rent-exhausted")


class AnalysisError(ValueError):
    """Degenerate geometry (singular system or zero slope) or unsupported scenario."""


def _require_three_single(scenario: Scenario):
    if scenario.n_players != 3 or any(len(pl.fisheries) != 1 for pl in scenario.players):
        raise AnalysisError("legal-equilibrium analysis needs three players owning one fishery each")


@dataclass(frozen=True)
class _Econ:
    """Per-player arrays for the one-fishery-per-player game at the legal profile."""

    pq: np.ndarray  # revenue per unit biomass per fisherman
    Z: np.ndarray
    r: np.ndarray
    q: np.ndarray
    s: np.ndarray  # rent decline per unit of effort
    c: np.ndarray
    P: np.ndarray
    beta: np.ndarray
    F_legal: np.ndarray
    x_legal: np.ndarray
    u_legal: np.ndarray

    @classmethod
    def of(cls, scenario: Scenario) -> "_Econ":
        _require_three_single(scenario)
        a = scenario.arrays
        legal = np.array([legal_optimum(pl.fisheries[0], pl) for pl in scenario.players])
        return cls(a["p"] * a["q"], a["Z"], a["r"], a["q"], a["slope"], a["c"], a["P"], a["beta"],
                   legal[:, 0], legal[:, 1], legal[:, 2])

    def quota_for_biomass(self, k: int, x: float) -> float:
        """Own-waters effort that brings k's biomass to ``x``."""
        return self.r[k] / self.q[k] * (1 - x / self.Z[k])

    def entry_biomass(self, k: int, m: int, x_m: float) -> float:
        """Biomass of k's waters at which k's fishermen start fishing m's waters (at biomass x_m)."""
        return (self.pq[m] * x_m - self.beta[k] * self.P[m]) / self.pq[k]


# thresholds and marginal allocations


@dataclass
class Threshold:
    """Encroachment thresholds for one deviator ``k`` with opponents at legal quotas.

    ``x_direct[m]``/``F_direct[m]``: k's biomass and quota at which k's
    fishermen start fishing m's waters. ``x_cascade[(l, m)]``: k's biomass at
    which l's fishermen start fishing m's waters while k's fishermen already
    fish l's waters; ``F_cascade[(l, m)]`` the matching quota.
    ``F_self[m]``: quota at which k's fishermen reach m's waters after first
    entering the other state's waters. ``x_open_access[j]`` = c_j / (p_j q_j).
    ``order`` is (first entered, second) by direct threshold quota.
    """

    deviator: str
    order: tuple[str, str]
    x_direct: dict[str, float]
    F_direct: dict[str, float]
    x_cascade: dict[tuple[str, str], float]
    F_cascade: dict[tuple[str, str], float]
    F_self: dict[str, float]
    x_open_access: dict[str, float]
    marginal_own: dict[str, float]  # own-waters share of a unit quota in the one-foreign regime, per first target


@dataclass
class MarginalAllocation:
    """Change of effort per unit of the deviator's quota, keyed by (waters, fishermen) player names."""

    regime: str
    components: dict[tuple[str, str], float]
    deviator: str

    @property
    def own_share(self) -> float:
        return self.components[(self.deviator, self.deviator)]


def _solve_square(A, b, what):
    A = np.asarray(A, float)
    if abs(np.linalg.det(A)) < 1e-300 or np.linalg.cond(A) > 1e14:
        raise AnalysisError(f"singular {what} system")
    return np.linalg.solve(A, np.asarray(b, float))


def marginal_allocations(scenario: Scenario, regime: str, players) -> MarginalAllocation:
    """Equal-rent-decline allocation of one extra unit of the deviator's quota.

    ``players`` is (k, l) for "one-foreign" (k fishes its own and l's waters),
    (k, l, m) for "two-foreign" (k fishes all three) and for "cascade" (k
    fishes its own and l's waters, l's fishermen are pushed into m's waters).
    """
    idx = [scenario.player_index(p) for p in players]
    if len(set(idx)) != len(idx):
        raise AnalysisError(f"regime players must be distinct, got {list(players)}")
    names = [scenario.players[i].name for i in idx]
    s = scenario.arrays["slope"][scenario.owner]  # one fishery per player in this module
    if regime == "one-foreign":
        k, l = idx
        A = [[1, 1], [s[k], -s[l]]]
        x = _solve_square(A, [1, 0], "2x2")
        comp = {(names[0], names[0]): x[0], (names[1], names[0]): x[1]}
    elif regime == "two-foreign":
        k, l, m = idx
        A = [[1, 1, 1], [s[k], -s[l], 0], [s[k], 0, -s[m]]]
        x = _solve_square(A, [1, 0, 0], "3x3")
        comp = {(names[0], names[0]): x[0], (names[1], names[0]): x[1], (names[2], names[0]): x[2]}
    elif regime == "cascade":
        k, l, m = idx
        # unknowns: dF_kk, dF_lk, dF_ll, dF_ml
        A = [[1, 1, 0, 0],
             [s[k], -s[l], -s[l], 0],
             [0, -s[l], -s[l], s[m]],
             [0, 0, 1, 1]]
        x = _solve_square(A, [1, 0, 0, 0], "4x4")
        comp = {(names[0], names[0]): x[0], (names[1], names[0]): x[1],
                (names[1], names[1]): x[2], (names[2], names[1]): x[3]}
    else:
        raise ValueError(f"unknown regime {regime!r}")
    return MarginalAllocation(regime, {key: float(v) for key, v in comp.items()}, names[0])


def encroachment_thresholds(scenario: Scenario, deviator: str | int) -> Threshold:
    """Closed-form thresholds for ``deviator`` raising its quota against legal opponents."""
    e = _Econ.of(scenario)
    k = scenario.player_index(deviator)
    names = scenario.player_names
    others = [j for j in range(3) if j != k]
    x_dir = {j: e.entry_biomass(k, j, e.x_legal[j]) for j in others}
    F_dir = {j: e.quota_for_biomass(k, x_dir[j]) for j in others}
    l, m = sorted(others, key=lambda j: (F_dir[j], j))
    x_cas, F_cas, F_self, own = {}, {}, {}, {}
    for first, second in ((l, m), (m, l)):
        share = marginal_allocations(scenario, "one-foreign", (k, first)).own_share
        if share <= 0:
            raise AnalysisError("degenerate own-waters share in the one-foreign regime")
        own[names[first]] = share
        x_first_second = e.entry_biomass(first, second, e.x_legal[second])
        x_cas[(names[first], names[second])] = e.entry_biomass(k, first, x_first_second)
        run = e.r[k] / (e.Z[k] * e.q[k] * share)
        F_cas[(names[first], names[second])] = F_dir[first] + run * (x_dir[first] - x_cas[(names[first], names[second])])
        if first == l:
            F_self[names[second]] = F_dir[first] + run * (x_dir[first] - x_dir[second])
    return Threshold(
        deviator=names[k], order=(names[l], names[m]),
        x_direct={names[j]: float(v) for j, v in x_dir.items()},
        F_direct={names[j]: float(v) for j, v in F_dir.items()},
        x_cascade={key: float(v) for key, v in x_cas.items()},
        F_cascade={key: float(v) for key, v in F_cas.items()},
        F_self={key: float(v) for key, v in F_self.items()},
        x_open_access={names[j]: float(e.c[j] / e.pq[j]) for j in range(3)},
        marginal_own=own,
    )


# exact regime following


@dataclass
class Segment:
    lo: float
    hi: float  # may be inf
    coef: tuple[float, float, float]  # u = c0 + c1 F + c2 F^2
    regime: str
    links: tuple[tuple[int, int], ...]  # (fishermen, waters) pairs fishing abroad
    argmax: float
    max: float

    def __call__(self, F: float) -> float:
        c0, c1, c2 = self.coef
        return c0 + c1 * F + c2 * F * F


@dataclass
class PiecewiseUtility:
    deviator: str
    segments: list[Segment]
    complete: bool = True  # False if following stopped early (see ``note``)
    note: str = ""

    def __call__(self, F: float) -> float:
        for seg in self.segments:
            if seg.lo <= F <= seg.hi:
                return seg(F)
        raise ValueError(f"quota {F} outside the analysed range")

    @property
    def breakpoints(self) -> list[float]:
        return [seg.lo for seg in self.segments[1:]]

    def best(self) -> Segment:
        return max(self.segments, key=lambda sg: (sg.max, -sg.argmax))


def _affine_state(e: _Econ, k: int, links, F_others):
    """Efforts and link flows as affine functions of the deviator's quota: z = z0 + z1 * F_k.

    Unknowns are the total effort in each of the three waters followed by one
    flow per link (t fishing in waters i). Rows: effort balance per waters,
    then rent equality per link.
    """
    L = len(links)
    n = 3 + L
    A = np.zeros((n, n))
    b0 = np.zeros(n)
    b1 = np.zeros(n)
    for i in range(3):
        A[i, i] = 1.0
        for j, (t, w) in enumerate(links):
            if t == i:
                A[i, 3 + j] += 1.0  # leaves home
            if w == i:
                A[i, 3 + j] -= 1.0  # arrives
        if i == k:
            b1[i] = 1.0
        else:
            b0[i] = F_others[i]
    R0 = e.pq * e.Z
    for j, (t, w) in enumerate(links):
        row = 3 + j
        # R_w - s_w E_w - (c_t + beta_t P_w) = R_t - s_t E_t - c_t
        A[row, w] -= e.s[w]
        A[row, t] += e.s[t]
        b0[row] = e.beta[t] * e.P[w] - R0[w] + R0[t]
    try:
        z0 = np.linalg.solve(A, b0)
        z1 = np.linalg.solve(A, b1)
    except np.linalg.LinAlgError:
        raise AnalysisError(f"singular regime system for links {links}") from None
    return z0, z1


def _label(k, links) -> str:
    if any(w == k for _, w in links):
        return "foreign-inflow"
    if any(t != k for t, _ in links):
        return "cascade"
    return ("no-encroachment", "one-foreign", "two-foreign")[sum(1 for t, _ in links if t == k)]


def _segment(lo, hi, coef, regime, links) -> Segment:
    c0, c1, c2 = coef
    cands = [lo] + ([hi] if math.isfinite(hi) else [])
    if c2 < 0:
        v = -c1 / (2 * c2)
        if lo < v < hi:
            cands.append(v)
    val = lambda F: c0 + c1 * F + c2 * F * F  # noqa: E731
    arg = max(cands, key=lambda F: (val(F), -F))
    return Segment(float(lo), float(hi), (float(c0), float(c1), float(c2)), regime, tuple(links), float(arg),
                   float(val(arg)))


def _initial_links(e: _Econ, k: int, F_others, tol):
    """Rent-equalizing links at F_k = 0, found by trying link sets smallest first."""
    cands = [(t, w) for t in range(3) for w in range(3) if t != w and t != k]
    for size in range(len(cands) + 1):
        for links in itertools.combinations(cands, size):
            if any((w, t) in links for t, w in links):
                continue  # two-way traffic between the same waters is never needed
            try:
                ok, _ = _consistent(e, k, list(links), F_others, 0.0, tol)
            except AnalysisError:
                continue
            if ok:
                return list(links)
    raise AnalysisError("no consistent opponent allocation at zero deviator quota")


def _consistent(e, k, links, F_others, F, tol):
    z0, z1 = _affine_state(e, k, links, F_others)
    z = z0 + z1 * F
    if any(z[3 + j] < -tol for j in range(len(links))):
        return False, z
    for t in range(3):
        if t == k:
            continue
        home = F_others[t] - sum(z[3 + j] for j, (tt, _) in enumerate(links) if tt == t)
        if home < -tol:
            return False, z
    rent = _rents(e, z)
    for t in range(3):
        if t == k:
            continue
        mine = rent[t] - e.c[t]
        for w in range(3):
            if w != t and (t, w) not in links and rent[w] - e.c[t] - e.beta[t] * e.P[w] > mine + 1e-12 * e.pq.max():
                return False, z
    return True, z


def _rents(e: _Econ, z):
    """Revenue per fisherman (p q x) in each of the three waters."""
    return e.pq * e.Z * (1 - e.q * z[:3] / e.r)


def deviation_utility(scenario: Scenario, deviator: str | int, *, max_segments: int = 64) -> PiecewiseUtility:
    """Exact piecewise-quadratic utility of ``deviator`` over its quota, opponents at legal quotas."""
    e = _Econ.of(scenario)
    k = scenario.player_index(deviator)
    name = scenario.player_names[k]
    F_others = e.F_legal.copy()
    F_others[k] = 0.0
    tol = 1e-9 * max(F_others.max(), 1.0)
    try:
        links = _initial_links(e, k, F_others, tol)
    except AnalysisError as exc:
        return PiecewiseUtility(name, [], False, str(exc))
    segments: list[Segment] = []
    F = 0.0
    R0 = e.pq * e.Z
    for _ in range(max_segments):
        try:
            z0, z1 = _affine_state(e, k, links, F_others)
        except AnalysisError as exc:
            return PiecewiseUtility(name, segments, False, f"{exc} at F={F:.6g}")
        # deviator's rent (same wherever it fishes): R_k - s_k E_k - c_k, affine in F
        rho0, rho1 = R0[k] - e.s[k] * z0[k] - e.c[k], -e.s[k] * z1[k]
        coef = (0.0, rho0, rho1)
        events: list[tuple[float, str, object]] = []

        def crossing(a0, a1, kind, what):
            # first F > current where a0 + a1 F falls to zero (a1 < 0)
            if a1 < -1e-300:
                root = -a0 / a1
                if root > F + tol:
                    events.append((root, kind, what))

        crossing(rho0, rho1, "deviator-rent-zero", None)
        for j, link in enumerate(links):
            crossing(z0[3 + j], z1[3 + j], "link-leaves", link)
        for t in range(3):
            if t == k:
                continue
            own0 = R0[t] - e.s[t] * z0[t] - e.c[t]
            own1 = -e.s[t] * z1[t]
            crossing(own0, own1, "opponent-rent-zero", t)
            home0 = F_others[t] - sum(z0[3 + j] for j, (tt, _) in enumerate(links) if tt == t)
            home1 = -sum(z1[3 + j] for j, (tt, _) in enumerate(links) if tt == t)
            crossing(home0, home1, "home-empty", t)
        for t in range(3):
            for w in range(3):
                if t == w or (t, w) in links:
                    continue
                # gap = home rent - rent abroad; entry when it falls to zero
                g0 = (R0[t] - e.s[t] * z0[t]) - (R0[w] - e.s[w] * z0[w] - e.beta[t] * e.P[w])
                g1 = -e.s[t] * z1[t] + e.s[w] * z1[w]
                crossing(g0, g1, "link-enters", (t, w))
        nxt = min(events, default=(math.inf, "end", None), key=lambda ev: ev[0])
        hi = nxt[0]
        segments.append(_segment(F, hi, coef, _label(k, links), links))
        kind, what = nxt[1], nxt[2]
        if kind in ("end", "deviator-rent-zero"):
            if kind == "deviator-rent-zero":
                segments.append(Segment(hi, math.inf, (0.0, 0.0, 0.0), "rent-exhausted", tuple(links), hi, 0.0))
            return PiecewiseUtility(name, segments)
        if kind in ("opponent-rent-zero", "home-empty"):
            who = scenario.player_names[what]
            return PiecewiseUtility(name, segments, False, f"{kind} for {who} at F={hi:.6g}")
        F = hi
        simultaneous = [ev for ev in events if ev[0] <= hi + tol]
        new = list(links)
        for _, kind_i, what_i in simultaneous:
            if kind_i == "link-leaves" and what_i in new:
                new.remove(what_i)
            elif kind_i == "link-enters" and what_i not in new:
                new.append(what_i)
        links = sorted(new)
    return PiecewiseUtility(name, segments, False, "segment limit reached")


# equilibrium conditions


@dataclass
class Condition1Entry:
    fishermen: str
    waters: str
    home_rent: float
    foreign_rent: float

    @property
    def passed(self) -> bool:
        return self.home_rent > self.foreign_rent


@dataclass
class Condition2Entry:
    deviator: str
    first: str
    second: str
    applicable: bool  # this ordering is the one the deviator meets
    best_quota: float
    best_utility: float
    legal_utility: float
    regime: str

    @property
    def passed(self) -> bool:
        return (not self.applicable) or self.best_utility < self.legal_utility


@dataclass
class Theorem4Report:
    condition1: list[Condition1Entry]
    condition2: list[Condition2Entry]
    hypothesis: dict[str, bool]  # per deviator: opponents keep positive domestic rent at its best deviation
    utilities: dict[str, PiecewiseUtility]
    thresholds: dict[str, Threshold]
    engine_verdict: bool | None = None
    engine_gains: np.ndarray | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def conditions_hold(self) -> bool:
        return all(c.passed for c in self.condition1) and all(c.passed for c in self.condition2)

    @property
    def applicable(self) -> bool:
        return all(self.hypothesis.values())

    @property
    def verdict(self) -> bool | None:
        """True/False per the two conditions; None when the theorem's hypothesis fails."""
        return self.conditions_hold if self.applicable else None

    @property
    def status(self) -> str:
        v = self.verdict
        return "theorem inapplicable" if v is None else ("equilibrium" if v else "not an equilibrium")


def check_legal_equilibrium(scenario: Scenario, *, cross_validate: bool = True, deviation_tol: float = 1e-4
                            ) -> Theorem4Report:
    """Evaluate both conditions for the legal profile and cross-check against direct best responses."""
    e = _Econ.of(scenario)
    names = scenario.player_names
    cond1 = []
    for k, m in itertools.permutations(range(3), 2):
        cond1.append(Condition1Entry(names[k], names[m], float(e.pq[k] * e.x_legal[k] - e.c[k]),
                                     float(e.pq[m] * e.x_legal[m] - e.c[k] - e.beta[k] * e.P[m])))
    cond2, hyp, utils, thr = [], {}, {}, {}
    notes = []
    for k in range(3):
        th = encroachment_thresholds(scenario, k)
        thr[names[k]] = th
        pw = deviation_utility(scenario, k)
        utils[names[k]] = pw
        if not pw.complete:
            notes.append(f"{names[k]}: regime following stopped early ({pw.note})")
        # deviations that encroach: every segment past the first foreign entry by the deviator
        start = th.F_direct[th.order[0]]
        later = [sg for sg in pw.segments if sg.hi > start and sg.regime != "rent-exhausted"]
        best = None
        for sg in later:
            lo = max(sg.lo, start)
            cand = _segment(lo, sg.hi, sg.coef, sg.regime, sg.links)
            if best is None or cand.max > best.max:
                best = cand
        for first, second in itertools.permutations([j for j in range(3) if j != k]):
            applicable = names[first] == th.order[0]
            cond2.append(Condition2Entry(names[k], names[first], names[second], applicable,
                                         best.argmax if best else math.nan, best.max if best else -math.inf,
                                         float(e.u_legal[k]), best.regime if best else ""))
        # opponents must keep positive domestic rent at the deviator's best encroaching quota;
        # a deviation path that cannot be followed leaves the theorem inapplicable
        ok = bool(pw.segments) and (pw.complete or pw.note.startswith(("opponent-rent-zero", "home-empty")))
        if ok and best is not None:
            z0, z1 = _affine_state(e, k, list(best.links), np.where(np.arange(3) == k, 0.0, e.F_legal))
            x = e.Z * (1 - e.q * (z0 + z1 * best.argmax)[:3] / e.r)
            ok = all(e.c[j] / e.pq[j] < x[j] for j in range(3) if j != k)
        hyp[names[k]] = bool(ok)
    report = Theorem4Report(cond1, cond2, hyp, utils, thr, notes=notes)
    if cross_validate:
        from .equilibrium import verify_equilibrium

        ver = verify_equilibrium(scenario, strategies_from_arrays(scenario, e.F_legal), deviation_tol)
        report.engine_verdict = ver.passed
        report.engine_gains = ver.gains
        if report.verdict is not None and report.verdict != ver.passed:
            notes.append("analytic verdict disagrees with direct best responses")
    return report
