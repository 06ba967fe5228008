"""Domain types and closed-form economics of the congested fishing game.

Units follow the preset data: biomass in 10^6 metric tons, money in 10^9 USD,
effort/quotas in abstract effort units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np


class ScenarioError(ValueError):
    """Invalid scenario parameters or inconsistent identifiers."""


@dataclass(frozen=True)
class FisheryParams:
    id: str
    Z: float
    r: float
    q: float
    p: float

    def __post_init__(self):
        for name in ("Z", "r", "q", "p"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ScenarioError(f"fishery {self.id}: {name} must be finite and > 0, got {value}")

    @property
    def slope(self) -> float:
        """Decline of revenue per fisherman (p*q*x) per unit of total effort."""
        return self.p * self.q**2 * self.Z / self.r

    @property
    def max_effort(self) -> float:
        """Effort r/q that drives the steady-state stock to zero."""
        return self.r / self.q


@dataclass(frozen=True)
class PlayerParams:
    name: str
    c: float
    P: float
    beta: float
    fisheries: tuple[FisheryParams, ...]
    a1: float = 3.5e-3
    a2: float = 0.5
    code: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "fisheries", tuple(self.fisheries))
        for name in ("c", "P", "beta", "a1"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ScenarioError(f"player {self.name}: {name} must be finite and >= 0, got {value}")
        if not math.isfinite(self.a2) or self.a2 <= 0:
            raise ScenarioError(f"player {self.name}: a2 must be finite and > 0, got {self.a2}")
        if not self.fisheries:
            raise ScenarioError(f"player {self.name}: at least one fishery is required")


@dataclass(frozen=True)
class FishermanType:
    """Fishermen holding quota for ``licensed`` fishery, landing in ``nationality``.

    Both fields are integer indices into the owning scenario. In the
    noncooperative game the nationality is the licensed fishery's owner; in
    cooperative (bargaining) mode the two are independent.
    """

    licensed: int
    nationality: int

    def __post_init__(self):
        if self.licensed < 0 or self.nationality < 0:
            raise ScenarioError("fisherman type indices must be nonnegative")


@dataclass(frozen=True)
class Scenario:
    players: tuple[PlayerParams, ...]
    beta_m: float
    name: str = ""
    solver: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "players", tuple(self.players))
        if len(self.players) < 2:
            raise ScenarioError("a scenario needs at least 2 players")
        if not math.isfinite(self.beta_m) or self.beta_m < 0:
            raise ScenarioError(f"beta_m must be finite and >= 0, got {self.beta_m}")
        names = [pl.name for pl in self.players]
        if len(set(names)) != len(names):
            raise ScenarioError(f"duplicate player names: {names}")
        ids = [f.id for f in self.fisheries]
        if len(set(ids)) != len(ids):
            raise ScenarioError(f"duplicate fishery ids: {ids}")

    # flattened views; fisheries are ordered player by player

    @cached_property
    def fisheries(self) -> tuple[FisheryParams, ...]:
        return tuple(f for pl in self.players for f in pl.fisheries)

    @cached_property
    def owner(self) -> np.ndarray:
        return np.array([k for k, pl in enumerate(self.players) for _ in pl.fisheries], dtype=int)

    @cached_property
    def fishery_ids(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.fisheries)

    @cached_property
    def player_names(self) -> tuple[str, ...]:
        return tuple(pl.name for pl in self.players)

    @cached_property
    def arrays(self) -> dict[str, np.ndarray]:
        fs = self.fisheries
        Z = np.array([f.Z for f in fs])
        r = np.array([f.r for f in fs])
        q = np.array([f.q for f in fs])
        p = np.array([f.p for f in fs])
        return {
            "Z": Z, "r": r, "q": q, "p": p,
            "revenue0": p * q * Z,
            "slope": p * q**2 * Z / r,
            "max_effort": r / q,
            "c": np.array([pl.c for pl in self.players]),
            "P": np.array([pl.P for pl in self.players]),
            "beta": np.array([pl.beta for pl in self.players]),
            "a1": np.array([pl.a1 for pl in self.players]),
            "a2": np.array([pl.a2 for pl in self.players]),
        }

    @property
    def n_players(self) -> int:
        return len(self.players)

    @property
    def n_fisheries(self) -> int:
        return len(self.fisheries)

    def fishery_index(self, fishery_id: str) -> int:
        try:
            return self.fishery_ids.index(fishery_id)
        except ValueError:
            raise KeyError(f"unknown fishery id {fishery_id!r}") from None

    def player_index(self, player: str | int) -> int:
        if isinstance(player, (int, np.integer)):
            if not 0 <= player < self.n_players:
                raise KeyError(f"player index {player} out of range")
            return int(player)
        try:
            return self.player_names.index(player)
        except ValueError:
            pass
        for k, pl in enumerate(self.players):
            if pl.code == player:
                return k
        raise KeyError(f"unknown player {player!r}")

    def owned(self, player: str | int) -> np.ndarray:
        """Indices of fisheries owned by ``player``."""
        return np.flatnonzero(self.owner == self.player_index(player))

    def default_types(self) -> tuple[FishermanType, ...]:
        """Noncooperative fisherman types: one per fishery, owner's nationality."""
        return tuple(FishermanType(j, int(k)) for j, k in enumerate(self.owner))

    def quota_vector(self, quotas) -> np.ndarray:
        """Normalize a quota mapping (fishery id -> level) or sequence to an array."""
        return _as_vector(quotas, self.fishery_ids, self.fishery_index, "quota")

    def mcs_vector(self, mcs) -> np.ndarray:
        if mcs is None:
            return np.zeros(self.n_players)
        return _as_vector(mcs, self.player_names, self.player_index, "MCS level")

    def replace_player(self, player: str | int, **changes) -> "Scenario":
        from dataclasses import replace

        k = self.player_index(player)
        players = list(self.players)
        players[k] = replace(players[k], **changes)
        return replace(self, players=tuple(players))


def _as_vector(values, keys, index_of, what: str) -> np.ndarray:
    out = np.zeros(len(keys))
    if isinstance(values, Mapping):
        for key, v in values.items():
            out[index_of(key)] = float(v)
    else:
        arr = np.asarray(values, dtype=float)
        if arr.shape != (len(keys),):
            raise ValueError(f"expected {len(keys)} {what} values, got shape {arr.shape}")
        out[:] = arr
    if not np.all(np.isfinite(out)) or np.any(out < 0):
        raise ValueError(f"{what} values must be finite and nonnegative: {out}")
    return out


@dataclass(frozen=True)
class QuotaProfile:
    F: Mapping[str, float]

    def __post_init__(self):
        if any(v < 0 for v in self.F.values()):
            raise ValueError("quotas must be nonnegative")


@dataclass(frozen=True)
class McsProfile:
    m: Mapping[str, float]

    def __post_init__(self):
        if any(v < 0 for v in self.m.values()):
            raise ValueError("MCS levels must be nonnegative")


# closed-form economics


def steady_state_biomass(fishery: FisheryParams, total_effort: float) -> float:
    """Steady state of logistic growth under constant effort. Not clamped at zero."""
    return fishery.Z * (1.0 - fishery.q * total_effort / fishery.r)


def growth_rhs(fishery: FisheryParams, x: float, total_effort: float) -> float:
    return fishery.r * x * (1.0 - x / fishery.Z) - x * fishery.q * total_effort


def mcs_cost(m, a1: float, a2: float):
    m = np.asarray(m, dtype=float)
    if np.any(m < 0):
        raise ValueError("MCS level must be nonnegative")
    out = a1 * np.power(m, a2)
    return float(out) if out.ndim == 0 else out


def cost_matrix(scenario: Scenario, types: Sequence[FishermanType] | None = None, mcs=None) -> np.ndarray:
    """Per-unit cost of each type (columns) fishing in each fishery (rows)."""
    types = scenario.default_types() if types is None else types
    m = scenario.mcs_vector(mcs)
    a = scenario.arrays
    nat = np.array([t.nationality for t in types], dtype=int)
    lic = np.array([t.licensed for t in types], dtype=int)
    illegal = a["c"][nat][None, :] + a["beta"][nat][None, :] * a["P"][scenario.owner][:, None] \
        + scenario.beta_m * m[nat][None, :]
    legal = np.arange(scenario.n_fisheries)[:, None] == lic[None, :]
    return np.where(legal, a["c"][nat][None, :], illegal)


def fisherman_cost(scenario: Scenario, fishery: str | int, ftype: FishermanType | str | int, mcs=None) -> float:
    """Cost for fishermen of ``ftype`` to fish one unit in ``fishery``.

    ``ftype`` may be a FishermanType or, for the noncooperative game, the id or
    index of the licensed fishery.
    """
    i = fishery if isinstance(fishery, (int, np.integer)) else scenario.fishery_index(fishery)
    if not isinstance(ftype, FishermanType):
        lic = ftype if isinstance(ftype, (int, np.integer)) else scenario.fishery_index(ftype)
        ftype = FishermanType(int(lic), int(scenario.owner[lic]))
    if not 0 <= i < scenario.n_fisheries or not 0 <= ftype.licensed < scenario.n_fisheries:
        raise KeyError("fishery index out of range")
    return float(cost_matrix(scenario, [ftype], mcs)[i, 0])


def rent(scenario: Scenario, fishery: str | int, ftype, biomass: float, mcs=None) -> float:
    i = fishery if isinstance(fishery, (int, np.integer)) else scenario.fishery_index(fishery)
    f = scenario.fisheries[i]
    return f.p * f.q * biomass - fisherman_cost(scenario, i, ftype, mcs)


def biomasses(scenario: Scenario, effort_by_fishery) -> np.ndarray:
    a = scenario.arrays
    return a["Z"] * (1.0 - a["q"] * np.asarray(effort_by_fishery, dtype=float) / a["r"])


def rent_matrix(scenario: Scenario, F: np.ndarray, types=None, mcs=None) -> np.ndarray:
    """Rents of every (fishery, type) pair at the biomasses induced by allocation F."""
    a = scenario.arrays
    x = biomasses(scenario, F.sum(axis=1))
    return (a["p"] * a["q"] * x)[:, None] - cost_matrix(scenario, types, mcs)


def player_utility(scenario: Scenario, F: np.ndarray, types=None, mcs=None) -> np.ndarray:
    """Total rent collected by each nation's fishermen minus its MCS spending.

    ``F`` is the (fishery x type) effort matrix; ``types`` defaults to the
    noncooperative types. Returns one utility per player.
    """
    types = scenario.default_types() if types is None else types
    F = np.asarray(F, dtype=float)
    if F.shape != (scenario.n_fisheries, len(types)):
        raise ValueError(f"allocation shape {F.shape} does not match scenario "
                         f"({scenario.n_fisheries} fisheries x {len(types)} types)")
    m = scenario.mcs_vector(mcs)
    a = scenario.arrays
    per_type = (F * rent_matrix(scenario, F, types, mcs)).sum(axis=0)
    u = np.zeros(scenario.n_players)
    for t, ft in enumerate(types):
        u[ft.nationality] += per_type[t]
    return u - a["a1"] * np.power(m, a["a2"])
