"""Parameter sweeps: override one parameter, re-solve, record quantities."""

from __future__ import annotations

import copy
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .model import Scenario, ScenarioError, player_utility
from .response import ResponseOptions, best_response, legal_strategy, profile_arrays, strategies_from_arrays
from .scenario import SchemaError, emit_scenario, parse_scenario
from .subgame import solve_subgame

MODES = ("fix-others", "re-equilibrate")
QUANTITIES = ("quotas", "fishing", "biomasses", "utilities", "legal", "subgame", "mcs", "status")
THREADS_ENV = "CONGESTED_WATERS_THREADS"

SWEEP_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["path", "mode"],
    "properties": {
        "path": {"type": "string", "minLength": 1},
        "values": {"type": "array", "minItems": 1, "items": {"type": "number"}},
        "range": {
            "type": "object",
            "additionalProperties": False,
            "required": ["start", "stop", "num"],
            "properties": {"start": {"type": "number"}, "stop": {"type": "number"},
                           "num": {"type": "integer", "minimum": 1}},
        },
        "mode": {"enum": list(MODES)},
        "record": {"type": "array", "items": {"enum": list(QUANTITIES)}},
        "base_quotas": {"type": "object", "additionalProperties": {"type": "number", "minimum": 0}},
        "responders": {"type": "array", "items": {"type": "string"}},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "max_rounds": {"type": "integer", "minimum": 1},
    },
    "oneOf": [{"required": ["values"]}, {"required": ["range"]}],
}


@dataclass
class SweepSpec:
    """One-parameter sweep.

    ``path`` is a dot path into the scenario document, e.g.
    ``players.China.c``, ``players.Japan.fisheries.J1.Z`` or
    ``globals.beta_m``; ``quotas.<fishery id>`` overrides a fixed quota in
    fix-others mode. In fix-others mode quotas start from ``base_quotas``
    (legal optima where missing) and only ``responders`` best-respond, in
    order; re-equilibrate runs sequential best responses for all players.
    """

    path: str
    values: list[float]
    mode: str = "re-equilibrate"
    record: tuple[str, ...] = ("quotas", "utilities")
    base_quotas: dict[str, float] = field(default_factory=dict)
    responders: tuple[str, ...] = ()
    tol: float = 0.5
    max_rounds: int = 50

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if len(self.values) == 0:
            raise ValueError("sweep needs at least one value")
        bad = [q for q in self.record if q not in QUANTITIES]
        if bad:
            raise ValueError(f"unknown quantities {bad}; choose from {QUANTITIES}")
        if self.path.startswith("quotas.") and self.mode != "fix-others":
            raise ValueError("quota overrides need mode fix-others")

    @classmethod
    def from_document(cls, document) -> "SweepSpec":
        if isinstance(document, (str, Path)) and not str(document).lstrip().startswith("{"):
            document = Path(document).read_text(encoding="utf-8")
        if isinstance(document, str):
            try:
                document = json.loads(document)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"malformed JSON: {exc}") from None
        try:
            jsonschema.validate(document, SWEEP_SCHEMA)
        except jsonschema.ValidationError as exc:
            path = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in exc.absolute_path)
            raise SchemaError(exc.message, path) from None
        if "values" in document:
            values = [float(v) for v in document["values"]]
        else:
            r = document["range"]
            values = np.linspace(r["start"], r["stop"], r["num"]).tolist()
        return cls(document["path"], values, document["mode"], tuple(document.get("record", ("quotas", "utilities"))),
                   dict(document.get("base_quotas", {})), tuple(document.get("responders", ())),
                   document.get("tol", 0.5), document.get("max_rounds", 50))


def apply_override(scenario: Scenario, path: str, value: float) -> Scenario:
    """Scenario with the parameter at dot ``path`` set to ``value`` (re-validated)."""
    doc = copy.deepcopy(emit_scenario(scenario))
    parts = path.split(".")
    node = doc
    trail = "$"
    for i, key in enumerate(parts[:-1]):
        if isinstance(node, list):
            node = _pick(node, key, trail)
        elif isinstance(node, dict) and key in node:
            node = node[key]
        else:
            raise ScenarioError(f"sweep path {path!r} does not resolve at {trail}.{key}")
        trail += f".{key}"
    leaf = parts[-1]
    if not isinstance(node, dict) or leaf not in node or not isinstance(node[leaf], (int, float)):
        raise ScenarioError(f"sweep path {path!r} does not name a numeric parameter")
    node[leaf] = float(value)
    return parse_scenario(doc)


def _pick(items: list, key: str, trail: str):
    """List element by index, player name/code, or fishery id."""
    if key.isdigit() and int(key) < len(items):
        return items[int(key)]
    for it in items:
        if key in (it.get("name"), it.get("code"), it.get("id")):
            return it
    raise ScenarioError(f"no element {key!r} at {trail}")


def _point(args):
    scenario, spec, value, options = args
    from .equilibrium import find_equilibrium

    quotas_override = spec.path.startswith("quotas.")
    sc = scenario if quotas_override else apply_override(scenario, spec.path, value)
    legal = [legal_strategy(sc, k, options) for k in range(sc.n_players)]
    status = {"converged": 1.0, "epsilon": 0.0, "rounds": 0.0}
    if spec.mode == "re-equilibrate":
        res = find_equilibrium(sc, tol=spec.tol, max_rounds=spec.max_rounds, options=options)
        strategies = res.strategies
        status = {"converged": float(res.converged), "epsilon": res.epsilon, "rounds": float(res.rounds)}
    else:
        quotas = np.array([s for k in range(sc.n_players) for s in legal[k][0].quotas], float)
        for fid, q in spec.base_quotas.items():
            quotas[sc.fishery_index(fid)] = q
        if quotas_override:
            quotas[sc.fishery_index(spec.path.split(".", 1)[1])] = value
        strategies = strategies_from_arrays(sc, quotas)
        for who in spec.responders:
            k = sc.player_index(who)
            strategies[k] = best_response(sc, k, strategies, options).strategy
    quotas, mcs = profile_arrays(sc, strategies)
    sol = solve_subgame(sc, quotas, mcs)
    out: list[tuple[str, str, float]] = []
    for q in spec.record:
        if q == "quotas":
            out += [("quota", f, float(v)) for f, v in zip(sc.fishery_ids, quotas)]
        elif q == "fishing":
            out += [("fishing", f, float(v)) for f, v in zip(sc.fishery_ids, sol.effort)]
        elif q == "biomasses":
            out += [("biomass", f, float(v)) for f, v in zip(sc.fishery_ids, sol.biomass)]
        elif q == "utilities":
            out += [("utility", p, float(v)) for p, v in zip(sc.player_names, player_utility(sc, sol.F, mcs=mcs))]
        elif q == "legal":
            out += [("legal_utility", sc.players[k].name, float(legal[k][1])) for k in range(sc.n_players)]
        elif q == "subgame":
            for i, f in enumerate(sc.fishery_ids):
                for t, ft in enumerate(sol.types):
                    out.append(("subgame", f"{f}:{sc.fishery_ids[ft.licensed]}", float(sol.F[i, t])))
        elif q == "mcs":
            out += [("mcs", p, float(v)) for p, v in zip(sc.player_names, mcs)]
        elif q == "status":
            out += [("status", k, v) for k, v in status.items()]
    return out


def worker_count(n_points: int) -> int:
    env = os.environ.get(THREADS_ENV)
    cap = int(env) if env and env.isdigit() and int(env) > 0 else (os.cpu_count() or 1)
    return max(1, min(cap, n_points))


def run_sweep(scenario: Scenario, spec: SweepSpec, options: ResponseOptions | None = None) -> list[dict]:
    """Rows ``{index, parameter, value, quantity, key, result}`` ordered by sweep index."""
    if not spec.path.startswith("quotas."):
        apply_override(scenario, spec.path, spec.values[0])  # fail fast on a bad path
    jobs = [(scenario, spec, v, options) for v in spec.values]
    workers = worker_count(len(jobs))
    if workers == 1:
        results = [_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_point, jobs))  # map keeps submission order
    rows = []
    for i, (v, res) in enumerate(zip(spec.values, results)):
        for quantity, key, value in res:
            rows.append({"index": i, "parameter": spec.path, "value": float(v), "quantity": quantity, "key": key,
                         "result": value})
    return rows


def column(rows: list[dict], quantity: str, key: str) -> np.ndarray:
    """Values of one recorded quantity across the sweep, in sweep order."""
    return np.array([r["result"] for r in rows if r["quantity"] == quantity and r["key"] == key])
