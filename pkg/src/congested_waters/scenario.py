"""Scenario files (JSON) and the built-in parameter presets."""

from __future__ import annotations

import itertools
import json
import math
from pathlib import Path

import jsonschema

from .model import FisheryParams, PlayerParams, Scenario, ScenarioError

_NUM = {"type": "number"}
_NONNEG = {"type": "number", "minimum": 0}
_POS = {"type": "number", "exclusiveMinimum": 0}

SCENARIO_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["players", "globals"],
    "properties": {
        "name": {"type": "string"},
        "players": {
            "type": "array",
            "minItems": 2,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["name", "c", "P", "beta", "fisheries"],
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "code": {"type": "string", "minLength": 1},
                    "c": _NONNEG,
                    "P": _NONNEG,
                    "beta": _NONNEG,
                    "a1": _NONNEG,
                    "a2": _POS,
                    "fisheries": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["Z", "r", "q", "p"],
                            "properties": {
                                "id": {"type": "string", "minLength": 1},
                                "Z": _POS, "r": _POS, "q": _POS, "p": _POS,
                            },
                        },
                    },
                },
            },
        },
        "globals": {
            "type": "object",
            "additionalProperties": False,
            "required": ["beta_m"],
            "properties": {"beta_m": _NONNEG, "a1": _NONNEG, "a2": _POS},
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tolerances": {"type": "object", "additionalProperties": _NUM},
                "budgets": {"type": "object", "additionalProperties": {"type": "integer", "minimum": 1}},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
    },
}

DEFAULT_A1 = 3.5e-3
DEFAULT_A2 = 0.5


class SchemaError(ScenarioError):
    """Scenario document failed validation; ``path`` names the offending field."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


def _check_finite(node, path="$"):
    if isinstance(node, float) and not math.isfinite(node):
        raise SchemaError(f"non-finite number {node}", path)
    if isinstance(node, dict):
        for k, v in node.items():
            _check_finite(v, f"{path}.{k}")
    elif isinstance(node, list):
        for i, v in enumerate(node):
            _check_finite(v, f"{path}[{i}]")


def parse_scenario(document) -> Scenario:
    """Validate a scenario document (dict, JSON text, or path) and build a Scenario."""
    if isinstance(document, Path) or (isinstance(document, str) and not document.lstrip().startswith("{")):
        document = Path(document).read_text(encoding="utf-8")
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"malformed JSON: {exc}") from None
    _check_finite(document)
    try:
        jsonschema.validate(document, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in exc.absolute_path)
        raise SchemaError(exc.message, path) from None

    g = document["globals"]
    players = []
    for k, pd in enumerate(document["players"]):
        code = pd.get("code")
        prefix = code or pd["name"]
        fisheries = []
        for j, fd in enumerate(pd["fisheries"]):
            fid = fd.get("id", f"{prefix}{j + 1}")
            try:
                fisheries.append(FisheryParams(fid, fd["Z"], fd["r"], fd["q"], fd["p"]))
            except ScenarioError as exc:
                raise SchemaError(str(exc), f"$.players[{k}].fisheries[{j}]") from None
        players.append(PlayerParams(
            name=pd["name"], c=pd["c"], P=pd["P"], beta=pd["beta"], fisheries=tuple(fisheries),
            a1=pd.get("a1", g.get("a1", DEFAULT_A1)), a2=pd.get("a2", g.get("a2", DEFAULT_A2)),
            code=code,
        ))
    try:
        return Scenario(tuple(players), beta_m=g["beta_m"], name=document.get("name", ""),
                        solver=document.get("solver", {}))
    except ScenarioError as exc:
        raise SchemaError(str(exc), "$.players") from None


def emit_scenario(scenario: Scenario) -> dict:
    """Inverse of parse_scenario: a JSON-compatible document."""
    doc = {"name": scenario.name, "players": [], "globals": {"beta_m": scenario.beta_m}}
    for pl in scenario.players:
        pd = {"name": pl.name}
        if pl.code is not None:
            pd["code"] = pl.code
        pd.update(c=pl.c, P=pl.P, beta=pl.beta, a1=pl.a1, a2=pl.a2,
                  fisheries=[{"id": f.id, "Z": f.Z, "r": f.r, "q": f.q, "p": f.p} for f in pl.fisheries])
        doc["players"].append(pd)
    if scenario.solver:
        doc["solver"] = dict(scenario.solver)
    return doc


# presets

_NAMES = (("Japan", "J"), ("South Korea", "S"), ("China", "C"))


def _build(name, Z, c, P, beta, prices=(3.0,), r=0.4, q=0.0002, beta_m=6e-6,
           a1=DEFAULT_A1, a2=DEFAULT_A2) -> Scenario:
    players = []
    for k, (pname, code) in enumerate(_NAMES):
        fisheries = tuple(FisheryParams(f"{code}{j + 1}", Z[k], r, q, p) for j, p in enumerate(prices))
        players.append(PlayerParams(pname, c[k], P[k], beta[k], fisheries, a1, a2, code))
    return Scenario(tuple(players), beta_m=beta_m, name=name)


_EX1 = dict(Z=(2.0, 2.0, 2.0), c=(250e-6, 200e-6, 120e-6), P=(20.0, 30.0, 50.0), beta=(6e-7, 6e-7, 4e-7))
_LEVELS = {
    "Z": {"I": 1.0, "II": 2.0, "III": 3.0},
    "cC": {"I": 120e-6, "II": 180e-6},
    "P": {"I": (20.0, 30.0, 50.0), "II": (100.0, 100.0, 150.0)},
}


def _table5(z: str, cc: str, pp: str) -> Scenario:
    Zv = _LEVELS["Z"][z]
    return _build(f"table5-{z}-{cc}-{pp}", Z=(Zv,) * 3, c=(250e-6, 200e-6, _LEVELS["cC"][cc]),
                  P=_LEVELS["P"][pp], beta=_EX1["beta"], prices=(3.0, 1.5))


def preset_names() -> list[str]:
    names = ["example1", "example2", "example3"]
    names += [f"table5-{z}-{c}-{p}" for z, c, p in itertools.product(_LEVELS["Z"], _LEVELS["cC"], _LEVELS["P"])]
    return names


def preset(name: str) -> Scenario:
    if name == "example1":
        return _build("example1", **_EX1)
    if name == "example2":
        return _build("example2", Z=(1.5, 1.25, 1.5), c=(210e-6, 200e-6, 190e-6),
                      P=(100.0, 100.0, 100.0), beta=(18e-7, 18e-7, 12e-7))
    if name == "example3":
        return _build("example3", **_EX1, prices=(3.0, 1.5))
    if name.startswith("table5-"):
        parts = name.split("-")[1:]
        if len(parts) == 3 and parts[0] in _LEVELS["Z"] and parts[1] in _LEVELS["cC"] and parts[2] in _LEVELS["P"]:
            return _table5(*parts)
    raise KeyError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
