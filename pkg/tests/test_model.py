import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from congested_waters import (FisheryParams, FishermanType, PlayerParams, Scenario, ScenarioError, SchemaError,
                              cost_matrix, emit_scenario, growth_rhs, mcs_cost, parse_scenario, player_utility,
                              preset, preset_names, steady_state_biomass)
from conftest import scenarios


def test_steady_state_is_a_root_of_growth():
    f = FisheryParams("X", 2.0, 0.4, 2e-4, 3.0)
    for E in (0.0, 500.0, 1500.0):
        x = steady_state_biomass(f, E)
        assert growth_rhs(f, x, E) == pytest.approx(0.0, abs=1e-12)
    assert steady_state_biomass(f, 0.0) == 2.0
    assert steady_state_biomass(f, f.r / f.q) == pytest.approx(0.0)


def test_slope_and_max_effort():
    f = FisheryParams("X", 2.0, 0.4, 2e-4, 3.0)
    assert f.slope == pytest.approx(3 * 4e-8 * 2 / 0.4)
    assert f.max_effort == pytest.approx(2000.0)


@pytest.mark.parametrize("field,value", [("Z", -1.0), ("r", 0.0), ("q", float("nan")), ("p", -2.0)])
def test_fishery_invariants(field, value):
    kw = dict(id="X", Z=1.0, r=0.4, q=2e-4, p=3.0)
    kw[field] = value
    with pytest.raises(ScenarioError, match=field):
        FisheryParams(**kw)


def test_scenario_needs_two_players():
    pl = PlayerParams("A", 1e-4, 10, 1e-6, (FisheryParams("A1", 1, 0.4, 2e-4, 3),))
    with pytest.raises(ScenarioError):
        Scenario((pl,), beta_m=1e-6)


def test_cost_matrix_legal_and_illegal(ex1):
    C = cost_matrix(ex1, mcs=[0, 0, 10])
    a = ex1.arrays
    assert np.allclose(np.diag(C), a["c"])
    # Chinese fishermen in Japanese waters: c_C + beta_C P_J + beta_m m_C
    assert C[0, 2] == pytest.approx(120e-6 + 4e-7 * 20 + 6e-6 * 10)
    assert C[2, 0] == pytest.approx(250e-6 + 6e-7 * 50)


def test_cost_in_own_other_fishery_uses_own_patrols(ex3):
    C = cost_matrix(ex3)
    # Japanese fishermen licensed for J1 fishing J2
    assert C[1, 0] == pytest.approx(250e-6 + 6e-7 * 20)


def test_mcs_cost():
    assert mcs_cost(0.0, 3.5e-3, 0.5) == 0.0
    assert mcs_cost(100.0, 3.5e-3, 0.5) == pytest.approx(0.035)


def test_utility_of_legal_allocation(ex1):
    F = np.diag([791.6666666, 833.3333333, 900.0])
    u = player_utility(ex1, F)
    assert np.allclose(u, [0.37604, 0.41667, 0.486], atol=1e-5)


def test_utility_subtracts_mcs(ex1):
    F = np.diag([800.0, 800.0, 800.0])
    u0 = player_utility(ex1, F)
    u1 = player_utility(ex1, F, mcs=[100, 0, 0])
    assert u0[0] - u1[0] == pytest.approx(0.035)
    assert np.allclose(u0[1:], u1[1:])


def test_example1_preset_parameters(ex1):
    a = ex1.arrays
    assert np.allclose(a["c"], [250e-6, 200e-6, 120e-6])
    assert np.allclose(a["P"], [20, 30, 50])
    assert np.allclose(a["beta"], [6e-7, 6e-7, 4e-7])
    assert ex1.beta_m == 6e-6
    assert np.allclose(a["a1"], 3.5e-3) and np.allclose(a["a2"], 0.5)
    assert np.allclose(a["Z"], 2.0)


def test_example2_preset_parameters(ex2):
    a = ex2.arrays
    assert np.allclose(a["Z"], [1.5, 1.25, 1.5])
    assert np.allclose(a["P"], 100)
    assert np.allclose(a["beta"], [18e-7, 18e-7, 12e-7])


def test_grid_preset_II_I_I_matches_example3(ex3):
    t = preset("table5-II-I-I")
    assert emit_scenario(t)["players"] == emit_scenario(ex3)["players"]
    assert t.beta_m == ex3.beta_m


def test_unknown_preset_lists_names():
    with pytest.raises(KeyError, match="example1"):
        preset("nope")
    assert len(preset_names()) == 3 + 12


@pytest.mark.parametrize("name", preset_names())
def test_presets_round_trip(name):
    sc = preset(name)
    doc = emit_scenario(sc)
    assert parse_scenario(doc) == sc
    assert parse_scenario(json.dumps(doc)) == sc


@given(scenarios())
def test_random_scenarios_round_trip(sc):
    assert parse_scenario(emit_scenario(sc)) == sc


def test_schema_rejects_empty_players():
    doc = emit_scenario(preset("example1"))
    doc["players"] = []
    with pytest.raises(SchemaError):
        parse_scenario(doc)


def test_schema_rejects_negative_Z_with_path():
    doc = emit_scenario(preset("example1"))
    doc["players"][1]["fisheries"][0]["Z"] = -1.0
    with pytest.raises(SchemaError) as err:
        parse_scenario(doc)
    assert "players[1].fisheries[0].Z" in err.value.path


def test_schema_rejects_unknown_keys_and_nonfinite():
    doc = emit_scenario(preset("example1"))
    doc["players"][0]["colour"] = "red"
    with pytest.raises(SchemaError):
        parse_scenario(doc)
    doc = emit_scenario(preset("example1"))
    doc["globals"]["beta_m"] = float("inf")
    with pytest.raises(SchemaError):
        parse_scenario(doc)


def test_schema_rejects_duplicate_fishery_ids():
    doc = emit_scenario(preset("example1"))
    doc["players"][1]["fisheries"][0]["id"] = "J1"
    with pytest.raises(SchemaError):
        parse_scenario(doc)


def test_fisherman_type_validation():
    with pytest.raises((ValueError, TypeError)):
        FishermanType(-1, 0)


@given(st.floats(0, 2000))
def test_biomass_monotone_in_effort(E):
    f = FisheryParams("X", 2.0, 0.4, 2e-4, 3.0)
    assert steady_state_biomass(f, E) >= steady_state_biomass(f, E + 1)
