import math

import numpy as np
import pytest

from congested_waters import player_utility, solve_subgame
from congested_waters.bargaining import (BargainSpec, CooperativeDecision, NPConfig, cooperative_types,
                                         evaluate_cooperative, log_nash_product, nash_bargain, nested_partitions,
                                         normalize_alpha)
from congested_waters.response import legal_strategy

THREAT_EX1 = np.array([0.1951, 0.2977, 0.5094])


def _diagonal_legal(sc):
    cross = np.zeros((sc.n_fisheries, sc.n_players))
    for k in range(sc.n_players):
        cross[sc.owned(k), k] = legal_strategy(sc, k)[0].quotas
    return cross


# decisions and evaluation


def test_cooperative_types_cover_every_pair(ex1):
    types = cooperative_types(ex1)
    assert len(types) == 9
    assert {(t.licensed, t.nationality) for t in types} == {(i, k) for i in range(3) for k in range(3)}


def test_decision_vector_round_trip(ex3):
    rng = np.random.default_rng(0)
    d = CooperativeDecision(rng.random((6, 3)) * 100, rng.random(3))
    back = CooperativeDecision.from_vector(ex3, d.vector())
    assert np.array_equal(back.cross, d.cross) and np.array_equal(back.mcs, d.mcs)
    keys = d.as_dict(ex3)["quotas"]
    assert keys["J2:China"] == d.cross[1, 2]


def test_decision_rejects_negative_entries():
    with pytest.raises(ValueError):
        CooperativeDecision(-np.ones((3, 3)), np.zeros(3))
    with pytest.raises(ValueError):
        CooperativeDecision(np.ones((3, 3)), -np.ones(3))


def test_diagonal_legal_decision_gives_legal_utilities(ex2):
    u = evaluate_cooperative(ex2, _diagonal_legal(ex2))
    legal = [legal_strategy(ex2, k)[1] for k in range(3)]
    assert u == pytest.approx(legal, rel=1e-9)


def test_zero_quotas_cost_only_mcs(ex1):
    m = np.array([0.0, 25.0, 100.0])
    u = evaluate_cooperative(ex1, np.zeros((3, 3)), m)
    a1 = np.array([pl.a1 for pl in ex1.players])
    assert u == pytest.approx(-a1 * np.sqrt(m), rel=1e-12)


def test_direct_mode_fishes_licenses_in_place(ex1):
    cross = np.array([[800.0, 100.0, 0.0], [0.0, 800.0, 50.0], [0.0, 0.0, 900.0]])
    u = evaluate_cooperative(ex1, cross, mode="direct")
    a = ex1.arrays
    x = a["Z"] * (1 - a["q"] * cross.sum(axis=1) / a["r"])
    rents = (a["p"] * a["q"] * x)[:, None] - a["c"][None, :]
    assert u == pytest.approx((cross * rents).sum(axis=0), rel=1e-12)
    with pytest.raises(ValueError):
        evaluate_cooperative(ex1, cross, mode="telepathy")


def test_utilities_recompute_through_the_subgame(ex1):
    rng = np.random.default_rng(4)
    cross = rng.random((3, 3)) * 600
    m = np.array([10.0, 0.0, 40.0])
    types = cooperative_types(ex1)
    Q = cross.T.ravel()
    sol = solve_subgame(ex1, Q, m, types)
    assert evaluate_cooperative(ex1, cross, m) == pytest.approx(player_utility(ex1, sol.F, types, m), abs=1e-12)


# nested partitions


def test_nested_partitions_finds_center_of_quadratic_bowl():
    res = nested_partitions(lambda x: -float(np.sum((x - 0.5) ** 2)), np.zeros(4), np.ones(4))
    assert np.abs(res.x - 0.5).max() <= 1e-2
    assert res.evaluations <= NPConfig().budget


def test_nested_partitions_one_dimensional():
    res = nested_partitions(lambda x: -float((x[0] - 2.0) ** 2), np.zeros(1), np.full(1, 10.0))
    assert res.x[0] == pytest.approx(2.0, abs=1e-3)


def test_nested_partitions_is_deterministic_per_seed():
    f = lambda x: float(np.sin(5 * x[0]) * np.cos(3 * x[1]) - 0.1 * x[0])  # noqa: E731
    cfg = NPConfig(budget=3000, seed=7)
    a = nested_partitions(f, np.zeros(2), np.full(2, 3.0), cfg)
    b = nested_partitions(f, np.zeros(2), np.full(2, 3.0), cfg)
    assert np.array_equal(a.x, b.x) and a.value == b.value
    assert a.history == sorted(a.history)


def test_nested_partitions_respects_budget():
    calls = []

    def f(x):
        calls.append(1)
        return -float(np.sum(x**2))

    res = nested_partitions(f, -np.ones(3), np.ones(3), NPConfig(budget=500))
    assert len(calls) <= 500 and res.evaluations == len(calls)


# bargaining spec


def test_spec_validation():
    with pytest.raises(ValueError):
        BargainSpec([0.1, 0.2, 0.3], [0.5, 0.5, 0.5])
    with pytest.raises(ValueError):
        BargainSpec([0.1, math.nan, 0.3], [1 / 3] * 3)
    with pytest.raises(ValueError):
        BargainSpec([0.1, 0.2], [1 / 3] * 3)
    assert normalize_alpha([0.33, 0.33, 0.33]) == pytest.approx([1 / 3] * 3)


def test_spec_box_defaults(ex1):
    lo, hi = BargainSpec(THREAT_EX1, [1 / 3] * 3).box(ex1)
    assert len(lo) == 12 and np.all(lo == 0)
    assert hi[:9] == pytest.approx([2000.0, 2000.0, 2000.0] * 3)
    assert np.all(hi[9:] == 150.0)


def test_log_nash_product():
    assert log_nash_product([1.0, 2.0], [0.0, 0.0], [0.5, 0.5]) == pytest.approx(0.5 * math.log(2))
    assert log_nash_product([1.0, 2.0], [1.0, 0.0], [0.5, 0.5]) == -math.inf


# Nash bargaining on the first example


@pytest.fixture(scope="module")
def equal_power_outcome():
    from congested_waters import preset

    sc = preset("example1")
    return sc, nash_bargain(sc, BargainSpec(THREAT_EX1, [1 / 3] * 3))


def test_bargain_is_feasible_and_recomputable(equal_power_outcome):
    sc, out = equal_power_outcome
    assert out.feasible
    assert np.all(out.utilities >= THREAT_EX1)
    u = evaluate_cooperative(sc, out.decision.cross, out.decision.mcs)
    assert u == pytest.approx(out.utilities, abs=1e-9)
    assert out.log_nash_product == pytest.approx(log_nash_product(u, THREAT_EX1, [1 / 3] * 3))


def test_bargain_beats_diagonal_legal_decision(equal_power_outcome):
    sc, out = equal_power_outcome
    u_diag = evaluate_cooperative(sc, _diagonal_legal(sc))
    assert out.log_nash_product >= log_nash_product(u_diag, THREAT_EX1, [1 / 3] * 3)


def test_bargain_is_deterministic(ex1):
    spec = BargainSpec(THREAT_EX1, [1 / 3] * 3)
    cfg = NPConfig(budget=1500, seed=3)
    a = nash_bargain(ex1, spec, cfg)
    b = nash_bargain(ex1, spec, cfg)
    assert np.array_equal(a.decision.vector(), b.decision.vector())
    assert a.seed == 3


def test_more_power_does_not_lower_utility(ex1, equal_power_outcome):
    _, equal = equal_power_outcome
    strong = nash_bargain(ex1, BargainSpec(THREAT_EX1, [0.25, 0.25, 0.5]))
    assert strong.utilities[2] >= equal.utilities[2] * 0.98


def test_dominant_power_pushes_others_to_threat(ex1):
    eps = 0.005
    out = nash_bargain(ex1, BargainSpec(THREAT_EX1, [eps, eps, 1 - 2 * eps]))
    assert out.feasible
    gaps = out.utilities[:2] - THREAT_EX1[:2]
    assert np.all(gaps > 0) and np.all(gaps < 0.03)


def test_unreachable_threat_reports_infeasibility(ex1):
    out = nash_bargain(ex1, BargainSpec([5.0, 5.0, 5.0], [1 / 3] * 3), NPConfig(budget=400))
    assert not out.feasible
    assert out.nash_product == 0.0 and out.log_nash_product == -math.inf
    assert np.all(out.shortfall > 0)
    assert out.message


def test_direct_mode_bargain(ex1):
    out = nash_bargain(ex1, BargainSpec(THREAT_EX1, [1 / 3] * 3), NPConfig(budget=3000), mode="direct")
    assert out.feasible and out.mode == "direct"
    u = evaluate_cooperative(ex1, out.decision.cross, out.decision.mcs, mode="direct")
    assert u == pytest.approx(out.utilities, abs=1e-12)
