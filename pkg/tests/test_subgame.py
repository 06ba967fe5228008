import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from congested_waters import FishermanType, player_utility, solve_subgame, verify_sge
from congested_waters.subgame import (SubgameError, brute_force_sge_oracle, subgame_utility,
                                      support_enumeration_sge)
from conftest import scenario_and_quotas, small_instances, utility_atol

REF_NC = np.array([989.0, 1185.0, 1596.0])


def test_reference_allocation(ex1):
    sol = solve_subgame(ex1, REF_NC)
    F = sol.F
    assert np.allclose(F.sum(axis=0), REF_NC)
    # Chinese fishermen in Japanese / South Korean waters, the rest at home
    assert F[0, 2] == pytest.approx(265, abs=2)
    assert F[1, 2] == pytest.approx(63, abs=2)
    assert F[2, 2] == pytest.approx(1268, abs=2)
    assert F[0, 1] == F[1, 0] == F[2, 0] == F[2, 1] == 0
    assert verify_sge(ex1, REF_NC, None, sol).ok


def test_equal_chinese_rents_at_reference_profile(ex1):
    sol = solve_subgame(ex1, REF_NC)
    assert np.allclose(sol.rents[:, 2], 3.192e-4, atol=1e-6)


def test_zero_quotas_give_zero_effort(ex1):
    sol = solve_subgame(ex1, np.zeros(3))
    assert np.all(sol.F == 0)
    assert np.allclose(sol.biomass, 2.0)


def test_unprofitable_quota_left_unused(ex1):
    # huge quotas: rents fall to zero before the budgets are spent
    sol = solve_subgame(ex1, np.full(3, 1e5))
    assert np.all(sol.slack)
    assert np.all(sol.rents.max(axis=0) <= 1e-9)
    assert np.all(player_utility(ex1, sol.F) == pytest.approx(0, abs=1e-9))


def test_legal_quotas_on_example2_stay_home(ex2):
    sol = solve_subgame(ex2, [766.6667, 733.3333, 788.8889])
    assert np.allclose(sol.F, np.diag(np.diag(sol.F)))


def test_negative_quota_rejected(ex1):
    with pytest.raises(ValueError):
        solve_subgame(ex1, [-1.0, 0, 0])


def test_event_limit(ex1):
    with pytest.raises(SubgameError):
        solve_subgame(ex1, REF_NC, max_events=1)


def test_trace_is_nonincreasing(ex1):
    sol = solve_subgame(ex1, REF_NC)
    tr = np.array(sol.trace)
    assert np.all(np.diff(tr) <= 1e-12)


def test_cross_licensed_types(ex1):
    types = [FishermanType(i, k) for k in range(3) for i in range(3)]
    Q = np.zeros(9)
    Q[[0, 4, 8]] = [791.67, 833.33, 900.0]
    u_types = player_utility(ex1, solve_subgame(ex1, Q, None, types).F, types)
    u_default = subgame_utility(ex1, [791.67, 833.33, 900.0])
    assert np.allclose(u_types, u_default, atol=1e-12)


@settings(max_examples=100)
@given(scenario_and_quotas(), st.integers(0, 2**31 - 1))
def test_utility_uniqueness_under_seeds_and_orders(data, seed):
    sc, Q, m = data
    base = subgame_utility(sc, Q, m)
    atol = utility_atol(sc)
    assert np.allclose(subgame_utility(sc, Q, m, seed=seed), base, rtol=1e-9, atol=atol)
    types = list(sc.default_types())
    perm = np.random.default_rng(seed).permutation(len(types))
    ptypes = [types[i] for i in perm]
    sol = solve_subgame(sc, Q[perm], m, ptypes, seed=seed)
    assert np.allclose(player_utility(sc, sol.F, ptypes, m), base, rtol=1e-9, atol=atol)
    assert verify_sge(sc, Q[perm], m, sol).ok


@settings(max_examples=60)
@given(scenario_and_quotas(players=(2, 3), fisheries=(1, 1)))
def test_agrees_with_support_enumeration(data):
    sc, Q, m = data
    ref = support_enumeration_sge(sc, Q, m)
    assert np.allclose(subgame_utility(sc, Q, m), player_utility(sc, ref.F, mcs=m), rtol=1e-9,
                       atol=utility_atol(sc))


@pytest.mark.parametrize("sc,Q", list(small_instances()))
def test_agrees_with_brute_force_grid(sc, Q):
    # grid step 1 on budgets up to 8: the exact equilibrium may lie between grid points,
    # so compare utilities within the grid's resolution
    ref = brute_force_sge_oracle(sc, Q, step=0.25)
    u = subgame_utility(sc, Q)
    u_ref = player_utility(sc, ref.F)
    scale = sc.arrays["slope"].max() * 0.25 * Q.sum() + 1e-12
    assert np.allclose(u, u_ref, atol=2 * scale)


@settings(max_examples=100)
@given(scenario_and_quotas())
def test_always_finds_verified_equilibrium(data):
    sc, Q, m = data
    sol = solve_subgame(sc, Q, m)
    assert verify_sge(sc, Q, m, sol).ok
    assert np.all(sol.F >= 0)
    assert np.all(sol.used <= Q + 1e-6)
