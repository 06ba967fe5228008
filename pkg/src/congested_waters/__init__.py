"""Solvers for the congested-waters fishing game."""

from .bargaining import (BargainOutcome, BargainSpec, CooperativeDecision, NPConfig, evaluate_cooperative,
                         nash_bargain, nested_partitions)
from .equilibrium import EquilibriumResult, find_equilibrium, verify_equilibrium
from .legal_analysis import (MarginalAllocation, PiecewiseUtility, Theorem4Report, Threshold,
                             check_legal_equilibrium, deviation_utility, encroachment_thresholds,
                             marginal_allocations)
from .model import (FisheryParams, FishermanType, McsProfile, PlayerParams, QuotaProfile, Scenario,
                    ScenarioError, cost_matrix, fisherman_cost, growth_rhs, mcs_cost, player_utility,
                    rent, steady_state_biomass)
from .response import (PlayerStrategy, ResponseOptions, best_response, legal_optimum, legal_strategy,
                       theorem3_check)
from .scenario import SchemaError, emit_scenario, parse_scenario, preset, preset_names
from .subgame import SubgameAllocation, SubgameError, solve_subgame, verify_sge
from .sweep import SweepSpec, run_sweep

__version__ = "0.1.0"
