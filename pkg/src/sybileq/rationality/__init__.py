"""Utilities, deviations, expected-utility estimation and the equilibrium check."""

from __future__ import annotations

from .equilibrium import FOUND, NO_PROFIT, DeviationResult, EquilibriumReport, check_equilibrium
from .estimate import (
    GroupUtility,
    McEstimate,
    Setting,
    conditional_utilities,
    determined_rounds,
    expected_utility_exact,
    expected_utility_mc,
    first_computable_round,
    group_expected_utility,
    information_contained,
    strategy_map,
    utility_gain_mc,
    view_key,
)
from .secrecy import SecrecyResult, consecutive_segments, posterior_uniform, view_forms
from .strategies import FAMILIES, CheaterController, Deviation, deviation_catalog, sybil_emulation_strategy
from .utility import preference_met, trace_utility, utility

__all__ = [
    "FOUND", "NO_PROFIT", "DeviationResult", "EquilibriumReport", "check_equilibrium", "GroupUtility",
    "McEstimate", "Setting", "conditional_utilities", "determined_rounds", "expected_utility_exact",
    "expected_utility_mc", "first_computable_round", "group_expected_utility", "information_contained",
    "strategy_map", "utility_gain_mc", "view_key", "FAMILIES", "CheaterController", "Deviation",
    "deviation_catalog", "sybil_emulation_strategy", "preference_met", "trace_utility", "utility",
    "SecrecyResult", "consecutive_segments", "posterior_uniform", "view_forms",
]
