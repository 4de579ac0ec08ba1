"""
Stability Module

Samples the fixed set C_s of stable states by projecting random configurations
onto the quasi-static equilibrium manifold.

Usage:
    from stability import sample_stable_states
    from functions.helper_functions import make_streams

    stable_states = sample_stable_states(26, 100, scene, make_streams(0))
"""

from .types import ContactAssignment, ContactVariable, NlpResiduals, SamplingStats, SolverSettings, StableState
from .assignment import admissible_pairs, sample_contact_assignment
from .residuals import evaluate_residuals
from .sampler import (
    project_to_stable,
    sample_stable_states,
    sample_stable_states_with_stats,
    sample_x_bar,
    validate_stability,
)

__all__ = [
    "ContactAssignment",
    "ContactVariable",
    "NlpResiduals",
    "SamplingStats",
    "SolverSettings",
    "StableState",
    "admissible_pairs",
    "evaluate_residuals",
    "project_to_stable",
    "sample_contact_assignment",
    "sample_stable_states",
    "sample_stable_states_with_stats",
    "sample_x_bar",
    "validate_stability",
]
