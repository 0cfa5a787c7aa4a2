"""Self-testing robustness bounds from moment-matrix relaxations."""

from ._core import (
    SolveReport,
    assemblage_bound,
    assemblage_bound_table,
    assemblage_fidelity,
    compare,
    ensemble_fidelity,
    pm_bound,
    pm_bound_table,
    reference_bb84,
    reference_phi_plus,
    reference_rac2,
    run_config,
    steering_bound,
    steering_bound_tomogram,
    steering_fidelity,
)

__all__ = [
    "SolveReport",
    "assemblage_bound",
    "assemblage_bound_table",
    "assemblage_fidelity",
    "compare",
    "ensemble_fidelity",
    "pm_bound",
    "pm_bound_table",
    "reference_bb84",
    "reference_phi_plus",
    "reference_rac2",
    "run_config",
    "steering_bound",
    "steering_bound_tomogram",
    "steering_fidelity",
]
