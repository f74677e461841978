"""Python access to the Mneme simulator core."""

from ._core import (
    ConfigError,
    DomainError,
    Error,
    RuntimeViolation,
    delta_from_model,
    expected_neighbors,
    hypergeometric_tail_log2,
    least_squares,
    p_credit_stealing_bound,
    p_double_spend_bound,
    poc_feasibility,
    poe_termination_probability,
    rgg_component_count,
    run_scenario,
    spread,
    validate_scenario,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "Error",
    "RuntimeViolation",
    "delta_from_model",
    "expected_neighbors",
    "hypergeometric_tail_log2",
    "least_squares",
    "p_credit_stealing_bound",
    "p_double_spend_bound",
    "poc_feasibility",
    "poe_termination_probability",
    "rgg_component_count",
    "run_scenario",
    "spread",
    "validate_scenario",
]
