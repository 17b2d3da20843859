"""Projected primal-dual saddle-point solvers and distributed network simulations."""

from ._saddlenet import (
    ContractError,
    ConvexSet,
    DivergenceError,
    Instance,
    InvariantError,
    ValidationError,
    allocation_quadratics,
    build,
    consensus_quadratics,
    example1,
    example2,
    lambda_max,
    list_presets,
    preset_yaml,
    quadratic_saddle,
    scalar_bilinear,
    solve,
    spectral_norm,
    step_bound,
    verify,
)

__all__ = [
    "ContractError",
    "ConvexSet",
    "DivergenceError",
    "Instance",
    "InvariantError",
    "ValidationError",
    "allocation_quadratics",
    "build",
    "consensus_quadratics",
    "example1",
    "example2",
    "lambda_max",
    "list_presets",
    "preset_yaml",
    "quadratic_saddle",
    "scalar_bilinear",
    "solve",
    "spectral_norm",
    "step_bound",
    "verify",
]
