"""Numerical verification of invariant-subspace theorems for finite-rank perturbations on truncated H^2."""

__version__ = "0.1.0"

from .core import (
    BlaschkeProduct,
    HardyFunction,
    TruncationConfig,
    VectorHardyFunction,
    inner_product,
    kernel_function,
    model_space_functions,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateInputError,
    DimensionError,
    DomainError,
    HardyLabError,
    PreconditionError,
)
from .operators import (
    OperatorMatrix,
    PerturbationSpec,
    RankOneTerm,
    SarasonFlavor,
    assemble,
    c0_decay_profile,
    sarason_backward,
    sarason_forward,
)
from .reports import CheckRecord, VerificationReport
from .subspaces import Subspace, model_space, nearly_invariant_check

__all__ = [
    "BlaschkeProduct",
    "CheckRecord",
    "ConfigError",
    "ConvergenceError",
    "DegenerateInputError",
    "DimensionError",
    "DomainError",
    "HardyFunction",
    "HardyLabError",
    "OperatorMatrix",
    "PerturbationSpec",
    "PreconditionError",
    "RankOneTerm",
    "SarasonFlavor",
    "Subspace",
    "TruncationConfig",
    "VectorHardyFunction",
    "VerificationReport",
    "assemble",
    "c0_decay_profile",
    "inner_product",
    "kernel_function",
    "model_space",
    "model_space_functions",
    "nearly_invariant_check",
    "sarason_backward",
    "sarason_forward",
]
