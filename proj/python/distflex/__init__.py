"""Distribution-path reconstruction, flexibility estimation and stress testing.

The heavy lifting lives in the compiled `_core` module; this package re-exports
its functions.
"""

from ._core import (
    NumericalError,
    ValidationError,
    build_tensors,
    distributor_positions,
    fit_flexibility,
    generate_synthetic_system,
    mix_tensors,
    reconstruct_paths,
    resupply_window,
    slowdown_curve,
    stress_sweep,
)

__all__ = [
    "NumericalError",
    "ValidationError",
    "build_tensors",
    "distributor_positions",
    "fit_flexibility",
    "generate_synthetic_system",
    "mix_tensors",
    "reconstruct_paths",
    "resupply_window",
    "slowdown_curve",
    "stress_sweep",
]
