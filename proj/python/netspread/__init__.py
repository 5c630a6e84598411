"""Optimal control of persistent infection spread over homogeneous networks.

Thin Python layer over the native core. ``load_model`` accepts a built-in
name (``"example1"``), a path to a model JSON file, or a dict.
"""

import json as _json
from os import PathLike as _PathLike

from . import _core
from ._core import (
    ConvergenceError,
    CostEstimate,
    Dynamics,
    EvalError,
    LipschitzReport,
    ModelError,
    ModelSpec,
    ParseError,
    Policy,
    SolveReport,
    TransitionKernel,
    ValueKind,
    ValueTable,
    binomial_pmf,
    build_kernel,
    certified_horizon,
    estimate_lipschitz,
    eval_dynamics,
    example1,
    macro_step,
    nearest_grid_index,
    optimal_cost,
    oracle_row,
    quantized_initial_value,
    run_cli,
    simulate,
    solve_finite,
    solve_meanfield,
    sweep,
)


def load_model(source, n=0):
    """Load a model from a built-in name, a JSON file path, or a dict."""
    if isinstance(source, dict):
        return _core.load_model_json(_json.dumps(source), n)
    if isinstance(source, _PathLike):
        source = str(source)
    return _core.load_model_file(source, n)


__all__ = [name for name in dir() if not name.startswith("_")]
