"""Problem definitions, residual and loss assembly, and the benchmark registry."""

from .build import (Builder, CompiledProblem, Evaluator, NetworkSet, Objective, ParameterHandle,
                    PointSet, build_loss, build_oc_loss, build_residual, compile_problem,
                    exact_providers, mae, max_exact_residual, register_inverse_parameters,
                    simulate_cost, solve, evaluation_grid)
from .registry import get_spec, suite_ids, suite_registry
from .spec import (Condition, DataSet, Defaults, OptimalControlSpec, ProblemSpec, RunReport,
                   TrainableParameter)
from .terms import (Apply, Caputo, Const, D, Delay, Expr, Fredholm, Fredholm2D, Fredholm3D, Known,
                    Line, Param, ProblemError, U, Volterra, Volterra2D)

__all__ = [
    "Builder", "CompiledProblem", "Evaluator", "NetworkSet", "Objective", "ParameterHandle",
    "PointSet", "build_loss", "build_oc_loss", "build_residual", "compile_problem",
    "exact_providers", "mae", "max_exact_residual", "register_inverse_parameters",
    "simulate_cost", "solve", "evaluation_grid", "get_spec", "suite_ids", "suite_registry",
    "Condition", "DataSet", "Defaults", "OptimalControlSpec", "ProblemSpec", "RunReport",
    "TrainableParameter", "Apply", "Caputo", "Const", "D", "Delay", "Expr", "Fredholm",
    "Fredholm2D", "Fredholm3D", "Known", "Line", "Param", "ProblemError", "U", "Volterra",
    "Volterra2D",
]
