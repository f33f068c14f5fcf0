"""Solvers for rectangular L_p robust Markov decision processes."""
from robustmdp.backend import BACKEND
from robustmdp.dispersion import conjugate, dispersion, kappa_for_penalty
from robustmdp.mdp import Mdp, StochasticPolicy, validate_mdp
from robustmdp.robust_bellman import Rect, UncertaintySpec, greedy_policy, optimal_operator
from robustmdp.solver import SolveConfig, SolveResult, solve

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Mdp",
    "Rect",
    "SolveConfig",
    "SolveResult",
    "StochasticPolicy",
    "UncertaintySpec",
    "conjugate",
    "dispersion",
    "greedy_policy",
    "kappa_for_penalty",
    "optimal_operator",
    "solve",
    "validate_mdp",
]
