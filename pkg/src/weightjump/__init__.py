"""Jump processes built from weighted samples.

A weighted sample ``(x_i, xi_i)`` defines a piecewise-constant process that
holds ``x_i`` for time ``xi_i``.  When the weights are properly weighted for
a target ``pi``, the process converges in law to ``pi``.  This package
builds such samples, simulates the process, estimates integrals, draws
equilibrium starts and measures convergence in total variation.
"""
from .errors import WeightJumpError
from .measure import Density, WeightFunction, cauchy, discrete, mixture, normal
from .renewal import JumpPath, WeightedPoint, build_path, count_at, excess_life_at, state_at

__version__ = "0.1.0"

__all__ = [
    "Density", "JumpPath", "WeightFunction", "WeightJumpError", "WeightedPoint", "build_path",
    "cauchy", "count_at", "discrete", "excess_life_at", "mixture", "normal", "state_at", "__version__",
]
