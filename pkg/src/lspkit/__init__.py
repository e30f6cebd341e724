"""Numerical toolkit for local scaling properties of sets: gauge transforms,
distance-query set models, neighborhood-measure estimation, covering
selections, a nested-ball construction with mass audits, and a random
limsup-set simulator on the torus."""

__version__ = "0.1.0"

from . import cantor, covering, dimfun, measure, randomsim, sets, stages

__all__ = [
    "cantor",
    "covering",
    "dimfun",
    "measure",
    "randomsim",
    "sets",
    "stages",
    "__version__",
]
