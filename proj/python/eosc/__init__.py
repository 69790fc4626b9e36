"""Error-dominated oscillation estimators for the 2D Poisson problem."""

from ._eosc import *  # noqa: F401,F403
from ._eosc import __doc__  # noqa: F401

FAMILIES = ("hier", "res", "local", "equil")
