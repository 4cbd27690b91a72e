"""Relative choreographies of vortex-type Hamiltonian systems."""

from ._native import *  # noqa: F401,F403
from ._native import __all__  # noqa: F401
