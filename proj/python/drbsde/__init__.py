"""Doubly reflected BSDE solvers and game option pricing."""

from ._drbsde import *  # noqa: F401,F403
from ._drbsde import __version__  # noqa: F401
