"""Penalized least squares, LASSO path inference and Gaussian geometry."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
