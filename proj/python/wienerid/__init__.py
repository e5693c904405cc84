"""Bayesian identification of basis-expanded output maps under known linear dynamics.

The compiled core carries all numerics; this package re-exports it.
"""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
