"""ReLU networks initialized from Legendre polynomial expansions."""

from ._core import *  # noqa: F401,F403
from ._core import InvalidArgument, NumericalError, __doc__  # noqa: F401

__version__ = "0.1.0"
