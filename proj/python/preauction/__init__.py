"""Two-stage ad auction toolkit (C++ core)."""

from ._core import *  # noqa: F401,F403
from ._core import TooLargeError, SimpaInstance  # noqa: F401
