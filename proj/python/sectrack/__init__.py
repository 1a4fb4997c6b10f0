"""RSS-based target tracking with malicious-anchor detection."""

from ._sectrack import *  # noqa: F401,F403
from ._sectrack import __version__  # noqa: F401
