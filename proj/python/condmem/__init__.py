"""Two-ensemble conditional-memory photon source simulator."""

from ._condmem import *  # noqa: F401,F403
from ._condmem import __version__

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
