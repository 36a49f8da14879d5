"""Splitting methods for nonmonotone inclusions.

Submodules
----------
linalg      small dense symmetric linear algebra
semicalc    algebra of semimonotonicity parameters and stepsize windows
operators   set-valued operators with exact resolvents
pppa        relaxed preconditioned proximal point method
drs         relaxed Douglas-Rachford splitting and its primal-dual form
catalog     reference problems
reproduce   reference experiments with named checks
cli         command-line interface
"""

from .errors import SemiSplitError
from .semicalc import GammaInterval, SemiParams

__version__ = "0.1.0"
__all__ = ["SemiSplitError", "SemiParams", "GammaInterval", "__version__"]
