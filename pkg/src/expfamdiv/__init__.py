"""Divergences between exponential-family densities, closed form and by quadrature.

Parameter-side divergences (Bregman, Jensen, Fenchel-Young) are induced by
the cumulant ``F`` or the partition function ``Z``; the ``oracle`` module
evaluates the density-side definitions numerically so the two can be
compared.
"""

from .deformation import *  # noqa: F401,F403
from .divergences import *  # noqa: F401,F403
from .errors import ConvergenceError, DomainError, IntegrationError, NotConvexError
from .families import *  # noqa: F401,F403
from .generator import GeneratorFn, as_vector
from .legendre import *  # noqa: F401,F403
from . import oracle

__version__ = "0.1.0"
