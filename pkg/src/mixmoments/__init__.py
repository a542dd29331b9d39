"""
Mixed moments of characteristic polynomials of SO(2N) and USp(2N), their
random-matrix predictions, and the analogous quantities for quadratic twists
of an elliptic curve L-function.
"""

from .errors import *  # noqa: F401,F403
from .haar import EnsembleKind, SamplerConfig, SamplerMethod, SpectrumSample

__version__ = "0.1.0"
