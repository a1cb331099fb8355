# Two-dimensional subproduct systems over discrete and rational time:
# canonical construction, classification, automorphisms, refinement towers
# and type I1 embeddings.

from .classifier import Classification, classify, decide_isomorphic
from .errors import SubproductError, get_error_code
from .numcore import DEFAULT_TOLERANCE, Tolerance
from .systems import FiniteGridSystem, SystemSpec, SystemType, generate_canonical

__version__ = "1.0.0"

__all__ = [
    "Classification",
    "DEFAULT_TOLERANCE",
    "FiniteGridSystem",
    "SubproductError",
    "SystemSpec",
    "SystemType",
    "Tolerance",
    "classify",
    "decide_isomorphic",
    "generate_canonical",
    "get_error_code",
]
