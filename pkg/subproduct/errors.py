"""
Error types for subproduct-systems.

Every error carries a stable machine-readable ``code`` plus a ``details``
dict that the CLI turns into a JSON diagnostic.
"""

from typing import Any, Dict, Optional


class SubproductError(Exception):
    """Base class for all library errors."""

    code = "error"

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = details

    def to_diagnostic(self) -> Dict[str, Any]:
        """Return the JSON-ready diagnostic object."""
        diagnostic: Dict[str, Any] = {"code": self.code, "message": self.message}
        diagnostic.update(self.details)
        return diagnostic


class InvalidSpecError(SubproductError):
    code = "invalid_spec"


class SchemaError(SubproductError):
    code = "schema"


class IsometryError(SubproductError):
    code = "isometry"


class CompletenessError(SubproductError):
    code = "completeness"


class AssociativityError(SubproductError):
    code = "associativity"


class HorizonError(SubproductError):
    code = "horizon"


class GridError(SubproductError):
    code = "off_grid"


class ClassificationError(SubproductError):
    code = "inconsistent"


class InadmissibleGeneratorError(SubproductError):
    code = "inadmissible_generator"


class AutomorphismError(SubproductError):
    code = "not_automorphism"


class DecompositionError(SubproductError):
    code = "decomposition"


class LiftError(SubproductError):
    code = "no_preimage"


class RefinementError(SubproductError):
    code = "refinement"


class NotEmbeddableError(SubproductError):
    code = "not_embeddable"


def get_error_code(e: Exception) -> Optional[str]:
    """Extract the diagnostic code from an exception, if it has one."""
    return getattr(e, "code", None) if isinstance(e, SubproductError) else None
