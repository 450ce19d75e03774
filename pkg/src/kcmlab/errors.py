"""Shared exception types."""


class KcmlabError(Exception):
    pass


class ParameterError(KcmlabError):
    """Invalid argument or precondition violation (CLI exit code 2)."""


class MissingBoundaryError(KcmlabError):
    """Boundary lookup outside the covered domain."""


class SizeError(ParameterError):
    """State space too large for an exact/enumerative operation."""


class NumericError(KcmlabError):
    """Iterative numerical routine failed to converge (CLI exit code 3)."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class CatalogError(ParameterError):
    """Unknown model name."""
