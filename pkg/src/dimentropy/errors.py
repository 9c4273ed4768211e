"""Exception types shared across the package."""

from __future__ import annotations


class DimentropyError(Exception):
    """Base class for all package errors."""


class MetricError(DimentropyError, ValueError):
    """A distance table is not a (pseudo)metric."""


class ResourceCapError(DimentropyError):
    """An exact computation would exceed a configured size cap."""

    def __init__(self, message: str, *, size: int | None = None, cap: int | None = None):
        super().__init__(message)
        self.size = size
        self.cap = cap


class ContractError(DimentropyError):
    """An input violates a documented precondition (e.g. non-monotone evaluator)."""


class DecompositionError(ContractError):
    """A decomposition does not reproduce its target set."""


class SchemaError(DimentropyError, ValueError):
    """A system or configuration file does not follow its schema."""
