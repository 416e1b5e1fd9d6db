"""Exception hierarchy."""

from __future__ import annotations


class UmtcError(Exception):
    """Base class for all errors raised by this package."""


class NonIntegralFusion(UmtcError):
    pass


class NonIntegralIndicator(UmtcError):
    pass


class DegenerateForm(UmtcError):
    pass


class UnsupportedLevel(UmtcError):
    pass


class ShapeMismatch(UmtcError):
    pass


class NotAProjection(UmtcError):
    pass


class NotIsotropic(UmtcError):
    pass


class NotAnEquivalence(UmtcError):
    pass


class IncompatibleProjection(UmtcError):
    pass


class HasFixedPoint(UmtcError):
    pass


class SearchBudgetExceeded(UmtcError):
    """Raised when a lattice search visits more nodes than allowed."""

    def __init__(self, message: str, partial: list | None = None):
        super().__init__(message)
        self.partial = partial if partial is not None else []
