"""Exceptions raised across the package."""


class InvalidInput(ValueError):
    """Malformed arguments: wrong shapes, non-finite entries, bad options."""


class NotPositiveDefinite(ValueError):
    """A matrix expected to be SPD has a non-positive (or negligible) eigenvalue."""

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue
