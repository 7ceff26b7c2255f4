"""Shared exception base so callers can catch package errors uniformly."""


class MentorError(Exception):
    """Base class for every error this package raises on purpose."""


class InvalidArgument(MentorError, ValueError):
    """A caller violated a documented precondition."""
