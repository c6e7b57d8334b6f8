"""Exception hierarchy shared by every subpackage."""

from __future__ import annotations


class SybilEqError(Exception):
    """Base class for all library errors."""


class TopologyError(SybilEqError):
    pass


class SizeTooSmall(TopologyError):
    pass


class DuplicateId(TopologyError):
    pass


class InvalidWiring(TopologyError):
    pass


class NoLayout(TopologyError):
    pass


class PreconditionError(SybilEqError):
    """An operation was called outside its documented domain."""


class RoundLimitExceeded(SybilEqError):
    """An honest agent failed to terminate within the protocol's round bound."""


class ExplosionCap(SybilEqError):
    """Exhaustive enumeration would exceed the configured branch cap."""


class EmptyChoiceSet(SybilEqError):
    pass


class DomainError(SybilEqError):
    pass


class UnknownProblem(SybilEqError):
    pass


class NotApplicable(SybilEqError):
    pass


class ConfigError(SybilEqError):
    """Malformed scenario file. Carries an optional 1-based line number."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
