"""Exception types raised across the package."""


class BlabError(Exception):
    """Base class for package errors."""


class ConfigError(BlabError, ValueError):
    """Invalid parameters or configuration."""


class DomainError(BlabError, ValueError):
    """A region or point lies outside the domain of a field."""


class UndefinedFrequencyError(BlabError, ArithmeticError):
    """Frequency or doubling index of a field that vanishes on the relevant set."""


class UnresolvedSupremumError(BlabError):
    """No band limit to size the search grid and the policy does not force one."""


class NotResolvedError(BlabError):
    """A spherical-harmonic fit did not reproduce the field to the requested accuracy."""


class IngestError(BlabError, ValueError):
    """A sampled-field file failed validation."""
