"""Exception types shared across the simulation stack."""


class AircombatError(Exception):
    """Base class for all errors raised by this package."""


class ContractViolationError(AircombatError):
    """An API precondition was violated by the caller."""


class ConfigurationError(AircombatError):
    """A scenario or runtime configuration failed validation."""


class InfeasibleTrimError(AircombatError):
    """No control setting can hold the requested flight condition."""


class RecordFormatError(AircombatError):
    """An episode record file is structurally unusable."""
