"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Invalid model, assignment, configuration, or unparseable input file."""


class OracleGuardError(RuntimeError):
    """An exact oracle refused an instance exceeding its size guard."""
