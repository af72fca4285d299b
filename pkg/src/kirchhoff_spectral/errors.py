"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Coefficient vector length does not match the spectrum."""


class NumericError(ArithmeticError):
    """A quadrature, root bracket or function evaluation produced a non-finite value."""


class PreconditionError(ValueError):
    """Inputs violate an operation's stated precondition."""


class NotApplicableError(ValueError):
    """A per-mode check was requested for a mode outside its range of validity."""


class SequenceExhaustedError(LookupError):
    """A stored ρ-prefix is too short; ``binding`` names the unmet constraint."""

    def __init__(self, message, binding=None, required=None):
        super().__init__(message)
        self.binding = binding
        self.required = required


class ConfigError(ValueError):
    """Invalid run configuration; ``problems`` lists ``(json_pointer, message)``."""

    def __init__(self, problems):
        self.problems = list(problems)
        lines = [f"{ptr or '/'}: {msg}" for ptr, msg in self.problems]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))
