"""Exception types shared across the package."""


class DimensionMismatchError(ValueError):
    """Operands were built for different numbers of fermionic modes."""


class ContractViolationError(ValueError):
    """An operation was called outside its documented precondition."""


class ParseError(ValueError):
    """A text input (.majh / .majc / fock string) is malformed.

    Carries enough context to point the user at the offending line.
    """

    def __init__(self, message, source=None, line=None):
        self.source = source
        self.line = line
        prefix = ""
        if source is not None:
            prefix = f"{source}:" if line is None else f"{source}:{line}:"
        super().__init__(f"{prefix} {message}" if prefix else message)


class NumericContractError(ArithmeticError):
    """A quantity that must be real (or otherwise constrained) came out wrong."""


class ResourceCeilingError(RuntimeError):
    """A dense-oracle request exceeded the configured mode ceiling."""


class UnresolvedParameterError(KeyError):
    """A gate references a parameter name missing from the circuit table."""


class TiedParameterError(ValueError):
    """A trigonometric restriction is not available: the parameter appears
    more than once along at least one propagation path."""
