"""Exception and warning types shared across the package."""


class FlagmultError(Exception):
    """Base class for all package-specific errors."""


class InvalidInput(FlagmultError):
    """Malformed data: non-finite values, out-of-band modes, shape mismatch."""


class ConstructionFailure(FlagmultError):
    """A generator family failed its partition-of-unity residual check."""


class SymbolError(FlagmultError):
    """A symbol evaluator failed or an unknown builder was requested."""


class DecompositionError(FlagmultError):
    """A symbol decomposition left a residual above the requested tolerance.

    The measured residual is stored in ``residual``.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ScaleError(FlagmultError):
    """A dyadic scale fell outside the grid's representable band."""


class PlanError(FlagmultError):
    """An operator plan is incompatible with the supplied symbol or inputs."""


class OracleTooLarge(FlagmultError):
    """Brute-force oracle input exceeds the mode-count budget."""


class FamilyError(FlagmultError):
    """A bump-family configuration violates the model-operator constraints."""


class DegenerateInput(FlagmultError):
    """A norm ratio was requested with a vanishing denominator."""


class InvalidExponent(FlagmultError):
    """An integrability exponent is outside its admissible range."""


class HolderError(FlagmultError):
    """An exponent tuple violates the Hoelder scaling relation."""


class ConfigError(FlagmultError):
    """Experiment configuration failed to parse or validate.

    Carries ``line`` (1-based) when the failure is tied to a config line.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericalWarning(UserWarning):
    """A quadrature or finite-difference result looks unconverged."""


class TruncationWarning(UserWarning):
    """A series truncation left an estimated residual above tolerance."""
