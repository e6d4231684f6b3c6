"""Exception hierarchy shared across the package."""


class SaftError(Exception):
    """Base class for every error raised by saft."""


class ValidationError(SaftError, ValueError):
    """Invalid user input: counts, configs, schemas, rates."""


class NegativeCount(ValidationError):
    pass


class SumMismatch(ValidationError):
    pass


class ArityMismatch(ValidationError):
    pass


class EmptySample(ValidationError):
    pass


class DomainGuard(SaftError, ValueError):
    """A metric or its gradient is undefined at the requested point."""


class NumericalNegative(SaftError, ArithmeticError):
    """V'SV came out clearly negative, which means a bug upstream."""


class DegenerateSigma(SaftError, ArithmeticError):
    pass


class QuantileDomain(ValidationError):
    pass


class EmptyDraws(ValidationError):
    pass


class TooManyGuardFailures(SaftError, ArithmeticError):
    pass


class MissingLabels(ValidationError):
    pass


class EmptyConditioned(ValidationError):
    pass


class MissingColumn(ValidationError):
    pass


class NoRows(ValidationError):
    pass


class EmptyFile(ValidationError):
    pass


class BadPredictionValue(ValidationError):
    def __init__(self, row: int, value: str, column: str = "prediction"):
        self.row = row
        self.value = value
        self.column = column
        super().__init__(f"row {row}: {column} value {value!r} is not '0' or '1'")


class DuplicateAttribute(ValidationError):
    pass


class InvalidRate(ValidationError):
    pass


class NotNull(ValidationError):
    """The simulated truth does not satisfy the null hypothesis."""


class KindMismatch(ValidationError):
    pass


class ConfigError(ValidationError):
    pass
