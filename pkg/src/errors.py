from typing import Optional


class HomLabError(Exception):
    # base error; code is machine-readable, exit_code is what the CLI returns
    code = "error"
    exit_code = 2

    def __init__(self, message: str, *, key: Optional[str] = None):
        super().__init__(message)
        self.key = key

    def __str__(self) -> str:
        msg = super().__str__()
        return f"{self.key}: {msg}" if self.key else msg


# validation class (exit 2)

class DomainError(HomLabError):
    code = "domain"


class NarrowbandError(DomainError):
    code = "narrowband"


class ConfigError(HomLabError):
    code = "config"


class ParseError(ConfigError):
    code = "parse"

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UsageError(HomLabError):
    code = "usage"


class StatisticsError(HomLabError):
    code = "statistics"


class CoverageError(HomLabError):
    code = "coverage"


class OutputError(HomLabError):
    # file could not be written or read; key carries the path
    code = "io"


# numerical class (exit 3)

class NumericalError(HomLabError):
    code = "numerical"
    exit_code = 3


class ConvergenceError(NumericalError):
    code = "convergence"


class NoSolutionError(NumericalError):
    code = "no_solution"

    def __init__(self, message: str, frontier: Optional[dict] = None):
        super().__init__(message)
        self.frontier = frontier or {}


class FitError(NumericalError):
    code = "fit"

    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class StabilityError(NumericalError):
    code = "stability"


class LockTimeoutError(NumericalError):
    code = "lock_timeout"


class InternalConsistencyError(NumericalError):
    code = "internal"


class DivergenceError(NumericalError):
    # analytic formula and quadrature oracle disagree beyond tolerance
    code = "divergence"

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report
