"""Exception types shared across the package."""


class AdmError(Exception):
    """Base class for all package errors."""


class DatasetError(AdmError, ValueError):
    """Raised for malformed or invalid attribute data.

    ``problems`` holds every violation found, so a caller can report them all
    at once rather than one per run.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class NumericalError(AdmError, ArithmeticError):
    """An optimizer or LP solve failed for numerical reasons."""


class LpNumericalError(NumericalError):
    pass


class FitError(NumericalError):
    pass
