"""Exception hierarchy.

Every error carries the process exit code the command-line front end maps it
to, so library callers and the CLI agree on error categories.
"""


class CoexnetError(Exception):
    exit_code = 4


class InputError(CoexnetError):
    """Malformed or inconsistent input files."""

    exit_code = 2


class ParseError(InputError):
    pass


class DegenerateColumnError(InputError):
    """Constant or zero-variance columns found at ingestion."""

    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(
            "columns with zero sample variance: " + ", ".join(map(str, self.columns))
        )


class NotChordal(InputError):
    pass


class NumericalError(CoexnetError):
    exit_code = 3


class SingularSubset(NumericalError):
    def __init__(self, subset, message=None):
        self.subset = tuple(subset)
        super().__init__(message or f"ssd matrix over {self.subset} is not positive definite")


class NotPositiveDefinite(NumericalError):
    pass


class DegenerateNetwork(NumericalError):
    pass


class PreconditionError(InputError):
    pass


class InvariantViolation(CoexnetError):
    exit_code = 4
