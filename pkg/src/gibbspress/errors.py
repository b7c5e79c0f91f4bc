"""Exception taxonomy.

The CLI maps these onto its exit codes: UsageError -> 2,
HypothesisError -> 3, BudgetError -> 4.
"""


class GibbsPressError(Exception):
    """Base class for package errors."""


class UsageError(GibbsPressError):
    """Malformed user input: unknown model, bad parameters, bad files."""


class HypothesisError(GibbsPressError):
    """A mathematical hypothesis of the requested computation fails.

    Raised for: points outside the underlying constraint set, inadmissible
    boundary conditions (zero partition function), empty canopy ensembles,
    and positivity violations.
    """


class BudgetError(GibbsPressError):
    """Computation refused because it exceeds the configured budget."""
