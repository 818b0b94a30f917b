"""Exception hierarchy shared by every gapfill module."""


class GapfillError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(GapfillError):
    """Malformed CSV input (ragged rows, unparseable forced-numeric cells)."""


class SchemaError(GapfillError):
    """Bad column structure: duplicate headers, unknown columns, wrong kinds."""


class InsufficientDataError(GapfillError):
    """Too few usable rows for the requested statistic or fit."""


class SingularFitError(GapfillError):
    """Regression design matrix is rank deficient beyond jitter rescue."""


class NoDonorError(GapfillError):
    """Donor pool is empty: nothing observed to impute from."""


class PoolTooSmallError(NoDonorError):
    """Donor pool exists but is smaller than the requested k."""


class UnimputableRowError(GapfillError):
    """Rows the strategy cannot serve, and the fallback policy is 'error'."""

    def __init__(self, message, rows=()):
        super().__init__(message)
        self.rows = tuple(rows)


class LedgerInvariantError(GapfillError):
    """Donor ledger bookkeeping violated (weight fractions must sum to 1)."""


class NumericalError(GapfillError):
    """Numerical failure beyond ridge repair (lost positive definiteness)."""


class AmputationError(GapfillError):
    """Masking experiment could not produce a usable mask."""


class IncompleteImputationError(GapfillError):
    """A scored result left ground-truth cells unimputed."""


class RegistrationError(GapfillError):
    """Agent platform registration conflict (duplicate agent name)."""


class PlanError(GapfillError):
    """Pipeline plan file is missing required keys or has bad values."""
