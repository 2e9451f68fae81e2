"""Exception hierarchy.

Data problems (bad input, degenerate columns, shape mismatches) derive from
:class:`DataError`; numerical failures (divergence, silent rule bases) derive
from :class:`NumericalError`. The CLI maps the two families to exit codes 2
and 3.
"""


class WindcastError(Exception):
    """Base class. ``stage`` names the pipeline step that raised, if known."""

    stage: str | None = None

    def with_stage(self, stage: str) -> "WindcastError":
        if self.stage is None:
            self.stage = stage
        return self

    def __str__(self) -> str:
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


class DataError(WindcastError):
    pass


class NumericalError(WindcastError):
    pass


class EmptyInput(DataError):
    pass


class DuplicateTimestamp(DataError):
    pass


class SchemaMismatch(DataError):
    pass


class InvalidCount(DataError):
    pass


class DegenerateColumn(DataError):
    pass


class TooFewRows(DataError):
    pass


class EmptySplit(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class LengthMismatch(DataError):
    pass


class EmptyVectors(DataError):
    pass


class ZeroVariance(DataError):
    pass


class NonFiniteLoss(NumericalError):
    pass


class AllRulesSilent(NumericalError):
    """Total firing strength fell below the underflow threshold.

    ``rows`` holds the offending row indices when raised for a batch.
    """

    def __init__(self, msg: str, rows=()):
        super().__init__(msg)
        self.rows = list(rows)
