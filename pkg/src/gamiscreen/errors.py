"""Exception hierarchy.

Two broad families matter to callers: ``InputError`` (bad files, bad
records, mismatched shapes; CLI exit code 2) and ``StatisticalError``
(fitting or evaluation cannot proceed on this data; CLI exit code 3).
"""


class GamiscreenError(Exception):
    """Base class for everything raised by this package."""


class InputError(GamiscreenError):
    """Invalid user-supplied input."""


class StatisticalError(GamiscreenError):
    """A statistical procedure failed on otherwise valid input.

    ``stage`` is filled in by the study driver so errors surfacing from
    deep inside a pipeline name the step that raised them.
    """

    stage: str | None = None

    def __str__(self) -> str:
        base = super().__str__()
        if self.stage:
            return f"[{self.stage}] {base}"
        return base


class ParseError(InputError):
    def __init__(self, row: int | None, reason: str):
        self.row = row
        self.reason = reason
        where = f"row {row}: " if row is not None else ""
        super().__init__(f"{where}{reason}")


class DuplicateIdError(InputError):
    def __init__(self, record_id: str):
        self.record_id = record_id
        super().__init__(f"duplicate record id: {record_id!r}")


class UnknownStoreError(InputError):
    def __init__(self, value: str):
        self.value = value
        super().__init__(f"unknown store: {value!r} (expected android, ios or other)")


class TooFewRecordsError(InputError):
    pass


class ArityMismatchError(InputError):
    def __init__(self, expected: int, got: int):
        self.expected = expected
        self.got = got
        super().__init__(f"feature vector length {got} does not match model arity {expected}")


class DegenerateColumnError(StatisticalError):
    def __init__(self, variable: str):
        self.variable = variable
        super().__init__(f"constant feature column: {variable}")


class SeparationError(StatisticalError):
    def __init__(self, variables: tuple[str, ...], detail: str = ""):
        self.variables = tuple(variables)
        msg = f"quasi-complete separation suspected for: {', '.join(self.variables) or '(unknown)'}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class SingularMatrixError(StatisticalError):
    def __init__(self, detail: str = "information matrix is singular (collinear features)"):
        super().__init__(detail)


class OneClassError(StatisticalError):
    def __init__(self):
        super().__init__("labels contain only one class; ROC is undefined")


class IncomparableModelsError(InputError):
    def __init__(self, detail: str):
        super().__init__(detail)


class DegenerateAgreementError(StatisticalError):
    def __init__(self):
        super().__init__("expected agreement is 1; kappa is undefined")
