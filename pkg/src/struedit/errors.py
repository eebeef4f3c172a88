"""Exception hierarchy shared by every stage of the editing pipeline."""


class StrueditError(Exception):
    """Base class; ``reason`` is the short name reported by the harness."""

    @property
    def reason(self) -> str:
        return type(self).__name__


class MalformedTriple(StrueditError, ValueError):
    pass


class AmbiguousFanout(StrueditError):
    pass


class EntityNotFound(StrueditError, LookupError):
    pass


class DeadEnd(StrueditError):
    pass


class HopLimitExceeded(StrueditError):
    pass


class MalformedChain(StrueditError, ValueError):
    pass


class MalformedSkeleton(StrueditError, ValueError):
    pass


class UnparseableSelection(StrueditError, ValueError):
    pass


class OracleError(StrueditError):
    pass


class OracleUnavailable(OracleError):
    pass


class OracleTimeout(OracleError):
    pass


class ScriptMiss(OracleError, LookupError):
    pass


class OracleConfigError(OracleError):
    pass


class DatasetError(StrueditError):
    pass


class DatasetUnreadable(DatasetError):
    pass


class SchemaMismatch(DatasetError):
    def __init__(self, field_path: str, message: str = ""):
        self.field_path = field_path
        super().__init__(f"{field_path}: {message}" if message else field_path)
