"""Exception types shared across the package."""


class DueloptError(Exception):
    """Base class for all package errors."""


class DimensionError(DueloptError):
    """Invalid or mismatched vector dimensions."""


class OracleError(DueloptError):
    """A comparison oracle could not produce a sign (e.g. NaN objective)."""


class InvalidBatchError(DueloptError):
    """A preference batch or measurement batch violates its preconditions."""


class DegenerateMeasurementError(DueloptError):
    """The signed direction sum is exactly zero; no direction can be estimated."""


class InvalidScheduleError(DueloptError):
    """Schedule inputs outside their admissible ranges, or a derived quantity is nonpositive."""


class VocabularyError(DueloptError):
    """A token sequence contains ids outside the policy vocabulary."""


class InvalidTestError(DueloptError):
    """A benchmark check was invoked at a point violating its preconditions."""


class ConfigError(DueloptError):
    """Invalid run configuration."""


class MissingFieldError(ConfigError):
    """Required configuration fields are absent."""

    def __init__(self, fields: list[str]):
        self.fields = list(fields)
        super().__init__(f"missing required config fields: {', '.join(self.fields)}")


class RangeError(ConfigError):
    """A configuration value is outside its documented bounds."""

    def __init__(self, field: str, value, bounds: str):
        self.field = field
        self.value = value
        self.bounds = bounds
        super().__init__(f"config field {field!r} = {value!r} outside bounds {bounds}")
