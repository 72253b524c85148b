"""Exception hierarchy shared by the library and the CLI."""


class MapNullError(Exception):
    """Base class for every error raised by mapnull."""


class InputError(MapNullError, ValueError):
    """Malformed or non-finite input data."""


class DegenerateCovarianceError(MapNullError):
    """Covariance has no usable (positive) eigen-directions."""


class DimensionError(MapNullError, ValueError):
    pass


class MetricError(MapNullError, ValueError):
    pass


class ParameterError(MapNullError, ValueError):
    pass


class DegenerateFilterError(MapNullError):
    pass


class UndefinedModularityError(MapNullError):
    pass


class DegenerateNullError(MapNullError):
    """Null samples have zero spread, so a z-score is undefined."""


class PrecisionError(MapNullError):
    pass


class ReplicateError(MapNullError):
    """A null replicate failed; carries the replicate index and stage."""

    def __init__(self, index, stage, cause):
        self.index = index
        self.stage = stage
        self.cause = cause
        super().__init__(f"replicate {index} failed during {stage}: {cause}")


class StageError(MapNullError):
    """Numeric failure in the observed pipeline, tagged with the stage name."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage}: {cause}")
