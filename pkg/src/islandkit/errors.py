"""Exception hierarchy. Every error carries a stable ``code`` string for the CLI."""


class IslandkitError(Exception):
    code = "E_DOMAIN"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details


class ParseError(IslandkitError):
    code = "E_PARSE"


class ValidationError(IslandkitError):
    code = "E_VALIDATION"


class MissingRecordError(IslandkitError):
    code = "E_MISSING_RECORD"


class NonUniformGridError(ValidationError):
    code = "E_NONUNIFORM_GRID"


class RaggedSeriesError(ValidationError):
    code = "E_RAGGED_SERIES"


class BandError(IslandkitError):
    code = "E_BAND"


class ConfigurationError(IslandkitError):
    code = "E_CONFIG"


class DimensionError(IslandkitError):
    code = "E_DIMENSION"


class EmptyGraphError(IslandkitError):
    code = "E_EMPTY_GRAPH"


class EigenSolverError(IslandkitError):
    code = "E_EIGENSOLVER"


class OrthonormalityError(IslandkitError):
    code = "E_NOT_ORTHONORMAL"


class NonIslandingError(IslandkitError):
    code = "E_NON_ISLANDING"


class SizeLimitError(IslandkitError):
    code = "E_SIZE_LIMIT"


class InfeasibleError(IslandkitError):
    code = "E_INFEASIBLE"
