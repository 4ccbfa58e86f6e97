"""Exception hierarchy shared by all growthlab modules."""


class GrowthLabError(Exception):
    """Base class for every error raised by growthlab."""


class StructuralError(GrowthLabError):
    """A word or element is malformed for the generating set it is used with."""


class PresentationError(GrowthLabError):
    """A presentation or action table is incomplete or invalid."""


class ResourceError(GrowthLabError):
    """A configured step or size budget was exceeded.

    ``partial`` carries whatever was computed before the budget ran out.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ParameterError(GrowthLabError, ValueError):
    """An argument is outside the accepted domain."""


class SpecFileError(GrowthLabError):
    """Base for group spec file problems."""


class SpecParseError(SpecFileError):
    def __init__(self, message, line=None, column=None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column


class SchemaError(SpecFileError):
    def __init__(self, message, field=None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class InconsistencyError(SpecFileError):
    """The file parses but describes something that is not a group."""


class UnsupportedStratumError(GrowthLabError):
    """A stratum carries torsion, so its quotient is not a lattice ``Z^m``."""
