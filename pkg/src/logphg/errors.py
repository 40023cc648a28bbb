"""Exception hierarchy.  Every library error derives from :class:`LogPhgError`."""


class LogPhgError(Exception):
    """Base class for computation errors (CLI exit code 1)."""


class DegreeMismatch(LogPhgError):
    pass


class DegenerateDegree(LogPhgError):
    """Radial primitive requested at the critical degree a = -n."""


class ResidueObstruction(LogPhgError):
    """A degree -n function with nonzero top residue is not a divergence."""


class UnsupportedDimension(LogPhgError):
    pass


class UnsupportedTransform(LogPhgError):
    pass


class EmptySymbol(LogPhgError):
    pass


class NonRealDegree(LogPhgError):
    pass


class SingularMatrix(LogPhgError):
    pass


class IllConditioned(LogPhgError):
    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


class IntegerOrder(LogPhgError):
    pass


class BasisMissing(LogPhgError):
    pass
