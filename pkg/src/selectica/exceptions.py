"""Exception types raised across selectica."""


class SelecticaError(Exception):
    """Base class for all selectica errors."""


class InfiniteQuantile(SelecticaError, ArithmeticError):
    """A requested normal quantile is not representable in double precision."""


class InfiniteWidth(SelecticaError, ArithmeticError):
    """An infer-and-widen adjusted level is too small to yield a finite interval."""


class DegenerateTruncation(SelecticaError, ArithmeticError):
    """The truncation set carries (numerically) no Gaussian mass."""


class RootNotBracketed(SelecticaError, ArithmeticError):
    """No mean within the search range attains the requested CDF value."""


class EmptySelection(SelecticaError):
    """The lasso selected no features."""


class SingularDesign(SelecticaError, ArithmeticError):
    """The selected design columns are rank deficient."""


class SelectionEventViolated(SelecticaError):
    """The observed statistic falls outside its own truncation limits."""
