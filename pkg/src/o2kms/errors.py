"""Exception types raised by the library."""


class InvalidSymbol(ValueError):
    """A word contained a character other than '0' or '1'."""


class CapExceeded(RuntimeError):
    """A size limit guarding exponential or quadratic work was exceeded."""

    def __init__(self, what, value, cap):
        self.what = what
        self.value = value
        self.cap = cap
        super().__init__(f"{what}={value} exceeds cap {cap}")


class DivergentSeries(ArithmeticError):
    """The series sum_k exp(-beta s_k) diverges (beta <= 1)."""


class NoAtomicMeasure(ValueError):
    """The atomic measure at 1^inf does not exist for this beta."""


class ConditioningError(ValueError):
    """Matrix entries are too large for a meaningful residual."""


class BracketError(RuntimeError):
    """A root bracket failed certification; indicates a bug in the series bounds."""


class NumericOverflow(ArithmeticError):
    """A computed quantity left the finite binary64 range."""
