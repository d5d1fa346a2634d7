"""Exception hierarchy shared by all fracsplit modules."""


class FracsplitError(Exception):
    """Base class for every error raised by this package."""


class InvalidOperatorError(FracsplitError, ValueError):
    """Operator construction or composition with inconsistent parameters."""


class RankDeficiencyError(InvalidOperatorError):
    """The Gram matrix ``A A^T`` of an affine constraint is (near) singular."""


class DomainError(FracsplitError, ValueError):
    """A function was evaluated outside its domain."""


class DenominatorViolationError(FracsplitError, ArithmeticError):
    """A denominator was nonpositive at a point visited by a solver.

    Attributes
    ----------
    x : ndarray
        The offending point.
    value : float
        Denominator value at ``x``.
    component : int or None
        Index of the ratio term for sum-of-ratios programs.
    """

    def __init__(self, x, value, component=None):
        self.x = x
        self.value = value
        self.component = component
        where = "" if component is None else f" (component {component})"
        super().__init__(f"denominator {value!r} <= 0{where}")


class NonFiniteError(FracsplitError, FloatingPointError):
    """A subgradient or iterate contains NaN or inf."""


class InvalidReferencePointError(FracsplitError, ValueError):
    """Reference point passed to a diagnostic is not a fixed point."""


class MisuseError(FracsplitError, ValueError):
    """An API was called with arguments that contradict its contract."""


class MetricDomainError(FracsplitError, ValueError):
    """A relative-error metric has a nonpositive denominator."""


class InvalidSpecError(FracsplitError, ValueError):
    """Invalid generator or experiment configuration."""
