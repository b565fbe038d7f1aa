"""Exception hierarchy shared by every canonsurf module."""


class CanonsurfError(Exception):
    """Base class for all library errors."""


class SingularDivisor(CanonsurfError, ZeroDivisionError):
    """Division by an element of zero squared modulus.

    ``zero_divisor`` is True when the divisor is a nonzero null element of
    the hyperbolic algebra (on the lines ``|re| == |im|``), False when the
    divisor is zero itself.
    """

    def __init__(self, message, zero_divisor=False):
        super().__init__(message)
        self.zero_divisor = zero_divisor


class SingularDenominator(CanonsurfError, ZeroDivisionError):
    """The stereographic denominator vanishes (point on the singular set)."""


class NonPositiveCurvature(CanonsurfError, ValueError):
    """The normal curvature function would not be strictly positive."""


class ExpressionError(CanonsurfError, ValueError):
    """Failure to parse a generating-function expression.

    ``kind`` is one of ``"syntax"``, ``"unknown-identifier"``,
    ``"malformed-literal"``; ``offset`` is the byte offset into the UTF-8
    encoded input.
    """

    def __init__(self, message, kind, offset):
        super().__init__(f"{message} (at byte offset {offset})")
        self.kind = kind
        self.offset = offset
        self.reason = message


class InvalidBasePoint(CanonsurfError, ValueError):
    """The integration base point is masked, off-lattice or singular."""


class EmptyDomain(CanonsurfError, ValueError):
    """No grid node satisfies the pointwise preconditions."""


class NoValidCell(CanonsurfError, ValueError):
    """No grid cell has all four corners valid."""


class InsufficientStencil(CanonsurfError, ValueError):
    """A verification check found no node with a complete stencil."""


class NonPositiveNu(CanonsurfError, ValueError):
    """A normal curvature field handed to a PDE check has entries <= 0."""


class SurfaceFileError(CanonsurfError, ValueError):
    """A surface or report file does not follow the expected schema."""
