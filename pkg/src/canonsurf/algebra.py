"""Arithmetic in the two commutative planar algebras and in Minkowski 3-space.

A :class:`TwoComponentNumber` is ``re + eps*im`` where the unit ``eps``
squares to -1 (circular algebra, the Gauss plane) or +1 (hyperbolic
algebra, the Lorentz plane).  Components may be Python floats or numpy
arrays of a common shape; all operations broadcast, so a whole grid of
points is one number.

Minkowski vectors are plain numpy arrays whose last axis has length 3, with
the inner product ``a1*b1 + a2*b2 - a3*b3``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from canonsurf.errors import SingularDivisor


class AlgebraKind(enum.Enum):
    CIRCULAR = "circular"
    HYPERBOLIC = "hyperbolic"

    @property
    def unit_square(self) -> int:
        """The value of ``eps * eps``."""
        return -1 if self is AlgebraKind.CIRCULAR else 1


def _is_scalar(value) -> bool:
    return np.ndim(value) == 0


def _zeros_like(value):
    return 0.0 if _is_scalar(value) else np.zeros(np.shape(value))


@dataclass(frozen=True, eq=False)
class TwoComponentNumber:
    re: float | np.ndarray
    im: float | np.ndarray
    kind: AlgebraKind

    @classmethod
    def real(cls, value, kind: AlgebraKind) -> "TwoComponentNumber":
        return cls(value, _zeros_like(value), kind)

    @classmethod
    def unit(cls, kind: AlgebraKind) -> "TwoComponentNumber":
        return cls(0.0, 1.0, kind)

    def _coerce(self, other) -> "TwoComponentNumber":
        if isinstance(other, TwoComponentNumber):
            if other.kind is not self.kind:
                raise TypeError(
                    f"cannot combine {self.kind.value} and {other.kind.value} numbers"
                )
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return TwoComponentNumber(float(other), 0.0, self.kind)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return TwoComponentNumber(self.re + other.re, self.im + other.im, self.kind)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return TwoComponentNumber(self.re - other.re, self.im - other.im, self.kind)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __neg__(self):
        return TwoComponentNumber(-self.re, -self.im, self.kind)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return div(self, other)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return div(other, self)

    def __pow__(self, n):
        return pow_int(self, n)

    def __eq__(self, other):
        if not isinstance(other, TwoComponentNumber):
            return NotImplemented
        return (
            self.kind is other.kind
            and np.array_equal(self.re, other.re)
            and np.array_equal(self.im, other.im)
        )

    __hash__ = None

    def conjugate(self) -> "TwoComponentNumber":
        return TwoComponentNumber(self.re, -self.im, self.kind)

    def modulus_sq(self):
        """``re**2 - eps**2 * im**2``; may be zero or negative in the hyperbolic plane."""
        return self.re * self.re - self.kind.unit_square * self.im * self.im

    def __repr__(self):
        if _is_scalar(self.re) and _is_scalar(self.im):
            sign = "-" if self.im < 0 else "+"
            return f"{self.re!r} {sign} {abs(self.im)!r}eps ({self.kind.value})"
        return f"TwoComponentNumber(re=<{np.shape(self.re)}>, im=<{np.shape(self.im)}>, kind={self.kind})"


def mul(a: TwoComponentNumber, b: TwoComponentNumber) -> TwoComponentNumber:
    if a.kind is not b.kind:
        raise TypeError(f"cannot multiply {a.kind.value} by {b.kind.value}")
    s = a.kind.unit_square
    return TwoComponentNumber(
        a.re * b.re + s * a.im * b.im, a.re * b.im + a.im * b.re, a.kind
    )


def div(a: TwoComponentNumber, b: TwoComponentNumber) -> TwoComponentNumber:
    """Divide ``a`` by ``b``; raises :class:`SingularDivisor` where ``m(b) == 0``."""
    if a.kind is not b.kind:
        raise TypeError(f"cannot divide {a.kind.value} by {b.kind.value}")
    m = b.modulus_sq()
    singular = np.asarray(m == 0)
    if singular.any():
        nonzero = np.asarray((b.re != 0) | (b.im != 0)) & singular
        if nonzero.any():
            raise SingularDivisor(
                "division by a zero divisor of the hyperbolic algebra", zero_divisor=True
            )
        raise SingularDivisor("division by zero", zero_divisor=False)
    s = a.kind.unit_square
    # a * conj(b) / m(b)
    re = (a.re * b.re - s * a.im * b.im) / m
    im = (a.im * b.re - a.re * b.im) / m
    return TwoComponentNumber(re, im, a.kind)


def pow_int(z: TwoComponentNumber, n: int) -> TwoComponentNumber:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 0:
        raise ValueError(f"pow_int needs an integer exponent >= 0, got {n!r}")
    result = TwoComponentNumber(_zeros_like(z.re) + 1.0, _zeros_like(z.im), z.kind)
    base = z
    n = int(n)
    while n:
        if n & 1:
            result = mul(result, base)
        n >>= 1
        if n:
            base = mul(base, base)
    return result


_COMPLEX_FUNCS = {
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "sinh": np.sinh,
    "cosh": np.cosh,
}

ELEMENTARY_FUNCTIONS = tuple(_COMPLEX_FUNCS)


def elementary(name: str, z: TwoComponentNumber, n: int | None = None) -> TwoComponentNumber:
    """Evaluate an entire elementary function (or ``pow_int``) in the algebra of ``z``.

    Circular numbers go through numpy's complex functions.  Hyperbolic
    numbers are split along the idempotents ``(1 +- eps)/2``, where any real
    power series acts componentwise: ``f(a + eps b)`` has components
    ``(f(a+b) + f(a-b))/2`` and ``(f(a+b) - f(a-b))/2``.
    """
    if name == "pow_int":
        if n is None:
            raise ValueError("pow_int requires an exponent")
        return pow_int(z, n)
    try:
        func = _COMPLEX_FUNCS[name]
    except KeyError:
        raise ValueError(f"unknown elementary function {name!r}") from None
    if z.kind is AlgebraKind.CIRCULAR:
        with np.errstate(over="ignore", invalid="ignore"):
            w = func(np.asarray(z.re, dtype=float) + 1j * np.asarray(z.im, dtype=float))
        return TwoComponentNumber(_unwrap(w.real), _unwrap(w.imag), z.kind)
    p = np.asarray(z.re + z.im, dtype=float)
    q = np.asarray(z.re - z.im, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        fp, fq = func(p), func(q)
        re, im = 0.5 * (fp + fq), 0.5 * (fp - fq)
    return TwoComponentNumber(_unwrap(re), _unwrap(im), z.kind)


def _unwrap(value):
    value = np.asarray(value)
    return float(value) if value.ndim == 0 else value


# --- Minkowski 3-space, signature (+, +, -) ---------------------------------


class CausalCharacter(enum.Enum):
    SPACELIKE = "space-like"
    TIMELIKE = "time-like"
    NULL = "null"


def minkowski_inner(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] - a[..., 2] * b[..., 2]


def minkowski_cross(a, b) -> np.ndarray:
    """The vector ``c`` with ``minkowski_inner(c, v) == det(a, b, v)`` for all ``v``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.stack(
        [
            a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
            a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
            -(a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]),
        ],
        axis=-1,
    )


def causal_character(v, atol: float = 0.0) -> CausalCharacter:
    q = float(minkowski_inner(v, v))
    if math.isnan(q):
        raise ValueError("causal character of a vector with NaN entries")
    if q > atol:
        return CausalCharacter.SPACELIKE
    if q < -atol:
        return CausalCharacter.TIMELIKE
    return CausalCharacter.NULL
