"""Closed-form pointwise quantities of the canonical representations.

For a holomorphic ``w`` with derivative ``w'`` the tangent data of the
surface in canonical principal parameters is the triple ``phi`` of algebra
numbers, the unit normal is the stereographic image of ``w`` and the normal
curvature is a rational expression in ``w`` and ``w'``:

===================  ==========================  ==========================
quantity             time-like minimal (C)       space-like maximal (L)
===================  ==========================  ==========================
phi1                 (w^2 + 1) / (2 w')          -w / w'
phi2                 -eps (w^2 - 1) / (2 w')     (w^2 - 1) / (2 w')
phi3                 -w / w'                     eps (w^2 + 1) / (2 w')
denominator D        u^2 + v^2 - 1               u^2 - v^2 + 1
normal l             (2u, 2v, -(u^2+v^2+1)) / D  (u^2-v^2-1, 2u, 2v) / D
nu                   4 (u_x^2 + u_y^2) / D^2     4 (u_x^2 - u_y^2) / D^2
===================  ==========================  ==========================

where ``w = u + eps v``.  Every function here accepts array-valued numbers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from canonsurf.algebra import AlgebraKind, TwoComponentNumber, mul
from canonsurf.errors import NonPositiveCurvature, SingularDenominator
from canonsurf.expr import Jet


class SurfaceCase(enum.Enum):
    TIMELIKE_MINIMAL = "timelike"
    SPACELIKE_MAXIMAL = "spacelike"

    @property
    def algebra(self) -> AlgebraKind:
        if self is SurfaceCase.TIMELIKE_MINIMAL:
            return AlgebraKind.CIRCULAR
        return AlgebraKind.HYPERBOLIC

    @property
    def normal_square(self) -> int:
        """``<l, l>`` of the unit normal: -1 time-like case, +1 space-like case."""
        return -1 if self is SurfaceCase.TIMELIKE_MINIMAL else 1

    @classmethod
    def parse(cls, text: str) -> "SurfaceCase":
        key = text.strip().lower().replace("-", "").replace("_", "")
        for case in cls:
            if key in (case.value, case.name.lower().replace("_", "")):
                return case
        raise ValueError(f"unknown surface case {text!r}; use 'timelike' or 'spacelike'")


@dataclass(frozen=True)
class PhiVector:
    phi1: TwoComponentNumber
    phi2: TwoComponentNumber
    phi3: TwoComponentNumber

    def null_defect(self) -> TwoComponentNumber:
        """``phi1^2 + phi2^2 - phi3^2``, identically zero for exact arithmetic."""
        return (mul(self.phi1, self.phi1) + mul(self.phi2, self.phi2)
                - mul(self.phi3, self.phi3))

    def tangents(self, case: SurfaceCase) -> tuple[np.ndarray, np.ndarray]:
        """Partial derivatives ``(z_x, z_y)`` of the surface, shape ``(..., 3)``.

        The time-like triple packages ``z_x - i z_y``, the space-like one
        ``z_x + j z_y``.
        """
        comps = (self.phi1, self.phi2, self.phi3)
        z_x = np.stack([np.asarray(p.re, dtype=float) for p in comps], axis=-1)
        sign = -1.0 if case is SurfaceCase.TIMELIKE_MINIMAL else 1.0
        z_y = np.stack([sign * np.asarray(p.im, dtype=float) for p in comps], axis=-1)
        return z_x, z_y


def _check_case(case: SurfaceCase, z: TwoComponentNumber):
    if z.kind is not case.algebra:
        raise TypeError(f"{case.value} surfaces use the {case.algebra.value} algebra, "
                        f"got a {z.kind.value} number")


def phi(case: SurfaceCase, jet: Jet) -> PhiVector:
    """The representation triple; raises ``SingularDivisor`` if ``w'`` is not invertible."""
    _check_case(case, jet.value)
    w, wp = jet.value, jet.deriv
    kind = w.kind
    eps = TwoComponentNumber.unit(kind)
    w2 = mul(w, w)
    half_over = 1.0 / (2.0 * wp)
    if case is SurfaceCase.TIMELIKE_MINIMAL:
        return PhiVector(
            mul(w2 + 1.0, half_over),
            -mul(eps, mul(w2 - 1.0, half_over)),
            -(w / wp),
        )
    return PhiVector(
        -(w / wp),
        mul(w2 - 1.0, half_over),
        mul(eps, mul(w2 + 1.0, half_over)),
    )


def denominator(case: SurfaceCase, w: TwoComponentNumber):
    u, v = w.re, w.im
    if case is SurfaceCase.TIMELIKE_MINIMAL:
        return u * u + v * v - 1.0
    return u * u - v * v + 1.0


def gauss_map(case: SurfaceCase, w: TwoComponentNumber) -> np.ndarray:
    """Unit normal ``l`` on H^2(-1) (time-like) or H^2(1) (space-like)."""
    _check_case(case, w)
    d = np.asarray(denominator(case, w), dtype=float)
    if (d == 0).any():
        raise SingularDenominator(f"stereographic denominator vanishes for the {case.value} case")
    u, v = np.asarray(w.re, dtype=float), np.asarray(w.im, dtype=float)
    if case is SurfaceCase.TIMELIKE_MINIMAL:
        comps = (2 * u / d, 2 * v / d, -(u * u + v * v + 1) / d)
    else:
        comps = ((u * u - v * v - 1) / d, 2 * u / d, 2 * v / d)
    return np.stack(comps, axis=-1)


def potential_gradient(case: SurfaceCase, jet: Jet):
    """``(u_x, u_y)`` read off ``w'``: ``w' = u_x - i u_y`` (C) or ``u_x + j u_y`` (L)."""
    wp = jet.deriv
    if case is SurfaceCase.TIMELIKE_MINIMAL:
        return wp.re, -wp.im
    return wp.re, wp.im


def canonical_mu(case: SurfaceCase, jet: Jet):
    """The auxiliary function ``mu`` of the holomorphy conditions (``nu = 4 mu``)."""
    u_x, u_y = potential_gradient(case, jet)
    sign = 1.0 if case is SurfaceCase.TIMELIKE_MINIMAL else -1.0
    d = denominator(case, jet.value)
    return (u_x ** 2 + sign * u_y ** 2) / d ** 2


def normal_curvature(case: SurfaceCase, jet: Jet):
    """Normal curvature ``nu = 4 m(w') / D^2`` where ``m`` is the algebra's squared modulus.

    Raises ``SingularDenominator`` where ``D == 0`` and ``NonPositiveCurvature``
    where ``m(w') <= 0`` (only possible for space-like surfaces, or ``w' = 0``).
    """
    _check_case(case, jet.value)
    d = np.asarray(denominator(case, jet.value), dtype=float)
    if (d == 0).any():
        raise SingularDenominator(f"stereographic denominator vanishes for the {case.value} case")
    m = np.asarray(jet.deriv.modulus_sq(), dtype=float)
    if (m <= 0).any():
        raise NonPositiveCurvature(
            "m(w') <= 0: u_x^2 - u_y^2 must be positive" if case is SurfaceCase.SPACELIKE_MAXIMAL
            else "w' vanishes"
        )
    nu = 4.0 * m / (d * d)
    return float(nu) if nu.ndim == 0 else nu


def pointwise_validity(case: SurfaceCase, jet: Jet, guard: float = 1e-3,
                       modulus_floor: float = 1e-12) -> np.ndarray:
    """Mask of points meeting every precondition with the guard margins applied.

    A point is valid when ``|D| >= guard`` (and ``D != 0``), ``m(w') >= modulus_floor``
    and all inputs are finite.
    """
    d = np.asarray(denominator(case, jet.value), dtype=float)
    m = np.asarray(jet.deriv.modulus_sq(), dtype=float)
    ok = np.isfinite(d) & np.isfinite(m)
    with np.errstate(invalid="ignore"):
        ok &= (np.abs(d) >= guard) & (d != 0) & (m >= modulus_floor) & (m > 0)
    return ok
