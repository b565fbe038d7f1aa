"""Canonical Weierstrass representations of minimal time-like and maximal
space-like surfaces in Minkowski 3-space, with numerical verification."""

__version__ = "0.1.0"

from canonsurf.algebra import (  # noqa: E402
    AlgebraKind,
    TwoComponentNumber,
    elementary,
    minkowski_cross,
    minkowski_inner,
)
from canonsurf.expr import Jet, cauchy_riemann_residual, eval_jet, parse  # noqa: E402
from canonsurf.surface import (  # noqa: E402
    GridSpec,
    SurfaceGrid,
    integrate_representation,
    loop_residual,
    read_surface,
    reconstruct_from_gauss_map,
    write_surface,
)
from canonsurf.weierstrass import SurfaceCase, gauss_map, normal_curvature, phi  # noqa: E402

__all__ = [
    "AlgebraKind", "TwoComponentNumber", "elementary", "minkowski_cross", "minkowski_inner",
    "Jet", "cauchy_riemann_residual", "eval_jet", "parse",
    "GridSpec", "SurfaceGrid", "integrate_representation", "loop_residual", "read_surface",
    "reconstruct_from_gauss_map", "write_surface",
    "SurfaceCase", "gauss_map", "normal_curvature", "phi",
]
