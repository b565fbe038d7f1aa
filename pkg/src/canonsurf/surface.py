"""Surfaces on rectangular parameter grids.

Nodes are indexed ``[i, j]`` with ``i`` along x and ``j`` along y, so every
nodal array has shape ``(nx, ny)`` or ``(nx, ny, 3)``.  Masked nodes hold NaN
in ``points``, ``nu`` and ``gauss``; ``valid`` is the authoritative mask.

Integration follows a fixed staircase: along the base row from the base
node to the target column, then along that column.  A node is reachable only
if every node on its staircase path is valid.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from canonsurf import __version__
from canonsurf.algebra import TwoComponentNumber
from canonsurf.errors import (
    EmptyDomain,
    InvalidBasePoint,
    NoValidCell,
    NonPositiveCurvature,
    SingularDenominator,
    SingularDivisor,
    SurfaceFileError,
)
from canonsurf.expr import ExprNode, Jet, eval_jet, eval_jet_masked, parse
from canonsurf.weierstrass import (
    SurfaceCase,
    denominator,
    gauss_map,
    normal_curvature,
    phi,
    pointwise_validity,
)

DEFAULT_GUARD = 1e-3
MODULUS_FLOOR = 1e-12


@dataclass(frozen=True)
class GridSpec:
    x0: float
    x1: float
    y0: float
    y1: float
    nx: int
    ny: int
    base_point: tuple[float, float]
    base_value: tuple[float, float, float] = (0.0, 0.0, 0.0)
    guard: float = DEFAULT_GUARD

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError("domain needs x0 < x1 and y0 < y1")
        if self.nx < 2 or self.ny < 2:
            raise ValueError("grid needs at least 2 nodes per direction")
        if not self.guard >= 0:
            raise ValueError("guard must be >= 0")
        xb, yb = self.base_point
        if not (self.x0 <= xb <= self.x1 and self.y0 <= yb <= self.y1):
            raise InvalidBasePoint(f"base point {self.base_point} lies outside the domain")
        if len(self.base_value) != 3:
            raise ValueError("base_value must have 3 components")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x0, self.x1, self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.y0, self.y1, self.ny)

    @property
    def hx(self) -> float:
        return (self.x1 - self.x0) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.y1 - self.y0) / (self.ny - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.xs, self.ys, indexing="ij")

    @property
    def base_index(self) -> tuple[int, int]:
        """Lattice indices of the base point; raises if it is not a node."""
        xb, yb = self.base_point
        i = round((xb - self.x0) / self.hx)
        j = round((yb - self.y0) / self.hy)
        if (abs(self.x0 + i * self.hx - xb) > 1e-9 * self.hx
                or abs(self.y0 + j * self.hy - yb) > 1e-9 * self.hy):
            raise InvalidBasePoint(f"base point {self.base_point} is not a lattice node")
        return int(i), int(j)


@dataclass
class SurfaceGrid:
    spec: GridSpec
    case: SurfaceCase
    expr_text: str
    points: np.ndarray
    valid: np.ndarray
    nu: np.ndarray
    gauss: np.ndarray
    tool_version: str = field(default=__version__)

    @property
    def valid_count(self) -> int:
        return int(self.valid.sum())

    def valid_cells(self) -> np.ndarray:
        """``(nx-1, ny-1)`` mask of cells whose four corners are valid."""
        v = self.valid
        return v[:-1, :-1] & v[1:, :-1] & v[1:, 1:] & v[:-1, 1:]


@dataclass
class NodalFields:
    """Closed-form data evaluated at every node, NaN where ``valid`` is False."""

    valid: np.ndarray
    z_x: np.ndarray
    z_y: np.ndarray
    nu: np.ndarray
    gauss: np.ndarray


def evaluate_fields(ast: ExprNode, case: SurfaceCase, spec: GridSpec) -> NodalFields:
    X, Y = spec.mesh()
    z = TwoComponentNumber(X, Y, case.algebra)
    jet, ok = eval_jet_masked(ast, z)
    valid = ok & pointwise_validity(case, jet, spec.guard, MODULUS_FLOOR)
    # safe stand-ins (w = 0, w' = 1) keep the closed forms finite at masked nodes
    w = TwoComponentNumber(np.where(valid, jet.value.re, 0.0), np.where(valid, jet.value.im, 0.0),
                           case.algebra)
    wp = TwoComponentNumber(np.where(valid, jet.deriv.re, 1.0), np.where(valid, jet.deriv.im, 0.0),
                            case.algebra)
    safe = Jet(w, wp)
    z_x, z_y = phi(case, safe).tangents(case)
    nu = np.asarray(normal_curvature(case, safe), dtype=float)
    gauss = gauss_map(case, w)
    mask3 = valid[..., None]
    return NodalFields(
        valid=valid,
        z_x=np.where(mask3, z_x, np.nan),
        z_y=np.where(mask3, z_y, np.nan),
        nu=np.where(valid, nu, np.nan),
        gauss=np.where(mask3, gauss, np.nan),
    )


def _check_base_point(ast: ExprNode, case: SurfaceCase, spec: GridSpec):
    xb, yb = spec.base_point
    z = TwoComponentNumber(float(xb), float(yb), case.algebra)
    try:
        jet = eval_jet(ast, z)
        d = denominator(case, jet.value)
        if d == 0:
            raise SingularDenominator("denominator vanishes")
        normal_curvature(case, jet)
    except SingularDenominator:
        what = "u^2+v^2-1 = 0" if case is SurfaceCase.TIMELIKE_MINIMAL else "u^2-v^2+1 = 0"
        raise InvalidBasePoint(f"base point {spec.base_point} lies on the singular set ({what})") from None
    except (SingularDivisor, NonPositiveCurvature) as exc:
        raise InvalidBasePoint(f"base point {spec.base_point} violates a precondition: {exc}") from None
    if not (math.isfinite(jet.value.re) and math.isfinite(jet.value.im)):
        raise InvalidBasePoint(f"w is not finite at the base point {spec.base_point}")


def _sheet(case: SurfaceCase, gauss: np.ndarray) -> np.ndarray:
    """Sign of the stereographic denominator, recovered from the normal.

    Time-like ``l3 = -1 - 2/D``, space-like ``l1 = 1 - 2/D``.  Adjacent
    valid nodes on different sheets have the singular set between them.
    """
    with np.errstate(invalid="ignore"):
        if case is SurfaceCase.TIMELIKE_MINIMAL:
            return np.sign(-(1.0 + gauss[..., 2]))
        return np.sign(1.0 - gauss[..., 0])


def _edges(valid: np.ndarray, sheet: np.ndarray):
    """Traversable lattice edges: both ends valid and on the same sheet."""
    ex = valid[:-1, :] & valid[1:, :] & (sheet[:-1, :] == sheet[1:, :])
    ey = valid[:, :-1] & valid[:, 1:] & (sheet[:, :-1] == sheet[:, 1:])
    return ex, ey


def _staircase(z_x: np.ndarray, z_y: np.ndarray, edge_x: np.ndarray, edge_y: np.ndarray,
               spec: GridSpec):
    """Composite trapezoid integration of ``z_x dx + z_y dy`` along staircase paths.

    ``edge_x[i, j]`` tells whether the edge from node ``(i, j)`` to ``(i+1, j)``
    may be crossed, ``edge_y`` likewise in y.  Returns ``(offsets, reachable)``;
    ``offsets`` is relative to the base node and NaN at unreachable nodes.
    """
    ib, jb = spec.base_index
    nx, ny = spec.shape
    hx, hy = spec.hx, spec.hy

    row_ok = np.zeros(nx, dtype=bool)
    row_ok[ib] = True
    row_ok[ib + 1:] = np.logical_and.accumulate(edge_x[ib:, jb])
    row_ok[:ib] = np.logical_and.accumulate(edge_x[:ib, jb][::-1])[::-1]

    row_steps = 0.5 * hx * (z_x[:-1, jb] + z_x[1:, jb])  # edge i -> i+1
    row = np.zeros((nx, 3))
    row[ib + 1:] = np.cumsum(row_steps[ib:], axis=0)
    row[:ib] = -np.cumsum(row_steps[:ib][::-1], axis=0)[::-1]

    col_ok = np.ones((nx, ny), dtype=bool)
    col_ok[:, jb + 1:] = np.logical_and.accumulate(edge_y[:, jb:], axis=1)
    col_ok[:, :jb] = np.logical_and.accumulate(edge_y[:, :jb][:, ::-1], axis=1)[:, ::-1]
    reachable = col_ok & row_ok[:, None]

    col_steps = 0.5 * hy * (z_y[:, :-1] + z_y[:, 1:])  # edge j -> j+1
    col = np.zeros((nx, ny, 3))
    col[:, jb + 1:] = np.cumsum(col_steps[:, jb:], axis=1)
    col[:, :jb] = -np.cumsum(col_steps[:, :jb][:, ::-1], axis=1)[:, ::-1]

    offsets = row[:, None, :] + col
    offsets[~reachable] = np.nan
    return offsets, reachable


def _anchor(offsets: np.ndarray, reachable: np.ndarray, spec: GridSpec) -> np.ndarray:
    points = np.asarray(spec.base_value, dtype=float) + offsets
    ib, jb = spec.base_index
    points[ib, jb] = spec.base_value
    points[~reachable] = np.nan
    return points


def integrate_representation(ast: ExprNode, case: SurfaceCase, spec: GridSpec,
                             expr_text: str | None = None) -> SurfaceGrid:
    """Build the surface generated by ``ast`` on the grid ``spec``."""
    _check_base_point(ast, case, spec)
    ib, jb = spec.base_index
    fields = evaluate_fields(ast, case, spec)
    if not fields.valid.any():
        raise EmptyDomain("no grid node satisfies the representation's preconditions")
    if not fields.valid[ib, jb]:
        raise InvalidBasePoint(f"base node {spec.base_point} is masked by the guard {spec.guard}")
    edge_x, edge_y = _edges(fields.valid, _sheet(case, fields.gauss))
    offsets, reachable = _staircase(fields.z_x, fields.z_y, edge_x, edge_y, spec)
    valid = fields.valid & reachable
    mask3 = valid[..., None]
    if expr_text is None:
        from canonsurf.expr import to_source
        expr_text = to_source(ast)
    return SurfaceGrid(
        spec=spec,
        case=case,
        expr_text=expr_text,
        points=_anchor(offsets, valid, spec),
        valid=valid,
        nu=np.where(valid, fields.nu, np.nan),
        gauss=np.where(mask3, fields.gauss, np.nan),
    )


def loop_residual(grid: SurfaceGrid, ast: ExprNode) -> float:
    """Largest trapezoid circulation of the tangent 1-form around a valid cell,
    divided by the cell perimeter (max over the three coordinates)."""
    cells = grid.valid_cells()
    if not cells.any():
        raise NoValidCell("no grid cell has four valid corners")
    fields = evaluate_fields(ast, grid.case, grid.spec)
    zx, zy = fields.z_x, fields.z_y
    hx, hy = grid.spec.hx, grid.spec.hy
    bottom = 0.5 * hx * (zx[:-1, :-1] + zx[1:, :-1])
    right = 0.5 * hy * (zy[1:, :-1] + zy[1:, 1:])
    top = 0.5 * hx * (zx[:-1, 1:] + zx[1:, 1:])
    left = 0.5 * hy * (zy[:-1, :-1] + zy[:-1, 1:])
    circulation = np.abs(bottom + right - top - left).max(axis=-1)
    return float(circulation[cells].max() / (2.0 * (hx + hy)))


def reconstruct_from_gauss_map(grid: SurfaceGrid) -> SurfaceGrid:
    """Rebuild the surface from its normal alone via ``z_x = -l_x/nu``, ``z_y = l_y/nu``.

    Derivatives of ``l`` are second order: central in the interior and
    one-sided second order on the boundary ring.
    """
    spec = grid.spec
    ib, jb = spec.base_index
    if not grid.valid[ib, jb]:
        raise InvalidBasePoint("base node is masked")
    l_x = np.gradient(grid.gauss, spec.hx, axis=0, edge_order=2)
    l_y = np.gradient(grid.gauss, spec.hy, axis=1, edge_order=2)
    nu = grid.nu[..., None]
    z_x = -l_x / nu
    z_y = l_y / nu
    valid = grid.valid & np.isfinite(z_x).all(axis=-1) & np.isfinite(z_y).all(axis=-1)
    if not valid[ib, jb]:
        raise InvalidBasePoint("normal derivatives are undefined at the base node")
    edge_x, edge_y = _edges(valid, _sheet(grid.case, grid.gauss))
    offsets, reachable = _staircase(z_x, z_y, edge_x, edge_y, spec)
    valid &= reachable
    mask3 = valid[..., None]
    return replace(
        grid,
        points=_anchor(offsets, valid, spec),
        valid=valid,
        nu=np.where(valid, grid.nu, np.nan),
        gauss=np.where(mask3, grid.gauss, np.nan),
    )


# --- surface file ------------------------------------------------------------------


def _num(x) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def _num_list(values) -> str:
    return "[" + ",".join(_num(v) for v in np.ravel(values)) + "]"


def surface_to_json(grid: SurfaceGrid) -> str:
    """Serialize with 17 significant digits; masked entries become ``null``."""
    spec = grid.spec
    head = {
        "case": grid.case.value,
        "expr": grid.expr_text,
        "algebra": grid.case.algebra.value,
    }
    parts = [f"{json.dumps(k)}: {json.dumps(v)}" for k, v in head.items()]
    parts.append('"domain": {' + ", ".join([
        f'"x0": {_num(spec.x0)}', f'"x1": {_num(spec.x1)}',
        f'"y0": {_num(spec.y0)}', f'"y1": {_num(spec.y1)}',
        f'"nx": {spec.nx}', f'"ny": {spec.ny}']) + "}")
    parts.append('"base": {' + f'"x": {_num(spec.base_point[0])}, "y": {_num(spec.base_point[1])}, '
                 f'"value": {_num_list(spec.base_value)}' + "}")
    parts.append(f'"guard": {_num(spec.guard)}')
    parts.append(f'"points": {_num_list(grid.points)}')
    parts.append('"valid": [' + ",".join("true" if v else "false" for v in grid.valid.ravel()) + "]")
    parts.append(f'"nu": {_num_list(grid.nu)}')
    parts.append(f'"gauss": {_num_list(grid.gauss)}')
    parts.append(f'"tool_version": {json.dumps(grid.tool_version)}')
    return "{\n  " + ",\n  ".join(parts) + "\n}\n"


def write_surface(grid: SurfaceGrid, path) -> None:
    Path(path).write_text(surface_to_json(grid), encoding="utf-8")


def _floats(values, shape, name) -> np.ndarray:
    try:
        arr = np.array([np.nan if v is None else float(v) for v in values], dtype=float)
    except (TypeError, ValueError):
        raise SurfaceFileError(f"'{name}' must be a list of numbers or nulls") from None
    if arr.size != math.prod(shape):
        raise SurfaceFileError(f"'{name}' has {arr.size} entries, expected {math.prod(shape)}")
    return arr.reshape(shape)


def surface_from_dict(data: dict) -> SurfaceGrid:
    try:
        dom, base = data["domain"], data["base"]
        case = SurfaceCase.parse(data["case"])
        spec = GridSpec(
            x0=float(dom["x0"]), x1=float(dom["x1"]), y0=float(dom["y0"]), y1=float(dom["y1"]),
            nx=int(dom["nx"]), ny=int(dom["ny"]),
            base_point=(float(base["x"]), float(base["y"])),
            base_value=tuple(float(c) for c in base["value"]),
            guard=float(data["guard"]),
        )
        expr_text = str(data["expr"])
        valid_raw = data["valid"]
        version = str(data.get("tool_version", ""))
        if data.get("algebra", case.algebra.value) != case.algebra.value:
            raise SurfaceFileError(f"algebra {data['algebra']!r} does not match case {case.value!r}")
        shape2, shape3 = (spec.nx, spec.ny), (spec.nx, spec.ny, 3)
        points = _floats(data["points"], shape3, "points")
        nu = _floats(data["nu"], shape2, "nu")
        gauss = _floats(data["gauss"], shape3, "gauss")
    except KeyError as exc:
        raise SurfaceFileError(f"surface file lacks field {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SurfaceFileError):
            raise
        raise SurfaceFileError(f"malformed surface file: {exc}") from None
    if len(valid_raw) != spec.nx * spec.ny or not all(isinstance(v, bool) for v in valid_raw):
        raise SurfaceFileError("'valid' must hold nx*ny booleans")
    valid = np.array(valid_raw, dtype=bool).reshape(shape2)
    return SurfaceGrid(spec=spec, case=case, expr_text=expr_text, points=points, valid=valid,
                       nu=nu, gauss=gauss, tool_version=version)


def read_surface(path) -> SurfaceGrid:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SurfaceFileError(f"cannot read surface file {path}: {exc}") from None
    try:
        # "-0" is how a negative zero is written; keep its sign
        data = json.loads(text, parse_int=lambda t: -0.0 if t == "-0" else int(t))
    except json.JSONDecodeError as exc:
        raise SurfaceFileError(f"surface file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise SurfaceFileError("surface file must hold a JSON object")
    return surface_from_dict(data)


def surface_ast(grid: SurfaceGrid) -> ExprNode:
    return parse(grid.expr_text)
