"""Mesh and table exports of a :class:`~canonsurf.surface.SurfaceGrid`."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from canonsurf.errors import NoValidCell
from canonsurf.surface import SurfaceGrid


def _g(x) -> str:
    return format(float(x), ".17g")


def obj_text(grid: SurfaceGrid) -> str:
    """Wavefront OBJ: one vertex per valid node (row-major), two triangles per valid cell.

    A grid without any valid node raises :class:`NoValidCell`; valid nodes
    whose cells are all incomplete are still written, with no faces.
    """
    valid = grid.valid
    if not valid.any():
        raise NoValidCell("surface has no valid node to export")
    nx, ny = valid.shape
    index = np.zeros((nx, ny), dtype=np.int64)
    index[valid] = np.arange(1, int(valid.sum()) + 1)
    out = io.StringIO()
    out.write(f"# canonsurf {grid.case.value} surface, w = {grid.expr_text}\n")
    for i, j in zip(*np.nonzero(valid)):
        x1, x2, x3 = grid.points[i, j]
        out.write(f"v {_g(x1)} {_g(x2)} {_g(x3)}\n")
    cells = grid.valid_cells()
    for i, j in zip(*np.nonzero(cells)):
        a, b = index[i, j], index[i + 1, j]
        c, d = index[i + 1, j + 1], index[i, j + 1]
        out.write(f"f {a} {b} {c}\nf {a} {c} {d}\n")
    return out.getvalue()


def export_obj(grid: SurfaceGrid, path) -> None:
    Path(path).write_text(obj_text(grid), encoding="utf-8")


def csv_text(grid: SurfaceGrid) -> str:
    """Row-major table ``x,y,z1,z2,z3,nu,valid``; masked nodes leave z and nu empty."""
    out = io.StringIO()
    out.write("x,y,z1,z2,z3,nu,valid\n")
    xs, ys = grid.spec.xs, grid.spec.ys
    for i in range(grid.spec.nx):
        for j in range(grid.spec.ny):
            if grid.valid[i, j]:
                z1, z2, z3 = grid.points[i, j]
                vals = f"{_g(z1)},{_g(z2)},{_g(z3)},{_g(grid.nu[i, j])},1"
            else:
                vals = ",,,,0"
            out.write(f"{_g(xs[i])},{_g(ys[j])},{vals}\n")
    return out.getvalue()


def export_csv(grid: SurfaceGrid, path) -> None:
    Path(path).write_text(csv_text(grid), encoding="utf-8")
