import csv
import io

import numpy as np
import pytest

from canonsurf.errors import NoValidCell
from canonsurf.export import csv_text, export_csv, export_obj, obj_text
from canonsurf.expr import parse
from canonsurf.surface import GridSpec, integrate_representation
from canonsurf.weierstrass import SurfaceCase

T, S = SurfaceCase.TIMELIKE_MINIMAL, SurfaceCase.SPACELIKE_MAXIMAL


def grid(case, dom, n, base=None):
    spec = GridSpec(*dom, n, n, base_point=base or (dom[0], dom[2]))
    return integrate_representation(parse("z"), case, spec)


def lines(text, tag):
    return [line for line in text.splitlines() if line.startswith(tag + " ")]


def test_single_cell():
    out = obj_text(grid(T, (0, 0.5, 0, 0.5), 2))
    assert len(lines(out, "v")) == 4
    assert lines(out, "f") == ["f 1 3 4", "f 1 4 2"]  # nodes numbered row-major over (i, j)


def test_masked_corner_drops_the_cell():
    g = grid(T, (0, 0.5, 0, 0.5), 2)
    g.valid[1, 1] = False
    g.points[1, 1] = np.nan
    out = obj_text(g)
    assert len(lines(out, "v")) == 3 and lines(out, "f") == []


def test_vertices_follow_node_order():
    g = grid(S, (0, 1, 0, 0.5), 5)
    rows = [tuple(map(float, line.split()[1:])) for line in lines(obj_text(g), "v")]
    np.testing.assert_array_equal(np.array(rows), g.points[g.valid])


def test_enneper_vertex_census(tmp_path):
    g = grid(T, (0, 2, 0, 2), 201, base=(0, 0))
    assert 0 < g.valid_count < 201 * 201
    path = tmp_path / "e.obj"
    export_obj(g, path)
    out = path.read_text()
    assert len(lines(out, "v")) == g.valid_count
    assert len(lines(out, "f")) == 2 * int(g.valid_cells().sum())
    n = g.valid_count
    for line in lines(out, "f"):
        assert all(1 <= int(k) <= n for k in line.split()[1:])


def test_no_valid_node():
    g = grid(T, (0, 0.5, 0, 0.5), 3)
    g.valid[:] = False
    with pytest.raises(NoValidCell):
        obj_text(g)


def test_csv_table(tmp_path):
    g = grid(T, (0, 2, 0, 2), 11, base=(0, 0))
    path = tmp_path / "e.csv"
    export_csv(g, path)
    text = path.read_text()
    assert text == csv_text(g)
    rows = list(csv.DictReader(io.StringIO(text)))
    assert list(rows[0]) == ["x", "y", "z1", "z2", "z3", "nu", "valid"]
    assert len(rows) == 121
    assert (float(rows[1]["x"]), float(rows[1]["y"])) == (0.0, 0.2)
    for row, ok, p in zip(rows, g.valid.ravel(), g.points.reshape(-1, 3)):
        assert row["valid"] == ("1" if ok else "0")
        if ok:
            assert [float(row[k]) for k in ("z1", "z2", "z3")] == list(p)
        else:
            assert row["z1"] == row["nu"] == ""


def test_exports_are_deterministic():
    a, b = grid(S, (0, 1, 0, 0.5), 21), grid(S, (0, 1, 0, 0.5), 21)
    assert obj_text(a) == obj_text(b) and csv_text(a) == csv_text(b)
