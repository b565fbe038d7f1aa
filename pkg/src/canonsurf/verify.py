"""Numerical verification of the canonical-parameter identities on a surface grid.

All derivatives are second-order central differences.  Stencils never go
one-sided: the boundary ring is skipped, and since masked nodes carry NaN a
result is finite exactly where its whole stencil is valid.  Each check
reports max/mean residual over the nodes where it is finite.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from canonsurf import __version__
from canonsurf.algebra import minkowski_cross, minkowski_inner
from canonsurf.errors import InsufficientStencil, NonPositiveNu
from canonsurf.surface import SurfaceGrid
from canonsurf.weierstrass import SurfaceCase

TOLERANCE_CONSTANT = 50.0
REGULARITY_THRESHOLD = 1e-8


# --- finite differences ------------------------------------------------------------


def d_x(f, hx):
    out = np.full(np.shape(f), np.nan)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * hx)
    return out


def d_y(f, hy):
    out = np.full(np.shape(f), np.nan)
    out[:, 1:-1] = (f[:, 2:] - f[:, :-2]) / (2.0 * hy)
    return out


def d_xx(f, hx):
    out = np.full(np.shape(f), np.nan)
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / (hx * hx)
    return out


def d_yy(f, hy):
    out = np.full(np.shape(f), np.nan)
    out[:, 1:-1] = (f[:, 2:] - 2.0 * f[:, 1:-1] + f[:, :-2]) / (hy * hy)
    return out


def d_xy(f, hx, hy):
    out = np.full(np.shape(f), np.nan)
    out[1:-1, 1:-1] = (f[2:, 2:] - f[2:, :-2] - f[:-2, 2:] + f[:-2, :-2]) / (4.0 * hx * hy)
    return out


def _on_stencil(values, *refs):
    """``values`` where every reference field is finite, NaN elsewhere."""
    ok = np.ones(np.shape(values), dtype=bool)
    for r in refs:
        ok &= np.isfinite(r)
    return np.where(ok, values, np.nan)


def _steps(h):
    if np.ndim(h) == 0:
        return float(h), float(h)
    hx, hy = h
    return float(hx), float(hy)


# --- report types ------------------------------------------------------------------


@dataclass
class CheckResult:
    check_id: str
    max_residual: float
    mean_residual: float
    tolerance: float
    nodes_checked: int
    gating: bool = True
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance

    def to_dict(self) -> dict:
        d = {
            "check_id": self.check_id,
            "max_residual": self.max_residual,
            "mean_residual": self.mean_residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "nodes_checked": self.nodes_checked,
            "gating": self.gating,
        }
        if self.details:
            d["details"] = self.details
        return d


def residual_entry(check_id, residual, tolerance, gating=True, **details) -> CheckResult:
    """Summarize a residual field (NaN = not checked) into a :class:`CheckResult`."""
    r = np.abs(np.asarray(residual, dtype=float))
    finite = np.isfinite(r)
    n = int(finite.sum())
    if n == 0:
        raise InsufficientStencil(f"check {check_id!r}: no node has a complete stencil")
    vals = r[finite]
    return CheckResult(check_id, float(vals.max()), float(vals.mean()), float(tolerance), n,
                       gating, details)


@dataclass
class VerificationReport:
    entries: list[CheckResult]
    metadata: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries if e.gating)

    def __getitem__(self, check_id) -> CheckResult:
        for e in self.entries:
            if e.check_id == check_id:
                return e
        raise KeyError(check_id)

    def to_json(self) -> str:
        doc = dict(self.metadata)
        doc["pass"] = self.passed
        doc["checks"] = [e.to_dict() for e in self.entries]
        return json.dumps(_round17(doc), indent=2, allow_nan=False) + "\n"


def _round17(obj):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return float(format(obj, ".17g"))
    if isinstance(obj, dict):
        return {k: _round17(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round17(v) for v in obj]
    return obj


def default_tolerance(h: float, constant: float = TOLERANCE_CONSTANT) -> float:
    return constant * h * h


# --- fundamental forms ---------------------------------------------------------------


@dataclass
class FundamentalForms:
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    e: np.ndarray
    f: np.ndarray
    g: np.ndarray
    nu1: np.ndarray
    nu2: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    H: np.ndarray
    K: np.ndarray
    z_x: np.ndarray
    z_y: np.ndarray
    skipped_nodes: int = 0

    @property
    def mask(self) -> np.ndarray:
        return np.isfinite(self.E) & np.isfinite(self.e) & np.isfinite(self.f)


def fundamental_forms(grid: SurfaceGrid) -> FundamentalForms:
    """First and second fundamental forms, principal and principal geodesic curvatures.

    ``e = <z_xx, l>`` etc. with ``l`` the stored normal.  The geodesic
    curvatures use the principal-net formulas with differenced ``E``, ``G``:
    time-like ``g1 = -E_y/(2E sqrt G)``, ``g2 = G_x/(2G sqrt E)``; space-like
    ``g1 = E_y/(2E sqrt(-G))``, ``g2 = -G_x/(2 sqrt(E) G)``.
    """
    hx, hy = grid.spec.hx, grid.spec.hy
    z, l = grid.points, grid.gauss
    z_x, z_y = d_x(z, hx), d_y(z, hy)
    E = minkowski_inner(z_x, z_x)
    F = minkowski_inner(z_x, z_y)
    G = minkowski_inner(z_y, z_y)
    e = minkowski_inner(d_xx(z, hx), l)
    f = minkowski_inner(d_xy(z, hx, hy), l)
    g = minkowski_inner(d_yy(z, hy), l)
    with np.errstate(invalid="ignore", divide="ignore"):
        nu1, nu2 = e / E, g / G
        E_y, G_x = d_y(E, hy), d_x(G, hx)
        if grid.case is SurfaceCase.TIMELIKE_MINIMAL:
            gamma1 = -E_y / (2.0 * E * np.sqrt(G))
            gamma2 = G_x / (2.0 * G * np.sqrt(E))
        else:
            gamma1 = E_y / (2.0 * E * np.sqrt(-G))
            gamma2 = -G_x / (2.0 * np.sqrt(E) * G)
    forms = FundamentalForms(E, F, G, e, f, g, nu1, nu2, gamma1, gamma2,
                             0.5 * (nu1 + nu2), nu1 * nu2, z_x, z_y)
    forms.skipped_nodes = int((grid.valid & ~forms.mask).sum())
    return forms


def _sqrt_nu_gradient(nu, hx, hy):
    with np.errstate(invalid="ignore"):
        s = np.sqrt(nu)
    return d_x(s, hx), d_y(s, hy)


def canonical_checks(grid: SurfaceGrid, forms: FundamentalForms, tolerance) -> list[CheckResult]:
    """Residuals of the canonical-parameter identities.

    Time-like: ``E = G = 1/nu``, ``e = -g = 1``, ``g1 = (sqrt nu)_y``,
    ``g2 = -(sqrt nu)_x``.  Space-like: ``E = -G = 1/nu``, ``e = g = 1``,
    ``g1 = -(sqrt nu)_y``, ``g2 = (sqrt nu)_x``.  Both: ``F = f = 0``, ``H = 0``,
    ``nu1 = nu``, ``nu2 = -nu``.

    For time-like surfaces the alternative assignment ``g1 = (sqrt nu)_x``,
    ``g2 = -(sqrt nu)_y`` is also reported, as a non-gating entry.
    """
    tol = _tol_lookup(tolerance)
    nu = grid.nu
    hx, hy = grid.spec.hx, grid.spec.hy
    sx, sy = _sqrt_nu_gradient(nu, hx, hy)
    timelike = grid.case is SurfaceCase.TIMELIKE_MINIMAL
    sign = 1.0 if timelike else -1.0  # G = sign/nu, g = -sign
    inv_nu = 1.0 / nu
    out = [
        residual_entry("first_form_E", forms.E - inv_nu, tol("first_form_E")),
        residual_entry("first_form_G", forms.G - sign * inv_nu, tol("first_form_G")),
        residual_entry("first_form_F", forms.F, tol("first_form_F")),
        residual_entry("second_form_e", forms.e - 1.0, tol("second_form_e")),
        residual_entry("second_form_f", forms.f, tol("second_form_f")),
        residual_entry("second_form_g", forms.g + sign, tol("second_form_g")),
        residual_entry("mean_curvature", forms.H, tol("mean_curvature")),
        residual_entry("principal_curvatures",
                       np.maximum(np.abs(forms.nu1 - nu), np.abs(forms.nu2 + nu)),
                       tol("principal_curvatures")),
        residual_entry("principal_order",
                       _on_stencil(np.where(forms.nu1 - forms.nu2 > 0, 0.0, 1.0),
                                   forms.nu1, forms.nu2),
                       tol("principal_order")),
        residual_entry("gamma1", forms.gamma1 - sign * sy, tol("gamma1")),
        residual_entry("gamma2", forms.gamma2 + sign * sx, tol("gamma2")),
    ]
    if timelike:
        alt = np.maximum(np.abs(forms.gamma1 - sx), np.abs(forms.gamma2 + sy))
        entry = residual_entry("gamma_alternative_convention", alt, tol("gamma1"), gating=False,
                               note="g1 = (sqrt nu)_x, g2 = -(sqrt nu)_y; expected to fail")
        out.append(entry)
    out.extend(frame_checks(grid, forms, tol))
    return out


def frame_checks(grid: SurfaceGrid, forms: FundamentalForms, tol) -> list[CheckResult]:
    """Tangency of the stored normal and agreement with the normalized cross product."""
    l = grid.gauss
    tangency = np.maximum(np.abs(minkowski_inner(l, forms.z_x)),
                          np.abs(minkowski_inner(l, forms.z_y)))
    c = minkowski_cross(forms.z_x, forms.z_y)
    with np.errstate(invalid="ignore", divide="ignore"):
        c = c / np.sqrt(np.abs(minkowski_inner(c, c)))[..., None]
    finite = np.isfinite(c).all(axis=-1) & np.isfinite(l).all(axis=-1)
    # the orientation of the cross product is fixed once per connected component
    labels, count = ndimage.label(finite)
    agree = ndimage.sum((c * l).sum(axis=-1), labels, np.arange(1, count + 1))
    orient = np.ones(np.shape(finite))
    for k, a in enumerate(np.atleast_1d(agree), start=1):
        if a < 0:
            orient[labels == k] = -1.0
    mismatch = np.abs(orient[..., None] * c - l).max(axis=-1)
    orientations = sorted({1 if a >= 0 else -1 for a in np.atleast_1d(agree)})
    return [
        residual_entry("normal_tangency", tangency, tol("normal_tangency")),
        residual_entry("normal_consistency", mismatch, tol("normal_consistency"),
                       components=int(count), orientations=orientations),
    ]


def _component_max(v):
    return np.abs(v).max(axis=-1)  # NaN-propagating


def gauss_map_checks(grid: SurfaceGrid, tolerance) -> list[CheckResult]:
    """Conformality of the normal map, its second-order system and its vector PDE.

    Time-like: ``<l_x,l_x> = <l_y,l_y> = nu``, ``<l_x,l_y> = 0``,
    ``l_xx + l_yy - 2 nu l = 0``.  Space-like: ``<l_x,l_x> = -<l_y,l_y> = nu``,
    ``<l_x,l_y> = 0``, ``l_xx - l_yy + 2 nu l = 0``.
    """
    tol = _tol_lookup(tolerance)
    hx, hy = grid.spec.hx, grid.spec.hy
    l, nu = grid.gauss, grid.nu
    l_x, l_y = d_x(l, hx), d_y(l, hy)
    l_xx, l_xy, l_yy = d_xx(l, hx), d_xy(l, hx, hy), d_yy(l, hy)
    nu_x, nu_y = d_x(nu, hx), d_y(nu, hy)
    a = (nu_x / (2.0 * nu))[..., None]
    b = (nu_y / (2.0 * nu))[..., None]
    n3 = nu[..., None]
    timelike = grid.case is SurfaceCase.TIMELIKE_MINIMAL
    sign = 1.0 if timelike else -1.0
    if timelike:
        sys_xx = l_xx - (a * l_x - b * l_y + n3 * l)
        sys_yy = l_yy - (-a * l_x + b * l_y + n3 * l)
        pde = l_xx + l_yy - 2.0 * n3 * l
    else:
        sys_xx = l_xx - (a * l_x + b * l_y - n3 * l)
        sys_yy = l_yy - (a * l_x + b * l_y + n3 * l)
        pde = l_xx - l_yy + 2.0 * n3 * l
    sys_xy = l_xy - (b * l_x + a * l_y)
    return [
        residual_entry("gauss_sphere", minkowski_inner(l, l) - grid.case.normal_square,
                       tol("gauss_sphere")),
        residual_entry("gauss_lx_norm", minkowski_inner(l_x, l_x) - nu, tol("gauss_lx_norm")),
        residual_entry("gauss_ly_norm", minkowski_inner(l_y, l_y) - sign * nu, tol("gauss_ly_norm")),
        residual_entry("gauss_orthogonality", minkowski_inner(l_x, l_y), tol("gauss_orthogonality")),
        residual_entry("gauss_system_xx", _component_max(sys_xx), tol("gauss_system_xx")),
        residual_entry("gauss_system_xy", _component_max(sys_xy), tol("gauss_system_xy")),
        residual_entry("gauss_system_yy", _component_max(sys_yy), tol("gauss_system_yy")),
        residual_entry("gauss_pde", _component_max(pde), tol("gauss_pde")),
    ]


def natural_pde_residual(case: SurfaceCase, nu_field, h, tolerance=None) -> CheckResult:
    """Residual of the natural PDE for a sampled normal curvature field.

    Time-like: ``(ln nu)_xx + (ln nu)_yy - 2 nu``; space-like:
    ``(ln nu)_xx - (ln nu)_yy + 2 nu``.  NaN entries of ``nu_field`` are
    skipped; non-positive finite entries raise :class:`NonPositiveNu`.
    """
    nu = np.asarray(nu_field, dtype=float)
    hx, hy = _steps(h)
    if nu.ndim != 2:
        raise ValueError("nu_field must be a 2-D array")
    finite = np.isfinite(nu)
    if (nu[finite] <= 0).any():
        raise NonPositiveNu("normal curvature field has non-positive entries")
    log_nu = np.log(np.where(finite, nu, np.nan))
    if case is SurfaceCase.TIMELIKE_MINIMAL:
        res = d_xx(log_nu, hx) + d_yy(log_nu, hy) - 2.0 * nu
    else:
        res = d_xx(log_nu, hx) - d_yy(log_nu, hy) + 2.0 * nu
    if tolerance is None:
        tolerance = default_tolerance(max(hx, hy))
    return residual_entry("natural_pde", res, tolerance)


def _regions(mask: np.ndarray, xs, ys, limit=20) -> list[dict]:
    labels, count = ndimage.label(mask)
    found = []
    for k, sl in enumerate(ndimage.find_objects(labels)[:limit], start=1):
        si, sj = sl
        found.append({
            "x_min": float(xs[si.start]), "x_max": float(xs[si.stop - 1]),
            "y_min": float(ys[sj.start]), "y_max": float(ys[sj.stop - 1]),
            "nodes": int((labels[sl] == k).sum()),
        })
    return found


def strong_regularity_check(grid: SurfaceGrid, forms: FundamentalForms,
                            threshold: float = REGULARITY_THRESHOLD) -> list[CheckResult]:
    """Fraction of nodes violating ``nu_x nu_y != 0`` and ``g1 g2 != 0``.

    ``max_residual`` is the violating fraction (tolerance 0); violating
    connected subregions are listed in ``details``.
    """
    hx, hy = grid.spec.hx, grid.spec.hy
    xs, ys = grid.spec.xs, grid.spec.ys
    out = []
    for check_id, product in (
        ("strong_regularity_nu", d_x(grid.nu, hx) * d_y(grid.nu, hy)),
        ("strong_regularity_gamma", forms.gamma1 * forms.gamma2),
    ):
        finite = np.isfinite(product)
        n = int(finite.sum())
        if n == 0:
            raise InsufficientStencil(f"check {check_id!r}: no node has a complete stencil")
        bad = finite & (np.abs(np.where(finite, product, 0.0)) <= threshold)
        frac = float(bad.sum()) / n
        out.append(CheckResult(check_id, frac, frac, 0.0, n, True,
                               {"threshold": threshold, "violations": int(bad.sum()),
                                "regions": _regions(bad, xs, ys)}))
    return out


def canonical_bonnet_data(case: SurfaceCase, nu, h):
    """``(nu1, nu2, g1, g2)`` of a canonically parametrized surface with normal curvature ``nu``."""
    hx, hy = _steps(h)
    sx, sy = _sqrt_nu_gradient(np.asarray(nu, dtype=float), hx, hy)
    if case is SurfaceCase.TIMELIKE_MINIMAL:
        return nu, -nu, sy, -sx
    return nu, -nu, -sy, sx


def bonnet_conditions_check(case: SurfaceCase, nu1, nu2, gamma1, gamma2, h,
                            tolerance=None, denominator_floor: float = 1e-10) -> list[CheckResult]:
    """Evaluate the Bonnet compatibility hypotheses for prescribed invariants.

    ``bonnet_condition_1`` reports the fraction of nodes where the sign
    conditions fail.  ``bonnet_2_1a``, ``bonnet_2_1b`` are the two
    logarithmic-derivative identities and ``bonnet_2_2`` the Gauss-equation
    combination.  Nodes where ``(nu1)_y`` or ``(nu2)_x`` is below
    ``denominator_floor`` in magnitude, or a logarithm argument is not
    positive, are skipped and counted.
    """
    hx, hy = _steps(h)
    tol = _tol_lookup(tolerance if tolerance is not None else default_tolerance(max(hx, hy)))
    nu1, nu2, g1, g2 = (np.asarray(a, dtype=float) for a in (nu1, nu2, gamma1, gamma2))
    n1_x, n1_y = d_x(nu1, hx), d_y(nu1, hy)
    n2_x, n2_y = d_x(nu2, hx), d_y(nu2, hy)
    diff = nu1 - nu2
    timelike = case is SurfaceCase.TIMELIKE_MINIMAL
    degenerate = (np.abs(n1_y) < denominator_floor) | (np.abs(n2_x) < denominator_floor)
    n1_y = np.where(degenerate, np.nan, n1_y)
    n2_x = np.where(degenerate, np.nan, n2_x)
    sgn = 1.0 if timelike else -1.0

    with np.errstate(invalid="ignore", divide="ignore"):
        cond1 = (diff > 0) & (sgn * g1 * n1_y > 0) & (sgn * g2 * n2_x > 0)
        cond1_val = _on_stencil(np.where(cond1, 0.0, 1.0), g1, g2, n1_y, n2_x, diff)
        arg_a = sgn * n1_y / g1
        arg_b = sgn * n2_x / g2
        bad_log = (arg_a <= 0) | (arg_b <= 0)
        log_a = np.log(np.where(arg_a > 0, arg_a, np.nan))
        log_b = np.log(np.where(arg_b > 0, arg_b, np.nan))
        c21a = d_x(log_a, hx) - n1_x / diff
        c21b = d_y(log_b, hy) + n2_y / diff
        g1_sq_y = d_y(g1 * g1, hy)
        g2_sq_x = d_x(g2 * g2, hx)
        if timelike:
            c22 = (0.5 * diff * (g2_sq_x / n2_x - g1_sq_y / n1_y)
                   + g1 * g1 + g2 * g2 - nu1 * nu2)
        else:
            c22 = (0.5 * diff * (g1_sq_y / n1_y + g2_sq_x / n2_x)
                   - g1 * g1 + g2 * g2 + nu1 * nu2)
    skipped = int((degenerate | bad_log).sum())
    return [
        residual_entry("bonnet_condition_1", cond1_val, 0.0, skipped=skipped),
        residual_entry("bonnet_2_1a", c21a, tol("bonnet_2_1a"), skipped=skipped),
        residual_entry("bonnet_2_1b", c21b, tol("bonnet_2_1b"), skipped=skipped),
        residual_entry("bonnet_2_2", c22, tol("bonnet_2_2"), skipped=skipped),
    ]


# --- driver ------------------------------------------------------------------------

CHECK_IDS = (
    "first_form_E", "first_form_G", "first_form_F", "second_form_e", "second_form_f",
    "second_form_g", "mean_curvature", "principal_curvatures", "principal_order",
    "gamma1", "gamma2", "normal_tangency", "normal_consistency",
    "gauss_sphere", "gauss_lx_norm", "gauss_ly_norm", "gauss_orthogonality",
    "gauss_system_xx", "gauss_system_xy", "gauss_system_yy", "gauss_pde",
    "natural_pde", "strong_regularity_nu", "strong_regularity_gamma",
    "bonnet_condition_1", "bonnet_2_1a", "bonnet_2_1b", "bonnet_2_2",
)

# Checks built from second differences of l, or from differences of
# differenced fields, carry larger error constants than the first-derivative
# identities; their default tolerance is scaled up accordingly.
TOLERANCE_FACTORS = {
    "gauss_system_xx": 4.0, "gauss_system_xy": 4.0, "gauss_system_yy": 4.0, "gauss_pde": 4.0,
    "bonnet_2_1a": 4.0, "bonnet_2_1b": 4.0, "bonnet_2_2": 20.0,
}

# sign and ordering checks are all-or-nothing
_ZERO_TOLERANCE = {"principal_order", "strong_regularity_nu", "strong_regularity_gamma",
                   "bonnet_condition_1"}


def _tol_lookup(tolerance):
    if callable(tolerance):
        return tolerance
    if isinstance(tolerance, dict):
        return tolerance.__getitem__
    return lambda check_id: 0.0 if check_id in _ZERO_TOLERANCE else float(tolerance)


def resolve_tolerances(h: float, overrides: dict | None = None,
                       constant: float = TOLERANCE_CONSTANT) -> dict:
    """Per-check tolerances, ``constant * h**2`` times the check's factor unless overridden.

    Sign and ordering checks always default to 0.
    """
    base = default_tolerance(h, constant)
    tols = {cid: (0.0 if cid in _ZERO_TOLERANCE else base * TOLERANCE_FACTORS.get(cid, 1.0))
            for cid in CHECK_IDS}
    for cid, value in (overrides or {}).items():
        if cid not in tols:
            raise KeyError(f"unknown check id {cid!r}")
        tols[cid] = float(value)
    return tols


def verify_surface(grid: SurfaceGrid, overrides: dict | None = None,
                   constant: float = TOLERANCE_CONSTANT) -> VerificationReport:
    """Run every check on ``grid`` and collect a :class:`VerificationReport`."""
    spec = grid.spec
    h = max(spec.hx, spec.hy)
    tols = resolve_tolerances(h, overrides, constant)
    forms = fundamental_forms(grid)
    entries = canonical_checks(grid, forms, tols)
    entries += gauss_map_checks(grid, tols)
    entries.append(natural_pde_residual(grid.case, grid.nu, (spec.hx, spec.hy), tols["natural_pde"]))
    strong = strong_regularity_check(grid, forms)
    bonnet = bonnet_conditions_check(grid.case, *canonical_bonnet_data(grid.case, grid.nu,
                                                                       (spec.hx, spec.hy)),
                                     (spec.hx, spec.hy), tols)
    for e in strong + bonnet:
        e.tolerance = tols[e.check_id]
    entries += strong + bonnet
    metadata = {
        "tool_version": __version__,
        "expr": grid.expr_text,
        "case": grid.case.value,
        "domain": {"x0": spec.x0, "x1": spec.x1, "y0": spec.y0, "y1": spec.y1,
                   "nx": spec.nx, "ny": spec.ny},
        "h": h,
        "tolerance_constant": constant,
        "tolerances": tols,
        "valid_nodes": grid.valid_count,
        "skipped_nodes": forms.skipped_nodes,
    }
    return VerificationReport(entries, metadata)
