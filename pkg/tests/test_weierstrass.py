import numpy as np
import pytest

from canonsurf.algebra import AlgebraKind, TwoComponentNumber, minkowski_inner
from canonsurf.errors import NonPositiveCurvature, SingularDenominator, SingularDivisor
from canonsurf.expr import Jet, eval_jet, parse
from canonsurf.surface import GridSpec, integrate_representation
from canonsurf.verify import d_x, d_y
from canonsurf.weierstrass import (
    SurfaceCase,
    canonical_mu,
    gauss_map,
    normal_curvature,
    phi,
    pointwise_validity,
)

T, S = SurfaceCase.TIMELIKE_MINIMAL, SurfaceCase.SPACELIKE_MAXIMAL


def N(re, im, case):
    return TwoComponentNumber(float(re), float(im), case.algebra)


def J(w, wp, case):
    return Jet(N(*w, case), N(*wp, case))


def test_case_algebra_pairing():
    assert T.algebra is AlgebraKind.CIRCULAR
    assert S.algebra is AlgebraKind.HYPERBOLIC
    assert SurfaceCase.parse("time-like") is T
    assert SurfaceCase.parse("SPACELIKE_MAXIMAL") is S
    with pytest.raises(ValueError):
        SurfaceCase.parse("null")


def test_wrong_algebra_rejected():
    with pytest.raises(TypeError):
        phi(T, J((0, 0), (1, 0), S))


@pytest.mark.parametrize("case, w, expected", [
    (T, (0, 0), [(0.5, 0), (0, 0.5), (0, 0)]),
    (T, (1, 0), [(1, 0), (0, 0), (-1, 0)]),
    (S, (0, 0), [(0, 0), (-0.5, 0), (0, 0.5)]),
])
def test_phi_examples(case, w, expected):
    p = phi(case, J(w, (1, 0), case))
    for got, (re, im) in zip((p.phi1, p.phi2, p.phi3), expected):
        assert got == N(re, im, case)


def test_phi_requires_invertible_derivative():
    with pytest.raises(SingularDivisor):
        phi(T, J((1, 0), (0, 0), T))
    with pytest.raises(SingularDivisor):
        phi(S, J((1, 0), (1, -1), S))


def test_gauss_map_examples():
    l = gauss_map(T, N(2, 0, T))
    np.testing.assert_allclose(l, [4 / 3, 0, -5 / 3], atol=1e-15)
    assert abs(minkowski_inner(l, l) + 1) < 1e-15
    l = gauss_map(S, N(2, 0, S))
    np.testing.assert_allclose(l, [3 / 5, 4 / 5, 0], atol=1e-15)
    assert abs(minkowski_inner(l, l) - 1) < 1e-15
    with pytest.raises(SingularDenominator):
        gauss_map(T, N(1, 0, T))
    with pytest.raises(SingularDenominator):
        gauss_map(S, N(0, 1, S))


def test_normal_curvature_examples():
    nu = normal_curvature(T, eval_jet(parse("z"), N(2, 0, T)))
    assert abs(nu - 4 / 9) < 1e-15
    assert normal_curvature(S, eval_jet(parse("z"), N(0, 0, S))) == 4.0
    with pytest.raises(SingularDenominator):
        normal_curvature(T, eval_jet(parse("z"), N(1, 0, T)))


def test_spacelike_curvature_needs_positive_modulus():
    # w = eps*z has w' = eps, so u_x^2 - u_y^2 = -1
    with pytest.raises(NonPositiveCurvature):
        normal_curvature(S, eval_jet(parse("1eps*z"), N(0.2, 0.1, S)))
    with pytest.raises(NonPositiveCurvature):
        normal_curvature(T, eval_jet(parse("z^2"), N(0, 0, T)))


def random_jets(case, n, rng, guard=1e-3, modulus_floor=1e-6):
    """``n`` random valid (w, w') pairs drawn uniformly from [-3, 3]^4."""
    w = rng.uniform(-3, 3, size=(4 * n, 2))
    wp = rng.uniform(-3, 3, size=(4 * n, 2))
    jet = Jet(TwoComponentNumber(w[:, 0], w[:, 1], case.algebra),
              TwoComponentNumber(wp[:, 0], wp[:, 1], case.algebra))
    keep = np.flatnonzero(pointwise_validity(case, jet, guard, modulus_floor))[:n]
    assert keep.size == n
    return Jet(TwoComponentNumber(w[keep, 0], w[keep, 1], case.algebra),
               TwoComponentNumber(wp[keep, 0], wp[keep, 1], case.algebra))


def algebra_norm(z):
    return np.hypot(z.re, z.im)


@pytest.mark.parametrize("case", [T, S])
def test_null_identity(case):
    jets = random_jets(case, 1000, np.random.default_rng(1))
    p = phi(case, jets)
    defect = p.null_defect()
    size = np.maximum.reduce([algebra_norm(c) for c in (p.phi1, p.phi2, p.phi3)]) ** 2
    bound = 1e-12 * np.maximum(1.0, size)
    assert (np.abs(defect.re) <= bound).all() and (np.abs(defect.im) <= bound).all()


@pytest.mark.parametrize("case", [T, S])
def test_gauss_map_normalization(case):
    # |D| >= 0.1 keeps |l|^2 small enough for an absolute bound
    jets = random_jets(case, 1000, np.random.default_rng(2), guard=0.1)
    l = gauss_map(case, jets.value)
    assert np.abs(minkowski_inner(l, l) - case.normal_square).max() <= 1e-12


@pytest.mark.parametrize("case", [T, S])
def test_gauss_map_normalization_near_singular_set(case):
    # |l|^2 grows like 1/D^2, and so does the rounding in <l, l>
    jets = random_jets(case, 1000, np.random.default_rng(2), guard=1e-3)
    l = gauss_map(case, jets.value)
    scale = np.maximum(1.0, (l * l).sum(axis=-1))
    assert (np.abs(minkowski_inner(l, l) - case.normal_square) <= 1e-14 * scale).all()


@pytest.mark.parametrize("case", [T, S])
def test_nu_equals_four_mu(case):
    jets = random_jets(case, 1000, np.random.default_rng(3))
    nu = normal_curvature(case, jets)
    mu = canonical_mu(case, jets)
    assert (nu > 0).all()
    assert np.abs(nu - 4 * mu).max() <= 1e-12 * max(1.0, nu.max())


@pytest.mark.parametrize("case, expr, dom", [
    (T, "z", (1.5, 2.0, 0.3, 0.8)),
    (T, "z + z^3/3", (0.1, 0.4, 0.1, 0.4)),
    (S, "z", (0.3, 0.8, 0.1, 0.4)),
    (S, "exp(z)", (0.0, 0.5, 0.0, 0.5)),
])
def test_tangents_match_differences_of_surface(case, expr, dom):
    ast = parse(expr)
    errs = []
    for n in (41, 81):
        spec = GridSpec(*dom, n, n, base_point=(dom[0], dom[2]))
        grid = integrate_representation(ast, case, spec)
        X, Y = spec.mesh()
        jet = eval_jet(ast, TwoComponentNumber(X, Y, case.algebra))
        z_x, z_y = phi(case, jet).tangents(case)
        ex = np.nanmax(np.abs(d_x(grid.points, spec.hx) - z_x))
        ey = np.nanmax(np.abs(d_y(grid.points, spec.hy) - z_y))
        errs.append(max(ex, ey))
    assert errs[1] < 1e-3
    assert errs[0] / errs[1] > 3.5  # second order


def test_validity_guard_is_monotone():
    jets = random_jets(T, 400, np.random.default_rng(4), guard=0.0)
    masks = [pointwise_validity(T, jets, guard=g) for g in (0.0, 1e-3, 1e-1, 1.0)]
    for loose, tight in zip(masks, masks[1:]):
        assert not (tight & ~loose).any()
