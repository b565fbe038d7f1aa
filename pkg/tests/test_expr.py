import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from canonsurf.algebra import AlgebraKind, TwoComponentNumber
from canonsurf.errors import ExpressionError, SingularDivisor
from canonsurf.expr import (
    MAX_DEPTH,
    Add,
    Call,
    Conj,
    Const,
    Div,
    Mul,
    Neg,
    PowInt,
    Sub,
    Var,
    cauchy_riemann_residual,
    eval_jet,
    eval_jet_masked,
    evaluate,
    format_tree,
    parse,
    to_source,
)

C, L = AlgebraKind.CIRCULAR, AlgebraKind.HYPERBOLIC

CORPUS = [
    "z", "z^2", "z + z^3/3", "exp(z)", "(z^2 + 1)/2", "sin(z)*cos(z)", "cosh(2*z) - sinh(z)",
    "1/(z + 3)", "2.5eps*z", "(1 + 0.5eps)*z^3 - z", "exp(sin(z))/(2 + z^2)", "-z^2", "z*z*z",
]


# --- parsing -------------------------------------------------------------------------


def test_variable():
    assert parse("z") == Var()


def test_structure_of_rational_expression():
    assert parse("(z^2 + 1)/2") == Div(Add(PowInt(Var(), 2), Const(1.0)), Const(2.0))


def test_precedence():
    assert parse("1 + 2*z") == Add(Const(1.0), Mul(Const(2.0), Var()))
    assert parse("z - 1 - 2") == Sub(Sub(Var(), Const(1.0)), Const(2.0))
    assert parse("-z^2") == PowInt(Neg(Var()), 2)
    assert parse("exp(z)") == Call("exp", Var())


def test_eps_literal():
    assert parse("3eps") == Const(0.0, 3.0)
    assert parse("1.5 eps * z") == Mul(Const(0.0, 1.5), Var())


@pytest.mark.parametrize("text, offset", [
    ("z + @", 4),
    ("z +", 3),
    ("(z", 2),
    ("z)", 1),
    ("", 0),
    ("z ^ 2.5", 4),
])
def test_syntax_errors_carry_offsets(text, offset):
    with pytest.raises(ExpressionError) as info:
        parse(text)
    assert info.value.kind == "syntax"
    assert info.value.offset == offset


def test_non_ascii_and_invalid_utf8():
    with pytest.raises(ExpressionError) as info:
        parse("z + é")
    assert info.value.offset == 4
    with pytest.raises(ExpressionError) as info:
        parse(b"z + \xff")
    assert info.value.kind == "syntax" and info.value.offset == 4


def test_unknown_identifier():
    with pytest.raises(ExpressionError) as info:
        parse("log(z)")
    assert info.value.kind == "unknown-identifier"
    assert info.value.offset == 0
    with pytest.raises(ExpressionError) as info:
        parse("zz")
    assert info.value.kind == "unknown-identifier"


def test_bare_eps_is_rejected():
    with pytest.raises(ExpressionError) as info:
        parse("z + eps")
    assert info.value.kind == "syntax" and info.value.offset == 4


@pytest.mark.parametrize("text", ["1.2.3", "1e", "2E+", "1e400", "z^99999999"])
def test_malformed_literals(text):
    with pytest.raises(ExpressionError) as info:
        parse(text)
    assert info.value.kind == "malformed-literal"


def test_nesting_limit():
    deep = "(" * (MAX_DEPTH + 1) + "z" + ")" * (MAX_DEPTH + 1)
    with pytest.raises(ExpressionError):
        parse(deep)
    ok = "(" * 10 + "z" + ")" * 10
    assert parse(ok) == Var()


@pytest.mark.parametrize("text", CORPUS)
def test_round_trip(text):
    tree = parse(text)
    assert parse(to_source(tree)) == tree


def test_format_tree_mentions_every_node():
    out = format_tree(parse("exp(z)/(2 + z^2)"))
    for word in ("Div", "Call(exp)", "Add", "Const(2.0, 0.0)", "PowInt(n=2)", "Var(z)"):
        assert word in out


def test_node_validation():
    with pytest.raises(ValueError):
        PowInt(Var(), -1)
    with pytest.raises(ValueError):
        Call("log", Var())


@settings(max_examples=500, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.binary(max_size=1024))
def test_parser_is_total_on_bytes(data):
    try:
        tree = parse(data)
    except ExpressionError as exc:
        assert exc.kind in ("syntax", "unknown-identifier", "malformed-literal")
        assert 0 <= exc.offset <= len(data)
    else:
        assert parse(to_source(tree)) == tree


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet="z0123456789.+-*/^() eps", max_size=200))
def test_parser_is_total_on_grammar_like_text(text):
    try:
        parse(text)
    except ExpressionError:
        pass


# --- jets -----------------------------------------------------------------------------


def N(re, im, kind):
    return TwoComponentNumber(float(re), float(im), kind)


def test_jet_of_square():
    j = eval_jet(parse("z^2"), N(1, 1, L))
    assert j.value == N(2, 2, L)
    assert j.deriv == N(2, 2, L)


def test_identity_jet():
    for kind in (C, L):
        j = eval_jet(parse("z"), N(0.3, -0.7, kind))
        assert j.value == N(0.3, -0.7, kind)
        assert j.deriv == N(1, 0, kind)


def test_exp_jet_at_zero():
    j = eval_jet(parse("exp(z)"), N(0, 0, C))
    assert j.value == N(1, 0, C) and j.deriv == N(1, 0, C)


def test_circular_jets_match_cmath():
    funcs = {"z^3 - 2*z": (lambda z: z ** 3 - 2 * z, lambda z: 3 * z ** 2 - 2),
             "exp(z)/(2 + z^2)": (lambda z: np.exp(z) / (2 + z * z),
                                  lambda z: np.exp(z) * (2 + z * z - 2 * z) / (2 + z * z) ** 2),
             "sin(cos(z))": (lambda z: np.sin(np.cos(z)), lambda z: -np.cos(np.cos(z)) * np.sin(z))}
    rng = np.random.default_rng(5)
    for text, (f, df) in funcs.items():
        ast = parse(text)
        for x, y in rng.uniform(-1, 1, size=(20, 2)):
            j = eval_jet(ast, N(x, y, C))
            zc = complex(x, y)
            assert abs(complex(j.value.re, j.value.im) - f(zc)) < 1e-12
            assert abs(complex(j.deriv.re, j.deriv.im) - df(zc)) < 1e-12


def test_singular_division_raises():
    with pytest.raises(SingularDivisor):
        eval_jet(parse("1/(z - 1)"), N(1, 0, C))
    with pytest.raises(SingularDivisor):
        eval_jet(parse("1/z"), N(0.5, 0.5, L))  # zero divisor


def test_masked_evaluation_marks_singular_points():
    z = TwoComponentNumber(np.array([1.0, 2.0, 0.5]), np.array([0.0, 0.0, 0.5]), L)
    jet, ok = eval_jet_masked(parse("1/(z - 1) + 1/z"), z)
    np.testing.assert_array_equal(ok, [False, True, False])
    assert jet.value.re[1] == 1.5


def test_masked_evaluation_flags_overflow():
    z = TwoComponentNumber(np.array([1.0, 800.0]), np.array([0.0, 0.0]), C)
    _, ok = eval_jet_masked(parse("exp(z)"), z)
    np.testing.assert_array_equal(ok, [True, False])


@pytest.mark.parametrize("kind", [C, L])
@pytest.mark.parametrize("text", CORPUS)
def test_derivative_matches_difference_quotient(kind, text):
    ast = parse(text)
    rng = np.random.default_rng(17)
    worst = 0.0
    for x, y in rng.uniform(-0.4, 0.4, size=(10, 2)):
        z = N(x + 0.05, y, kind)
        jet = eval_jet(ast, z)
        for h in (1e-2, 5e-3):
            fd = (evaluate(ast, z + h) - evaluate(ast, z - h)) * (0.5 / h)
            err = max(abs(fd.re - jet.deriv.re), abs(fd.im - jet.deriv.im))
            worst = max(worst, err / h ** 2)
    assert worst < 200.0


# --- holomorphy -------------------------------------------------------------------------


def test_cauchy_riemann_hyperbolic_square():
    assert cauchy_riemann_residual(parse("z^2"), L, (0.3, 0.2), 1e-5) < 1e-9


def test_cauchy_riemann_linear():
    for kind in (C, L):
        for probe in ((0.0, 0.0), (0.3, 0.2), (3.0, -2.0), (0.7, -0.9)):
            assert cauchy_riemann_residual(parse("z"), kind, probe) < 1e-12


def test_non_holomorphic_pair_is_detected():
    # u = x, v = 0 built as (z + conj z)/2
    tree = Div(Add(Var(), Conj(Var())), Const(2.0))
    for kind in (C, L):
        r = cauchy_riemann_residual(tree, kind, (0.3, 0.2), 1e-5)
        assert abs(r - 1.0) < 1e-8


def test_conjugate_has_no_jet():
    with pytest.raises(ValueError):
        eval_jet(Conj(Var()), N(1, 0, C))


@pytest.mark.parametrize("kind", [C, L])
@pytest.mark.parametrize("text", CORPUS)
def test_corpus_is_holomorphic(kind, text):
    ast = parse(text)
    rng = np.random.default_rng(23)
    for x, y in rng.uniform(-0.9, 0.9, size=(100, 2)):
        try:
            r = cauchy_riemann_residual(ast, kind, (x, y), 1e-5)
        except SingularDivisor:
            continue
        scale = max(1.0, math.hypot(evaluate(ast, N(x, y, kind)).re,
                                    evaluate(ast, N(x, y, kind)).im))
        assert r < 1e-7 * scale


def test_step_must_be_positive():
    with pytest.raises(ValueError):
        cauchy_riemann_residual(parse("z"), C, (0, 0), 0.0)
