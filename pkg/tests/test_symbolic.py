import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypoel.symbolic import (
    Add, Const, Cos, ExprSyntaxError, FirstOrderOperator, Mul, NotSatisfied, Sin, Var,
    UnknownIdentifierError, VariableRangeError, DimensionMismatch, adjoint_zeroth,
    build_generations, check_hormander, diff_expr, equivalent, eta_for, evaluate_on,
    hormander_drift, is_zero, lie_bracket, parse_expr, simplify, to_string, torus_sample_grid,
)


def op(*coeffs):
    return FirstOrderOperator.from_strings(list(coeffs))


def same(a, b):
    return equivalent(a, parse_expr(b, 2) if isinstance(b, str) else b)


# ----------------------------------------------------------------- parser

def test_parse_examples():
    assert parse_expr("sin(x1)", 1) == Sin(Var(1))
    assert parse_expr("x1*x2 + 2", 2) == Add(Mul(Var(1), Var(2)), Const(2))


def test_parse_error_offset():
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr("sin(", 1)
    assert info.value.offset == 4


@pytest.mark.parametrize("text,exc", [
    ("foo(x1)", UnknownIdentifierError),
    ("y", UnknownIdentifierError),
    ("x3", VariableRangeError),
    ("x0", VariableRangeError),
    ("1 +", ExprSyntaxError),
    ("(x1", ExprSyntaxError),
    ("x1 ^ 0.5", ExprSyntaxError),
])
def test_parse_errors(text, exc):
    with pytest.raises(exc):
        parse_expr(text, 2)


def test_parse_precedence_and_power():
    e = parse_expr("-x1^2 + 3/4*t", 1)
    x = np.array([0.7])
    assert evaluate_on(e, [x], 2.0)[0] == pytest.approx(-0.49 + 1.5)
    assert evaluate_on(parse_expr("x1^-2", 1), [np.array([2.0])])[0] == pytest.approx(0.25)
    assert evaluate_on(parse_expr("2*pi", 1), [x])[0] == pytest.approx(2 * math.pi)


_atoms = st.sampled_from(["x1", "x2", "t", "2", "0.5", "sin(x1)", "cos(x2)", "exp(x1)", "pi"])


@st.composite
def expressions(draw, depth=3):
    if depth == 0 or draw(st.booleans()):
        return draw(_atoms)
    kind = draw(st.sampled_from(["+", "-", "*", "/", "^", "neg", "sin", "cos"]))
    a = draw(expressions(depth=depth - 1))
    if kind in "+-*":
        return f"({a}) {kind} ({draw(expressions(depth=depth - 1))})"
    if kind == "/":
        return f"({a}) / (2 + cos({draw(expressions(depth=depth - 1))}))"
    if kind == "^":
        return f"({a})^{draw(st.integers(0, 3))}"
    if kind == "neg":
        return f"-({a})"
    return f"{kind}({a})"


@settings(max_examples=150, deadline=None)
@given(expressions())
def test_print_parse_round_trip(text):
    e = parse_expr(text, 2)
    again = parse_expr(to_string(e), 2)
    assert again == e
    pts = [np.array([0.3, 1.9]), np.array([-0.4, 2.2])]
    assert np.allclose(evaluate_on(again, pts, 0.7), evaluate_on(e, pts, 0.7))


@settings(max_examples=100, deadline=None)
@given(expressions())
def test_simplify_preserves_value(text):
    e = parse_expr(text, 2)
    s = simplify(e)
    pts = [np.array([0.3, 1.9, 4.0]), np.array([-0.4, 2.2, 0.1])]
    assert np.allclose(evaluate_on(s, pts, 0.7), evaluate_on(e, pts, 0.7), rtol=1e-9, atol=1e-9)


# ------------------------------------------------------------ derivatives

def test_diff_examples():
    assert diff_expr(parse_expr("sin(x1)", 2), 1) == Cos(Var(1))
    assert is_zero(diff_expr(parse_expr("sin(x1)", 2), 2))
    assert diff_expr(parse_expr("x1*x1", 1), 1) == Mul(Const(2), Var(1))


def test_diff_axis_out_of_range():
    with pytest.raises(ValueError):
        diff_expr(parse_expr("x1", 1), 2, dimension=1)
    with pytest.raises(ValueError):
        diff_expr(parse_expr("x1", 1), 0)


@settings(max_examples=100, deadline=None)
@given(expressions(), st.sampled_from([1, 2]))
def test_diff_matches_central_difference(text, axis):
    e = parse_expr(text, 2)
    de = diff_expr(e, axis)
    x = [np.array([0.37]), np.array([1.21])]
    h = 1e-5
    xp = [c.copy() for c in x]
    xm = [c.copy() for c in x]
    xp[axis - 1] = xp[axis - 1] + h
    xm[axis - 1] = xm[axis - 1] - h
    fd = (evaluate_on(e, xp, 0.5) - evaluate_on(e, xm, 0.5)) / (2 * h)
    assert np.allclose(evaluate_on(de, x, 0.5), fd, rtol=1e-5, atol=1e-5)


def test_exact_rational_constants():
    e = simplify(parse_expr("1/3 + 1/6", 1))
    assert isinstance(e, Const) and e.value == Fraction(1, 2)


# ---------------------------------------------------------------- brackets

def test_bracket_examples():
    D1, D2 = op("1", "0"), op("0", "1")
    F = op("0", "sin(x1)")
    br = lie_bracket(D1, F)
    assert is_zero(br.coeffs[0]) and same(br.coeffs[1], "cos(x1)")
    assert lie_bracket(F, F).is_zero()
    assert lie_bracket(D1, D2).is_zero()


def test_bracket_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        lie_bracket(op("1", "0"), FirstOrderOperator.from_strings(["1"]))


_trig = st.sampled_from(["0", "1", "2", "sin(x1)", "cos(x1)", "sin(x2)", "cos(x2)",
                         "sin(2*x1)", "cos(x1)*sin(x2)", "3*sin(x1)*sin(x2)", "cos(x1 + x2)"])


@st.composite
def trig_fields(draw):
    def coeff():
        a, b = draw(_trig), draw(_trig)
        return f"{a} - {b}" if draw(st.booleans()) else f"{a} + {draw(st.integers(-2, 2))}*{b}"
    return op(coeff(), coeff())


@settings(max_examples=60, deadline=None)
@given(trig_fields(), trig_fields())
def test_antisymmetry(F, G):
    assert (lie_bracket(F, G) + lie_bracket(G, F)).is_zero()


@settings(max_examples=50, deadline=None)
@given(trig_fields(), trig_fields(), trig_fields())
def test_jacobi(F, G, H):
    total = (lie_bracket(F, lie_bracket(G, H)) + lie_bracket(G, lie_bracket(H, F))
             + lie_bracket(H, lie_bracket(F, G)))
    assert total.is_zero()


def fd_commutator(F, G, x, h):
    """[F, G] applied to phi(x) = sin(x1 + 2 x2) by central differences."""
    def grad_phi(y):
        c = np.cos(y[0] + 2 * y[1])
        return np.array([c, 2 * c])

    def apply(A, y):
        a = np.array([evaluate_on(c, [np.array([y[0]]), np.array([y[1]])])[0] for c in A.coeffs])
        return a

    def G_phi(y):
        return apply(G, y) @ grad_phi(y)

    def F_phi(y):
        return apply(F, y) @ grad_phi(y)

    def derivative(fn, y):
        out = np.empty(2)
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            out[i] = (fn(y + e) - fn(y - e)) / (2 * h)
        return out

    return apply(F, x) @ derivative(G_phi, x) - apply(G, x) @ derivative(F_phi, x)


def test_bracket_matches_finite_difference_second_order():
    rng = np.random.default_rng(0)
    F = op("sin(x2) + 1", "cos(x1)*sin(x2)")
    G = op("cos(x1 + x2)", "sin(x1)^2")
    B = lie_bracket(F, G)
    points = rng.uniform(0, 2 * math.pi, (100, 2))
    errs = {}
    for h in (1e-2, 5e-3):
        worst = 0.0
        for x in points:
            c = np.cos(x[0] + 2 * x[1])
            exact = sum(evaluate_on(B.coeffs[j], [np.array([x[0]]), np.array([x[1]])])[0] * g
                        for j, g in enumerate((c, 2 * c)))
            worst = max(worst, abs(fd_commutator(F, G, x, h) - exact))
        errs[h] = worst
    assert errs[1e-2] < 1e-3
    # halving h divides the error by about four
    assert 3.0 < errs[1e-2] / errs[5e-3] < 5.0


# ------------------------------------------------------------ generations

def test_generation_examples():
    gens = build_generations([op("1", "0"), op("0", "sin(x1)")], 1)
    assert len(gens) == 2
    new = [m for m in gens[1].members if m.canonical_key() not in gens[0].keys()]
    assert len(new) == 1
    assert is_zero(new[0].coeffs[0]) and same(new[0].coeffs[1], "cos(x1)")

    only = build_generations([op("1", "0")], 3)
    assert all(len(g) == 1 for g in only)
    assert len(build_generations([op("1", "0")], 0)) == 1


def test_generations_nested():
    gens = build_generations([op("1", "0"), op("0", "sin(x1)*cos(x2)")], 3)
    for a, b in zip(gens, gens[1:]):
        assert a.keys() <= b.keys()


def test_generation_drops_zero_and_duplicates():
    gens = build_generations([op("1", "0"), op("-1", "0"), op("0", "0")], 1)
    assert len(gens[0]) == 1


# ----------------------------------------------------------------- (H) test

GRID = torus_sample_grid(2, 32)


def test_check_hormander_examples():
    cert = check_hormander([op("1", "0"), op("0", "sin(x1)")], GRID, 1e-8, 4)
    assert cert and cert.n0 == 1 and cert.eta == 0.5
    cert0 = check_hormander([op("1", "0"), op("0", "1")], GRID, 1e-8, 4)
    assert cert0.n0 == 0 and cert0.eta == 1.0
    fail = check_hormander([op("1", "0")], GRID, 1e-8, 3)
    assert isinstance(fail, NotSatisfied) and fail.levels_checked == 3
    assert fail.rank_achieved == 1


def test_certificate_json_schema():
    cert = check_hormander([op("1", "0"), op("0", "sin(x1)")], GRID)
    body = cert.to_json()
    assert {"n0", "eta", "tolerance", "generations", "worst_point", "min_relative_sv"} <= set(body)
    assert body["generations"][1][-1] == ["0", "cos(x1)"]


def test_certificate_witness_invariant():
    cert = check_hormander([op("1", "0"), op("0", "sin(x1)")], GRID, 1e-8)
    sv = cert.singular_values
    assert np.all(sv[:, 1] > cert.tolerance * sv[:, 0])


@pytest.mark.parametrize("fields", [
    [("1", "0"), ("0", "sin(x1)")],
    [("sin(x2)", "0"), ("0", "cos(x1)")],
    [("1", "0"), ("0", "sin(x1)^2")],
])
def test_certificate_monotone_in_level(fields):
    ops = [op(*f) for f in fields]
    base = check_hormander(ops, GRID, 1e-8, 4)
    if not base:
        pytest.skip("family not certified on this grid")
    gens = build_generations(ops, 4)
    from hypoel.symbolic.hormander import _rank_test
    for g in gens[base.n0:]:
        rel, *_ = _rank_test(g.members, GRID, 1e-8, 2)
        assert rel > 1e-8


def test_eta_bit_exact():
    for n0 in range(31):
        assert eta_for(n0) == 2.0 ** -n0 == 1 / (1 << n0)


def test_check_hormander_bad_tol():
    with pytest.raises(ValueError):
        check_hormander([op("1", "0")], GRID, 0.0)


# ------------------------------------------------------------- transforms

def test_hormander_drift_examples():
    one = [[parse_expr("1", 1)]]
    assert same(hormander_drift([parse_expr("x1", 1)], one, one)[0], parse_expr("x1", 1))
    out = hormander_drift([0], [[parse_expr("sin(x1)", 1)]], [[0]])
    assert equivalent(out[0], parse_expr("-1/2*sin(x1)*cos(x1)", 1))
    out = hormander_drift([0], [[0]], [[parse_expr("cos(x1)", 1)]])
    assert equivalent(out[0], parse_expr("1/2*cos(x1)*sin(x1)", 1))


def test_hormander_drift_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        hormander_drift([0, 0], [[0]], [[0]])


def test_adjoint_zeroth_examples():
    assert is_zero(adjoint_zeroth(op("1", "2")))
    assert equivalent(adjoint_zeroth(FirstOrderOperator.from_strings(["sin(x1)"])),
                      parse_expr("-cos(x1)", 1))
    assert is_zero(adjoint_zeroth(op("sin(x2)", "cos(x1)")))
