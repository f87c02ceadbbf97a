import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from mcft.expr import (
    EvalError,
    ExprError,
    ZeroCheck,
    add,
    canon,
    const,
    cos,
    diff,
    div_exact,
    evaluate,
    exp,
    free_symbols,
    is_zero,
    mul,
    pow_,
    sin,
    substitute,
    to_text,
    var,
)

x = var("x")
y = var("y")
z = var("z")
rho = var("rho", "param", 0)
tau = var("tau", "param", 1)
gamma = var("gamma", "param", 2)
y_t = var("y_t", "velocity", 3)
y_x = var("y_x", "velocity", 4)
s_t = var("s_t", "action", 5)


class TestDiff:
    def test_kinetic_term(self):
        L = Fraction(1, 2) * rho * y_t**2 - Fraction(1, 2) * tau * y_x**2 - gamma * s_t
        assert diff(L, y_t) == rho * y_t

    def test_constant(self):
        assert diff(const(5), x) == const(0)

    def test_product_independent_symbols(self):
        assert diff(y * y_x, y_x) == y

    def test_chain_rule(self):
        assert diff(sin(x**2), x) == 2 * x * cos(x**2)
        assert diff(exp(3 * x), x) == 3 * exp(3 * x)
        assert diff(cos(x), x) == -sin(x)

    def test_negative_power(self):
        assert diff(x**-1, x) == -(x**-2)

    def test_undeclared_not_an_issue_other_symbols_independent(self):
        assert diff(x * y, z) == const(0)


class TestSubstitute:
    def test_inverse_legendre(self):
        p_t = var("p_t", "momentum", 3)
        assert substitute(y_t**2, {y_t: p_t / rho}) == p_t**2 / rho**2

    def test_identity(self):
        e = x * y + sin(x)
        assert substitute(e, {}) == e

    def test_simultaneous_swap(self):
        assert substitute(x + y, {x: y, y: x}) == x + y
        assert substitute(x * y**2, {x: y, y: x}) == y * x**2

    def test_into_function_argument(self):
        assert substitute(sin(x), {x: y + 1}) == sin(y + 1)


class TestEval:
    def test_product(self):
        assert evaluate(rho * y_t, {"rho": 2, "y_t": 3}) == 6.0

    def test_canonical_zero_times_symbol(self):
        assert evaluate(mul(const(0), x), {}) == 0.0

    def test_energy_density_point(self):
        # E_L = dL/dv . v - L at rho=1, tau=1, gamma=0.1, y_t=1, y_x=0, s_t=2:
        # 1/2*1*1 - 1/2*1*0 + 0.1*2 = 0.7
        E = Fraction(1, 2) * rho * y_t**2 - Fraction(1, 2) * tau * y_x**2 + gamma * s_t
        v = evaluate(E, {"rho": 1, "tau": 1, "gamma": 0.1, "y_t": 1, "y_x": 0, "s_t": 2})
        assert v == pytest.approx(0.7, abs=1e-15)

    def test_unbound_symbol(self):
        with pytest.raises(EvalError):
            evaluate(x + y, {"x": 1})

    def test_domain_error(self):
        with pytest.raises(EvalError):
            evaluate(pow_(x, -1), {"x": 0})


class TestIsZero:
    def test_commutator(self):
        assert is_zero(x * y - y * x) is ZeroCheck.ZERO

    def test_pythagorean_probing(self):
        assert is_zero(sin(x) ** 2 + cos(x) ** 2 - 1) is ZeroCheck.PROBABLY_ZERO

    def test_nonzero(self):
        assert is_zero(x) is ZeroCheck.NONZERO

    def test_nonzero_with_functions(self):
        assert is_zero(sin(x) ** 2 - cos(x) ** 2) is ZeroCheck.NONZERO

    def test_zerocheck_truthiness(self):
        assert ZeroCheck.ZERO and ZeroCheck.PROBABLY_ZERO and not ZeroCheck.NONZERO

    def test_seed_determinism(self):
        e = sin(x) ** 2 + cos(x) ** 2 - 1
        assert is_zero(e, seed=42) is is_zero(e, seed=42)


class TestCanonicalForm:
    def test_power_expansion(self):
        assert (x + y) ** 2 == x**2 + 2 * x * y + y**2

    def test_zero_power(self):
        assert pow_(x + y, 0) == const(1)

    def test_division_by_zero(self):
        with pytest.raises(ExprError):
            pow_(const(0), -1)

    def test_monomial_inverse_cancels(self):
        assert (x**2 * y) / (x * y) == x

    def test_sum_inverse_shared_atom(self):
        a = pow_(x + y, -1)
        b = pow_(2 * x + 2 * y, -1)
        assert b == a / 2

    def test_div_exact_polynomial(self):
        assert div_exact(x**2 - y**2, x + y) == x - y

    def test_text_rendering(self):
        e = Fraction(1, 2) * rho * y_t**2 - Fraction(1, 2) * tau * y_x**2 + gamma * s_t
        assert to_text(e) == "rho*y_t^2/2 - tau*y_x^2/2 + gamma*s_t"
        p_t = var("p_t", "momentum", 3)
        assert to_text(p_t**2 / (2 * rho)) == "p_t^2/(2*rho)"


# ---------------------------------------------------------------------------
# Property tests.

SYMS = [x, y, z]


@st.composite
def exprs(draw, depth=2):
    if depth == 0:
        leaf = draw(st.sampled_from(["sym", "int"]))
        if leaf == "sym":
            return draw(st.sampled_from(SYMS))
        return const(draw(st.integers(-4, 4)))
    op = draw(st.sampled_from(["add", "mul", "pow", "leaf", "leaf", "fn"]))
    if op == "leaf":
        return draw(exprs(depth=0))
    if op == "add":
        return add(draw(exprs(depth=depth - 1)), draw(exprs(depth=depth - 1)))
    if op == "mul":
        return mul(draw(exprs(depth=depth - 1)), draw(exprs(depth=depth - 1)))
    if op == "pow":
        return pow_(draw(exprs(depth=depth - 1)), draw(st.integers(0, 3)))
    fn = draw(st.sampled_from([sin, cos]))
    return fn(draw(exprs(depth=depth - 1)))


@given(exprs())
@settings(max_examples=150, deadline=None)
def test_canonical_idempotence(e):
    assert canon(canon(e)) == canon(e)


@given(exprs(), exprs(), st.sampled_from(SYMS))
@settings(max_examples=150, deadline=None)
def test_leibniz_rule(a, b, v):
    s = v.single_symbol
    lhs = diff(mul(a, b), s)
    rhs = add(mul(diff(a, s), b), mul(a, diff(b, s)))
    assert lhs == rhs


@given(exprs(), st.sampled_from(SYMS), st.integers(0, 10**6))
@settings(max_examples=100, deadline=None)
def test_derivative_matches_finite_differences(e, v, seed):
    rng = random.Random(seed)
    b = {s.name: rng.uniform(-1.5, 1.5) for s in free_symbols(e) | {v.single_symbol}}
    h = 1e-6
    name = v.single_symbol.name
    up = dict(b, **{name: b[name] + h})
    dn = dict(b, **{name: b[name] - h})
    try:
        fd = (evaluate(e, up) - evaluate(e, dn)) / (2 * h)
        an = evaluate(diff(e, v), b)
    except EvalError:
        return
    scale = max(1.0, abs(an), abs(fd))
    assert abs(an - fd) / scale < 1e-5


@given(exprs(), st.sampled_from(SYMS), exprs(), st.integers(0, 10**6))
@settings(max_examples=100, deadline=None)
def test_substitute_commutes_with_eval(e, v, g, seed):
    rng = random.Random(seed)
    names = {s.name for s in free_symbols(e) | free_symbols(g)} | {v.single_symbol.name}
    b = {n: rng.uniform(-2, 2) for n in names}
    try:
        inner = evaluate(g, b)
        lhs = evaluate(substitute(e, {v: g}), b)
        rhs = evaluate(e, dict(b, **{v.single_symbol.name: inner}))
    except EvalError:
        return
    scale = max(1.0, abs(lhs), abs(rhs))
    assert abs(lhs - rhs) / scale < 1e-9
