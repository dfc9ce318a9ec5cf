import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from algebroid.expressions import (
    EvalDomainError,
    ParseError,
    parse,
)


def central_fd_gradient(expr, x, h=1e-5):
    n = len(x)
    g = np.zeros(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        g[i] = (expr.values(x + e) - expr.values(x - e)) / (2 * h)
    return g


def central_fd_hessian(expr, x, h=1e-5):
    n = len(x)
    H = np.zeros((n, n))
    f0 = expr.values(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h
        H[i, i] = (expr.values(x + ei) - 2 * f0 + expr.values(x - ei)) / h**2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h
            H[i, j] = H[j, i] = (
                expr.values(x + ei + ej)
                - expr.values(x + ei - ej)
                - expr.values(x - ei + ej)
                + expr.values(x - ei - ej)
            ) / (4 * h**2)
    return H


class TestParsing:
    def test_product_of_variables(self):
        e = parse("x1*x2", 2)
        assert str(e) == "x1 * x2"
        assert e.evaluate(np.array([3.0, 4.0])).value == 12.0

    def test_power_of_sine(self):
        e = parse("sin(x1)^2", 1)
        assert str(e) == "sin(x1) ^ 2.0"
        assert e.evaluate(np.array([0.5])).value == pytest.approx(math.sin(0.5) ** 2)

    def test_variable_out_of_range(self):
        with pytest.raises(ParseError, match="out of range"):
            parse("x3", 2)

    def test_unknown_identifier(self):
        with pytest.raises(ParseError, match="unknown identifier"):
            parse("x1 + y", 2)

    def test_syntax_error_carries_position(self):
        with pytest.raises(ParseError) as err:
            parse("x1 + ", 2)
        assert err.value.position == 5

    def test_unbalanced_parens(self):
        with pytest.raises(ParseError):
            parse("sin(x1", 1)

    def test_precedence_power_over_neg(self):
        # -x1^2 means -(x1^2)
        e = parse("-x1^2", 1)
        assert e.evaluate(np.array([3.0])).value == -9.0

    def test_power_right_associative(self):
        e = parse("x1^2^3", 1)  # x1^(2^3) = x1^8
        assert e.evaluate(np.array([2.0])).value == 256.0

    def test_negative_exponent(self):
        e = parse("x1^-2", 1)
        assert e.evaluate(np.array([2.0])).value == 0.25

    def test_constant_folding(self):
        assert parse("2*3 + 1", 1).is_constant
        assert not parse("2*x1", 1).is_constant

    def test_division_left_associative(self):
        e = parse("8/4/2", 1)
        assert e.evaluate(np.array([0.0])).value == 1.0


class TestEvaluation:
    def test_sine_squared_at_half_pi(self):
        e = parse("sin(x1)^2", 1)
        res = e.evaluate(np.array([math.pi / 2]))
        assert res.value == pytest.approx(1.0)
        assert res.gradient[0] == pytest.approx(0.0, abs=1e-15)

    def test_product_gradient_hessian(self):
        e = parse("x1*x2", 2)
        res = e.evaluate(np.array([3.0, 4.0]))
        assert res.value == 12.0
        np.testing.assert_allclose(res.gradient, [4.0, 3.0])
        np.testing.assert_allclose(res.hessian, [[0.0, 1.0], [1.0, 0.0]])

    def test_second_partial(self):
        e = parse("x1^2*x2", 2)
        res = e.evaluate(np.array([1.0, 5.0]))
        assert res.hessian[0, 0] == pytest.approx(10.0)

    def test_log_domain_error_names_subexpression(self):
        e = parse("log(x1 - 2)", 1)
        with pytest.raises(EvalDomainError, match=r"log\(x1 - 2\.0\)"):
            e.evaluate(np.array([1.0]))

    def test_sqrt_domain_error(self):
        with pytest.raises(EvalDomainError):
            parse("sqrt(x1)", 1).evaluate(np.array([-1.0]))

    def test_division_by_zero(self):
        with pytest.raises(EvalDomainError, match="division by zero"):
            parse("x1 / x2", 2).evaluate(np.array([1.0, 0.0]))

    def test_batch_evaluation_matches_pointwise(self):
        e = parse("sin(x1)*x2 + x2^3", 2)
        pts = np.array([[0.1, 0.2], [1.0, -1.0], [2.0, 0.5]])
        batch = e.values(pts)
        for point, expected in zip(pts, batch):
            assert e.evaluate(point).value == pytest.approx(expected)


def _random_polynomial(rng, n, degree=4, terms=5):
    pieces = []
    for _ in range(terms):
        coef = rng.uniform(-2, 2)
        exps = rng.multinomial(rng.randint(0, degree + 1), np.ones(n) / n)
        mono = " * ".join(
            f"x{i + 1}^{int(k)}" for i, k in enumerate(exps) if k > 0
        )
        pieces.append(f"{coef:.6f}" + (f" * {mono}" if mono else ""))
    return " + ".join(pieces)


class TestDerivativeOracle:
    @pytest.mark.parametrize("case", range(12))
    def test_polynomials_match_finite_differences(self, case):
        rng = np.random.RandomState(1000 + case)
        n = rng.randint(1, 4)
        e = parse(_random_polynomial(rng, n), n)
        x = rng.uniform(-1.5, 1.5, size=n)
        res = e.evaluate(x)
        fd_g = central_fd_gradient(e, x)
        fd_h = central_fd_hessian(e, x)
        scale = max(1.0, float(np.max(np.abs(fd_g))))
        np.testing.assert_allclose(res.gradient, fd_g, rtol=0, atol=1e-6 * scale)
        hscale = max(1.0, float(np.max(np.abs(fd_h))))
        np.testing.assert_allclose(res.hessian, fd_h, rtol=0, atol=1e-5 * hscale)

    @pytest.mark.parametrize(
        "text,n",
        [
            ("exp(x1*x2) * sin(x2)", 2),
            ("sqrt(x1^2 + 1) / cosh(x2)", 2),
            ("tan(x1/4) + log(x2 + 3)", 2),
            ("sinh(x1)*cos(x2)^3", 2),
        ],
    )
    def test_transcendentals_match_finite_differences(self, text, n):
        e = parse(text, n)
        rng = np.random.RandomState(7)
        for _ in range(5):
            x = rng.uniform(-0.8, 0.8, size=n)
            res = e.evaluate(x)
            np.testing.assert_allclose(
                res.gradient, central_fd_gradient(e, x), rtol=1e-6, atol=1e-7
            )
            np.testing.assert_allclose(
                res.hessian, central_fd_hessian(e, x), rtol=1e-4, atol=1e-5
            )

    def test_hessian_exactly_symmetric(self):
        rng = np.random.RandomState(5)
        e = parse("exp(x1*x2)*sin(x1 + x3^2) / (x2^2 + 1)", 3)
        for _ in range(20):
            H = e.evaluate(rng.uniform(-1, 1, 3)).hessian
            assert np.max(np.abs(H - H.T)) < 1e-14


_expr_strategy = st.recursive(
    st.one_of(
        st.sampled_from(["x1", "x2"]),
        st.floats(min_value=-4, max_value=4, allow_nan=False).map(lambda v: f"{v:.3f}"),
    ),
    lambda children: st.one_of(
        st.tuples(children, st.sampled_from(["+", "-", "*"]), children).map(
            lambda t: f"({t[0]} {t[1]} {t[2]})"
        ),
        st.tuples(st.sampled_from(["sin", "cos", "exp", "sinh", "cosh"]), children).map(
            lambda t: f"{t[0]}({t[1]})"
        ),
        children.map(lambda c: f"-({c})"),
        st.tuples(children, st.integers(min_value=0, max_value=3)).map(
            lambda t: f"({t[0]})^{t[1]}"
        ),
    ),
    max_leaves=12,
)


class TestRoundTrip:
    @given(_expr_strategy)
    @settings(max_examples=150, deadline=None)
    def test_print_parse_identity(self, text):
        e = parse(text, 2)
        again = parse(str(e), 2)
        assert again == e

    def test_reprint_evaluates_identically(self):
        rng = np.random.RandomState(11)
        exprs = [
            "sin(x1)^2 + cos(x2)*x1",
            "-x1^3 / (2 + cosh(x2))",
            "exp(-(x1 - x2)^2)",
            "1e-3 * x1 + 2.5",
            _random_polynomial(np.random.RandomState(3), 2),
        ]
        for text in exprs:
            e = parse(text, 2)
            e2 = parse(str(e), 2)
            pts = rng.uniform(-1, 1, size=(100, 2))
            np.testing.assert_array_equal(e.values(pts), e2.values(pts))
