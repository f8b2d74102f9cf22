import math

import numpy as np
import pytest

from bdtrace.expressions import ExpressionError, compile_scalar, compile_vector


def test_arithmetic_and_functions():
    f = compile_scalar("sin(x1)*cos(x2) + x1**2 - 3/x2")
    pts = np.array([[0.3, 0.7], [1.2, 2.0]])
    expected = np.sin(pts[:, 0]) * np.cos(pts[:, 1]) + pts[:, 0] ** 2 - 3.0 / pts[:, 1]
    assert np.allclose(f(pts), expected)


def test_constants_and_unary():
    f = compile_scalar("-x1 + pi")
    assert f(np.array([[1.0, 0.0]]))[0] == pytest.approx(math.pi - 1.0)


def test_constant_expression_broadcasts():
    f = compile_scalar("0.45")
    assert f(np.zeros((7, 2))).shape == (7,)


def test_graph_variables():
    g = compile_scalar("0.2*sin(3*w1)", ("w1",))
    assert g(np.array([[0.5]]))[0] == pytest.approx(0.2 * math.sin(1.5))


def test_vector_expressions():
    f = compile_vector(["x1", "x1*x2"])
    out = f(np.array([[2.0, 3.0]]))
    assert np.allclose(out, [[2.0, 6.0]])


def test_abs_and_minmax():
    f = compile_scalar("abs(x1 - 0.5) + min(x1, x2)")
    assert f(np.array([[0.2, 0.9]]))[0] == pytest.approx(0.3 + 0.2)


def test_rejects_unknown_names():
    with pytest.raises(ExpressionError, match="unknown name"):
        compile_scalar("x1 + q")


def test_rejects_calls_of_unknown_functions():
    with pytest.raises(ExpressionError, match="unknown function"):
        compile_scalar("open(x1)")


def test_rejects_attribute_access():
    with pytest.raises(ExpressionError, match="disallowed"):
        compile_scalar("x1.real")


def test_rejects_subscripts_and_lambdas():
    with pytest.raises(ExpressionError):
        compile_scalar("x1[0]")
    with pytest.raises(ExpressionError):
        compile_scalar("(lambda: 1)()")


def test_rejects_strings():
    with pytest.raises(ExpressionError):
        compile_scalar("'abc'")


def test_syntax_error_reported_with_column():
    with pytest.raises(ExpressionError, match="column"):
        compile_scalar("x1 + * 2")
