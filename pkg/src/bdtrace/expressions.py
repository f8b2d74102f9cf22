"""Safe arithmetic expression compiler for scenario configs.

Expressions use numpy-backed arithmetic over named variables (x1..x3 for
fields and test functions, w1/w2 for graph parameters), the functions below,
and the constants pi and e. Anything else is rejected at parse time.
"""

from __future__ import annotations

import ast
import math

import numpy as np

__all__ = ["ExpressionError", "compile_scalar", "compile_vector"]

_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "atan": np.arctan,
    "min": np.minimum,
    "max": np.maximum,
}

_CONSTANTS = {"pi": math.pi, "e": math.e}

_ALLOWED_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Constant,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd, ast.Load,
)


class ExpressionError(ValueError):
    """Rejected or malformed config expression."""


def _validate(tree: ast.AST, source: str, variables: tuple[str, ...]):
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ExpressionError(
                f"disallowed syntax {type(node).__name__!r} in expression {source!r}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
                raise ExpressionError(f"unknown function in expression {source!r}")
            if node.keywords:
                raise ExpressionError(f"keyword arguments not allowed in {source!r}")
        if isinstance(node, ast.Name):
            if node.id not in variables and node.id not in _FUNCTIONS \
                    and node.id not in _CONSTANTS:
                raise ExpressionError(
                    f"unknown name {node.id!r} in expression {source!r} "
                    f"(variables: {', '.join(variables)})")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ExpressionError(f"non-numeric constant in expression {source!r}")


def compile_scalar(source: str, variables: tuple[str, ...] = ("x1", "x2", "x3")):
    """Compile a scalar expression into f(pts) over stacked (m, k) points."""
    try:
        tree = ast.parse(str(source), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse expression {source!r}: {exc.msg} "
                              f"(column {exc.offset})") from None
    _validate(tree, str(source), variables)
    code = compile(tree, "<config-expression>", "eval")

    def evaluate(pts):
        pts = np.asarray(pts, dtype=float)
        env = dict(_FUNCTIONS)
        env.update(_CONSTANTS)
        for i, name in enumerate(variables):
            if i < pts.shape[-1]:
                env[name] = pts[..., i]
        out = eval(code, {"__builtins__": {}}, env)
        return np.broadcast_to(np.asarray(out, dtype=float), pts.shape[:-1]).copy()

    return evaluate


def compile_vector(sources, variables: tuple[str, ...] = ("x1", "x2", "x3")):
    """Compile a list of expressions into f(pts) -> (m, len(sources)) values."""
    parts = [compile_scalar(s, variables) for s in sources]

    def evaluate(pts):
        return np.stack([p(pts) for p in parts], axis=-1)

    return evaluate
