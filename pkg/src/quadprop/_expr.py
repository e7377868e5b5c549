"""A small arithmetic expression grammar for time (or space) functions.

Accepted: numeric literals, the variable(s), ``pi``, ``+ - * /``, ``**``
(or ``^``), unary minus and the functions sin, cos, tan, sinh, cosh, exp.
Parsing goes through :mod:`ast` with a node whitelist and is converted to
sympy, which gives exact derivatives.
"""
import ast

import numpy as np
import sympy as sp

from .errors import ExpressionError

FUNCTIONS = {
    "sin": sp.sin,
    "cos": sp.cos,
    "tan": sp.tan,
    "sinh": sp.sinh,
    "cosh": sp.cosh,
    "exp": sp.exp,
}
CONSTANTS = {"pi": sp.pi}

_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a ** b,
}


def _convert(node, symbols):
    if isinstance(node, ast.Expression):
        return _convert(node.body, symbols)
    if isinstance(node, ast.Constant) and type(node.value) in (int, float):
        if isinstance(node.value, int):
            return sp.Integer(node.value)
        return sp.Float(node.value)
    if isinstance(node, ast.Name):
        if node.id in symbols:
            return symbols[node.id]
        if node.id in CONSTANTS:
            return CONSTANTS[node.id]
        raise ExpressionError(f"unknown name {node.id!r}")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_convert(node.left, symbols),
                                      _convert(node.right, symbols))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        operand = _convert(node.operand, symbols)
        return -operand if isinstance(node.op, ast.USub) else operand
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
            name = getattr(node.func, "id", "?")
            raise ExpressionError(f"function {name!r} is not allowed")
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"{node.func.id} takes exactly one argument")
        return FUNCTIONS[node.func.id](_convert(node.args[0], symbols))
    raise ExpressionError(f"unsupported syntax: {ast.dump(node)[:60]}")


def parse(text, variables=("t",)):
    """Parse ``text`` into a sympy expression in ``variables``."""
    if isinstance(text, (int, float)):
        text = repr(float(text))
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError(f"expected a non-empty expression string, got {text!r}")
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    symbols = {v: sp.Symbol(v, real=True) for v in variables}
    return _convert(tree, symbols)


class ScalarFunction:
    """A real function of one variable, vectorised over numpy arrays.

    Built either from an expression (then ``derivative`` is exact) or from a
    plain Python callable (then ``derivative`` is a central difference).
    """

    FD_STEP = 1e-6

    def __init__(self, source, var="t"):
        self.var = var
        if callable(source) and not isinstance(source, sp.Basic):
            self.expr = None
            self._fn = source
            self.text = getattr(source, "__name__", "<callable>")
        else:
            self.expr = source if isinstance(source, sp.Basic) else parse(source, (var,))
            self.text = str(self.expr)
            self._fn = sp.lambdify(sp.Symbol(var, real=True), self.expr, modules="numpy")

    def __call__(self, t):
        value = self._fn(t)
        if np.ndim(t) == 0:
            return float(np.real(value))
        return np.broadcast_to(np.asarray(value, dtype=float), np.shape(t)).copy()

    def derivative(self):
        if self.expr is not None:
            return ScalarFunction(sp.diff(self.expr, sp.Symbol(self.var, real=True)), self.var)
        step = self.FD_STEP
        fn = self

        def central(t):
            return (fn(np.asarray(t) + step) - fn(np.asarray(t) - step)) / (2 * step)
        central.__name__ = f"d({self.text})"
        return ScalarFunction(central, self.var)

    @property
    def is_zero(self):
        return self.expr is not None and sp.simplify(self.expr) == 0

    @property
    def is_constant(self):
        return self.expr is not None and not self.expr.free_symbols

    def __repr__(self):
        return f"ScalarFunction({self.text!r})"


def as_function(source, var="t"):
    if isinstance(source, ScalarFunction):
        return source
    return ScalarFunction(source, var)
