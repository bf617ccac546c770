"""Closed catalogue of expression maps for problem files.

Expressions are parsed with :mod:`ast` and compiled into vectorised numpy
closures. Only numbers, the named variables, + - * / ** (and unary minus) and
the functions exp, sin, cos, abs, pow are accepted, so every accepted
expression evaluates without reaching arbitrary Python.
"""

from __future__ import annotations

import ast
import re
from typing import Callable

import numpy as np

from .errors import ParseError
from .maps import StateMap

__all__ = ["compile_expression", "ExpressionMap", "expression_vector_fn", "FUNCTIONS"]

FUNCTIONS: dict[str, Callable] = {
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "abs": np.abs,
    "pow": np.power,
}
_ARITY = {"exp": 1, "sin": 1, "cos": 1, "abs": 1, "pow": 2}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


def compile_expression(text: str, variables: dict[str, int | None]) -> Callable:
    """Compile ``text`` to ``fn(env) -> array``.

    ``variables`` maps a name to a column index of the state matrix, or None
    for the time variable. The returned callable takes ``(xi, X)`` with ``xi``
    of shape (k,) and ``X`` of shape (k, n) and returns shape (k,).
    """
    if not isinstance(text, str):
        raise ParseError(f"expression must be a string, got {type(text).__name__}")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"cannot parse expression {text!r}: {exc.msg}", column=exc.offset) from None

    def build(node) -> Callable:
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(
            node.value, bool
        ):
            c = float(node.value)
            return lambda xi, X: np.full(xi.shape, c)
        if isinstance(node, ast.Name):
            if node.id not in variables:
                raise ParseError(f"unknown variable {node.id!r} in {text!r}", column=node.col_offset + 1)
            col = variables[node.id]
            if col is None:
                return lambda xi, X: xi
            return lambda xi, X: X[:, col]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            inner = build(node.operand)
            if isinstance(node.op, ast.USub):
                return lambda xi, X: -inner(xi, X)
            return inner
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            op = _BINOPS[type(node.op)]
            left, right = build(node.left), build(node.right)
            return lambda xi, X: op(left(xi, X), right(xi, X))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
            name = node.func.id
            if name not in FUNCTIONS:
                raise ParseError(f"unknown function {name!r} in {text!r}", column=node.col_offset + 1)
            if node.keywords or len(node.args) != _ARITY[name]:
                raise ParseError(f"{name} takes {_ARITY[name]} positional argument(s)", column=node.col_offset + 1)
            fn = FUNCTIONS[name]
            args = [build(a) for a in node.args]
            if len(args) == 1:
                a0 = args[0]
                return lambda xi, X: fn(a0(xi, X))
            a0, a1 = args
            return lambda xi, X: fn(a0(xi, X), a1(xi, X))
        raise ParseError(
            f"construct {type(node).__name__} is not allowed in {text!r}",
            column=getattr(node, "col_offset", 0) + 1,
        )

    return build(tree.body)


def state_variables(n: int) -> dict[str, int | None]:
    out: dict[str, int | None] = {"xi": None}
    out.update({f"theta_{i + 1}": i for i in range(n)})
    return out


def control_variables(m: int) -> dict[str, int | None]:
    return {f"u_{i + 1}": i for i in range(m)}


_NAME = re.compile(r"[A-Za-z_]\w*")


class ExpressionMap(StateMap):
    """State map whose entries are catalogue expressions in xi, theta_1..theta_n.

    ``exprs`` is a nested list of strings with the shape of the map's value.
    """

    def __init__(self, exprs, n: int):
        arr = np.array(exprs, dtype=object)
        if arr.size == 0:
            raise ParseError("expression map needs at least one entry")
        self.exprs = arr.tolist()
        self.shape = arr.shape
        self.n = int(n)
        names = state_variables(self.n)
        self._fns = [compile_expression(e, names) for e in arr.ravel()]
        used = {tok for e in arr.ravel() for tok in _NAME.findall(e)}
        self.state_independent = not any(v.startswith("theta_") for v in used if v in names)

    def evaluate(self, xis, thetas):
        xi = np.asarray(xis, dtype=float).ravel()
        X = np.atleast_2d(np.asarray(thetas, dtype=float))
        if X.shape != (xi.size, self.n):
            X = np.broadcast_to(X, (xi.size, self.n))
        with np.errstate(all="ignore"):
            cols = [np.broadcast_to(fn(xi, X), xi.shape) for fn in self._fns]
        return np.stack(cols, axis=-1).reshape((xi.size,) + self.shape)

    def __call__(self, xi, theta):
        return self.evaluate(np.array([float(xi)]), np.asarray(theta, dtype=float)[None])[0]

    def __repr__(self) -> str:
        return f"ExpressionMap({self.exprs})"


def expression_vector_fn(exprs, m: int) -> Callable:
    """Vectorised u -> G(u) from m expressions in u_1..u_m."""
    if len(exprs) != m:
        raise ParseError(f"need {m} expressions, got {len(exprs)}")
    fns = [compile_expression(e, control_variables(m)) for e in exprs]

    def G(U):
        U = np.asarray(U, dtype=float)
        flat = np.atleast_2d(U)
        z = np.zeros(flat.shape[0])
        out = np.stack([np.broadcast_to(fn(z, flat), z.shape) for fn in fns], axis=-1)
        return out.reshape(U.shape)

    return G
