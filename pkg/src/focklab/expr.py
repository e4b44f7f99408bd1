"""Symbol expressions: constants, z, conj(z), abs2(z), exp(.), indicator(c, r), sums and products."""

from __future__ import annotations

import ast

import numpy as np

from .symbols import Symbol, SymbolPoly, SymbolSum, constant, indicator_ball


class ExpressionError(ValueError):
    pass


_Z = SymbolPoly.monomial(1, 0)
_ZBAR = SymbolPoly.monomial(0, 1)


def _as_symbol(x):
    return x.to_symbol() if isinstance(x, SymbolPoly) else x


def _const_value(node) -> complex:
    v = _eval(node)
    if isinstance(v, SymbolPoly) and set(v.coeffs) <= {(0, 0)}:
        return v.coeffs.get((0, 0), 0j)
    raise ExpressionError("indicator() arguments must be constants")


def _exp(inner):
    if isinstance(inner, SymbolPoly):
        poly = inner
        radial = None
        if all(a == b for a, b in poly.coeffs):
            cs = dict(poly.coeffs)
            radial = lambda r: np.exp(sum(c * r ** (2 * a) for (a, _), c in cs.items()))
        band = max((abs(a - b) for a, b in poly.coeffs), default=0)
        return Symbol(lambda z: np.exp(poly(z)), "exp(poly)", None, radial, 8.0 * band)
    inner = _as_symbol(inner)
    f = inner.__call__
    return Symbol(lambda z: np.exp(f(z)), f"exp({inner.label})", None, None, 8.0)


def _eval(node):
    if isinstance(node, ast.Expression):
        return _eval(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)) \
            and not isinstance(node.value, bool):
        return SymbolPoly({(0, 0): complex(node.value)})
    if isinstance(node, ast.Name):
        if node.id == "z":
            return _Z
        if node.id in ("i", "j"):
            return SymbolPoly({(0, 0): 1j})
        raise ExpressionError(f"unknown name {node.id!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval(node.operand)
        return v if isinstance(node.op, ast.UAdd) else v * -1.0
    if isinstance(node, ast.BinOp):
        a, b = _eval(node.left), _eval(node.right)
        if isinstance(node.op, ast.Add):
            return a + b if isinstance(a, SymbolPoly) and isinstance(b, SymbolPoly) else _as_symbol(a) + _as_symbol(b)
        if isinstance(node.op, ast.Sub):
            return a - b if isinstance(a, SymbolPoly) and isinstance(b, SymbolPoly) else _as_symbol(a) + _as_symbol(b) * -1.0
        if isinstance(node.op, ast.Mult):
            if isinstance(a, SymbolPoly) and isinstance(b, SymbolPoly):
                return a * b
            if isinstance(a, SymbolPoly) and set(a.coeffs) <= {(0, 0)}:
                return b * a.coeffs.get((0, 0), 0j)
            if isinstance(b, SymbolPoly) and set(b.coeffs) <= {(0, 0)}:
                return a * b.coeffs.get((0, 0), 0j)
            return _as_symbol(a) * _as_symbol(b)
        raise ExpressionError(f"operator {type(node.op).__name__} not supported")
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        name, args = node.func.id, node.args
        if node.keywords:
            raise ExpressionError(f"{name}(): keyword arguments are not supported")
        if name in ("conj", "abs2"):
            if len(args) != 1 or not (isinstance(args[0], ast.Name) and args[0].id == "z"):
                raise ExpressionError(f"{name}() takes exactly the argument z")
            return _ZBAR if name == "conj" else _Z * _ZBAR
        if name == "exp":
            if len(args) != 1:
                raise ExpressionError("exp() takes one argument")
            return _exp(_eval(args[0]))
        if name == "indicator":
            if len(args) != 2:
                raise ExpressionError("indicator(center, radius) takes two arguments")
            r = _const_value(args[1])
            if r.imag != 0 or r.real <= 0:
                raise ExpressionError("indicator radius must be a positive real")
            return indicator_ball(_const_value(args[0]), r.real)
        raise ExpressionError(f"unknown function {name!r}")
    raise ExpressionError(f"unsupported syntax: {ast.dump(node)[:60]}")


def parse_symbol(text: str):
    """Parse an expression into a :class:`SymbolPoly` (when polynomial) or a symbol.

    >>> parse_symbol("abs2(z) - 1")
    SymbolPoly({(1, 1): (1+0j), (0, 0): (-1+0j)})
    """
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse symbol {text!r}: {exc.msg}") from None
    out = _eval(tree)
    if isinstance(out, Symbol):
        out = Symbol(out.func, text.strip(), out.support, out.radial, out.freq, out.bound, out.poly)
    return out
