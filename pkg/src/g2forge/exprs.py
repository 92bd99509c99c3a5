"""Tiny safe evaluator for scalar coefficient expressions.

Used by the catalog loader and the form-literal parser.  Supported syntax:
numbers, parameter names, + - * / **, unary minus, and sqrt(...).
"""

from __future__ import annotations

import ast
import math
from typing import Mapping

_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a ** b,
}


class ExprError(ValueError):
    pass


def _eval(node: ast.AST, env: Mapping[str, float]) -> float:
    if isinstance(node, ast.Expression):
        return _eval(node.body, env)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, (int, float)):
            return float(node.value)
        raise ExprError(f"bad constant {node.value!r}")
    if isinstance(node, ast.Name):
        if node.id in env:
            return float(env[node.id])
        raise ExprError(f"unknown name {node.id!r}")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.UnaryOp):
        if isinstance(node.op, ast.USub):
            return -_eval(node.operand, env)
        if isinstance(node.op, ast.UAdd):
            return _eval(node.operand, env)
    if isinstance(node, ast.Call):
        if isinstance(node.func, ast.Name) and node.func.id == "sqrt" and len(node.args) == 1:
            arg = _eval(node.args[0], env)
            if arg < 0:
                raise ExprError("sqrt of a negative value")
            return math.sqrt(arg)
        raise ExprError("only sqrt(...) calls are allowed")
    raise ExprError(f"unsupported syntax: {ast.dump(node)}")


def eval_scalar(text: str, env: Mapping[str, float] | None = None) -> float:
    """Evaluate a coefficient expression like ``sqrt(22)/4`` or ``2*a``."""
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ExprError(f"cannot parse {text!r}") from exc
    return _eval(tree, env or {})
