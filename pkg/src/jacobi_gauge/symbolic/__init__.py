"""Symbolic expression engine: parsing, printing, derivatives, evaluation."""

from .calculus import differentiate, gradient, simplify, substitute
from .chart import Chart, Point
from .nodes import (
    ONE,
    ZERO,
    Const,
    Expr,
    Func,
    Neg,
    Power,
    Product,
    Quotient,
    Sum,
    Var,
    add,
    as_expr,
    cos,
    exp,
    ln,
    mul,
    sin,
    size,
    total,
    variables,
)
from .numeric import compile_exprs, evaluate, evaluate_many
from .parser import parse_expr
from .printer import to_string

__all__ = [
    "Chart",
    "Point",
    "Expr",
    "Const",
    "Var",
    "Sum",
    "Product",
    "Quotient",
    "Neg",
    "Power",
    "Func",
    "ZERO",
    "ONE",
    "add",
    "mul",
    "as_expr",
    "exp",
    "ln",
    "sin",
    "cos",
    "total",
    "size",
    "variables",
    "parse_expr",
    "to_string",
    "differentiate",
    "gradient",
    "simplify",
    "substitute",
    "evaluate",
    "evaluate_many",
    "compile_exprs",
]
