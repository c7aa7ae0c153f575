"""Numerical evaluation of expressions.

`evaluate` is the reference recursive evaluator for a single point and names
the singular subexpression on failure.  `compile_exprs` flattens a batch of
expressions into one numpy program for evaluation over many sample points.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from ..errors import DomainError
from .chart import Chart, Point
from .nodes import Const, Expr, Func, Neg, Power, Product, Quotient, Sum, Var


def evaluate(e: Expr, p: Point | Mapping[str, float]) -> float:
    env = p.as_dict() if isinstance(p, Point) else dict(p)
    memo: dict[Expr, float] = {}
    return _eval(e, env, memo)


def _eval(e: Expr, env: dict, memo: dict) -> float:
    hit = memo.get(e)
    if hit is not None:
        return hit
    r = _eval_node(e, env, memo)
    if not math.isfinite(r):
        raise DomainError(f"non-finite value at {e}", expr=e, point=env)
    memo[e] = r
    return r


def _eval_node(e: Expr, env: dict, memo: dict) -> float:
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Var):
        try:
            return float(env[e.name])
        except KeyError:
            raise DomainError(f"no value for coordinate {e.name!r}", expr=e, point=env) from None
    if isinstance(e, Sum):
        return math.fsum(_eval(t, env, memo) for t in e.args)
    if isinstance(e, Product):
        r = 1.0
        for f in e.args:
            r *= _eval(f, env, memo)
        return r
    if isinstance(e, Neg):
        return -_eval(e.arg, env, memo)
    if isinstance(e, Quotient):
        d = _eval(e.den, env, memo)
        if d == 0.0:
            raise DomainError(f"division by zero in {e}", expr=e, point=env)
        return _eval(e.num, env, memo) / d
    if isinstance(e, Power):
        b = _eval(e.base, env, memo)
        p = e.exponent
        if isinstance(p, Const) and isinstance(p.value, Fraction) and p.value.denominator == 1:
            k = int(p.value)
            if b == 0.0 and k < 0:
                raise DomainError(f"zero to a negative power in {e}", expr=e, point=env)
            try:
                return b**k
            except OverflowError:
                raise DomainError(f"overflow in {e}", expr=e, point=env) from None
        x = _eval(p, env, memo)
        if b < 0.0 and not float(x).is_integer():
            raise DomainError(f"negative base to a fractional power in {e}", expr=e, point=env)
        if b == 0.0 and x < 0:
            raise DomainError(f"zero to a negative power in {e}", expr=e, point=env)
        try:
            return b**x
        except OverflowError:
            raise DomainError(f"overflow in {e}", expr=e, point=env) from None
    if isinstance(e, Func):
        x = _eval(e.arg, env, memo)
        if e.name == "exp":
            try:
                return math.exp(x)
            except OverflowError:
                raise DomainError(f"overflow in {e}", expr=e, point=env) from None
        if e.name == "ln":
            if x <= 0.0:
                raise DomainError(f"logarithm of non-positive value in {e}", expr=e, point=env)
            return math.log(x)
        if e.name == "sin":
            return math.sin(x)
        if e.name == "cos":
            return math.cos(x)
    raise TypeError(f"cannot evaluate {e!r}")


_NP_FUNCS = {"exp": np.exp, "ln": np.log, "sin": np.sin, "cos": np.cos}


class Program:
    """A batch of expressions flattened into a straight-line numpy program.

    Each distinct node of the shared DAG is computed once per call (common
    subexpressions come for free from node interning).  Calling the program
    on points ``X`` of shape (m, n) returns an array of shape (len(exprs), m);
    singular points give inf/nan entries rather than raising.
    """

    def __init__(self, exprs: Sequence[Expr], chart: Chart):
        self.exprs = list(exprs)
        self.chart = chart
        col = {c: i for i, c in enumerate(chart.coordinates)}
        slot: dict[Expr, int] = {}
        ops: list[tuple] = []
        for root in self.exprs:
            # iterative post-order walk; deep trees would overflow the recursion limit
            stack = [(root, False)]
            while stack:
                node, ready = stack.pop()
                if node in slot:
                    continue
                if not ready:
                    stack.append((node, True))
                    stack.extend((c, False) for c in node.children() if c not in slot)
                    continue
                if isinstance(node, Const):
                    op = ("const", float(node.value))
                elif isinstance(node, Var):
                    if node.name not in col:
                        chart.check(node)
                    op = ("var", col[node.name])
                elif isinstance(node, Sum):
                    op = ("sum", tuple(slot[t] for t in node.args))
                elif isinstance(node, Product):
                    op = ("prod", tuple(slot[f] for f in node.args))
                elif isinstance(node, Neg):
                    op = ("neg", slot[node.arg])
                elif isinstance(node, Quotient):
                    op = ("div", slot[node.num], slot[node.den])
                elif isinstance(node, Power):
                    p = node.exponent
                    if isinstance(p, Const):
                        op = ("powc", slot[node.base], float(p.value))
                    else:
                        op = ("pow", slot[node.base], slot[p])
                elif isinstance(node, Func):
                    op = ("func", _NP_FUNCS[node.name], slot[node.arg])
                else:
                    raise TypeError(node)
                slot[node] = len(ops)
                ops.append(op)
        self._ops = ops
        self._outputs = [slot[e] for e in self.exprs]

    def __len__(self) -> int:
        return len(self._ops)

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        m = X.shape[0]
        vals: list = [None] * len(self._ops)
        with np.errstate(all="ignore"):
            for k, op in enumerate(self._ops):
                kind = op[0]
                if kind == "const":
                    v = op[1]
                elif kind == "var":
                    v = X[:, op[1]]
                elif kind == "sum":
                    it = iter(op[1])
                    v = vals[next(it)]
                    for i in it:
                        v = v + vals[i]
                elif kind == "prod":
                    it = iter(op[1])
                    v = vals[next(it)]
                    for i in it:
                        v = v * vals[i]
                elif kind == "neg":
                    v = -vals[op[1]]
                elif kind == "div":
                    v = np.true_divide(vals[op[1]], vals[op[2]])
                elif kind == "powc":
                    v = np.power(vals[op[1]], op[2])
                elif kind == "pow":
                    v = np.power(vals[op[1]], vals[op[2]])
                else:
                    v = op[1](vals[op[2]])
                vals[k] = v
            out = np.empty((len(self._outputs), m))
            for r, k in enumerate(self._outputs):
                out[r] = vals[k]
        return out


def compile_exprs(exprs: Sequence[Expr], chart: Chart) -> Program:
    """Vectorised evaluator for ``exprs``; see `Program`."""
    return Program(exprs, chart)


def evaluate_many(exprs: Sequence[Expr], chart: Chart, X: np.ndarray) -> np.ndarray:
    return compile_exprs(exprs, chart)(X)


def first_singular(exprs: Sequence[Expr], chart: Chart, x: Sequence[float]) -> DomainError:
    """Build a DomainError naming the first expression singular at ``x``."""
    p = Point(chart, x)
    for e in exprs:
        try:
            evaluate(e, p)
        except DomainError as err:
            return err
    return DomainError(f"non-finite value at {tuple(x)}", point=p.as_dict())
