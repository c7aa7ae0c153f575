"""Exact partial derivatives and conservative simplification."""

from __future__ import annotations

from fractions import Fraction

from .chart import Chart
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
    cos,
    div,
    exp,
    func,
    ln,
    mul,
    neg,
    power,
    sin,
)


def differentiate(e: Expr, v: str, chart: Chart | None = None) -> Expr:
    """Partial derivative of ``e`` with respect to coordinate ``v``.

    Derivatives are cached on the (interned) nodes, so shared subtrees are
    differentiated once per coordinate.  The result is lightly simplified
    (zeros and unit factors dropped) but not canonicalised.
    """
    if chart is not None:
        chart.index(v)
    return _diff(e, v)


def _diff(e: Expr, v: str) -> Expr:
    cache = e._dcache
    if cache is None:
        cache = {}
        object.__setattr__(e, "_dcache", cache)
    hit = cache.get(v)
    if hit is not None:
        return hit
    d = _diff_node(e, v)
    cache[v] = d
    return d


def _diff_node(e: Expr, v: str) -> Expr:
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == v else ZERO
    if isinstance(e, Sum):
        return add(*(_diff(t, v) for t in e.args))
    if isinstance(e, Neg):
        return neg(_diff(e.arg, v))
    if isinstance(e, Product):
        terms = []
        for i, f in enumerate(e.args):
            df = _diff(f, v)
            if df.is_zero:
                continue
            terms.append(mul(*e.args[:i], df, *e.args[i + 1:]))
        return add(*terms)
    if isinstance(e, Quotient):
        dn = _diff(e.num, v)
        dd = _diff(e.den, v)
        if dd.is_zero:
            return div(dn, e.den)
        # (n/d)' = n'/d - n d'/d^2
        return add(div(dn, e.den), neg(div(mul(e.num, dd), power(e.den, Const(2)))))
    if isinstance(e, Power):
        b, p = e.base, e.exponent
        db = _diff(b, v)
        dp = _diff(p, v)
        if dp.is_zero:
            if db.is_zero:
                return ZERO
            if isinstance(p, Const):
                lowered = power(b, Const(p.value - 1))
            else:
                lowered = power(b, add(p, Const(-1)))
            return mul(p, lowered, db)
        # general case: d(b^p) = b^p (p' ln b + p b'/b)
        inner = mul(dp, ln(b))
        if not db.is_zero:
            inner = add(inner, div(mul(p, db), b))
        return mul(e, inner)
    if isinstance(e, Func):
        da = _diff(e.arg, v)
        if da.is_zero:
            return ZERO
        if e.name == "exp":
            outer = e
        elif e.name == "ln":
            return div(da, e.arg)
        elif e.name == "sin":
            outer = cos(e.arg)
        elif e.name == "cos":
            outer = neg(sin(e.arg))
        else:  # pragma: no cover - guarded by Func
            raise ValueError(e.name)
        return mul(outer, da)
    raise TypeError(f"cannot differentiate {e!r}")


def gradient(e: Expr, chart: Chart) -> tuple[Expr, ...]:
    return tuple(differentiate(e, c) for c in chart.coordinates)


def simplify(e: Expr) -> Expr:
    """Remove neutral elements and fold constants, bottom-up, to a fixpoint.

    Conservative: no expansion, factoring or reordering of non-constant
    terms.  The result is idempotent under a second application.
    """
    memo: dict[Expr, Expr] = {}
    current = e
    while True:
        nxt = _simp(current, memo)
        if nxt == current:
            return nxt
        current = nxt


def _simp(e: Expr, memo: dict) -> Expr:
    hit = memo.get(e)
    if hit is not None:
        return hit
    r = _simp_node(e, memo)
    memo[e] = r
    return r


def _simp_node(e: Expr, memo: dict) -> Expr:
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Sum):
        return add(*(_simp(t, memo) for t in e.args))
    if isinstance(e, Product):
        return mul(*(_simp(f, memo) for f in e.args))
    if isinstance(e, Neg):
        return neg(_simp(e.arg, memo))
    if isinstance(e, Quotient):
        num, den = _simp(e.num, memo), _simp(e.den, memo)
        if isinstance(den, Const) and den.value != 0 and not isinstance(num, Const):
            # x / c  ->  (1/c) * x keeps constants foldable inside products
            inv = Fraction(1) / den.value if isinstance(den.value, Fraction) else 1.0 / den.value
            return mul(Const(inv), num)
        if isinstance(den, Neg):
            return neg(div(num, den.arg))
        return div(num, den)
    if isinstance(e, Power):
        return power(_simp(e.base, memo), _simp(e.exponent, memo))
    if isinstance(e, Func):
        arg = _simp(e.arg, memo)
        if e.name == "ln" and isinstance(arg, Func) and arg.name == "exp":
            return arg.arg
        return func(e.name, arg)
    raise TypeError(f"cannot simplify {e!r}")


def substitute(e: Expr, mapping: dict[str, Expr]) -> Expr:
    memo: dict[Expr, Expr] = {}

    def go(node: Expr) -> Expr:
        hit = memo.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Var):
            r = mapping.get(node.name, node)
        elif isinstance(node, Const):
            r = node
        elif isinstance(node, Sum):
            r = add(*(go(t) for t in node.args))
        elif isinstance(node, Product):
            r = mul(*(go(f) for f in node.args))
        elif isinstance(node, Neg):
            r = neg(go(node.arg))
        elif isinstance(node, Quotient):
            r = div(go(node.num), go(node.den))
        elif isinstance(node, Power):
            r = power(go(node.base), go(node.exponent))
        elif isinstance(node, Func):
            r = func(node.name, go(node.arg))
        else:
            raise TypeError(node)
        memo[node] = r
        return r

    return go(e)


__all__ = ["differentiate", "gradient", "simplify", "substitute", "exp", "ln", "sin", "cos"]
