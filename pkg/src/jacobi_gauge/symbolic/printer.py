"""Infix printer whose output parses back to the same tree."""

from __future__ import annotations

from fractions import Fraction

from .nodes import Const, Expr, Func, Neg, Power, Product, Quotient, Sum, Var

_ATOM = 100


def _const_text(c: Const) -> str:
    v = c.value
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator)
        return f"{v.numerator}/{v.denominator}"
    text = repr(v)
    if "e" not in text and "." not in text and "inf" not in text:
        text += ".0"
    return text


def _prec(e: Expr) -> int:
    if isinstance(e, Const):
        v = e.value
        if v < 0:
            return Neg.prec
        if isinstance(v, Fraction) and v.denominator != 1:
            return Quotient.prec
        return _ATOM
    return e.prec


def _wrap(e: Expr, min_prec: int) -> str:
    s = to_string(e)
    return f"({s})" if _prec(e) < min_prec else s


def _negated(t: Expr) -> Expr | None:
    """``u`` when ``t`` can be printed as ``- u`` inside a sum."""
    if isinstance(t, Neg):
        return t.arg
    if isinstance(t, Const) and t.value < 0:
        return Const(-t.value)
    if isinstance(t, Product) and isinstance(t.args[0], Const) and t.args[0].value < 0:
        c = -t.args[0].value
        return Product(Const(c), *t.args[1:])
    return None


def to_string(e: Expr) -> str:
    if isinstance(e, Const):
        return _const_text(e)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({to_string(e.arg)})"
    if isinstance(e, Sum):
        parts = [_wrap(e.args[0], Sum.prec + 1)]
        for t in e.args[1:]:
            negated = _negated(t)
            if negated is not None:
                # a - b parses as Sum(a, Neg(b)); b must bind tighter than +
                parts.append(f" - {_wrap(negated, Sum.prec + 1)}")
            else:
                parts.append(f" + {_wrap(t, Sum.prec + 1)}")
        return "".join(parts)
    if isinstance(e, Product):
        # a Quotient in first position is fine (left-assoc); elsewhere it must
        # be parenthesised or the parser would build Quotient(Product(...), ...)
        first = _wrap(e.args[0], Product.prec)
        rest = [_wrap(f, _ATOM if isinstance(f, Quotient) else Product.prec + 1) for f in e.args[1:]]
        return "*".join([first, *rest])
    if isinstance(e, Quotient):
        return f"{_wrap(e.num, Product.prec)}/{_wrap(e.den, Power.prec)}"
    if isinstance(e, Neg):
        return f"-{_wrap(e.arg, Neg.prec)}"
    if isinstance(e, Power):
        base = _wrap(e.base, _ATOM)
        exp = e.exponent
        exp_s = to_string(exp) if _prec(exp) >= Power.prec else f"({to_string(exp)})"
        return f"{base}^{exp_s}"
    raise TypeError(f"cannot print {e!r}")
