"""Immutable expression trees over chart coordinates.

Nodes are hash-consed: building a tree that is structurally equal to a live
one returns the existing object.  Equality is therefore identity, which
keeps memoised differentiation and CSE during code generation linear in the
size of the DAG.
"""

from __future__ import annotations

import weakref
from fractions import Fraction
from numbers import Real
from typing import Iterable, Union

FUNCTIONS = ("exp", "ln", "sin", "cos")

Number = Union[int, Fraction, float]


class Expr:
    """Base node.  Instances are interned: structurally equal trees are the
    same object, so equality and hashing are identity-based and O(1)."""

    __slots__ = ("__weakref__", "_dcache")

    # precedence used by the printer; higher binds tighter
    prec = 0

    _table: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()

    @classmethod
    def _intern(cls, key: tuple, **fields) -> "Expr":
        full = (cls.__name__, *key)
        obj = Expr._table.get(full)
        if obj is None:
            obj = object.__new__(cls)
            for k, v in fields.items():
                object.__setattr__(obj, k, v)
            object.__setattr__(obj, "_dcache", None)
            Expr._table[full] = obj
        return obj

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def __reduce__(self):
        return (type(self), self._ctor_args())

    def children(self) -> tuple[Expr, ...]:
        return ()

    def _key(self) -> tuple:
        raise NotImplementedError

    def _ctor_args(self) -> tuple:
        return self._key()

    def __repr__(self) -> str:
        args = ", ".join(repr(c) for c in self._key())
        return f"{type(self).__name__}({args})"

    def __str__(self) -> str:
        from .printer import to_string

        return to_string(self)

    # arithmetic sugar; uses the light-simplifying constructors
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, other):
        return power(self, as_expr(other))

    def __neg__(self):
        return neg(self)

    @property
    def is_zero(self) -> bool:
        return isinstance(self, Const) and self.value == 0

    @property
    def is_one(self) -> bool:
        return isinstance(self, Const) and self.value == 1


class Const(Expr):
    """Numeric literal; exact ``Fraction`` for integer/ratio data, ``float`` otherwise."""

    __slots__ = ("value",)
    prec = 100

    def __new__(cls, value: Number):
        if isinstance(value, bool) or not isinstance(value, Real):
            raise TypeError(f"constant must be a real number, got {value!r}")
        if isinstance(value, int):
            value = Fraction(value)
        elif not isinstance(value, Fraction):
            value = float(value)
            if value != value or value in (float("inf"), float("-inf")):
                raise ValueError("constant must be finite")
            if value == 0.0:
                value = 0.0  # fold -0.0
        # 2 and 2.0 are different literals
        return cls._intern((type(value).__name__, value), value=value)

    def _key(self):
        return (self.value,)

    def __repr__(self) -> str:
        return f"Const({self.value!r})"

    @property
    def is_exact(self) -> bool:
        return isinstance(self.value, Fraction)


class Var(Expr):
    __slots__ = ("name",)
    prec = 100

    def __new__(cls, name: str):
        return cls._intern((name,), name=name)

    def _key(self):
        return (self.name,)


def _ids(args) -> tuple[int, ...]:
    return tuple(id(a) for a in args)


class Sum(Expr):
    __slots__ = ("args",)
    prec = 10

    def __new__(cls, *args: Expr):
        if len(args) < 2:
            raise ValueError("Sum needs at least two terms")
        return cls._intern(_ids(args), args=tuple(args))

    def children(self):
        return self.args

    def _key(self):
        return self.args


class Product(Expr):
    __slots__ = ("args",)
    prec = 20

    def __new__(cls, *args: Expr):
        if len(args) < 2:
            raise ValueError("Product needs at least two factors")
        return cls._intern(_ids(args), args=tuple(args))

    def children(self):
        return self.args

    def _key(self):
        return self.args


class Quotient(Expr):
    __slots__ = ("num", "den")
    prec = 20

    def __new__(cls, num: Expr, den: Expr):
        return cls._intern((id(num), id(den)), num=num, den=den)

    def children(self):
        return (self.num, self.den)

    def _key(self):
        return (self.num, self.den)


class Neg(Expr):
    __slots__ = ("arg",)
    prec = 30

    def __new__(cls, arg: Expr):
        return cls._intern((id(arg),), arg=arg)

    def children(self):
        return (self.arg,)

    def _key(self):
        return (self.arg,)


class Power(Expr):
    __slots__ = ("base", "exponent")
    prec = 40

    def __new__(cls, base: Expr, exponent: Expr):
        return cls._intern((id(base), id(exponent)), base=base, exponent=exponent)

    def children(self):
        return (self.base, self.exponent)

    def _key(self):
        return (self.base, self.exponent)


class Func(Expr):
    __slots__ = ("name", "arg")
    prec = 100

    def __new__(cls, name: str, arg: Expr):
        if name not in FUNCTIONS:
            raise ValueError(f"unknown function {name!r}")
        return cls._intern((name, id(arg)), name=name, arg=arg)

    def children(self):
        return (self.arg,)

    def _key(self):
        return (self.name, self.arg)


ZERO = Const(0)
ONE = Const(1)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return Const(value)


def _fold(a: Number, b: Number, op) -> Number:
    if isinstance(a, float) or isinstance(b, float):
        return op(float(a), float(b))
    return op(a, b)


# Light-simplifying constructors.  They never change the value of an
# expression at points where it is defined; `simplify` does the full job.


def _split_coeff(u: Expr) -> tuple[Number, Expr]:
    if isinstance(u, Neg):
        c, body = _split_coeff(u.arg)
        return -c, body
    if isinstance(u, Product) and isinstance(u.args[0], Const):
        rest = u.args[1:]
        return u.args[0].value, rest[0] if len(rest) == 1 else Product(*rest)
    return Fraction(1), u


def add(*terms: Expr) -> Expr:
    # like terms c1*u + c2*u are collected; bodies are interned so dict keys work
    coeffs: dict[Expr, Number] = {}
    const: Number = Fraction(0)
    for t in map(as_expr, terms):
        for u in t.args if isinstance(t, Sum) else (t,):
            if isinstance(u, Const):
                const = _fold(const, u.value, lambda x, y: x + y)
                continue
            c, body = _split_coeff(u)
            coeffs[body] = _fold(coeffs[body], c, lambda x, y: x + y) if body in coeffs else c
    flat = [mul(Const(c), body) for body, c in coeffs.items() if c != 0]
    if const != 0 or isinstance(const, float) and not flat:
        flat.append(Const(const))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Sum(*flat)


def mul(*factors: Expr) -> Expr:
    flat: list[Expr] = []
    coeff: Number = Fraction(1)
    for f in map(as_expr, factors):
        for u in f.args if isinstance(f, Product) else (f,):
            if isinstance(u, Const):
                coeff = _fold(coeff, u.value, lambda x, y: x * y)
            elif isinstance(u, Neg):
                coeff = -coeff
                flat.append(u.arg)
            else:
                flat.append(u)
    if coeff == 0:
        return ZERO
    if not flat:
        return Const(coeff)
    body = flat[0] if len(flat) == 1 else Product(*flat)
    if coeff == 1:
        return body
    if coeff == -1:
        return Neg(body)
    return Product(Const(coeff), *flat)


def neg(e: Expr) -> Expr:
    e = as_expr(e)
    if isinstance(e, Const):
        return Const(-e.value)
    if isinstance(e, Neg):
        return e.arg
    if isinstance(e, Product) and isinstance(e.args[0], Const):
        # -(c*x) -> (-c)*x, so a numeric coefficient is the canonical home of the sign
        return mul(Const(-e.args[0].value), *e.args[1:])
    return Neg(e)


def div(num: Expr, den: Expr) -> Expr:
    num, den = as_expr(num), as_expr(den)
    if den.is_one:
        return num
    if num.is_zero:
        return ZERO
    if isinstance(num, Const) and isinstance(den, Const) and den.value != 0:
        return Const(_fold(num.value, den.value, lambda x, y: x / y))
    return Quotient(num, den)


def power(base: Expr, exponent: Expr) -> Expr:
    base, exponent = as_expr(base), as_expr(exponent)
    if exponent.is_zero:
        return ONE
    if exponent.is_one:
        return base
    if isinstance(base, Const) and isinstance(exponent, Const):
        folded = _fold_power(base.value, exponent.value)
        if folded is not None:
            return Const(folded)
    return Power(base, exponent)


def _fold_power(b: Number, e: Number):
    if isinstance(e, Fraction) and e.denominator == 1:
        if b == 0 and e < 0:
            return None
        if isinstance(b, Fraction):
            return b ** int(e)
        return b ** int(e)
    if isinstance(e, float) and e.is_integer() and not (b == 0 and e < 0):
        return float(b) ** int(e)
    return None


def func(name: str, arg: Expr) -> Expr:
    arg = as_expr(arg)
    if isinstance(arg, Const) and arg.value == 0:
        if name in ("exp", "cos"):
            return ONE
        if name == "sin":
            return ZERO
    if name == "ln" and arg.is_one:
        return ZERO
    return Func(name, arg)


def exp(e) -> Expr:
    return func("exp", as_expr(e))


def ln(e) -> Expr:
    return func("ln", as_expr(e))


def sin(e) -> Expr:
    return func("sin", as_expr(e))


def cos(e) -> Expr:
    return func("cos", as_expr(e))


def total(terms: Iterable[Expr]) -> Expr:
    """Sum of an iterable of expressions (``0`` when empty)."""
    return add(*terms)


def variables(e: Expr) -> set[str]:
    seen: set[str] = set()
    stack = [e]
    visited: set[int] = set()
    while stack:
        node = stack.pop()
        if id(node) in visited:
            continue
        visited.add(id(node))
        if isinstance(node, Var):
            seen.add(node.name)
        stack.extend(node.children())
    return seen


def size(e: Expr) -> int:
    """Number of distinct nodes in the DAG."""
    seen: set[Expr] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        stack.extend(node.children())
    return len(seen)
