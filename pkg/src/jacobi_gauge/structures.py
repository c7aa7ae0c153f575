"""Bivectors, vector fields, trivectors and Jacobi structures in one chart.

Component formulas (indices run over the chart, repeated ``l``/``k`` summed):

    {f,g}          = P^{kl} f_k g_l + a^k (f g_k - g f_k)
    [P,P]^{ijk}    = 2 (P^{li} d_l P^{jk} + P^{lj} d_l P^{ki} + P^{lk} d_l P^{ij})
    (a^P)^{ijk}    = a^i P^{jk} + a^j P^{ki} + a^k P^{ij}
    (L_a P)^{ij}   = a^k d_k P^{ij} - P^{kj} d_k a^i - P^{ik} d_k a^j

The Schouten normalisation is the one for which ``[P,P] = 2 a^P`` and
``L_a P = 0`` hold exactly when the bracket satisfies the Jacobi identity;
`verification.consistency_check` tests that agreement.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

from .errors import ChartMismatch
from .symbolic import (
    ZERO,
    Chart,
    Const,
    Expr,
    add,
    as_expr,
    differentiate,
    mul,
    simplify,
)
from .symbolic.nodes import neg


def _checked(chart: Chart, e) -> Expr:
    return chart.check(as_expr(e))


@dataclass(frozen=True)
class Bivector:
    """Antisymmetric P^{ij}; only the strict upper triangle is stored."""

    chart: Chart
    upper: Mapping[tuple[int, int], Expr] = field(default_factory=dict)

    def __post_init__(self):
        n = self.chart.dimension
        clean: dict[tuple[int, int], Expr] = {}
        for (i, j), e in dict(self.upper).items():
            if not (0 <= i < j < n):
                raise ValueError(f"bivector entry ({i}, {j}) is not strictly upper-triangular for n={n}")
            e = simplify(_checked(self.chart, e))
            if not e.is_zero:
                clean[(i, j)] = e
        object.__setattr__(self, "upper", clean)

    @classmethod
    def zero(cls, chart: Chart) -> Bivector:
        return cls(chart, {})

    @classmethod
    def from_matrix(cls, chart: Chart, rows: Sequence[Sequence]) -> Bivector:
        n = chart.dimension
        return cls(chart, {(i, j): as_expr(rows[i][j]) for i in range(n) for j in range(i + 1, n)})

    def __getitem__(self, ij: tuple[int, int]) -> Expr:
        i, j = ij
        if i == j:
            return ZERO
        if i < j:
            return self.upper.get((i, j), ZERO)
        return neg(self.upper.get((j, i), ZERO))

    @property
    def n(self) -> int:
        return self.chart.dimension

    def matrix(self) -> list[list[Expr]]:
        return [[self[i, j] for j in range(self.n)] for i in range(self.n)]

    def map(self, fn) -> Bivector:
        return Bivector(self.chart, {ij: fn(e) for ij, e in self.upper.items()})

    def __add__(self, other: Bivector) -> Bivector:
        self.chart.require_same(other.chart)
        keys = set(self.upper) | set(other.upper)
        return Bivector(self.chart, {k: add(self[k], other[k]) for k in keys})

    def scale(self, factor) -> Bivector:
        f = as_expr(factor)
        return self.map(lambda e: mul(f, e))


@dataclass(frozen=True)
class VectorField:
    chart: Chart
    components: tuple[Expr, ...]

    def __post_init__(self):
        comps = tuple(simplify(_checked(self.chart, c)) for c in self.components)
        if len(comps) != self.chart.dimension:
            raise ValueError(f"vector field has {len(comps)} components, chart dimension is {self.chart.dimension}")
        object.__setattr__(self, "components", comps)

    @classmethod
    def zero(cls, chart: Chart) -> VectorField:
        return cls(chart, (ZERO,) * chart.dimension)

    def __getitem__(self, i: int) -> Expr:
        return self.components[i]

    def __iter__(self) -> Iterator[Expr]:
        return iter(self.components)

    def __len__(self) -> int:
        return len(self.components)

    def __add__(self, other: VectorField) -> VectorField:
        self.chart.require_same(other.chart)
        return VectorField(self.chart, tuple(add(x, y) for x, y in zip(self, other)))

    def scale(self, factor) -> VectorField:
        f = as_expr(factor)
        return VectorField(self.chart, tuple(mul(f, c) for c in self))

    @property
    def is_zero(self) -> bool:
        return all(c.is_zero for c in self.components)


@dataclass(frozen=True)
class TriVector:
    """Totally antisymmetric T^{ijk}; components stored for i < j < k."""

    chart: Chart
    upper: Mapping[tuple[int, int, int], Expr]

    def __post_init__(self):
        clean = {}
        for key, e in dict(self.upper).items():
            i, j, k = key
            if not (0 <= i < j < k < self.chart.dimension):
                raise ValueError(f"trivector entry {key} is not strictly increasing")
            e = simplify(e)
            if not e.is_zero:
                clean[key] = e
        object.__setattr__(self, "upper", clean)

    def __getitem__(self, ijk: tuple[int, int, int]) -> Expr:
        if len(set(ijk)) < 3:
            return ZERO
        order = sorted(range(3), key=lambda t: ijk[t])
        # parity of the sorting permutation
        sign = 1
        perm = list(order)
        for a in range(3):
            for b in range(a + 1, 3):
                if perm[a] > perm[b]:
                    sign = -sign
        e = self.upper.get(tuple(sorted(ijk)), ZERO)
        return e if sign > 0 else neg(e)

    @staticmethod
    def index_triples(n: int):
        return itertools.combinations(range(n), 3)

    @property
    def is_zero(self) -> bool:
        return not self.upper


@dataclass(frozen=True)
class JacobiStructure:
    """The pair (P, a).  ``verified_tol`` is set by `verification.mark_verified`."""

    P: Bivector
    a: VectorField
    verified_tol: float | None = None

    def __post_init__(self):
        if self.P.chart != self.a.chart:
            raise ChartMismatch("P and a live on different charts")

    @property
    def chart(self) -> Chart:
        return self.P.chart

    @property
    def n(self) -> int:
        return self.chart.dimension

    @classmethod
    def from_components(cls, chart: Chart, upper: Mapping[tuple[int, int], object], a: Sequence | None = None):
        P = Bivector(chart, {k: as_expr(v) for k, v in upper.items()})
        av = VectorField(chart, tuple(as_expr(c) for c in a)) if a is not None else VectorField.zero(chart)
        return cls(P, av)

    def is_poisson(self) -> bool:
        return self.a.is_zero

    def components(self) -> list[Expr]:
        """Flat list of distinct components: P upper triangle then a."""
        return [self.P[i, j] for i in range(self.n) for j in range(i + 1, self.n)] + list(self.a)


def _same_chart(*objs) -> Chart:
    chart = objs[0].chart
    for o in objs[1:]:
        chart.require_same(o.chart)
    return chart


def jacobi_bracket(J: JacobiStructure, f, g) -> Expr:
    """{f,g} = P^{kl} d_k f d_l g + a^k (f d_k g - g d_k f)."""
    chart = J.chart
    f = _checked(chart, f)
    g = _checked(chart, g)
    n = J.n
    df = [differentiate(f, c) for c in chart.coordinates]
    dg = [differentiate(g, c) for c in chart.coordinates]
    terms = []
    for (k, l), p in J.P.upper.items():
        # P^{kl} f_k g_l + P^{lk} f_l g_k  with P^{lk} = -P^{kl}
        terms.append(mul(p, add(mul(df[k], dg[l]), neg(mul(df[l], dg[k])))))
    for k in range(n):
        ak = J.a[k]
        if ak.is_zero:
            continue
        terms.append(mul(ak, add(mul(f, dg[k]), neg(mul(g, df[k])))))
    return add(*terms)


def _dP(P: Bivector) -> dict[tuple[int, int, int], Expr]:
    """d_l P^{ij} for the stored upper entries, keyed (l, i, j)."""
    out = {}
    for (i, j), e in P.upper.items():
        for l, c in enumerate(P.chart.coordinates):
            d = differentiate(e, c)
            if not d.is_zero:
                out[(l, i, j)] = d
    return out


def _d_entry(P: Bivector, dP: dict, l: int, i: int, j: int) -> Expr:
    if i < j:
        return dP.get((l, i, j), ZERO)
    if i > j:
        d = dP.get((l, j, i))
        return neg(d) if d is not None else ZERO
    return ZERO


def schouten_pp(P: Bivector) -> TriVector:
    """[P,P]^{ijk} = 2 sum_l (P^{li} d_l P^{jk} + P^{lj} d_l P^{ki} + P^{lk} d_l P^{ij})."""
    n = P.n
    dP = _dP(P)
    comps = {}
    for i, j, k in TriVector.index_triples(n):
        terms = []
        for l in range(n):
            for (u, v, w) in ((i, j, k), (j, k, i), (k, i, j)):
                p = P[l, u]
                if p.is_zero:
                    continue
                d = _d_entry(P, dP, l, v, w)
                if not d.is_zero:
                    terms.append(mul(p, d))
        comps[(i, j, k)] = mul(Const(2), add(*terms))
    return TriVector(P.chart, comps)


def wedge_ap(a: VectorField, P: Bivector) -> TriVector:
    """(a^P)^{ijk} = a^i P^{jk} + a^j P^{ki} + a^k P^{ij}."""
    _same_chart(a, P)
    comps = {}
    for i, j, k in TriVector.index_triples(P.n):
        comps[(i, j, k)] = add(mul(a[i], P[j, k]), mul(a[j], P[k, i]), mul(a[k], P[i, j]))
    return TriVector(P.chart, comps)


def _lie_parts(P: Bivector, a: VectorField) -> dict[tuple[int, int], tuple[Expr, Expr]]:
    """Per upper entry: (a^k d_k P^{ij},  P^{kj} d_k a^i + P^{ik} d_k a^j)."""
    chart = _same_chart(P, a)
    n = P.n
    da = [[differentiate(a[i], c) for c in chart.coordinates] for i in range(n)]
    dP = _dP(P)
    parts = {}
    for i in range(n):
        for j in range(i + 1, n):
            transport = add(*(mul(a[k], _d_entry(P, dP, k, i, j)) for k in range(n)))
            stretch = add(*(add(mul(P[k, j], da[i][k]), mul(P[i, k], da[j][k])) for k in range(n)))
            parts[(i, j)] = (transport, stretch)
    return parts


def lie_derivative_pa(P: Bivector, a: VectorField) -> Bivector:
    """(L_a P)^{ij} = a^k d_k P^{ij} - P^{kj} d_k a^i - P^{ik} d_k a^j."""
    parts = _lie_parts(P, a)
    return Bivector(P.chart, {ij: add(t, neg(s)) for ij, (t, s) in parts.items()})


def sum_structures(J1: JacobiStructure, J2: JacobiStructure) -> JacobiStructure:
    """(P1 + P2, a1 + a2); no verification implied."""
    J1.chart.require_same(J2.chart)
    return JacobiStructure(J1.P + J2.P, J1.a + J2.a)
