"""Compatible Jacobi structures generated by gauge functions.

For a Jacobi structure (P, a) and any function phi,

    P~ = e^phi P,        a~^i = e^phi (a^i - P^{ij} d_j phi)

is again a Jacobi structure, compatible with (P, a), and f -> f e^{-phi}
maps the bracket of (P, a) onto the bracket of (P~, a~).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .sampling import (
    Box,
    make_box,
    random_polynomial,
    relative_residual,
    rng_for,
    valid_points,
)
from .structures import (
    Bivector,
    JacobiStructure,
    VectorField,
    jacobi_bracket,
    sum_structures,
)
from .symbolic import Chart, Expr, add, as_expr, differentiate, exp, mul, simplify
from .symbolic.nodes import neg
from .symbolic.numeric import compile_exprs
from .verification import DEFAULT_TOL, VerificationReport, verify_jacobi

CONSTANCY_PROBES = 10
CONSTANCY_ATOL = 1e-12


class ConstantGaugeWarning(UserWarning):
    """A constant gauge only rescales the structure by e^c."""


@dataclass(frozen=True)
class GaugeFunction:
    phi: Expr
    chart: Chart
    is_constant: bool
    decided_by: str  # "structural" or "numeric"

    @classmethod
    def make(cls, phi, chart: Chart, seed: int = 0, box: Box | None = None) -> GaugeFunction:
        """Wrap ``phi`` and decide whether it is constant.

        Structural first: every partial derivative simplifies to literal 0.
        Otherwise the gradient is probed at seeded points.
        """
        phi = chart.check(simplify(as_expr(phi)))
        grads = [simplify(differentiate(phi, c)) for c in chart.coordinates]
        if all(g.is_zero for g in grads):
            return cls(phi, chart, True, "structural")
        X = valid_points(chart, make_box(chart, box), CONSTANCY_PROBES, rng_for(seed, 7), grads)
        vals = compile_exprs(grads, chart)(X)
        constant = bool(np.all(np.abs(vals) <= CONSTANCY_ATOL))
        return cls(phi, chart, constant, "numeric")


def _gauge_of(phi, chart: Chart) -> GaugeFunction:
    if isinstance(phi, GaugeFunction):
        chart.require_same(phi.chart)
        return phi
    return GaugeFunction.make(phi, chart)


def gauge_transform(J: JacobiStructure, phi) -> JacobiStructure:
    """(e^phi P, e^phi (a - i(P) d phi)) with (i(P) d phi)^i = P^{ij} d_j phi."""
    g = _gauge_of(phi, J.chart)
    if g.is_constant:
        warnings.warn(
            "constant gauge: the transformed structure is the original one rescaled by a constant "
            "and carries no new integrability information",
            ConstantGaugeWarning,
            stacklevel=2,
        )
    chart = J.chart
    n = J.n
    w = exp(g.phi)
    dphi = [differentiate(g.phi, c) for c in chart.coordinates]
    P = Bivector(chart, {ij: mul(w, e) for ij, e in J.P.upper.items()})
    a = []
    for i in range(n):
        contraction = add(*(mul(J.P[i, j], dphi[j]) for j in range(n)))
        a.append(mul(w, add(J.a[i], neg(contraction))))
    return JacobiStructure(P, VectorField(chart, tuple(a)))


def gauge_map_psi(f, phi) -> Expr:
    """f -> f e^{-phi}; the inverse map uses -phi."""
    phi_e = phi.phi if isinstance(phi, GaugeFunction) else as_expr(phi)
    return mul(as_expr(f), exp(neg(phi_e)))


@dataclass(frozen=True)
class CompatibilityReport:
    first: VerificationReport
    second: VerificationReport
    combined: VerificationReport

    @property
    def passed(self) -> bool:
        return self.first.passed and self.second.passed and self.combined.passed

    def to_dict(self) -> dict:
        return {
            "first": self.first.to_dict(),
            "second": self.second.to_dict(),
            "sum": self.combined.to_dict(),
            "passed": self.passed,
        }


def check_compatibility(J1: JacobiStructure, J2: JacobiStructure, samples: int = 100, seed: int = 42,
                        tol: float = DEFAULT_TOL, box: Box | None = None) -> CompatibilityReport:
    J1.chart.require_same(J2.chart)
    return CompatibilityReport(
        verify_jacobi(J1, samples, seed, tol, box),
        verify_jacobi(J2, samples, seed, tol, box),
        verify_jacobi(sum_structures(J1, J2), samples, seed, tol, box),
    )


def isomorphism_exprs(J: JacobiStructure, phi, pairs) -> list[tuple[Expr, Expr]]:
    """(Psi({f,g}_J), {Psi f, Psi g}_J~) for each test pair."""
    g = _gauge_of(phi, J.chart)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConstantGaugeWarning)
        Jt = gauge_transform(J, g)
    out = []
    for f, h in pairs:
        lhs = gauge_map_psi(jacobi_bracket(J, f, h), g)
        rhs = jacobi_bracket(Jt, gauge_map_psi(f, g), gauge_map_psi(h, g))
        out.append((lhs, rhs))
    return out


def check_isomorphism(J: JacobiStructure, phi, samples: int = 100, seed: int = 42, tol: float = DEFAULT_TOL,
                      box: Box | None = None, pairs=None) -> float:
    """Max scale-relative residual of Psi({f,g}) - {Psi f, Psi g}~ over seeded points.

    ``tol`` is accepted for interface symmetry; the caller compares the
    returned residual against it.
    """
    if pairs is None:
        rng = rng_for(seed, 2)
        pairs = [(random_polynomial(J.chart, 2, rng), random_polynomial(J.chart, 2, rng)) for _ in range(10)]
    exprs = isomorphism_exprs(J, phi, pairs)
    flat = [e for pair in exprs for e in pair]
    X = valid_points(J.chart, make_box(J.chart, box), samples, rng_for(seed, 3), flat)
    vals = compile_exprs(flat, J.chart)(X)
    lhs, rhs = vals[0::2], vals[1::2]
    return float(np.max(relative_residual(lhs - rhs, lhs, rhs)))


__all__ = [
    "ConstantGaugeWarning",
    "GaugeFunction",
    "gauge_transform",
    "gauge_map_psi",
    "sum_structures",
    "CompatibilityReport",
    "check_compatibility",
    "check_isomorphism",
]
