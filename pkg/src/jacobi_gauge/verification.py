"""Numerical verification of the Jacobi conditions.

Three independent residuals are sampled at seeded points:

* tensor identity  ``[P,P] - 2 a^P``  (componentwise),
* Lie derivative   ``L_a P``           (componentwise),
* cyclic sum       ``{{f,g},h} + {{g,h},f} + {{h,f},g}`` for random
  quadratic test functions.

The inner bracket is differentiated by the product rule on sampled jets
(values, gradients and Hessians of f, g, h and first derivatives of P and a),
which is much cheaper than nesting symbolic brackets and gives the same
numbers; `cyclic_exprs` keeps the symbolic form for cross-checking.

The first two are the fast tensor-level check.  The third only uses the
bracket formula, so it is the ground truth against which the Schouten
convention is calibrated (see `consistency_check`).
"""

from __future__ import annotations

import dataclasses
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
    JacobiStructure,
    _lie_parts,
    jacobi_bracket,
    schouten_pp,
    wedge_ap,
)
from .symbolic import Chart, Expr, differentiate
from .symbolic.numeric import compile_exprs

DEFAULT_TOL = 1e-9
N_TEST_TRIPLES = 10
TEST_DEGREE = 2

# sub-stream ids for rng_for(seed, ...)
_POINTS, _FUNCS = 0, 1


@dataclass(frozen=True)
class VerificationReport:
    tensor_residual: float
    lie_residual: float
    cyclic_residual: float
    samples: int
    seed: int
    tol: float
    passed: bool

    @property
    def tensor_passed(self) -> bool:
        return max(self.tensor_residual, self.lie_residual) <= self.tol

    @property
    def cyclic_passed(self) -> bool:
        return self.cyclic_residual <= self.tol

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def sample_triples(J: JacobiStructure, seed: int, count: int = N_TEST_TRIPLES) -> list[tuple[Expr, Expr, Expr]]:
    rng = rng_for(seed, _FUNCS)
    return [tuple(random_polynomial(J.chart, TEST_DEGREE, rng) for _ in range(3)) for _ in range(count)]


def tensor_residual_exprs(J: JacobiStructure) -> tuple[list[tuple[Expr, Expr]], list[tuple[Expr, Expr]]]:
    """(lhs, rhs) pairs for [P,P] = 2 a^P and for the two halves of L_a P."""
    S = schouten_pp(J.P)
    W = wedge_ap(J.a, J.P)
    eq1 = [(S[ijk], 2 * W[ijk]) for ijk in S.index_triples(J.n)]
    eq2 = list(_lie_parts(J.P, J.a).values())
    return eq1, eq2


def cyclic_exprs(J: JacobiStructure, triples) -> list[tuple[Expr, Expr, Expr]]:
    out = []
    for f, g, h in triples:
        out.append((
            jacobi_bracket(J, jacobi_bracket(J, f, g), h),
            jacobi_bracket(J, jacobi_bracket(J, g, h), f),
            jacobi_bracket(J, jacobi_bracket(J, h, f), g),
        ))
    return out


def _max_pair_residual(pairs, X, chart) -> float:
    if not pairs:
        return 0.0
    flat = [e for pair in pairs for e in pair]
    vals = compile_exprs(flat, chart)(X)
    lhs, rhs = vals[0::2], vals[1::2]
    return float(np.max(relative_residual(lhs - rhs, lhs, rhs)))


def _jets(exprs: list[Expr], chart: Chart, X: np.ndarray, order: int):
    """Values, gradients (and Hessians if order == 2) of ``exprs`` at ``X``; point axis last."""
    n, q, m = chart.dimension, len(exprs), X.shape[0]
    cs = chart.coordinates
    d1 = [[differentiate(e, c) for c in cs] for e in exprs]
    flat = list(exprs) + [d for row in d1 for d in row]
    if order == 2:
        flat += [differentiate(d, c) for row in d1 for d in row for c in cs]
    vals = compile_exprs(flat, chart)(X)
    out = [vals[:q], vals[q:q + q * n].reshape(q, n, m)]
    if order == 2:
        out.append(vals[q + q * n:].reshape(q, n, n, m))
    return out


def cyclic_terms(J: JacobiStructure, triples, X: np.ndarray) -> np.ndarray:
    """The three cyclic terms for each triple, shape (3, len(triples), len(X))."""
    chart, n, m = J.chart, J.n, X.shape[0]
    iu = [(i, j) for i in range(n) for j in range(i + 1, n)]
    comps = [J.P[i, j] for i, j in iu] + list(J.a)
    cv, cg = _jets(comps, chart, X, 1)
    P = np.zeros((n, n, m))
    dP = np.zeros((n, n, n, m))  # dP[k, l, r] = d_r P^{kl}
    for t, (i, j) in enumerate(iu):
        P[i, j], P[j, i] = cv[t], -cv[t]
        dP[i, j], dP[j, i] = cg[t], -cg[t]
    a, da = cv[len(iu):], cg[len(iu):]  # da[k, r] = d_r a^k

    funcs = list(dict.fromkeys(u for t in triples for u in t))
    index = {u: i for i, u in enumerate(funcs)}
    F, dF, ddF = _jets(funcs, chart, X, 2)

    def bracket(f, df, g, dg):
        return np.einsum("klp,kp,lp->p", P, df, dg) + np.einsum("kp,kp->p", a, f * dg - g * df)

    def bracket_grad(u, w):
        f, df, hf = F[u], dF[u], ddF[u]
        g, dg, hg = F[w], dF[w], ddF[w]
        return (np.einsum("klrp,kp,lp->rp", dP, df, dg)
                + np.einsum("klp,krp,lp->rp", P, hf, dg)
                + np.einsum("klp,kp,lrp->rp", P, df, hg)
                + np.einsum("krp,kp->rp", da, f * dg - g * df)
                + np.einsum("kp,rp,kp->rp", a, df, dg) - np.einsum("kp,rp,kp->rp", a, dg, df)
                + np.einsum("kp,krp->rp", a, f * hg - g * hf))

    out = np.empty((3, len(triples), m))
    for t, (f, g, h) in enumerate(triples):
        i, j, k = index[f], index[g], index[h]
        for c, (u, w, z) in enumerate([(i, j, k), (j, k, i), (k, i, j)]):
            B = bracket(F[u], dF[u], F[w], dF[w])
            out[c, t] = bracket(B, bracket_grad(u, w), F[z], dF[z])
    return out


def _max_cyclic_residual(J: JacobiStructure, triples, X) -> float:
    a, b, c = cyclic_terms(J, triples, X)
    return float(np.max(relative_residual(a + b + c, a, b, c)))


def sample_structure_points(J: JacobiStructure, samples: int, seed: int, box: Box | None = None,
                            stream: int = _POINTS) -> np.ndarray:
    """Seeded points at which every component of J is finite."""
    return valid_points(J.chart, make_box(J.chart, box), samples, rng_for(seed, stream), J.components())


def verify_jacobi(J: JacobiStructure, samples: int = 100, seed: int = 42, tol: float = DEFAULT_TOL,
                  box: Box | None = None) -> VerificationReport:
    """Sample the tensor, Lie-derivative and cyclic-bracket residuals of J.

    All residuals are scale-relative: ``|lhs - rhs| / max(1, |lhs|, |rhs|)``
    (for the cyclic sum, the three cyclic terms provide the scale).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if not tol > 0:
        raise ValueError("tol must be positive")
    eq1, eq2 = tensor_residual_exprs(J)
    triples = sample_triples(J, seed)
    needed = J.components() + [e for p in eq1 + eq2 for e in p]
    needed += [differentiate(e, c) for e in J.components() for c in J.chart.coordinates]
    X = valid_points(J.chart, make_box(J.chart, box), samples, rng_for(seed, _POINTS), needed)
    r1 = _max_pair_residual(eq1, X, J.chart)
    r2 = _max_pair_residual(eq2, X, J.chart)
    r3 = _max_cyclic_residual(J, triples, X)
    return VerificationReport(
        tensor_residual=r1,
        lie_residual=r2,
        cyclic_residual=r3,
        samples=samples,
        seed=seed,
        tol=tol,
        passed=max(r1, r2, r3) <= tol,
    )


def mark_verified(J: JacobiStructure, report: VerificationReport) -> JacobiStructure:
    if not report.passed:
        raise ValueError("cannot mark a structure verified from a failing report")
    return dataclasses.replace(J, verified_tol=report.tol)


def consistency_check(J: JacobiStructure, samples: int = 100, seed: int = 42, tol: float = DEFAULT_TOL,
                      box: Box | None = None) -> bool:
    """True iff the tensor-level and bracket-level checks agree on pass/fail."""
    r = verify_jacobi(J, samples, seed, tol, box)
    return r.tensor_passed == r.cyclic_passed
