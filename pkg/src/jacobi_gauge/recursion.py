"""Bi-Hamiltonian integral chains  {I_{k-1}, f}_J = {I_k, f}_J~  for all f.

The bracket with a fixed first slot is a first-order operator,

    {I, f} = V^l d_l f + s f,   V^l = P^{kl} d_k I + I a^l,   s = -a^k d_k I,

so "for all f" is equivalent to equality of the pairs (V, s).  Each step
expands I_k over a finite user basis and solves the resulting linear
conditions by collocation and SVD least squares.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConstantGaugeRefused, DegenerateSampling, EmptyBasis
from .gauge import ConstantGaugeWarning, GaugeFunction, gauge_transform
from .sampling import (
    Box,
    make_box,
    monomials,
    relative_residual,
    rng_for,
    valid_points,
)
from .structures import JacobiStructure, VectorField, jacobi_bracket
from .symbolic import Chart, Const, Expr, add, as_expr, differentiate, exp, mul
from .symbolic.nodes import neg
from .symbolic.numeric import compile_exprs

DEFAULT_SVD_CUTOFF = 1e-10
RANK_CUTOFF = 1e-8
EXP_GUARD = 1e6


@dataclass(frozen=True)
class BracketOperator:
    V: VectorField
    s: Expr

    def exprs(self) -> list[Expr]:
        return [*self.V, self.s]


def bracket_operator(J: JacobiStructure, I) -> BracketOperator:
    chart = J.chart
    I = chart.check(as_expr(I))
    n = J.n
    dI = [differentiate(I, c) for c in chart.coordinates]
    V = []
    for l in range(n):
        V.append(add(*(mul(J.P[k, l], dI[k]) for k in range(n)), mul(I, J.a[l])))
    s = neg(add(*(mul(J.a[k], dI[k]) for k in range(n))))
    return BracketOperator(VectorField(chart, tuple(V)), s)


@dataclass(frozen=True)
class BasisSpec:
    """Finite search space for each I_k."""

    elements: tuple[Expr, ...]

    def __post_init__(self):
        if not self.elements:
            raise EmptyBasis("basis must contain at least one function")
        if len(set(self.elements)) != len(self.elements):
            raise ValueError("basis elements must be pairwise distinct")

    @classmethod
    def of(cls, elements: Sequence) -> BasisSpec:
        return cls(tuple(as_expr(e) for e in elements))

    @classmethod
    def generated(cls, chart: Chart, degree: int, phi: Expr | None = None,
                  exp_range: tuple[int, int] | None = None) -> BasisSpec:
        """Monomials of degree <= ``degree``, optionally times exp(k phi), k in exp_range."""
        mons = monomials(chart, degree)
        if phi is None or exp_range is None:
            return cls(tuple(mons))
        lo, hi = exp_range
        out = []
        for k in range(int(lo), int(hi) + 1):
            w = exp(mul(Const(k), phi))
            out.extend(mul(m, w) for m in mons)
        return cls(tuple(out))

    def __len__(self) -> int:
        return len(self.elements)

    def combine(self, coeffs: Sequence[float]) -> Expr:
        terms = [mul(Const(float(c)), b) for c, b in zip(coeffs, self.elements) if c != 0.0]
        return add(*terms)


@dataclass(frozen=True)
class StepResult:
    k: int
    solved: bool
    integral: Expr
    coefficients: np.ndarray
    nullspace: np.ndarray  # shape (dim, m), rows are kernel directions
    residual: float
    singular_values: np.ndarray
    reason: str = ""

    @property
    def nullspace_dim(self) -> int:
        return int(self.nullspace.shape[0])


def _operator_columns(Jt: JacobiStructure, basis: BasisSpec) -> list[Expr]:
    """Flattened (V~^1..V~^n, s~) of every basis element, element-major."""
    out = []
    for b in basis.elements:
        out.extend(bracket_operator(Jt, b).exprs())
    return out


def _exp_guard(phi: Expr | None, chart: Chart):
    if phi is None:
        return None
    fn = compile_exprs([phi], chart)
    limit = math.log(EXP_GUARD)
    return lambda X: np.abs(fn(X)[0]) <= limit


def solve_recursion_step(J: JacobiStructure, Jt: JacobiStructure, I_prev, basis: BasisSpec,
                         samples: int = 100, seed: int = 42, tol: float = 1e-8,
                         svd_cutoff: float = DEFAULT_SVD_CUTOFF, box: Box | None = None,
                         phi: Expr | None = None, k: int = 1) -> StepResult:
    """One step: find I = sum c_i b_i with (V, s)_J[I_prev] = (V, s)_J~[I].

    The minimal-norm least-squares coefficients are returned together with
    the numerical kernel of the design matrix.  Success is judged on
    ``2 * samples`` fresh points, never on the collocation points.
    """
    J.chart.require_same(Jt.chart)
    chart = J.chart
    n = J.n
    if not isinstance(basis, BasisSpec):
        basis = BasisSpec.of(basis)
    m = len(basis)
    if samples * (n + 1) < m:
        warnings.warn(f"{samples * (n + 1)} collocation rows for {m} unknowns; system is underdetermined",
                      stacklevel=2)
    target = bracket_operator(J, I_prev).exprs()
    cols = _operator_columns(Jt, basis)
    all_exprs = target + cols
    program = compile_exprs(all_exprs, chart)
    bx = make_box(chart, box)
    guard = _exp_guard(phi, chart)

    def system(X):
        vals = program(X)
        rhs = vals[: n + 1]                       # (n+1, pts)
        A = vals[n + 1:].reshape(m, n + 1, -1)    # (m, n+1, pts)
        return rhs, A

    X = valid_points(chart, bx, samples, rng_for(seed, k, 0), all_exprs, guard)
    rhs, A = system(X)
    # rows ordered point-major: (point, component)
    A_mat = A.transpose(2, 1, 0).reshape(-1, m)
    y = rhs.T.reshape(-1)
    if not np.any(A_mat):
        raise DegenerateSampling("design matrix is identically zero at the collocation points")
    U, sig, Vt = np.linalg.svd(A_mat, full_matrices=True)
    cut = svd_cutoff * sig[0]
    r = int(np.sum(sig > cut))
    coeffs = Vt[:r].T @ ((U[:, :r].T @ y) / sig[:r])
    kernel = Vt[r:]

    X_fresh = valid_points(chart, bx, 2 * samples, rng_for(seed, k, 1), all_exprs, guard)
    rhs_f, A_f = system(X_fresh)
    got = np.einsum("i,icp->cp", coeffs, A_f)
    residual = float(np.max(relative_residual(got - rhs_f, got, rhs_f)))
    solved = residual <= tol
    reason = "" if solved else f"unsolvable in basis: best residual {residual:.3e} > tol {tol:.1e}"
    return StepResult(k, solved, basis.combine(coeffs), coeffs, kernel, residual, sig, reason)


@dataclass
class RecursionChain:
    chart: Chart
    integrals: list[Expr]
    steps: list[StepResult] = field(default_factory=list)
    involution: dict[str, np.ndarray] = field(default_factory=dict)
    rank: int | None = None
    target_r: int | None = None
    stopped: str = ""

    @property
    def length(self) -> int:
        return len(self.integrals)

    @property
    def complete(self) -> bool:
        return not self.stopped


def run_recursion(J: JacobiStructure, phi, H, basis: BasisSpec, max_steps: int = 8, samples: int = 100,
                  seed: int = 42, tol: float = 1e-8, svd_cutoff: float = DEFAULT_SVD_CUTOFF,
                  box: Box | None = None, allow_constant_gauge: bool = False,
                  target_r: int | None = None) -> RecursionChain:
    """Chain I_0 = H, I_1, ... until ``max_steps`` or the first unsolved step."""
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    chart = J.chart
    g = phi if isinstance(phi, GaugeFunction) else GaugeFunction.make(phi, chart, seed, box)
    if g.is_constant and not allow_constant_gauge:
        raise ConstantGaugeRefused(
            f"gauge {g.phi} is constant ({g.decided_by} check); the chain would only rescale H. "
            "Pass allow_constant_gauge=True to run it anyway."
        )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConstantGaugeWarning)
        Jt = gauge_transform(J, g)
    if not isinstance(basis, BasisSpec):
        basis = BasisSpec.of(basis)
    H = chart.check(as_expr(H))
    chain = RecursionChain(chart, [H], target_r=target_r)
    for k in range(1, max_steps + 1):
        step = solve_recursion_step(J, Jt, chain.integrals[-1], basis, samples, seed, tol, svd_cutoff,
                                    box, g.phi, k)
        chain.steps.append(step)
        if not step.solved:
            chain.stopped = f"step {k}: {step.reason}"
            break
        chain.integrals.append(step.integral)
    chain.involution = check_involution(J, Jt, chain, samples, seed, box=box, phi=g.phi)
    chain.rank = functional_independence(chain, samples, seed, box=box)
    return chain


def _bracket_matrix(J: JacobiStructure, integrals: Sequence[Expr], X: np.ndarray) -> np.ndarray:
    q = len(integrals)
    out = np.zeros((q, q))
    pairs = [(i, j) for i in range(q) for j in range(i + 1, q)]
    if not pairs:
        return out
    exprs = []
    for i, j in pairs:
        exprs.append(jacobi_bracket(J, integrals[i], integrals[j]))
    vals = compile_exprs(exprs, J.chart)(X)
    # scale: |I_i| |grad I_j| style magnitudes via the operator pieces
    mags = _bracket_magnitudes(J, integrals, pairs, X)
    for (i, j), v, s in zip(pairs, vals, mags):
        out[i, j] = out[j, i] = float(np.max(np.abs(v) / np.maximum(1.0, s)))
    return out


def _bracket_magnitudes(J, integrals, pairs, X) -> list[np.ndarray]:
    """Sum of absolute values of the individual terms of {I_i, I_j}."""
    chart = J.chart
    n = J.n
    grads = [[differentiate(I, c) for c in chart.coordinates] for I in integrals]
    flat = list(J.components())
    base = len(flat)
    for I, g in zip(integrals, grads):
        flat.append(I)
        flat.extend(g)
    vals = compile_exprs(flat, chart)(X)
    iu = [(i, j) for i in range(n) for j in range(i + 1, n)]
    P = np.zeros((n, n, X.shape[0]))
    for t, (i, j) in enumerate(iu):
        P[i, j] = vals[t]
        P[j, i] = -vals[t]
    a = vals[len(iu):base]
    F = []
    for q in range(len(integrals)):
        off = base + q * (n + 1)
        F.append((vals[off], vals[off + 1: off + 1 + n]))
    out = []
    for i, j in pairs:
        f, df = F[i]
        g, dg = F[j]
        m = np.einsum("klp,kp,lp->p", np.abs(P), np.abs(df), np.abs(dg))
        m = m + np.einsum("kp,kp->p", np.abs(a), np.abs(f) * np.abs(dg) + np.abs(g) * np.abs(df))
        out.append(m)
    return out


def check_involution(J: JacobiStructure, Jt: JacobiStructure, chain: RecursionChain, samples: int = 100,
                     seed: int = 42, tol: float = 1e-8, box: Box | None = None,
                     phi: Expr | None = None) -> dict[str, np.ndarray]:
    """Max scale-relative |{I_i, I_j}| over seeded points, under both brackets.

    Returns ``{"J": matrix, "J_tilde": matrix}``; entries are normalised by
    ``max(1, sum of absolute bracket terms)``.
    """
    if not chain.integrals:
        raise ValueError("chain is empty")
    chart = J.chart
    needed = list(chain.integrals) + J.components() + Jt.components()
    X = valid_points(chart, make_box(chart, box), samples, rng_for(seed, 99, 0), needed, _exp_guard(phi, chart))
    return {
        "J": _bracket_matrix(J, chain.integrals, X),
        "J_tilde": _bracket_matrix(Jt, chain.integrals, X),
    }


def involution_passed(matrices: dict[str, np.ndarray], tol: float) -> bool:
    return all(float(np.max(M, initial=0.0)) <= tol for M in matrices.values())


def functional_independence(chain: RecursionChain | Sequence[Expr], points: int = 100, seed: int = 42,
                            chart: Chart | None = None, box: Box | None = None) -> int:
    """Numerical rank of the Jacobian of the integrals, maximised over seeded points."""
    if isinstance(chain, RecursionChain):
        integrals, chart = chain.integrals, chain.chart
    else:
        integrals = list(chain)
        if chart is None:
            raise ValueError("a chart is required when passing bare expressions")
    if not integrals:
        raise ValueError("chain is empty")
    grads = [differentiate(I, c) for I in integrals for c in chart.coordinates]
    X = valid_points(chart, make_box(chart, box), points, rng_for(seed, 98, 0), list(integrals) + grads)
    vals = compile_exprs(grads, chart)(X).reshape(len(integrals), chart.dimension, -1)
    best = 0
    for p in range(X.shape[0]):
        Jac = vals[:, :, p]
        sig = np.linalg.svd(Jac, compute_uv=False)
        if sig.size == 0 or sig[0] == 0.0:
            continue
        best = max(best, int(np.sum(sig > RANK_CUTOFF * sig[0])))
    return best

