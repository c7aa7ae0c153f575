"""Seeded sampling of points and test functions; residual normalisation."""

from __future__ import annotations

import itertools
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .symbolic import Chart, Const, Expr, add, mul
from .symbolic.nodes import Var, power
from .symbolic.numeric import compile_exprs, first_singular

Box = tuple[tuple[float, float], ...]

MAX_REDRAW_ROUNDS = 50


def default_box(chart: Chart, lo: float = -1.0, hi: float = 1.0) -> Box:
    return tuple((lo, hi) for _ in chart.coordinates)


def make_box(chart: Chart, box=None) -> Box:
    if box is None:
        return default_box(chart)
    box = tuple((float(lo), float(hi)) for lo, hi in box)
    if len(box) != chart.dimension:
        raise ValueError(f"box has {len(box)} intervals, chart dimension is {chart.dimension}")
    for lo, hi in box:
        if not lo < hi:
            raise ValueError(f"empty sampling interval [{lo}, {hi}]")
    return box


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for a named sub-stream of ``seed``."""
    return np.random.default_rng([int(seed), *map(int, stream)])


def draw_points(rng: np.random.Generator, box: Box, m: int) -> np.ndarray:
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    return lo + (hi - lo) * rng.random((m, len(box)))


def valid_points(
    chart: Chart,
    box: Box,
    count: int,
    rng: np.random.Generator,
    exprs: Sequence[Expr],
    guard: Callable[[np.ndarray], np.ndarray] | None = None,
    max_rounds: int = MAX_REDRAW_ROUNDS,
) -> np.ndarray:
    """Draw ``count`` points at which every expression is finite.

    Points where an expression is singular (or where ``guard`` returns False)
    are re-drawn, up to ``max_rounds`` times; persistent failure raises
    ``DomainError`` naming the offending subexpression.
    """
    fn = compile_exprs(exprs, chart) if exprs else None
    X = draw_points(rng, box, count)

    def bad_mask(Y):
        mask = np.zeros(Y.shape[0], dtype=bool)
        if fn is not None:
            mask |= ~np.all(np.isfinite(fn(Y)), axis=0)
        if guard is not None:
            mask |= ~guard(Y)
        return mask

    bad = bad_mask(X)
    rounds = 0
    while bad.any():
        if rounds >= max_rounds:
            x = X[np.flatnonzero(bad)[0]]
            if fn is not None and not np.all(np.isfinite(fn(x[None, :]))):
                raise first_singular(exprs, chart, x)
            raise DomainError(f"no admissible sample point found near {tuple(x)} after {rounds} redraws")
        X[bad] = draw_points(rng, box, int(bad.sum()))
        bad = bad_mask(X)
        rounds += 1
    return X


def monomials(chart: Chart, degree: int) -> list[Expr]:
    """All monomials of total degree <= ``degree``, in graded lexicographic order."""
    out: list[Expr] = []
    n = chart.dimension
    for d in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(n), d):
            factors = []
            for i in sorted(set(combo)):
                factors.append(power(Var(chart.coordinates[i]), Const(combo.count(i))))
            out.append(mul(*factors))
    return out


def random_polynomial(chart: Chart, degree: int, rng: np.random.Generator) -> Expr:
    """Polynomial of degree <= ``degree`` with coefficients uniform in [-1, 1]."""
    terms = []
    for m in monomials(chart, degree):
        c = float(rng.uniform(-1.0, 1.0))
        terms.append(mul(Const(c), m))
    return add(*terms)


def relative_residual(diff: np.ndarray, *magnitudes: np.ndarray) -> np.ndarray:
    """|diff| / max(1, |m_1|, |m_2|, ...) elementwise."""
    scale = np.ones_like(np.asarray(diff, dtype=float))
    for m in magnitudes:
        scale = np.maximum(scale, np.abs(m))
    return np.abs(diff) / scale
