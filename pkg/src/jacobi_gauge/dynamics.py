"""Equations of motion df/dt = {H, f} imposed on the coordinate functions.

Because the Jacobi bracket is not a derivation when a != 0, d(f(x(t)))/dt
differs from {H, f}(x(t)) for general f; trajectories are defined by the
coordinate ODE and `drift_along_flow` is a diagnostic only.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError, StepCountExceeded
from .structures import JacobiStructure, VectorField
from .symbolic import Chart, Expr, Point, add, differentiate, mul
from .symbolic.nodes import neg
from .symbolic.numeric import compile_exprs

DEFAULT_MAX_STEPS = 10_000_000


def hamiltonian_vector_field(J: JacobiStructure, H) -> VectorField:
    """V^j = {H, x^j} = P^{kj} d_k H + H a^j - x^j a^k d_k H."""
    chart = J.chart
    H = chart.check(H)
    n = J.n
    dH = [differentiate(H, c) for c in chart.coordinates]
    a_dH = add(*(mul(J.a[k], dH[k]) for k in range(n)))
    comps = []
    for j, xj in enumerate(chart.vars):
        poisson = add(*(mul(J.P[k, j], dH[k]) for k in range(n)))
        comps.append(add(poisson, mul(H, J.a[j]), neg(mul(xj, a_dH))))
    return VectorField(chart, tuple(comps))


@dataclass(frozen=True)
class HamiltonianSystem:
    J: JacobiStructure
    H: Expr
    V: VectorField = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "V", hamiltonian_vector_field(self.J, self.H))

    @property
    def chart(self) -> Chart:
        return self.J.chart


@dataclass(frozen=True)
class Trajectory:
    chart: Chart
    times: np.ndarray
    states: np.ndarray  # shape (len(times), n)
    step: float
    integrator: str = "rk4"

    def __len__(self) -> int:
        return len(self.times)

    def point(self, k: int) -> Point:
        return Point(self.chart, self.states[k])

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", *self.chart.coordinates])
            for t, x in zip(self.times, self.states):
                w.writerow([f"{t:.17g}", *(f"{v:.17g}" for v in x)])


def _steps_for(t_end: float, dt: float) -> tuple[int, float]:
    """Uniform grid over [0, t_end] with step <= dt."""
    if t_end == 0:
        return 0, dt
    n = math.ceil(t_end / dt - 1e-9)
    return n, t_end / n


def integrate_flow(sys: HamiltonianSystem, x0, t_end: float, dt: float,
                   max_steps: int = DEFAULT_MAX_STEPS) -> Trajectory:
    """Classical fixed-step RK4 from ``x0`` over [0, t_end].

    The step is shrunk to ``t_end / ceil(t_end / dt)`` so that the grid is
    uniform and ends exactly at ``t_end``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    chart = sys.chart
    x = np.array(x0.values if isinstance(x0, Point) else x0, dtype=float)
    if x.shape != (chart.dimension,):
        raise ValueError(f"x0 must have {chart.dimension} components")
    nsteps, h = _steps_for(t_end, dt)
    if nsteps > max_steps:
        raise StepCountExceeded(f"{nsteps} steps exceeds the cap of {max_steps}")
    field_fn = compile_exprs(list(sys.V), chart)

    def f(t: float, y: np.ndarray) -> np.ndarray:
        v = field_fn(y[None, :])[:, 0]
        if not np.all(np.isfinite(v)):
            raise DomainError(f"vector field is singular at t={t:.17g}, x={tuple(y)}",
                              point=dict(zip(chart.coordinates, y)))
        return v

    states = np.empty((nsteps + 1, chart.dimension))
    states[0] = x
    times = h * np.arange(nsteps + 1)
    for k in range(nsteps):
        t = times[k]
        k1 = f(t, x)
        k2 = f(t + h / 2, x + h / 2 * k1)
        k3 = f(t + h / 2, x + h / 2 * k2)
        k4 = f(t + h, x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        states[k + 1] = x
    if nsteps:
        times[-1] = t_end
    return Trajectory(chart, times, states, h)


def drift_along_flow(traj: Trajectory, I) -> float:
    """max_k |I(x(t_k)) - I(x(0))|."""
    I = traj.chart.check(I)
    vals = compile_exprs([I], traj.chart)(traj.states)[0]
    if not np.all(np.isfinite(vals)):
        k = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise DomainError(f"{I} is not defined along the trajectory at t={traj.times[k]:.17g}", expr=I)
    return float(np.max(np.abs(vals - vals[0])))


def drifts(traj: Trajectory, invariants: Sequence[Expr]) -> list[float]:
    return [drift_along_flow(traj, I) for I in invariants]
