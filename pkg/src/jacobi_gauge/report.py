"""Command dispatch and the JSON run report (schema v1)."""

from __future__ import annotations

import datetime as _dt
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .config import RunConfig
from .dynamics import HamiltonianSystem, drifts, integrate_flow
from .errors import ConfigError, JacobiError
from .gauge import (
    ConstantGaugeWarning,
    GaugeFunction,
    check_compatibility,
    check_isomorphism,
    gauge_transform,
)
from .recursion import involution_passed, run_recursion
from .sampling import make_box, rng_for, valid_points
from .structures import JacobiStructure
from .symbolic import to_string
from .symbolic.numeric import compile_exprs
from .verification import verify_jacobi

SCHEMA_VERSION = 1
COMMANDS = ("verify", "gauge", "compat", "iso", "flow", "recurse")
P_RANK_CUTOFF = 1e-8


@dataclass
class RunReport:
    command: str
    config_digest: str
    section: dict = field(default_factory=dict)
    passed: bool = False
    error: dict | None = None
    timestamp: str = ""

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "tool": {"name": "jacobi", "version": __version__},
            "command": self.command,
            "config_digest": self.config_digest,
            "timestamp": self.timestamp,
            self.command: sanitize(self.section),
            "error": self.error,
            "pass": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False, allow_nan=False) + "\n"


def sanitize(obj: Any) -> Any:
    """Make ``obj`` JSON-safe; non-finite floats become explicit failure strings."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return sanitize(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return f"failed: non-finite value ({v})"
        return float(f"{v:.17g}")
    return obj


def _structure_dict(J: JacobiStructure) -> dict:
    return {
        "P": {f"{i + 1},{j + 1}": to_string(e) for (i, j), e in sorted(J.P.upper.items())},
        "a": [to_string(e) for e in J.a],
    }


def pointwise_rank_of_P(J: JacobiStructure, samples: int, seed: int, box) -> int:
    """Numerical rank of the matrix P^{ij}, maximised over seeded points."""
    chart = J.chart
    if not J.P.upper:
        return 0
    exprs = list(J.P.upper.values())
    X = valid_points(chart, make_box(chart, box), samples, rng_for(seed, 97, 0), exprs)
    vals = compile_exprs(exprs, chart)(X)
    n = J.n
    best = 0
    for p in range(X.shape[0]):
        M = np.zeros((n, n))
        for t, (i, j) in enumerate(J.P.upper):
            M[i, j], M[j, i] = vals[t, p], -vals[t, p]
        sig = np.linalg.svd(M, compute_uv=False)
        if sig[0] > 0:
            best = max(best, int(np.sum(sig > P_RANK_CUTOFF * sig[0])))
    return best


def _gauge(cfg: RunConfig, allow_constant: bool) -> GaugeFunction:
    if cfg.phi is None:
        raise ConfigError("this command needs [gauge] phi", "gauge.phi")
    g = GaugeFunction.make(cfg.phi, cfg.chart, cfg.seed, cfg.box)
    return g


def _gauge_info(g: GaugeFunction) -> dict:
    return {"phi": to_string(g.phi), "constant": g.is_constant, "constancy_decided_by": g.decided_by}


def _transform(cfg: RunConfig, g: GaugeFunction) -> JacobiStructure:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConstantGaugeWarning)
        return gauge_transform(cfg.structure, g)


def _verify(cfg: RunConfig, allow_constant: bool, csv_path) -> tuple[dict, bool]:
    r = verify_jacobi(cfg.structure, cfg.samples, cfg.seed, cfg.tol, cfg.box)
    out = r.to_dict()
    out["structure"] = _structure_dict(cfg.structure)
    out["pointwise_rank_P"] = pointwise_rank_of_P(cfg.structure, cfg.samples, cfg.seed, cfg.box)
    return out, r.passed


def _gauge_cmd(cfg: RunConfig, allow_constant: bool, csv_path) -> tuple[dict, bool]:
    g = _gauge(cfg, allow_constant)
    Jt = _transform(cfg, g)
    r = verify_jacobi(Jt, cfg.samples, cfg.seed, cfg.tol, cfg.box)
    out = {"gauge": _gauge_info(g), "transformed": _structure_dict(Jt), "verification": r.to_dict()}
    if g.is_constant:
        out["warning"] = "constant gauge: transformed structure is a constant rescaling of the original"
    return out, r.passed


def _compat(cfg: RunConfig, allow_constant: bool, csv_path) -> tuple[dict, bool]:
    g = _gauge(cfg, allow_constant)
    Jt = _transform(cfg, g)
    r = check_compatibility(cfg.structure, Jt, cfg.samples, cfg.seed, cfg.tol, cfg.box)
    out = {"gauge": _gauge_info(g), **r.to_dict()}
    return out, r.passed


def _iso(cfg: RunConfig, allow_constant: bool, csv_path) -> tuple[dict, bool]:
    g = _gauge(cfg, allow_constant)
    res = check_isomorphism(cfg.structure, g, cfg.samples, cfg.seed, cfg.tol, cfg.box)
    ok = res <= cfg.tol
    return {"gauge": _gauge_info(g), "residual": res, "tol": cfg.tol, "passed": ok}, ok


def _flow(cfg: RunConfig, allow_constant: bool, csv_path) -> tuple[dict, bool]:
    if cfg.flow is None:
        raise ConfigError("flow needs a [flow] section", "flow")
    if cfg.H is None:
        raise ConfigError("flow needs [hamiltonian] H", "hamiltonian.H")
    fs = cfg.flow
    sys_ = HamiltonianSystem(cfg.structure, cfg.H)
    traj = integrate_flow(sys_, fs.x0, fs.t_end, fs.dt)
    out = {
        "H": to_string(cfg.H),
        "vector_field": [to_string(e) for e in sys_.V],
        "integrator": traj.integrator,
        "steps": len(traj) - 1,
        "step": traj.step,
        "t_end": fs.t_end,
        "x0": list(fs.x0),
        "final": traj.final,
        "trajectory_file": None,
        "drift": [],
    }
    if csv_path is not None:
        traj.write_csv(csv_path)
        out["trajectory_file"] = str(csv_path)
    if fs.invariants:
        out["drift"] = [{"expression": to_string(I), "max_abs_drift": d}
                        for I, d in zip(fs.invariants, drifts(traj, fs.invariants))]
    return out, True


def _recurse(cfg: RunConfig, allow_constant: bool, csv_path) -> tuple[dict, bool]:
    if cfg.recursion is None:
        raise ConfigError("recurse needs a [recursion] section", "recursion")
    if cfg.H is None:
        raise ConfigError("recurse needs [hamiltonian] H", "hamiltonian.H")
    rs = cfg.recursion
    g = _gauge(cfg, allow_constant)
    chain = run_recursion(cfg.structure, g, cfg.H, rs.basis, rs.max_steps, cfg.samples, cfg.seed, rs.tol,
                          cfg.svd_cutoff, cfg.box, allow_constant, rs.target_r)
    inv_ok = involution_passed(chain.involution, rs.tol)
    passed = chain.complete and inv_ok
    steps = []
    for s in chain.steps:
        steps.append({
            "k": s.k,
            "solved": s.solved,
            "residual": s.residual,
            "integral": to_string(s.integral) if s.solved else None,
            "coefficients": s.coefficients,
            "nullspace_dim": s.nullspace_dim,
            "nullspace": s.nullspace,
            "reason": s.reason or None,
        })
    out = {
        "gauge": _gauge_info(g),
        "H": to_string(cfg.H),
        "basis": [to_string(b) for b in rs.basis.elements],
        "basis_source": rs.basis_source,
        "max_steps": rs.max_steps,
        "tol": rs.tol,
        "chain": [to_string(I) for I in chain.integrals],
        "length": chain.length,
        "steps": steps,
        "stopped": chain.stopped or None,
        "involution": {k: v for k, v in chain.involution.items()},
        "involution_passed": inv_ok,
        "rank": chain.rank,
        "target_r": chain.target_r,
        "pointwise_rank_P": pointwise_rank_of_P(cfg.structure, cfg.samples, cfg.seed, cfg.box),
    }
    return out, passed


_DISPATCH = {
    "verify": _verify,
    "gauge": _gauge_cmd,
    "compat": _compat,
    "iso": _iso,
    "flow": _flow,
    "recurse": _recurse,
}


def run_command(cmd: str, cfg: RunConfig, allow_constant_gauge: bool = False,
                csv_path: str | Path | None = None) -> RunReport:
    """Run one command; library errors are embedded in the report, not raised.

    A ConfigError about a missing section is raised, since it means the
    configuration does not describe the requested command at all.
    """
    if cmd not in _DISPATCH:
        raise ValueError(f"unknown command {cmd!r}; expected one of {', '.join(COMMANDS)}")
    report = RunReport(cmd, cfg.digest(), timestamp=_dt.datetime.now(_dt.timezone.utc).isoformat())
    try:
        section, passed = _DISPATCH[cmd](cfg, allow_constant_gauge, csv_path)
    except ConfigError:
        raise
    except JacobiError as e:
        report.error = {"type": type(e).__name__, "message": str(e)}
        return report
    report.section = section
    report.passed = bool(passed)
    return report


def error_report(cmd: str, err: Exception) -> RunReport:
    """Report for a run that failed before any command could start."""
    return RunReport(cmd, "", error={"type": type(err).__name__, "message": str(err)},
                     timestamp=_dt.datetime.now(_dt.timezone.utc).isoformat())
