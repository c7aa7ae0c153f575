"""Run configuration: a TOML file with the sections below.

    [manifold]     dimension, coordinates
    [structure]    P."i,j" (1-based, i < j only), a (array)
    [gauge]        phi
    [hamiltonian]  H
    [recursion]    basis (array) | monomial_degree, exp_multiplier_range;
                   max_steps, tol, target_r
    [numeric]      samples, seed, box_min, box_max, svd_cutoff, tol
    [flow]         x0 (array), t_end, dt, invariants (array)

Expressions are strings in the expression grammar; plain numbers are also
accepted wherever an expression is expected.
"""

from __future__ import annotations

import hashlib
import json
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError, ExpressionSyntaxError, UnknownIdentifier
from .recursion import BasisSpec
from .structures import JacobiStructure
from .symbolic import Chart, Const, Expr, parse_expr

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULTS = {
    "samples": 100,
    "seed": 42,
    "box_min": -1.0,
    "box_max": 1.0,
    "tol": 1e-8,
    "max_steps": 8,
    "svd_cutoff": 1e-10,
}

_KNOWN = {
    "manifold": {"dimension", "coordinates"},
    "structure": {"P", "a"},
    "gauge": {"phi"},
    "hamiltonian": {"H"},
    "recursion": {"basis", "monomial_degree", "exp_multiplier_range", "max_steps", "tol", "target_r"},
    "numeric": {"samples", "seed", "box_min", "box_max", "svd_cutoff", "tol"},
    "flow": {"x0", "t_end", "dt", "invariants"},
}


@dataclass(frozen=True)
class RecursionSettings:
    basis: BasisSpec
    basis_source: str  # "explicit" or "generated"
    max_steps: int
    tol: float
    target_r: int | None


@dataclass(frozen=True)
class FlowSettings:
    x0: tuple[float, ...]
    t_end: float
    dt: float
    invariants: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class RunConfig:
    chart: Chart
    structure: JacobiStructure
    phi: Expr | None
    H: Expr | None
    recursion: RecursionSettings | None
    samples: int
    seed: int
    box: tuple[tuple[float, float], ...]
    svd_cutoff: float
    tol: float
    flow: FlowSettings | None
    source: dict = field(default_factory=dict, compare=False, repr=False)
    path: str | None = None

    def with_overrides(self, seed: int | None = None, samples: int | None = None,
                       tol: float | None = None) -> RunConfig:
        import dataclasses

        changes: dict[str, Any] = {}
        if seed is not None:
            changes["seed"] = int(seed)
        if samples is not None:
            if samples < 1:
                raise ConfigError("samples must be >= 1", "numeric.samples")
            changes["samples"] = int(samples)
        if tol is not None:
            if not tol > 0:
                raise ConfigError("tol must be positive", "numeric.tol")
            changes["tol"] = float(tol)
            if self.recursion is not None:
                changes["recursion"] = dataclasses.replace(self.recursion, tol=float(tol))
        return dataclasses.replace(self, **changes)

    def digest(self) -> str:
        """SHA-256 of the effective configuration (source plus overrides)."""
        payload = {
            "source": self.source,
            "effective": {
                "samples": self.samples,
                "seed": self.seed,
                "tol": self.tol,
                "recursion_tol": self.recursion.tol if self.recursion else None,
                "box": [list(b) for b in self.box],
                "svd_cutoff": self.svd_cutoff,
            },
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(blob.encode()).hexdigest()


class _Loader:
    def __init__(self, text: str, path: str | None):
        self.text = text
        self.path = path
        self.lines = text.splitlines()

    def line_of(self, section: str, key: str | None = None) -> int | None:
        current = None
        head = key.split(".")[0] if key else None
        for no, raw in enumerate(self.lines, start=1):
            line = raw.strip()
            m = re.match(r"\[\s*([A-Za-z_][\w.]*)\s*\]", line)
            if m:
                current = m.group(1)
                if key is None and current == section:
                    return no
                continue
            if current == section and head and re.match(rf"{re.escape(head)}\s*[.=]", line):
                if "." not in key:
                    return no
                sub = key.split(".", 1)[1]
                if sub in line:
                    return no
        return None

    def fail(self, message: str, section: str, key: str | None = None):
        path = f"{section}.{key}" if key else section
        raise ConfigError(message, path, self.line_of(section, key))

    def expr(self, value, chart: Chart, section: str, key: str) -> Expr:
        if isinstance(value, bool):
            self.fail(f"expected an expression, got {value!r}", section, key)
        if isinstance(value, (int, float)):
            return Const(value)
        if not isinstance(value, str):
            self.fail(f"expected an expression string, got {type(value).__name__}", section, key)
        try:
            return parse_expr(value, chart)
        except UnknownIdentifier as e:
            self.fail(f"unknown identifier {e.name!r} in expression {value!r}", section, key)
        except ExpressionSyntaxError as e:
            self.fail(f"syntax error at offset {e.offset} in expression {value!r}", section, key)

    def number(self, sec: dict, section: str, key: str, kind=float, default=None, positive=False):
        if key not in sec:
            return default
        v = sec[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or (kind is int and not isinstance(v, int)):
            self.fail(f"expected {'an integer' if kind is int else 'a number'}, got {v!r}", section, key)
        v = kind(v)
        if positive and not v > 0:
            self.fail(f"must be positive, got {v!r}", section, key)
        return v

    def load(self, data: dict) -> RunConfig:
        for section, body in data.items():
            if section not in _KNOWN:
                self.fail(f"unknown section [{section}]", section)
            if not isinstance(body, dict):
                self.fail("expected a table", section)
            for key in body:
                if key not in _KNOWN[section]:
                    self.fail(f"unknown key {key!r}", section, key)

        man = data.get("manifold")
        if man is None:
            raise ConfigError("missing [manifold] section", "manifold")
        coords = man.get("coordinates")
        if not isinstance(coords, list) or not coords or not all(isinstance(c, str) for c in coords):
            self.fail("coordinates must be a non-empty array of names", "manifold", "coordinates")
        try:
            chart = Chart(coords)
        except ValueError as e:
            self.fail(str(e), "manifold", "coordinates")
        dim = man.get("dimension", chart.dimension)
        if not isinstance(dim, int) or isinstance(dim, bool) or dim != chart.dimension:
            self.fail(f"dimension {dim!r} does not match {chart.dimension} coordinates", "manifold", "dimension")
        n = chart.dimension

        st = data.get("structure", {})
        upper = {}
        P = st.get("P", {})
        if not isinstance(P, dict):
            self.fail('P must be a table of "i,j" = expression entries', "structure", "P")
        for k, v in P.items():
            m = re.fullmatch(r"\s*(\d+)\s*,\s*(\d+)\s*", k)
            if not m:
                self.fail(f'bad P index {k!r}; expected "i,j"', "structure", f"P.{k}")
            i, j = int(m.group(1)), int(m.group(2))
            if not (1 <= i <= n and 1 <= j <= n):
                self.fail(f"P index {k!r} out of range 1..{n}", "structure", f"P.{k}")
            if i >= j:
                self.fail(f"P entry {k!r} is not strictly upper-triangular; give P^(ij) only for i < j",
                          "structure", f"P.{k}")
            upper[(i - 1, j - 1)] = self.expr(v, chart, "structure", f"P.{k}")
        a_raw = st.get("a")
        if a_raw is None:
            a = [Const(0)] * n
        else:
            if not isinstance(a_raw, list) or len(a_raw) != n:
                self.fail(f"a must be an array of {n} expressions", "structure", "a")
            a = [self.expr(v, chart, "structure", "a") for v in a_raw]
        J = JacobiStructure.from_components(chart, upper, a)

        phi = None
        if "gauge" in data and "phi" in data["gauge"]:
            phi = self.expr(data["gauge"]["phi"], chart, "gauge", "phi")
        H = None
        if "hamiltonian" in data and "H" in data["hamiltonian"]:
            H = self.expr(data["hamiltonian"]["H"], chart, "hamiltonian", "H")

        num = data.get("numeric", {})
        samples = self.number(num, "numeric", "samples", int, DEFAULTS["samples"], positive=True)
        seed = self.number(num, "numeric", "seed", int, DEFAULTS["seed"])
        box = self._box(num, n)
        svd_cutoff = self.number(num, "numeric", "svd_cutoff", float, DEFAULTS["svd_cutoff"], positive=True)

        rec_sec = data.get("recursion")
        tol = self.number(num, "numeric", "tol", float, None, positive=True)
        rec_tol = self.number(rec_sec or {}, "recursion", "tol", float, None, positive=True)
        if tol is None:
            tol = rec_tol if rec_tol is not None else DEFAULTS["tol"]
        recursion = self._recursion(rec_sec, chart, phi, rec_tol if rec_tol is not None else tol) if rec_sec else None

        flow = self._flow(data.get("flow"), chart) if "flow" in data else None

        return RunConfig(chart, J, phi, H, recursion, samples, seed, box, svd_cutoff, tol, flow,
                         source=data, path=self.path)

    def _box(self, num: dict, n: int):
        def side(key, default):
            v = num.get(key, default)
            if isinstance(v, (int, float)) and not isinstance(v, bool):
                return [float(v)] * n
            if isinstance(v, list) and len(v) == n and all(isinstance(x, (int, float)) for x in v):
                return [float(x) for x in v]
            self.fail(f"must be a number or an array of {n} numbers", "numeric", key)

        lo = side("box_min", DEFAULTS["box_min"])
        hi = side("box_max", DEFAULTS["box_max"])
        for a, b in zip(lo, hi):
            if not a < b:
                self.fail(f"empty sampling interval [{a}, {b}]", "numeric", "box_min")
        return tuple(zip(lo, hi))

    def _recursion(self, sec: dict, chart: Chart, phi: Expr | None, tol: float) -> RecursionSettings:
        max_steps = self.number(sec, "recursion", "max_steps", int, DEFAULTS["max_steps"], positive=True)
        target_r = self.number(sec, "recursion", "target_r", int, None)
        if "basis" in sec:
            if "monomial_degree" in sec or "exp_multiplier_range" in sec:
                self.fail("give either basis or monomial_degree/exp_multiplier_range, not both", "recursion", "basis")
            raw = sec["basis"]
            if not isinstance(raw, list) or not raw:
                self.fail("basis must be a non-empty array of expressions", "recursion", "basis")
            elems = [self.expr(v, chart, "recursion", "basis") for v in raw]
            try:
                basis = BasisSpec.of(elems)
            except ValueError as e:
                self.fail(str(e), "recursion", "basis")
            source = "explicit"
        elif "monomial_degree" in sec:
            deg = self.number(sec, "recursion", "monomial_degree", int)
            if deg < 0:
                self.fail("must be >= 0", "recursion", "monomial_degree")
            rng = sec.get("exp_multiplier_range")
            if rng is not None:
                if not (isinstance(rng, list) and len(rng) == 2 and all(isinstance(x, int) for x in rng)
                        and rng[0] <= rng[1]):
                    self.fail("must be [k_min, k_max] integers", "recursion", "exp_multiplier_range")
                if phi is None:
                    self.fail("exp_multiplier_range needs [gauge] phi", "recursion", "exp_multiplier_range")
            basis = BasisSpec.generated(chart, deg, phi, tuple(rng) if rng else None)
            source = "generated"
        else:
            self.fail("recursion needs basis or monomial_degree", "recursion")
        return RecursionSettings(basis, source, max_steps, tol, target_r)

    def _flow(self, sec: dict, chart: Chart) -> FlowSettings:
        x0 = sec.get("x0")
        if not (isinstance(x0, list) and len(x0) == chart.dimension
                and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x0)):
            self.fail(f"x0 must be an array of {chart.dimension} numbers", "flow", "x0")
        for key in ("t_end", "dt"):
            if key not in sec:
                self.fail("missing key", "flow", key)
        t_end = self.number(sec, "flow", "t_end", float)
        if t_end < 0:
            self.fail("must be >= 0", "flow", "t_end")
        dt = self.number(sec, "flow", "dt", float, positive=True)
        inv = sec.get("invariants", [])
        if not isinstance(inv, list):
            self.fail("invariants must be an array of expressions", "flow", "invariants")
        invariants = tuple(self.expr(v, chart, "flow", "invariants") for v in inv)
        return FlowSettings(tuple(float(v) for v in x0), t_end, dt, invariants)


def loads_config(text: str, path: str | None = None) -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        m = re.search(r"line (\d+)", str(e))
        raise ConfigError(f"malformed config: {e}", None, int(m.group(1)) if m else None) from None
    return _Loader(text, path).load(data)


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config file: {e}") from None
    return loads_config(text, str(p))
