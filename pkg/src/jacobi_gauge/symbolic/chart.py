from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence

from ..errors import ChartMismatch, UnknownIdentifier
from .nodes import FUNCTIONS, Expr, Var, as_expr, variables

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class Chart:
    """A single coordinate chart: ordered coordinate names x^1..x^n."""

    coordinates: tuple[str, ...]

    def __init__(self, coordinates: Sequence[str]):
        coords = tuple(coordinates)
        if not coords:
            raise ValueError("chart needs at least one coordinate")
        for name in coords:
            if not isinstance(name, str) or not _IDENT.match(name):
                raise ValueError(f"invalid coordinate name {name!r}")
            if name in FUNCTIONS:
                raise ValueError(f"coordinate name {name!r} is a reserved function name")
        if len(set(coords)) != len(coords):
            raise ValueError(f"duplicate coordinate names in {coords}")
        object.__setattr__(self, "coordinates", coords)

    @classmethod
    def standard(cls, n: int, prefix: str = "x") -> Chart:
        return cls([f"{prefix}{i + 1}" for i in range(n)])

    @property
    def dimension(self) -> int:
        return len(self.coordinates)

    def __len__(self) -> int:
        return len(self.coordinates)

    def index(self, name: str) -> int:
        try:
            return self.coordinates.index(name)
        except ValueError:
            raise UnknownIdentifier(name, self.coordinates) from None

    def var(self, name_or_index: str | int) -> Var:
        if isinstance(name_or_index, int):
            return Var(self.coordinates[name_or_index])
        self.index(name_or_index)
        return Var(name_or_index)

    @property
    def vars(self) -> tuple[Var, ...]:
        return tuple(Var(c) for c in self.coordinates)

    def check(self, e) -> Expr:
        """Coerce ``e`` to an expression; raise ``UnknownIdentifier`` for names outside the chart."""
        e = as_expr(e)
        for name in sorted(variables(e)):
            if name not in self.coordinates:
                raise UnknownIdentifier(name, self.coordinates)
        return e

    def require_same(self, other: Chart) -> None:
        if self != other:
            raise ChartMismatch(f"chart {self.coordinates} differs from {other.coordinates}")


@dataclass(frozen=True)
class Point:
    chart: Chart
    values: tuple[float, ...]

    def __init__(self, chart: Chart, values: Sequence[float]):
        vals = tuple(float(v) for v in values)
        if len(vals) != chart.dimension:
            raise ValueError(f"point has {len(vals)} values, chart has dimension {chart.dimension}")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"point values must be finite: {vals}")
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "values", vals)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.chart.coordinates, self.values))
