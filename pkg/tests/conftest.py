import sys
from pathlib import Path

import pytest

from jacobi_gauge.structures import JacobiStructure
from jacobi_gauge.symbolic import Chart

sys.path.insert(0, str(Path(__file__).parent))

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def symplectic_r2() -> JacobiStructure:
    return JacobiStructure.from_components(Chart.standard(2), {(0, 1): 1}, [0, 0])


def symplectic_r4() -> JacobiStructure:
    return JacobiStructure.from_components(Chart.standard(4), {(0, 1): 1, (2, 3): 1}, [0, 0, 0, 0])


def pure_vector_r1() -> JacobiStructure:
    return JacobiStructure.from_components(Chart.standard(1), {}, [1])


def pure_vector_r3() -> JacobiStructure:
    return JacobiStructure.from_components(Chart.standard(3), {}, [1, 0, 0])


def contact_r3() -> JacobiStructure:
    ch = Chart.standard(3)
    return JacobiStructure.from_components(ch, {(0, 1): 1, (1, 2): -ch.var("x2")}, [0, 0, 1])


FIXTURES = {
    "symplectic_r2": symplectic_r2,
    "symplectic_r4": symplectic_r4,
    "pure_vector_r1": pure_vector_r1,
    "pure_vector_r3": pure_vector_r3,
    "contact_r3": contact_r3,
}


@pytest.fixture(params=sorted(FIXTURES))
def fixture_structure(request) -> JacobiStructure:
    return FIXTURES[request.param]()


@pytest.fixture
def configs() -> Path:
    return CONFIGS


def perturbations(count: int = 20, seed: int = 7) -> list[tuple[str, JacobiStructure]]:
    """Fixtures with a seeded random polynomial added to one P entry or one a component."""
    from jacobi_gauge.sampling import random_polynomial, rng_for

    rng = rng_for(seed, 0)
    names = sorted(FIXTURES)
    out = []
    for t in range(count):
        name = names[t % len(names)]
        J = FIXTURES[name]()
        chart = J.chart
        upper = dict(J.P.upper)
        a = list(J.a)
        delta = random_polynomial(chart, 2, rng)
        pairs = [(i, j) for i in range(chart.dimension) for j in range(i + 1, chart.dimension)]
        if pairs and rng.random() < 0.6:
            ij = pairs[int(rng.integers(len(pairs)))]
            upper[ij] = upper.get(ij, 0) + delta if ij in upper else delta
        else:
            k = int(rng.integers(chart.dimension))
            a[k] = a[k] + delta
        out.append((f"{name}+{t}", JacobiStructure.from_components(chart, upper, a)))
    return out
