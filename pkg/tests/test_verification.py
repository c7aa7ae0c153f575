import numpy as np
import pytest
from conftest import FIXTURES, contact_r3, perturbations, pure_vector_r1
from hypothesis import given, settings
from hypothesis import strategies as st

from jacobi_gauge.errors import DomainError
from jacobi_gauge.sampling import random_polynomial, rng_for
from jacobi_gauge.structures import JacobiStructure, jacobi_bracket
from jacobi_gauge.symbolic import Chart, Point, evaluate, parse_expr
from jacobi_gauge.verification import consistency_check, mark_verified, verify_jacobi

CH3 = Chart.standard(3)


def from_strings(chart, upper, a):
    return JacobiStructure.from_components(
        chart, {k: parse_expr(v, chart) for k, v in upper.items()}, [parse_expr(s, chart) for s in a]
    )


def test_symplectic_plane_residuals_vanish():
    r = verify_jacobi(FIXTURES["symplectic_r2"]())
    assert r.passed and max(r.tensor_residual, r.lie_residual, r.cyclic_residual) <= 1e-14


@pytest.mark.parametrize("a", ["x1", "exp(x1)", "sin(3*x1) + x1^2"])
def test_zero_bivector_passes(a):
    J = from_strings(Chart.standard(1), {}, [a])
    r = verify_jacobi(J)
    assert r.passed and r.tensor_residual == 0 and r.lie_residual == 0


def test_contact_sign_convention():
    assert verify_jacobi(contact_r3(), samples=200).passed
    flipped = from_strings(CH3, {(0, 1): "1", (1, 2): "x2"}, ["0", "0", "1"])
    r = verify_jacobi(flipped)
    assert not r.tensor_passed and not r.cyclic_passed


@pytest.mark.parametrize(
    "p13, jacobi",
    [("x2", True), ("x1*x2", False)],
)
def test_perturbed_structure_checks_agree(p13, jacobi):
    J = from_strings(CH3, {(0, 1): "1", (0, 2): p13}, ["0", "0", "0"])
    r = verify_jacobi(J)
    assert r.tensor_passed == r.cyclic_passed == jacobi


def _cyclic_by_hand(J, f, g, h, x):
    """Cyclic sum built pair by pair from the bracket, evaluated pointwise."""
    chart = J.chart
    p = Point(chart, x)
    fg = jacobi_bracket(J, f, g)
    gh = jacobi_bracket(J, g, h)
    hf = jacobi_bracket(J, h, f)
    return sum(evaluate(jacobi_bracket(J, u, w), p) for u, w in [(fg, h), (gh, f), (hf, g)])


def test_cyclic_oracle_matches_report_for_failing_structure():
    J = from_strings(CH3, {(0, 1): "1", (0, 2): "x1*x2"}, ["0", "0", "0"])
    rng = rng_for(1, 0)
    f, g, h = (random_polynomial(CH3, 2, rng) for _ in range(3))
    vals = [_cyclic_by_hand(J, f, g, h, x) for x in rng.uniform(-1, 1, (20, 3))]
    assert max(abs(v) for v in vals) > 1e-3


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_fixtures_consistent(name):
    assert consistency_check(FIXTURES[name]())


@pytest.mark.parametrize("name, J", perturbations(), ids=lambda v: v if isinstance(v, str) else "")
def test_perturbations_consistent(name, J):
    assert consistency_check(J)


def test_pure_vector_consistency():
    assert consistency_check(pure_vector_r1())


def test_report_is_deterministic():
    J = contact_r3()
    assert verify_jacobi(J, 50, 3) == verify_jacobi(J, 50, 3)


def test_report_serialises():
    d = verify_jacobi(contact_r3(), 20).to_dict()
    assert set(d) >= {"tensor_residual", "lie_residual", "cyclic_residual", "passed"}


def test_mark_verified_requires_pass():
    J = from_strings(CH3, {(0, 1): "1", (0, 2): "x1*x2"}, ["0", "0", "0"])
    with pytest.raises(ValueError):
        mark_verified(J, verify_jacobi(J, 20))
    good = contact_r3()
    assert mark_verified(good, verify_jacobi(good, 20)).verified_tol == 1e-9


def test_singular_structure_redraws_points():
    # 1/x1 is singular only on a measure-zero set; sampling avoids it
    J = from_strings(Chart.standard(2), {(0, 1): "1/x1"}, ["0", "0"])
    assert np.isfinite(verify_jacobi(J, 30).tensor_residual)


def test_everywhere_singular_structure_raises():
    J = from_strings(Chart.standard(2), {(0, 1): "ln(-1 - x1^2)"}, ["0", "0"])
    with pytest.raises(DomainError):
        verify_jacobi(J, 10)


@pytest.mark.parametrize("bad", [{"samples": 0}, {"tol": 0.0}])
def test_bad_arguments(bad):
    with pytest.raises(ValueError):
        verify_jacobi(contact_r3(), **bad)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_any_plane_bivector_is_poisson(seed):
    # in two dimensions every bivector is Poisson, so a = 0 always passes
    ch = Chart.standard(2)
    P = random_polynomial(ch, 2, rng_for(seed, 0))
    J = JacobiStructure.from_components(ch, {(0, 1): P}, [0, 0])
    r = verify_jacobi(J, 30, seed)
    assert r.passed


@pytest.mark.parametrize(
    "upper, a",
    [
        ({(0, 1): "1", (1, 2): "-x2"}, ["0", "0", "1"]),
        ({(0, 1): "exp(x3)", (0, 2): "x1*x2"}, ["x2", "sin(x1)", "1 + x3^2"]),
    ],
)
def test_jet_cyclic_terms_match_nested_symbolic_brackets(upper, a):
    from jacobi_gauge.verification import cyclic_exprs, cyclic_terms, sample_triples

    J = from_strings(CH3, upper, a)
    triples = sample_triples(J, 5)[:4]
    X = rng_for(9, 0).uniform(-1, 1, (15, 3))
    got = cyclic_terms(J, triples, X)
    for t, exprs in enumerate(cyclic_exprs(J, triples)):
        for c, e in enumerate(exprs):
            want = np.array([evaluate(e, Point(CH3, x)) for x in X])
            np.testing.assert_allclose(got[c, t], want, rtol=1e-11, atol=1e-11)
