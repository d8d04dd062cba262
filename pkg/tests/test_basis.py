import numpy as np
import pytest

from conekit.basis import Basis, Expansion, MomentOperator, basis_eval, basis_norm, dim_polynomials
from conekit.geometry import WeightSpec, build_separated_set, random_points, reference_quadrature
from oracles import random_polynomial

from conftest import CONE, SURFACE

WEIGHTS = [SURFACE, CONE, WeightSpec("surface", 2, -1, 1.5), WeightSpec("surface", 3, -1, 0.0),
           WeightSpec("surface", 2, 0.5, 0.5), WeightSpec("cone", 2, 0, -0.5, 1.0),
           WeightSpec("cone", 3, 0, 0.0, 0.5)]


def test_constant_element():
    for w in WEIGHTS:
        assert basis_eval(w, 0, 0, 0, random_points(w.domain, w.d, 1, np.random.default_rng(0))[0]) == 1.0
        assert basis_norm(w, 0, 0, 0) == pytest.approx(1.0)


def test_dimensions():
    # surface: dim Pi_n = dim of polynomials in d variables restricted to the cone surface
    assert dim_polynomials(SURFACE, 5) == 36
    assert dim_polynomials(CONE, 5) == 56
    assert dim_polynomials(WeightSpec("cone", 3), 4) == 70


@pytest.mark.parametrize("w", WEIGHTS, ids=str)
def test_gram_matrix(w):
    N = 6
    B = Basis(w, N)
    rule = reference_quadrature(w, 2 * N)
    Phi = B.evaluate(rule.points)
    G = (Phi * rule.weights) @ Phi.T
    assert np.max(np.abs(G - np.eye(B.size))) < 1e-9
    # unnormalized elements have the closed-form squared norms
    H = B.norm_squared()
    Gu = G * np.sqrt(np.outer(H, H))
    assert np.allclose(np.diag(Gu), H, rtol=1e-9)


def test_apex_values_vanish():
    apex = np.zeros(3)
    for n in range(1, 7):
        for m in range(1, n + 1):
            for idx in range(2):
                assert basis_eval(SURFACE, n, m, idx, apex) == 0.0


def test_index_errors():
    with pytest.raises(IndexError):
        basis_eval(SURFACE, 3, 4, 0, np.zeros(3))
    with pytest.raises(IndexError):
        basis_eval(SURFACE, 3, 2, 5, np.zeros(3))


@pytest.mark.parametrize("w", [SURFACE, CONE, WeightSpec("cone", 3, 0, 0, 0.5)], ids=str)
def test_moment_operator_matches_dense(w, rng):
    S = build_separated_set(w.domain, w.d, 0.3, seed=1, certify=False)
    B = Basis(w, 5)
    op = MomentOperator(B, S.layout)
    A = B.evaluate(S.points)
    v = rng.standard_normal(len(S))
    y = rng.standard_normal(B.size)
    assert np.allclose(op.matvec(v), A @ v, atol=1e-12)
    assert np.allclose(op.rmatvec(y), A.T @ y, atol=1e-12)
    V = rng.standard_normal((len(S), 3))
    assert np.allclose(op.matvec(V), A @ V, atol=1e-12)
    assert np.allclose(op.dense(), A, atol=1e-13)


@pytest.mark.parametrize("w", [SURFACE, CONE], ids=["surface", "cone"])
def test_expansion_projection_exact_on_polynomials(w, rng):
    f, exact = random_polynomial(w, 6, rng)
    e = Expansion.project(w, f, 6)
    P = random_points(w.domain, w.d, 40, rng)
    assert np.allclose(e(P), f(P), atol=1e-11)
    assert e.coef[0] == pytest.approx(exact, rel=1e-11)
    # extend and truncate keep the function
    assert np.allclose(e.extend(9)(P), f(P), atol=1e-11)
    assert np.allclose(e.extend(9).truncate(6).coef, e.coef)
    S = build_separated_set(w.domain, w.d, 0.3, certify=False)
    assert np.allclose(e.on_layout(S.layout), f(S.points), atol=1e-11)


def test_expansion_shape_check():
    with pytest.raises(ValueError):
        Expansion(SURFACE, 3, np.zeros(5))
