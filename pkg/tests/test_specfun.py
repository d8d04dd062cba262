import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import beta as B, eval_gegenbauer, eval_jacobi, poch

from conekit.specfun import (CutoffKind, CutoffSpec, circle_harmonic, cutoff_eval, gauss_jacobi,
                             gegenbauer_eval, jacobi_eval, jacobi_norm, jacobi_table,
                             legendre_normalized_table, zonal_eval, zonal_even_series)
from oracles import jacobi_hyp


def test_jacobi_trivial_values():
    assert jacobi_eval(0, (0.7, -0.3), 0.3) == 1.0
    assert jacobi_eval(5, (0, 0), 1.0) == pytest.approx(1.0, abs=1e-15)


def test_jacobi_against_hypergeometric_series():
    assert jacobi_eval(3, (1.5, -0.5), 0.2) == pytest.approx(jacobi_hyp(3, 1.5, -0.5, 0.2), rel=1e-13)
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = int(rng.integers(0, 25))
        a, b = rng.uniform(-0.9, 4, 2)
        x = rng.uniform(-1, 1)
        assert jacobi_eval(n, (a, b), x) == pytest.approx(jacobi_hyp(n, a, b, x), rel=1e-10, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(0, 30), a=st.floats(-0.9, 5), b=st.floats(-0.9, 5), x=st.floats(-1, 1))
def test_jacobi_matches_scipy(n, a, b, x):
    assert jacobi_eval(n, (a, b), x) == pytest.approx(eval_jacobi(n, a, b, x), rel=1e-9, abs=1e-9)


def test_jacobi_rejects_bad_parameters():
    with pytest.raises(ValueError):
        jacobi_eval(2, (-1.0, 0.0), 0.1)


def test_jacobi_norm_examples():
    assert jacobi_norm(0, (0.3, 2.0)) == 1.0
    assert jacobi_norm(1, (0, 0)) == pytest.approx(1 / 3, rel=1e-14)
    rule = gauss_jacobi(10, (0.5, 0.5))
    ref = np.sum(rule.weights * jacobi_eval(2, (0.5, 0.5), rule.nodes) ** 2)
    assert jacobi_norm(2, (0.5, 0.5)) == pytest.approx(ref, rel=1e-13)


def test_zonal_examples():
    assert zonal_eval(0, 1.3, 0.2) == pytest.approx(1.0)
    # Z_2^1(1) = 3/1 * C_2^1(1) = 3 * (2)_2 / 2!
    assert zonal_eval(2, 1.0, 1.0) == pytest.approx(3 * poch(2, 2) / 2, rel=1e-14)
    with pytest.raises(ValueError):
        zonal_eval(2, 0.0, 0.3)


def test_quadratic_transform():
    lam, n, x = 2.0, 3, 0.4
    lhs = gegenbauer_eval(2 * n, lam, x)
    rhs = poch(lam, n) / poch(0.5, n) * jacobi_eval(n, (lam - 0.5, -0.5), 2 * x * x - 1)
    assert lhs == pytest.approx(rhs, rel=1e-12)
    assert lhs == pytest.approx(eval_gegenbauer(2 * n, lam, x), rel=1e-12)


def test_zonal_even_series_matches_termwise():
    rng = np.random.default_rng(3)
    coef = rng.standard_normal(9)
    x = rng.uniform(-1, 1, 50)
    lam = 1.7
    ref = sum(c * zonal_eval(2 * k, lam, x) for k, c in enumerate(coef))
    assert np.allclose(zonal_even_series(coef, lam, x, block=7), ref, rtol=1e-11, atol=1e-11)


def test_gauss_jacobi_examples():
    r = gauss_jacobi(1, (0, 0))
    assert r.nodes[0] == pytest.approx(0, abs=1e-15) and r.weights[0] == pytest.approx(1)
    r = gauss_jacobi(5, (0, 0))
    assert np.dot(r.weights, r.nodes ** 4) == pytest.approx(1 / 5, rel=1e-13)
    r = gauss_jacobi(8, (1.5, 0), interval=(0, 1))
    assert np.dot(r.weights, r.nodes ** 3) == pytest.approx(B(4, 2.5) / B(1, 2.5), rel=1e-12)
    with pytest.raises(ValueError):
        gauss_jacobi(0, (0, 0))


def test_gauss_jacobi_exact_degree():
    rng = np.random.default_rng(4)
    for m in (3, 10, 40):
        a, b = rng.uniform(-0.8, 3, 2)
        r = gauss_jacobi(m, (a, b))
        tab = jacobi_table(2 * m - 1, (a, b), r.nodes)
        moments = tab @ r.weights
        assert moments[0] == pytest.approx(1)
        assert np.max(np.abs(moments[1:])) < 1e-12 * np.max(np.abs(tab))


def test_cutoff_examples():
    a = CutoffSpec(CutoffKind.TYPE_A)
    assert cutoff_eval(a, 0.5) == 1.0
    assert cutoff_eval(a, 2.5) == 0.0
    b = CutoffSpec("b")
    t = 3.7
    total = sum(cutoff_eval(b, t / 2 ** j) ** 2 for j in range(9))
    assert total == pytest.approx(1, abs=1e-12)
    with pytest.raises(ValueError):
        CutoffSpec("a", smooth_order=2)


@pytest.mark.parametrize("transition", ["exp", "poly"])
def test_cutoff_partition_of_unity(transition):
    b = CutoffSpec("b", smooth_order=6, transition=transition)
    t = np.linspace(1.0, 500, 2001)
    total = sum(cutoff_eval(b, t / 2 ** j) ** 2 for j in range(12))
    assert np.max(np.abs(total - 1)) < 1e-12
    x = np.linspace(0, 3, 301)
    v = cutoff_eval(b, x)
    assert np.all(v[(x < 0.5) | (x > 2)] == 0)


def test_circle_harmonics():
    assert circle_harmonic(0, "const", 1.0) == 1.0
    th1, th2, m = 0.7, -1.9, 6
    s = 1 + sum(circle_harmonic(k, kind, th1) * circle_harmonic(k, kind, th2)
                for k in range(1, m + 1) for kind in ("cos", "sin"))
    ref = 1 + 2 * sum(np.cos(k * (th1 - th2)) for k in range(1, m + 1))
    assert s == pytest.approx(ref, rel=1e-13)
    theta = 2 * np.pi * np.arange(64) / 64
    rows = [circle_harmonic(0, "const", theta)]
    rows += [circle_harmonic(k, kind, theta) for k in range(1, 21) for kind in ("cos", "sin")]
    G = np.array(rows) @ np.array(rows).T / 64
    assert np.max(np.abs(G - np.eye(len(rows)))) < 1e-12


def test_spherical_harmonics_orthonormal():
    rule = gauss_jacobi(20, (0, 0))
    x = rule.nodes
    for q in (0, 2, 5):
        tab = legendre_normalized_table(10, q, x)
        f = 0.5 if q else 1.0  # cos^2 / sin^2 average over phi
        G = (tab * rule.weights) @ tab.T * (2.0 if q else 1.0) * f
        assert np.max(np.abs(G - np.eye(len(tab)))) < 1e-12
