import numpy as np
import pytest

from conekit import approx as A
from conekit.basis import Basis, Expansion
from conekit.geometry import WeightSpec, random_points, reference_quadrature
from conekit.specfun import gauss_jacobi

from conftest import CONE, SURFACE


def rand_exp(w, N, rng, r=None):
    size = Basis(w, N).size
    return Expansion(w, N, rng.standard_normal(size if r is None else (size, r)))


def test_projection_of_basis_element_and_constant(desk_weight):
    w = desk_weight
    B = Basis(w, 5)
    k = B.index(4, 2, 0)
    coef = np.zeros(B.size)
    coef[k] = 1.0
    f = Expansion(w, 5, coef)
    for n in range(6):
        part, c = A.project(w, n, f)
        if n == 4:
            assert np.max(np.abs(c - (B.deg[B.deg == 4] * 0 + (np.arange(B.size)[B.deg == 4] == k))))\
                < 1e-9
        else:
            assert np.max(np.abs(c)) < 1e-12
    part, c = A.project(w, 0, lambda P: np.ones(len(P)), N=4)
    assert c[0] == pytest.approx(1, abs=1e-12)
    assert np.max(np.abs(A.project(w, 3, lambda P: np.ones(len(P)), N=4)[1])) < 1e-12


def test_projections_reassemble(desk_weight, rng):
    w = desk_weight
    f = rand_exp(w, 6, rng)
    P = random_points(w.domain, w.d, 50, rng)
    total = sum(A.project(w, n, f)[0].extend(6)(P) for n in range(7))
    assert np.allclose(total, f(P), atol=1e-8)


def test_near_best_reproduces(desk_weight, rng):
    w = desk_weight
    for n in (4, 8):
        g = rand_exp(w, n, rng, r=3)
        nb = A.near_best(w, n, g)
        P = random_points(w.domain, w.d, 50, rng)
        assert np.max(np.abs(nb(P) - g(P))) < 1e-8
        assert nb.rule_degree == 3 * n


def test_near_best_kink_error_decreases():
    f = A.CORPUS["abs_t_half"]
    errs = []
    for n in (4, 8, 16, 32):
        nb = A.near_best(SURFACE, n, f)
        P = A.probe_grid(SURFACE, 2 * n, 2)
        errs.append(np.max(np.abs(nb(P) - f(P))))
    assert np.all(np.diff(errs) < 0)


def test_near_best_smooth_error_fast_decay():
    f = A.CORPUS["exp_x1"]
    ns = np.array([2, 4, 6, 8])
    errs = []
    for n in ns:
        nb = A.near_best(SURFACE, int(n), f)
        P = A.probe_grid(SURFACE, 2 * int(n), 2)
        errs.append(np.max(np.abs(nb(P) - f(P))))
    slopes = np.diff(np.log(errs)) / np.diff(np.log(ns))
    # the local log-log slope keeps steepening past -4
    assert slopes[-1] < -4 and slopes[-1] < slopes[0]


def test_cesaro_nonnegative(desk_weight):
    w = desk_weight
    a, b = A.jacobi_reduction(w)
    delta = a + b + 2
    P = random_points(w.domain, w.d, 1000, np.random.default_rng(0))
    for f in (lambda X: np.maximum(X[:, 0], 0.0), lambda X: (X[:, -1] > 0.7) * 1.0):
        fe = Expansion.project(w, f, 16, 64)
        for n in (4, 16):
            assert A.cesaro_mean(w, n, delta, fe)(P).min() >= -1e-10


def test_cesaro_bounded(desk_weight, rng):
    w = desk_weight
    a, b = A.jacobi_reduction(w)
    delta = a + 0.5 + 0.25
    f = rand_exp(w, 12, rng)
    P = A.probe_grid(w, 24, 1)
    sup_f = np.max(np.abs(f(P)))
    for n in (4, 8, 12):
        assert np.max(np.abs(A.cesaro_mean(w, n, delta, f)(P))) <= sup_f * (1 + 1e-8)


def test_cesaro_degree_zero_is_projection(rng):
    f = rand_exp(SURFACE, 4, rng)
    s = A.cesaro_mean(SURFACE, 0, 2.0, f)
    assert s.coef[0] == f.coef[0] and s.N == 0


def test_convolution_multiplier_constant():
    lam = A.convolution_multiplier(SURFACE, lambda s: np.ones_like(s), 8)
    assert lam[0] == pytest.approx(1, abs=1e-14)
    assert np.max(np.abs(lam[1:])) < 1e-13


@pytest.mark.parametrize("w", [SURFACE, CONE, WeightSpec("surface", 2, -1, 1.5),
                               WeightSpec("cone", 2, 0, 0.5, 1.0)], ids=str)
def test_convolution_against_double_quadrature(w, rng):
    N = 6
    f = rand_exp(w, N, rng)
    g = lambda s: np.exp(s) * np.cos(3 * s)
    x = random_points(w.domain, w.d, 3, rng)
    lhs = A.convolve(w, f, g)(x)
    rhs = A.convolution_direct(w, f, g, x, quad_degree=2 * N + 30, order=40)
    assert np.max(np.abs(lhs - rhs)) <= 1e-7 * max(1.0, np.max(np.abs(rhs)))


def test_young_inequality(desk_weight, rng):
    w = desk_weight
    a, b = A.jacobi_reduction(w)
    rule = gauss_jacobi(200, (a, b))
    for _ in range(5):
        c = rng.standard_normal(4)
        g = lambda s, c=c: np.polynomial.chebyshev.chebval(s, c) * np.exp(-s)
        f = rand_exp(w, 8, rng)
        g1 = np.sum(rule.weights * np.abs(g(rule.nodes)))
        assert A.convolve(w, f, g).norm() <= f.norm() * g1 * (1 + 1e-12)


def test_translation(desk_weight, rng):
    w = desk_weight
    f = rand_exp(w, 10, rng)
    assert np.allclose(A.translate(w, 0.0, f).coef, f.coef, atol=1e-14)
    for th in (0.1, 0.7, 2.0, np.pi):
        assert A.translate(w, th, f).norm() <= f.norm() * (1 + 1e-12)
        m = A.translation_multiplier(w, th, 10)
        assert np.all(np.abs(m) <= 1 + 1e-12)
    with pytest.raises(ValueError):
        A.translate(w, -0.1, f)


def test_translation_preserves_positivity(desk_weight):
    w = desk_weight
    a, b = A.jacobi_reduction(w)
    fe = Expansion.project(w, lambda X: (X[:, -1] - 0.4) ** 2 * (1 + X[:, 0]), 12, 48)
    # positive (C, delta) mean gives a nonnegative polynomial
    f = A.cesaro_mean(w, 12, a + b + 2, fe)
    P = random_points(w.domain, w.d, 1000, np.random.default_rng(1))
    assert f(P).min() >= -1e-12
    for th in (0.2, 0.9, 2.5):
        assert A.translate(w, th, f)(P).min() >= -1e-9


def test_frac_diff(desk_weight, rng):
    w = desk_weight
    f = rand_exp(w, 8, rng)
    const = Expansion(w, 0, [3.0])
    assert A.frac_diff(w, 1.3, const).coef[0] == 0
    two = A.frac_diff(w, 2, f)
    assert np.allclose(two.coef, w.eigenvalue(f.degrees()) * f.coef)
    assert np.allclose(A.frac_diff(w, 2, two).coef, A.frac_diff(w, 4, f).coef, rtol=1e-10)


def test_bernstein_ratio_bounded(desk_weight):
    ratios = [A.bernstein_ratio(desk_weight, n, r=2) for n in (8, 16, 32)]
    assert max(ratios) / min(ratios) < 2
    assert max(ratios) <= 2


def test_modulus_properties(desk_weight, rng):
    w = desk_weight
    const = Expansion(w, 4, np.eye(Basis(w, 4).size)[0])
    assert A.modulus(w, 2, 0.5, const) < 1e-14
    f = rand_exp(w, 10, rng)
    vals = [A.modulus(w, r, t, f) for r in (1, 2) for t in (0.05, 0.1, 0.3, 0.9)]
    assert np.all(np.diff(vals[:4]) >= -1e-14) and np.all(np.diff(vals[4:]) >= -1e-14)
    assert max(vals) <= 2 ** (2 + 2) * f.norm()


def test_k_functional_linear_in_t(desk_weight, rng):
    w = desk_weight
    f = rand_exp(w, 6, rng)
    for r in (1, 2):
        k1 = A.k_functional_upper(w, r, 1e-3, f)
        k2 = A.k_functional_upper(w, r, 1e-4, f)
        assert k1 / k2 == pytest.approx(10 ** r, rel=1e-6)


def test_best_approx_error(desk_weight, rng):
    w = desk_weight
    f = rand_exp(w, 6, rng)
    assert A.best_approx_error(w, 6, f) == 0
    errs = [A.best_approx_error(w, n, f) for n in range(7)]
    assert np.all(np.diff(errs) <= 0)
    assert errs[0] == pytest.approx(np.sqrt(np.sum(f.coef[1:] ** 2)))
    # the sup-norm bound uses L_{n//2} * f, which reproduces Pi_3 at n = 6
    g = rand_exp(w, 3, rng)
    assert A.best_approx_error(w, 6, g, p=np.inf) < 1e-10
    assert A.best_approx_error(w, 6, f, p=np.inf) > 1e-6


def test_omega_k_equivalence_band():
    """omega_r(f, t) / K_hat_r(f, t) over a t-grid and the corpus stays in a band."""
    ratios = []
    for name, f in A.CORPUS.items():
        tg = A.Target.of(SURFACE, f, 48)
        for r in (1, 2):
            for t in (1 / 4, 1 / 8, 1 / 16, 1 / 32):
                ratios.append(A.modulus(SURFACE, r, t, tg) / A.k_functional_upper(SURFACE, r, t, tg))
    ratios = np.array(ratios)
    assert ratios.min() > 0 and ratios.max() / ratios.min() < 100


def test_nikolskii_slope():
    rep = A.nikolskii_report(SURFACE)
    assert rep.ok and rep.slope > 0


def test_corpus_experiment_small(tmp_path):
    rows = A.corpus_experiment(SURFACE, n_values=(4, 8), r_values=(1,), N=16,
                               corpus={k: A.CORPUS[k] for k in ("abs_t_half", "poly5")})
    assert len(rows) == 4
    path = str(tmp_path / "c.csv")
    A.write_experiment(rows, path, {"seed": 0})
    lines = open(path).read().splitlines()
    assert lines[0] == "function,r,n,E_n,K_hat,omega,ratio"
    assert len(lines) == 5
    poly = [r for r in rows if r.name == "poly5"]
    assert poly[-1].E_n < 1e-10
