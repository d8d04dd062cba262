"""Acceptance criteria 1-11 at desk scale (d = 2, surface beta = -1, cone beta = 0).

Each test records one PASS/FAIL line (with the measured numbers and the wall
time against its budget); conftest prints them in the terminal summary.
Criteria that do not hold are left failing; the analysis is in the notes.
"""
import time

import numpy as np
import pytest

from conekit import approx as A
from conekit.basis import Basis, Expansion
from conekit.cubature import default_delta, mz_constants, solve_positive_cubature
from conekit.frames import build_frame, parseval_check
from conekit.geometry import (WeightSpec, build_separated_set, cap_measure_formula,
                              cap_measure_quad, random_points)
from conekit.kernels import christoffel, decay_report, eigen_check, reprod_kernel
from conekit.specfun import CutoffSpec

from conftest import CONE, SURFACE, record_acceptance


def band(v):
    v = np.asarray(v, float)
    return float(v.max() / v.min())


def report(k, ok, detail, seconds, budget):
    ok = bool(ok) and seconds <= budget
    record_acceptance(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}  "
                      f"[{seconds:.1f} s / {budget:.0f} s]")
    return ok


def test_criterion_01_kernel_oracle():
    t0 = time.perf_counter()
    weights = [WeightSpec("surface", 2, -1, g) for g in (-0.5, 0.0, 1.5)]
    weights += [WeightSpec("cone", 2, 0, g, m) for m in (0.0, 0.5, 1.0) for g in (-0.5, 0.0)]
    rng = np.random.default_rng(1)
    worst = 0.0
    for w in weights:
        p = random_points(w.domain, w.d, 100, rng)
        q = random_points(w.domain, w.d, 100, rng)
        for n in range(21):
            a = reprod_kernel(w, n, p, q, method="addition")
            b = reprod_kernel(w, n, p, q, method="basis")
            # relative to the Cauchy-Schwarz scale sqrt(K(p,p) K(q,q))
            scale = np.sqrt(reprod_kernel(w, n, p, p, method="basis") * reprod_kernel(w, n, q, q, method="basis"))
            worst = max(worst, float(np.max(np.abs(a - b) / scale)))
    dt = time.perf_counter() - t0
    assert report(1, worst <= 1e-8, f"max relative error {worst:.2e} over 9 weights, n<=20, 100 pairs",
                  dt, 60)


def test_criterion_02_reproduction():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for w in (SURFACE, CONE):
        P = random_points(w.domain, w.d, 200, rng)
        for n in (4, 8, 16):
            g = Expansion(w, n, rng.standard_normal((Basis(w, n).size, 50)))
            worst = max(worst, float(np.max(np.abs(A.near_best(w, n, g)(P) - g(P)))))
    dt = time.perf_counter() - t0
    assert report(2, worst <= 1e-8, f"max |L_n*g - g| {worst:.2e} (50 g, n=4,8,16, both domains)", dt, 30)


@pytest.mark.parametrize("w", [SURFACE, CONE], ids=["surface", "cone"])
def test_criterion_03_positive_cubature(w):
    delta = default_delta(w)
    rows = []
    ok = True
    t32 = 0.0
    for n in (4, 8, 16, 32):
        t0 = time.perf_counter()
        S = build_separated_set(w.domain, w.d, delta / n, seed=0, certify=False)
        rule = solve_positive_cubature(S, n, w)
        if n == 32:
            t32 = time.perf_counter() - t0
        ratio = rule.weights / cap_measure_formula(w, rule.points, delta / n)
        C = float(max(ratio.max(), 1 / ratio.min()))
        ok &= rule.residual <= 1e-8 and bool(np.all(rule.weights > 0)) and C <= 100
        rows.append(f"n={n}: res {rule.residual:.1e} C {C:.2f}")
    assert report(3, ok, f"{w.domain.value}: " + ", ".join(rows) + " (time at n=32)", t32, 120)


@pytest.mark.parametrize("w", [SURFACE, CONE], ids=["surface", "cone"])
def test_criterion_04_tight_frame(w):
    t0 = time.perf_counter()
    fr = build_frame(w, 5, band_limit=16)
    rng = np.random.default_rng(4)
    f = Expansion(w, 16, rng.standard_normal((Basis(w, 16).size, 50)))
    defect = float(np.max(parseval_check(fr, f, degree=16)))
    dt = time.perf_counter() - t0
    assert report(4, defect <= 1e-6, f"{w.domain.value}: J=5, degree<=16, max Parseval defect {defect:.2e}",
                  dt, 120)


@pytest.mark.parametrize("w", [SURFACE, CONE], ids=["surface", "cone"])
def test_criterion_05_localization(w):
    ns = [16, 32, 64]
    t0 = time.perf_counter()
    rep = decay_report(w, ns, kappa=8.0, seed=0, assertions="13")
    ctrl = decay_report(w, ns, kappa=8.0, cutoff=CutoffSpec("indicator"), seed=0, assertions="1",
                        search=(0, 0, 0))
    dt = time.perf_counter() - t0
    b1, b3 = band(rep.sup_N1), band(rep.sup_N3)
    growth = ctrl.sup_N1[-1] / ctrl.sup_N1[0]
    ok = b1 <= 2 and b3 <= 2 and growth >= 4
    detail = (f"{w.domain.value}: N1 {' '.join(f'{v:.3g}' for v in rep.sup_N1)} (band {b1:.2f}), "
              f"N3 band {b3:.2f}, indicator growth {growth:.3g}")
    # informational: the C^10 polynomial transition (not the default cutoff)
    poly = decay_report(w, ns, kappa=8.0, cutoff=CutoffSpec("a", smooth_order=10, transition="poly"),
                        seed=0, assertions="1")
    record_acceptance(f"      info: {w.domain.value} N1 band with C^10 poly transition {band(poly.sup_N1):.2f}")
    assert report(5, ok, detail, dt, 120)


@pytest.mark.parametrize("w", [SURFACE, CONE], ids=["surface", "cone"])
def test_criterion_06_lipschitz(w):
    t0 = time.perf_counter()
    rep = decay_report(w, [16, 32, 64], kappa=8.0, seed=0, assertions="2")
    dt = time.perf_counter() - t0
    b = band(rep.sup_N2)
    assert report(6, b <= 2, f"{w.domain.value}: N2 {' '.join(f'{v:.3g}' for v in rep.sup_N2)} "
                             f"(band {b:.2f}, required <= 2)", dt, 120)


def test_criterion_07_eigenstructure():
    t0 = time.perf_counter()
    errs = [eigen_check(w, n_max=8, n_points=20, seed=7) for w in (SURFACE, CONE)]
    dt = time.perf_counter() - t0
    assert report(7, max(errs) <= 1e-4, f"max relative error surface {errs[0]:.1e}, cone {errs[1]:.1e}",
                  dt, 30)


def test_criterion_08_christoffel():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    lo, hi = np.inf, 0.0
    for w in (SURFACE, CONE):
        pts = random_points(w.domain, w.d, 20, rng)
        for n in (4, 8, 16, 32):
            r = christoffel(w, n, pts) / cap_measure_formula(w, pts, 1.0 / n)
            lo, hi = min(lo, r.min()), max(hi, r.max())
    dt = time.perf_counter() - t0
    assert report(8, 1 / 50 <= lo and hi <= 50, f"lambda_n/cap in [{lo:.3g}, {hi:.3g}] (20 points x 4 n, "
                                                 f"both domains)", dt, 60)


def test_criterion_09_cap_measure():
    t0 = time.perf_counter()
    radii = np.geomspace(0.01, np.pi / 2, 7)
    lo, hi = np.inf, 0.0
    for w in (SURFACE, CONE):
        for t in (0.0, 0.05, 0.3, 0.7, 1.0):
            rhos = (1.0,) if w.is_surface else (0.0, 0.6, 1.0)
            for rho in rhos:
                c = np.array([rho * t, 0.0, t])
                for r in radii:
                    q = cap_measure_quad(w, c, r) / cap_measure_formula(w, c, r)
                    lo, hi = min(lo, q), max(hi, q)
    dt = time.perf_counter() - t0
    assert report(9, 1 / 20 <= lo and hi <= 20, f"quad/formula in [{lo:.3g}, {hi:.3g}] over t x r grid, "
                                                 f"r <= pi/2", dt, 60)


def test_criterion_10_mz_nikolskii():
    t0 = time.perf_counter()
    ok = True
    parts = []
    for w in (SURFACE, CONE):
        for p in (1, np.inf):
            lows, ups = [], []
            for n in (8, 16, 32):
                S = build_separated_set(w.domain, w.d, 1.0 / n, seed=0, certify=False)
                r = mz_constants(S, n, w, p=p, trials=20)
                lows.append(r.lower)
                ups.append(r.upper)
            ok &= band(lows) <= 2 and band(ups) <= 2
            parts.append(f"{w.domain.value} p={'inf' if p == np.inf else 1}: "
                         f"c band {band(lows):.2f} C band {band(ups):.2f}")
        nik = A.nikolskii_report(w, (8, 16, 32), oversample=2 if w.is_surface else 1)
        ok &= nik.ok
        parts.append(f"{w.domain.value} Nikolskii slope {nik.slope:.2f} <= {nik.bound:.2f}")
    dt = time.perf_counter() - t0
    assert report(10, ok, "; ".join(parts), dt, 120)


def test_criterion_11_direct_inverse():
    t0 = time.perf_counter()
    rows = A.corpus_experiment(SURFACE, (4, 8, 16, 32, 64), (1, 2), N=128)
    dt = time.perf_counter() - t0
    direct = max(r.ratio for r in rows)
    inverse = max(r.inverse for r in rows)
    ok = len({r.name for r in rows}) == 10 and direct <= 10 and inverse <= 10 \
        and min(min(r.ratio, r.inverse) for r in rows) >= 0
    assert report(11, ok, f"max E_n/K_hat {direct:.3g}, max inverse constant {inverse:.3g} "
                          f"(band [0, 10], 10 functions, n=4..64, r=1,2)", dt, 300)
