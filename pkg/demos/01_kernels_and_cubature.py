"""
Reproducing kernels and positive cubature on the conic surface
===============================================================

The degree-n reproducing kernel can be summed over an orthonormal basis or
evaluated through the addition formula, which only needs one-dimensional
Jacobi polynomials.  Both are computed here and compared, then a positive
cubature rule is built on a separated ring set.
"""
import time

import numpy as np

from conekit.cubature import default_delta, solve_positive_cubature
from conekit.geometry import (WeightSpec, build_separated_set, cap_measure_formula,
                              random_points)
from conekit.kernels import christoffel, reprod_kernel

w = WeightSpec("surface", 2, beta=-1.0, gamma=0.0)
rng = np.random.default_rng(0)
p = random_points(w.domain, w.d, 200, rng)
q = random_points(w.domain, w.d, 200, rng)

# %% addition formula against the basis sum
for n in (2, 8, 16):
    t0 = time.time()
    a = reprod_kernel(w, n, p, q, method="addition")
    ta = time.time() - t0
    t0 = time.time()
    b = reprod_kernel(w, n, p, q, method="basis")
    tb = time.time() - t0
    print(f"n={n:2d}  max |addition - basis| = {np.max(np.abs(a - b)):.2e}"
          f"   ({ta * 1e3:.0f} ms vs {tb * 1e3:.0f} ms)")

# %% the Christoffel function behaves like the cap measure of radius 1/n
for n in (4, 8, 16, 32):
    r = christoffel(w, n, p[:20]) / cap_measure_formula(w, p[:20], 1.0 / n)
    print(f"n={n:2d}  lambda_n / cap(x, 1/n) in [{r.min():.3f}, {r.max():.3f}]")

# %% positive cubature of degree n on an (delta/n)-separated set
delta = default_delta(w)
for n in (4, 8, 16):
    S = build_separated_set(w.domain, w.d, delta / n, seed=0, certify=False)
    rule = solve_positive_cubature(S, n, w)
    ratio = rule.weights / cap_measure_formula(w, rule.points, delta / n)
    print(f"n={n:2d}  {len(rule):5d} nodes, residual {rule.residual:.1e}, "
          f"weight/cap in [{ratio.min():.2f}, {ratio.max():.2f}]")

# integrate a polynomial of degree 8 with the degree-8 rule
f = lambda P: (1 + P[:, 0]) ** 3 * P[:, -1] ** 5
S = build_separated_set(w.domain, w.d, delta / 8, seed=0, certify=False)
rule = solve_positive_cubature(S, 8, w)
from conekit.geometry import reference_quadrature  # noqa: E402
ref = reference_quadrature(w, 8)
print("cubature", rule.integrate(f(rule.points)), " product Gauss", ref.integrate(f(ref.points)))
