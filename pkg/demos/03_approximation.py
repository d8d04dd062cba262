"""
Near-best approximation and smoothness on the conic surface
===========================================================

L_n * f reproduces polynomials of degree n and has degree 2n; it is computed
from a positive cubature of degree 3n.  The error of f = |t - 1/2| (a kink
across a circle) decays slowly, a smooth function decays fast.  The last
part compares the best L2 error E_n(f) with the K-functional K_r(f, 1/n).
"""
import numpy as np

from conekit import approx as A
from conekit.geometry import WeightSpec

w = WeightSpec("surface", 2, beta=-1.0, gamma=0.0)

for name in ("abs_t_half", "exp_x1"):
    f = A.CORPUS[name]
    print(name)
    for n in (4, 8, 16):
        nb = A.near_best(w, n, f)
        P = A.probe_grid(w, 2 * n, 2)
        print(f"  n={n:2d}  sup error {np.max(np.abs(nb(P) - f(P))):.3e}  ({nb.rule_nodes} nodes)")

# (C, delta) means are positive operators once delta is large enough
a, b = A.jacobi_reduction(w)
step = lambda P: (P[:, -1] > 0.6) * 1.0
from conekit.basis import Expansion  # noqa: E402
F = Expansion.project(w, step, 24, 96)
P = A.probe_grid(w, 24, 1)
for delta in (0.5, a + b + 2):
    print(f"Cesaro delta={delta:.1f}: min of the mean of an indicator = "
          f"{A.cesaro_mean(w, 24, delta, F)(P).min():+.3e}")

# direct estimate E_n <= C K_r(f, 1/n) on a few functions
rows = A.corpus_experiment(w, (4, 8, 16, 32), (1, 2), N=64,
                           corpus={k: A.CORPUS[k] for k in ("abs_t_half", "sqrt_t", "runge")})
print("function    r   n      E_n      K_hat    E_n/K_hat")
for r in rows:
    print(f"{r.name:11s} {r.r}  {r.n:2d}  {r.E_n:9.3e} {r.K_hat:9.3e}  {r.ratio:.3f}")
