"""
A tight needlet frame on the solid cone
=======================================

Level j of the frame carries a positive cubature rule; the needlet at node z
is sqrt(lambda_z) times a localized kernel of degree 2^(j-1) centred at z.
For band-limited f the squared frame coefficients add up to ||f||^2.
"""
import numpy as np

from conekit.basis import Basis, Expansion
from conekit.frames import analyze, build_frame, parseval_check, synthesize
from conekit.geometry import WeightSpec, random_points

w = WeightSpec("cone", 2, beta=0.0, gamma=0.0, mu=0.0)
fr = build_frame(w, 4, band_limit=8)
print("nodes per level:", fr.level_sizes())

rng = np.random.default_rng(1)
f = Expansion(w, 8, rng.standard_normal(Basis(w, 8).size))
c = analyze(fr, f)
energy = [float(np.sum(x ** 2)) for x in c.levels]
print("energy per level:", np.round(energy, 4), " sum", sum(energy), " ||f||^2", f.norm() ** 2)

# synthesis inverts analysis on band-limited functions
P = random_points(w.domain, w.d, 500, rng)
g = synthesize(fr, c)
print("max |synthesize(analyze f) - f| =", np.max(np.abs(g(P) - f(P))))

# Parseval holds for many functions at once
F = Expansion(w, 8, rng.standard_normal((Basis(w, 8).size, 20)))
print("max Parseval defect over 20 functions:", np.max(parseval_check(fr, F, degree=8)))

# a single needlet is concentrated around its node
j, idx = 3, 40
z = fr.levels[j].rule.points[idx]
near = random_points(w.domain, w.d, 4000, rng)
vals = np.abs(fr.element(j, idx, near))
from conekit.geometry import dist  # noqa: E402
d = dist(w.domain, np.repeat(z[None], len(near), 0), near)
for lo, hi in ((0, 0.1), (0.1, 0.3), (0.3, 0.6), (0.6, 2)):
    m = (d >= lo) & (d < hi)
    print(f"distance in [{lo}, {hi}): max |psi| = {vals[m].max() if m.any() else float('nan'):.3g}")
