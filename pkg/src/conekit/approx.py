"""Approximation on conic domains through orthogonal expansions.

Operators with a one-dimensional structure (convolution, translation, Cesaro
means, fractional powers of the eigen-operator, localized-kernel means) are
diagonal in the orthonormal basis: they multiply the degree-k component by a
number.  They act exactly on the coefficients of band-limited functions;
other functions are projected to Pi_N first and the truncation tail is
reported separately.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .basis import Expansion, MomentOperator, _cached_basis
from .cubature import default_delta, solve_positive_cubature
from .geometry import WeightSpec, build_separated_set, reference_quadrature
from .kernels import AdditionRule, cutoff_coefficients
from .specfun import CutoffKind, CutoffSpec, gauss_jacobi, jacobi_table

__all__ = ["SpectralCoeffs", "project", "jacobi_reduction", "convolution_multiplier", "convolve",
           "translate", "translation_multiplier", "cesaro_multiplier", "cesaro_mean",
           "frac_diff", "near_best", "near_best_spectral", "modulus", "k_functional_upper",
           "best_approx_error", "bernstein_ratio", "nikolskii_report", "probe_grid", "sup_norm",
           "CORPUS", "corpus_experiment", "ExperimentRow"]

SpectralCoeffs = Expansion


def project(w: WeightSpec, n: int, f, N: int | None = None, quad_degree: int | None = None):
    """proj_n f as (Expansion of degree n holding only degree-n terms, its
    degree-n coefficients).  f is projected onto Pi_N (default n) with a
    product Gauss rule of degree quad_degree (default 2N)."""
    N = n if N is None else max(int(N), n)
    fe = f if isinstance(f, Expansion) else Expansion.project(w, f, N, quad_degree)
    fe = fe.truncate(max(n, 0)) if fe.N >= n else fe.extend(n)
    mult = np.zeros(n + 1)
    mult[n] = 1.0
    part = fe.multiply(mult)
    return part, part.coef[fe.basis.deg == n]


# ---------------------------------------------------------------------------
# one-dimensional multipliers


def jacobi_reduction(w: WeightSpec):
    """(alpha, beta) of the Jacobi weight carried by the addition formula."""
    return w.zonal_lambda - 0.5, -0.5


def _jacobi_R(N: int, a: float, b: float, x) -> np.ndarray:
    """R_k(x) = P_k(x) / P_k(1), k = 0..N."""
    P = jacobi_table(N, (a, b), np.atleast_1d(np.asarray(x, float)))
    P1 = jacobi_table(N, (a, b), np.ones(1))
    return P / P1


def convolution_multiplier(w: WeightSpec, g, N: int, order: int | None = None) -> np.ndarray:
    """Lambda_k(g) = c int g(s) R_k(s) w_{a,b}(s) ds for k = 0..N."""
    a, b = jacobi_reduction(w)
    rule = gauss_jacobi(order or (2 * N + 64), (a, b))
    R = _jacobi_R(N, a, b, rule.nodes)
    return R @ (rule.weights * np.asarray(g(rule.nodes), float))


def convolve(w: WeightSpec, f: Expansion, g, order: int | None = None) -> Expansion:
    return f.multiply(convolution_multiplier(w, g, f.N, order))


def translation_multiplier(w: WeightSpec, theta: float, N: int) -> np.ndarray:
    a, b = jacobi_reduction(w)
    return _jacobi_R(N, a, b, np.cos(theta))[:, 0]


def translate(w: WeightSpec, theta: float, f: Expansion) -> Expansion:
    """S_theta f: degree-k component multiplied by R_k(cos theta)."""
    if not 0 <= theta <= np.pi:
        raise ValueError("theta must lie in [0, pi]")
    return f.multiply(translation_multiplier(w, theta, f.N))


def convolution_direct(w: WeightSpec, f, g, x, quad_degree: int, order: int | None = None):
    """(f * g)(x) = int f(y) T g(x, y) w(y) dy by quadrature over y, with
    T g(x, y) the addition-formula average of g(2 zeta^2 - 1)."""
    rule = reference_quadrature(w, quad_degree)
    Y = rule.points
    fy = f(Y) * rule.weights
    add = AdditionRule(w, order or (quad_degree + 8))
    step = max(1, 2_000_000 // len(add.weights))  # keep (pairs, rule nodes) blocks small
    out = []
    for p in np.atleast_2d(x):
        total = 0.0
        for s in range(0, len(Y), step):
            Ys = Y[s:s + step]
            zeta = add.argument(np.repeat(p[None, :], len(Ys), axis=0), Ys)  # (pairs, rule nodes)
            Tg = np.asarray(g(2 * zeta ** 2 - 1), float) @ add.weights
            total += fy[s:s + step] @ Tg
        out.append(total)
    return np.array(out)


def cesaro_multiplier(n: int, delta: float) -> np.ndarray:
    """binom(n-k+delta, n-k) / binom(n+delta, n), k = 0..n."""
    k = np.arange(n + 1)
    logA = lambda m: gammaln(m + delta + 1) - gammaln(delta + 1) - gammaln(m + 1)
    return np.exp(logA(n - k) - logA(n))


def cesaro_mean(w: WeightSpec, n: int, delta: float, f: Expansion) -> Expansion:
    """(C, delta) mean of the Fourier partial sums of f."""
    fe = f.truncate(n) if f.N >= n else f.extend(n)
    return fe.multiply(cesaro_multiplier(n, delta))


def frac_diff(w: WeightSpec, r: float, f: Expansion) -> Expansion:
    """(-D)^{r/2} f: degree-k component times mu(k)^{r/2}."""
    mu = w.eigenvalue(np.arange(f.N + 1))
    return f.multiply(mu ** (r / 2))


# ---------------------------------------------------------------------------
# near-best approximation


def near_best_spectral(f: Expansion, n: int, cutoff: CutoffSpec | None = None) -> Expansion:
    """L_n * f for f known through its coefficients (degree <= 2n)."""
    a = cutoff_coefficients(n, cutoff or CutoffSpec(CutoffKind.TYPE_A))
    fe = f.truncate(2 * n) if f.N >= 2 * n else f.extend(2 * n)
    return fe.multiply(a[:2 * n + 1])


@dataclass
class NearBest:
    expansion: Expansion
    rule_nodes: int
    rule_degree: int

    def __call__(self, pts):
        return self.expansion(pts)


def near_best(w: WeightSpec, n: int, f, cutoff: CutoffSpec | None = None, delta: float | None = None,
              seed: int | None = 0) -> NearBest:
    """(L_n * f)(p) = sum_z lam_z f(z) L_n(p, z) with a positive cubature of
    degree 3n, so that L_n * g = g for g in Pi_n.  The kernel sum is applied
    in the orthonormal basis: L_n(p, z) = sum_k a(k/n) phi_k(p) phi_k(z)."""
    cutoff = cutoff or CutoffSpec(CutoffKind.TYPE_A)
    if cutoff.kind is not CutoffKind.TYPE_A:
        raise ValueError("near-best operators use a type-a cutoff")
    deg = 3 * n
    delta = default_delta(w) if delta is None else delta
    S = build_separated_set(w.domain, w.d, delta / max(deg, 1), seed=seed, certify=False)
    rule = solve_positive_cubature(S, deg, w)
    B = _cached_basis(w, 2 * n)
    op = MomentOperator(B, rule.layout)
    vals = f.on_layout(rule.layout) if isinstance(f, Expansion) else np.asarray(f(rule.points), float)
    lw = rule.weights if vals.ndim == 1 else rule.weights[:, None]
    coef = op.matvec(lw * vals)
    a = cutoff_coefficients(n, cutoff)
    out = Expansion(w, 2 * n, coef).multiply(a[:2 * n + 1])
    return NearBest(out, len(rule), deg)


# ---------------------------------------------------------------------------
# norms


def probe_grid(w: WeightSpec, degree: int, oversample: int = 4):
    """Dense ring x angle grid, about `oversample` points per degree in each
    coordinate, including apex, rim and boundary points."""
    m = oversample * max(degree, 1) + 1
    th = np.linspace(0, np.pi, m)
    t = np.sin(th / 2) ** 2
    phi = np.linspace(0, 2 * np.pi, 2 * m, endpoint=False)
    if w.is_surface:
        rhos = np.ones(1)
    else:
        rhos = np.sin(np.linspace(0, np.pi / 2, m // 2 + 2))
    if w.d == 2:
        dirs = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    else:
        ch = np.linspace(0, np.pi, m)
        C, P = np.meshgrid(ch, phi, indexing="ij")
        dirs = np.stack([np.sin(C) * np.cos(P), np.sin(C) * np.sin(P), np.cos(C)], -1).reshape(-1, 3)
    T, R, D = np.meshgrid(t, rhos, np.arange(len(dirs)), indexing="ij")
    T, R, D = T.ravel(), R.ravel(), D.ravel()
    return np.column_stack([(T * R)[:, None] * dirs[D], T])


def sup_norm(f, pts) -> np.ndarray:
    """Max |f| over the probe points (approximate sup norm)."""
    return np.max(np.abs(f(pts)), axis=-1)


# ---------------------------------------------------------------------------
# moduli, K-functionals and best approximation (p = 2 exact, p = inf on grids)


def _theta_grid(t: float, points: int = 32) -> np.ndarray:
    return np.geomspace(t / 100, t, points)


@dataclass
class Target:
    """A function seen through its coefficients up to degree N plus the L2
    norm of what lies beyond N."""

    f: Expansion
    tail: float = 0.0

    @classmethod
    def of(cls, w: WeightSpec, f, N: int = 64, quad_degree: int | None = None):
        if isinstance(f, Target):
            return f
        if isinstance(f, Expansion):
            return cls(f, 0.0)
        quad_degree = quad_degree or 2 * N
        fe = Expansion.project(w, f, N, quad_degree)
        rule = reference_quadrature(w, quad_degree)
        norm2 = rule.weights @ np.asarray(f(rule.points), float) ** 2
        return cls(fe, float(np.sqrt(max(norm2 - np.sum(fe.coef ** 2), 0.0))))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.f.coef ** 2) + self.tail ** 2))


def _l2_multiplied(target: Target, mult, tail_mult: float = 1.0) -> float:
    m = np.asarray(mult, float)[target.f.basis.deg]
    return float(np.sqrt(np.sum((m * target.f.coef) ** 2) + (tail_mult * target.tail) ** 2))


def modulus(w: WeightSpec, r: float, t: float, f, p=2, N: int = 64, points: int = 32,
            probes=None) -> float:
    """omega_r(f, t)_p = sup_{theta in (t/100, t]} ||(I - S_theta)^{r/2} f||_p.

    p = 2 is computed from coefficients (the part beyond N enters with the
    largest multiplier 2^{r/2}); p = inf on a probe grid for band-limited f."""
    tg = Target.of(w, f, N)
    thetas = _theta_grid(t, points)
    best = 0.0
    for th in thetas:
        mult = (1 - translation_multiplier(w, th, tg.f.N)) ** (r / 2)
        if p == 2:
            val = _l2_multiplied(tg, mult, tail_mult=2 ** (r / 2))
        else:
            pts = probe_grid(w, tg.f.N) if probes is None else probes
            val = float(sup_norm(tg.f.multiply(mult), pts))
        best = max(best, val)
    return best


def k_functional_upper(w: WeightSpec, r: float, t: float, f, p=2, N: int = 64,
                       cutoff: CutoffSpec | None = None, probes=None) -> float:
    """Upper bound on K_r(f, t)_p: min over g = L_{2^k} * f, k = 0..J (with
    2^J >= N so that g = f's projection is included) of
    ||f - g||_p + t^r ||(-D)^{r/2} g||_p."""
    tg = Target.of(w, f, N)
    cutoff = cutoff or CutoffSpec(CutoffKind.TYPE_A)
    Nf = tg.f.N
    mu = w.eigenvalue(np.arange(Nf + 1))
    J = int(np.ceil(np.log2(max(Nf, 1)))) + 1
    best = np.inf
    for k in range(J + 1):
        n = 2 ** k
        a = np.zeros(Nf + 1)
        ck = cutoff_coefficients(n, cutoff)
        m = min(Nf, len(ck) - 1)
        a[:m + 1] = ck[:m + 1]
        if p == 2:
            err = _l2_multiplied(tg, 1 - a)
            smooth = _l2_multiplied(Target(tg.f, 0.0), a * mu ** (r / 2))
        else:
            pts = probe_grid(w, Nf) if probes is None else probes
            err = float(sup_norm(tg.f.multiply(1 - a), pts))
            smooth = float(sup_norm(tg.f.multiply(a * mu ** (r / 2)), pts))
        best = min(best, err + t ** r * smooth)
    return float(best)


def best_approx_error(w: WeightSpec, n: int, f, p=2, N: int = 64, probes=None) -> float:
    """E_n(f)_2 from the coefficient tail (exact given the projection); for
    p = inf the upper bound ||f - L_{n//2} * f||_inf on a probe grid
    (L_{n//2} * f has degree <= n)."""
    tg = Target.of(w, f, N)
    if p == 2:
        mult = (np.arange(tg.f.N + 1) > n).astype(float)
        return _l2_multiplied(tg, mult)
    g = near_best_spectral(tg.f, n // 2)
    diff = tg.f.extend(max(tg.f.N, n))
    diff = Expansion(w, diff.N, diff.coef - g.extend(diff.N).coef)
    pts = probe_grid(w, diff.N) if probes is None else probes
    return float(sup_norm(diff, pts))


# ---------------------------------------------------------------------------
# inequality reports


def bernstein_ratio(w: WeightSpec, n: int, r: float = 2, trials: int = 20, seed: int = 0) -> float:
    """max over random f in Pi_n of ||(-D)^{r/2} f||_2 / (n^r ||f||_2)."""
    rng = np.random.default_rng(seed)
    B = _cached_basis(w, n)
    C = rng.standard_normal((B.size, trials))
    f = Expansion(w, n, C)
    return float(np.max(frac_diff(w, r, f).norm() / (n ** r * f.norm())))


@dataclass
class NikolskiiReport:
    n: list
    ratio: list  # sup_x sqrt(K_n(x, x)) = sup over Pi_n of ||f||_inf / ||f||_2
    slope: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.slope <= self.bound


def nikolskii_report(w: WeightSpec, n_values=(8, 16, 32), oversample: int = 2) -> NikolskiiReport:
    """Sharp Nikolskii constants sup_x sqrt(sum_k phi_k(x)^2) on probe grids and
    their log-log slope against n, compared with alpha(w)/2 + 0.3."""
    ratios = []
    for n in n_values:
        pts = probe_grid(w, n, oversample)
        B = _cached_basis(w, n)
        best = 0.0
        for i in range(0, len(pts), 4096):
            Phi = B.evaluate(pts[i:i + 4096])
            best = max(best, float(np.sqrt(np.max(np.sum(Phi ** 2, axis=0)))))
        ratios.append(best)
    slope = float(np.polyfit(np.log(n_values), np.log(ratios), 1)[0])
    return NikolskiiReport(list(n_values), ratios, slope, w.doubling_index / 2 + 0.3)


# ---------------------------------------------------------------------------
# corpus experiment


CORPUS = {
    "exp_smooth": lambda P: np.exp(P[:, -1] + P[:, 0]),
    "exp_x1": lambda P: np.exp(P[:, -1]) * P[:, 0],
    "abs_t_half": lambda P: np.abs(P[:, -1] - 0.5),
    "abs_x1": lambda P: np.abs(P[:, 0]),
    "cube_t_half": lambda P: np.abs(P[:, -1] - 0.5) ** 3,
    "sqrt_t": lambda P: np.sqrt(P[:, -1]),
    "ramp_x2_sq": lambda P: np.maximum(P[:, 1], 0.0) ** 2,
    "runge": lambda P: 1.0 / (1.0 + 4.0 * (P[:, 0] ** 2 + (P[:, -1] - 0.5) ** 2)),
    "tanh_step": lambda P: np.tanh(10.0 * (P[:, -1] - 0.5)),
    "poly5": lambda P: P[:, -1] ** 3 * P[:, 0] * P[:, 1],
}


@dataclass
class ExperimentRow:
    name: str
    r: int
    n: int
    E_n: float
    K_hat: float
    omega: float
    ratio: float  # E_n / K_hat(f, 1/n): direct-estimate constant
    inverse: float  # K_hat(f, 1/n) / (n^-r sum_{k<=n} (k+1)^{r-1} E_k)


def corpus_experiment(w: WeightSpec, n_values=(4, 8, 16, 32, 64), r_values=(1, 2), N: int = 128,
                      corpus: dict | None = None):
    """E_n(f)_2, K_hat_r(f, 1/n)_2 and omega_r(f, 1/n)_2 for each function of the
    corpus (projected to Pi_N), with the direct constant E_n / K_hat and the
    inverse constant K_hat / (n^-r sum_{k<=n} (k+1)^{r-1} E_k)."""
    corpus = CORPUS if corpus is None else corpus
    rows = []
    nmax = max(n_values)
    for name, f in corpus.items():
        tg = Target.of(w, f, N)
        # E_k for k = 0..nmax from cumulative coefficient energy
        deg = tg.f.basis.deg
        energy = np.bincount(deg, weights=tg.f.coef ** 2, minlength=tg.f.N + 1)
        above = np.cumsum(energy[::-1])[::-1]  # energy of degrees >= k
        E = np.sqrt(np.append(above[1:], 0.0)[:nmax + 1] + tg.tail ** 2)
        for r in r_values:
            for n in n_values:
                K = k_functional_upper(w, r, 1.0 / n, tg)
                om = modulus(w, r, 1.0 / n, tg)
                k = np.arange(n + 1)
                inv_sum = n ** (-r) * np.sum((k + 1) ** (r - 1) * E[:n + 1])
                rows.append(ExperimentRow(name, r, n, float(E[n]), K, om,
                                          float(E[n] / K) if K > 0 else 0.0,
                                          float(K / inv_sum) if inv_sum > 0 else 0.0))
    return rows


def write_experiment(rows, path: str, manifest: dict | None = None) -> None:
    """CSV `function,r,n,E_n,K_hat,omega,ratio` plus an optional JSON manifest."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["function", "r", "n", "E_n", "K_hat", "omega", "ratio"])
        for row in rows:
            wr.writerow([row.name, row.r, row.n, repr(row.E_n), repr(row.K_hat), repr(row.omega),
                         repr(row.ratio)])
    if manifest is not None:
        with open(path + ".json", "w") as fh:
            json.dump(manifest, fh, indent=2)
