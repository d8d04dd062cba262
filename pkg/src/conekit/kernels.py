"""Reproducing kernels, localized kernels, fast decaying polynomials,
Christoffel functions and decay measurements."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .basis import Basis, basis_eval, basis_norm
from .geometry import (Domain, WeightSpec, _as_points, _lift, _surface_cos, cap_measure_formula,
                       dist, point_coords, random_points)
from .specfun import CutoffKind, CutoffSpec, cutoff_eval, gauss_jacobi, zonal_even_series

__all__ = ["KernelConfig", "KernelMethod", "basis_eval", "basis_norm", "reprod_kernel",
           "kernel_series", "localized_kernel", "localized_kernel_frac", "cutoff_coefficients",
           "fast_decay_poly", "fast_decay_degree", "christoffel", "decay_report", "DecayReport",
           "AdditionRule", "eigen_operator", "eigen_check"]


class KernelMethod(str, Enum):
    BASIS_SUM = "basis"
    ADDITION = "addition"


@dataclass(frozen=True)
class KernelConfig:
    weight: WeightSpec
    quad_order_per_axis: int | None = None  # None: degree + 4
    normalization_constant: float = 1.0

    @classmethod
    def of(cls, w: WeightSpec | "KernelConfig") -> "KernelConfig":
        return w if isinstance(w, KernelConfig) else cls(w)


# ---------------------------------------------------------------------------
# addition formula


def _symmetric_rule(order: int, expo: float):
    """Normalized rule for (1-v^2)^expo on [-1,1]; expo = -1 is the two-point limit."""
    if expo <= -1 + 1e-14:
        return np.array([-1.0, 1.0]), np.array([0.5, 0.5])
    r = gauss_jacobi(order, (expo, expo))
    return r.nodes, r.weights


@dataclass
class AdditionRule:
    """Tensor rule for the addition-formula integral."""

    w: WeightSpec
    order: int
    v1: np.ndarray = field(init=False)
    v2: np.ndarray = field(init=False)
    u: np.ndarray = field(init=False)
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        w, m = self.w, self.order
        if not w.has_addition:
            raise ValueError("weight has no addition formula")
        if w.is_surface:
            a1 = (w.d - 4) / 2
            u, wu = np.zeros(1), np.ones(1)
        else:
            a1 = w.mu + (w.d - 1) / 2 - 1
            u, wu = _symmetric_rule(m, w.mu - 1)
        v1, w1 = _symmetric_rule(m, a1)
        v2, w2 = _symmetric_rule(m, w.gamma - 0.5)
        U, V1, V2 = np.meshgrid(u, v1, v2, indexing="ij")
        W = wu[:, None, None] * w1[None, :, None] * w2[None, None, :]
        # the integrand is invariant under v -> -v, so fold the rule
        keep = (V1 > 0) | ((V1 == 0) & (V2 >= 0))
        W = np.where(V1 == 0, np.where(V2 > 0, 2 * W, np.where(V2 == 0, W, 0)), 2 * W)
        self.u, self.v1, self.v2 = U[keep], V1[keep], V2[keep]
        self.weights = W[keep] / W[keep].sum()

    def argument(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        """zeta (surface) or xi (cone) for paired points, shape (pairs, nodes)."""
        x, t = p[:, :-1], p[:, -1]
        y, s = q[:, :-1], q[:, -1]
        inner = np.sum(x * y, axis=1) + t * s
        if self.w.is_surface:
            a = np.clip(inner / 2, 0, None)[:, None] * np.ones_like(self.u)[None, :]
        else:
            hp = np.sqrt(np.clip(t * t - np.sum(x * x, axis=1), 0, None))
            hq = np.sqrt(np.clip(s * s - np.sum(y * y, axis=1), 0, None))
            a = np.clip((inner[:, None] + (hp * hq)[:, None] * self.u[None, :]) / 2, 0, None)
        b = np.sqrt(np.clip((1 - t) * (1 - s), 0, None))
        return self.v1[None, :] * np.sqrt(a) + self.v2[None, :] * b[:, None]


def _pairs(p, q):
    p = np.atleast_2d(_as_points(p)).astype(float)
    q = np.atleast_2d(_as_points(q)).astype(float)
    p, q = np.broadcast_arrays(p, q)
    return p, q


def kernel_series(cfg, coef, p, q, method="addition", chunk: int = 2000000) -> np.ndarray:
    """sum_k coef[k] P_k(p, q) for paired points p[i], q[i]."""
    cfg = KernelConfig.of(cfg)
    w = cfg.weight
    coef = np.asarray(coef, float)
    nz = np.flatnonzero(coef)
    coef = coef[:nz[-1] + 1] if len(nz) else coef[:1]
    K = len(coef) - 1
    p, q = _pairs(p, q)
    method = KernelMethod(method)
    if method is KernelMethod.ADDITION:
        if not w.has_addition:
            raise ValueError(f"no addition formula for {w}")
        order = cfg.quad_order_per_axis or K + 4
        rule = AdditionRule(w, order)
        lam = w.zonal_lambda
        out = np.empty(len(p))
        step = max(1, chunk // max(len(rule.weights), 1))
        for i in range(0, len(p), step):
            z = rule.argument(p[i:i + step], q[i:i + step])
            out[i:i + step] = zonal_even_series(coef, lam, z) @ rule.weights
        return out * cfg.normalization_constant
    B = Basis(w, K)
    c = coef[B.deg]
    out = np.empty(len(p))
    step = max(1, chunk // max(B.size, 1))
    for i in range(0, len(p), step):
        out[i:i + step] = np.einsum("k,kp,kp->p", c, B.evaluate(p[i:i + step]), B.evaluate(q[i:i + step]))
    return out


def _scalar(val, p, q):
    single = np.ndim(_as_points(p)) == 1 and np.ndim(_as_points(q)) == 1
    return float(val[0]) if single else val


def reprod_kernel(cfg, n: int, p, q, method="addition"):
    """Reproducing kernel of the space of orthogonal polynomials of degree n."""
    coef = np.zeros(n + 1)
    coef[n] = 1.0
    return _scalar(kernel_series(cfg, coef, p, q, method), p, q)


def cutoff_coefficients(n: int, cutoff: CutoffSpec | None = None) -> np.ndarray:
    """a(k/n), k = 0..2n."""
    cutoff = cutoff or CutoffSpec()
    return cutoff_eval(cutoff, np.arange(2 * n + 1) / n)


def localized_kernel(cfg, n: int, cutoff: CutoffSpec | None, p, q, method="addition"):
    if n < 1:
        raise ValueError("n must be >= 1")
    coef = cutoff_coefficients(n, cutoff)
    return _scalar(kernel_series(cfg, coef, p, q, method), p, q)


def localized_kernel_frac(cfg, n: int, r: float, cutoff: CutoffSpec | None, p, q, method="addition"):
    """Kernel of the multiplier a(k/n) mu(k)^{r/2}, mu(k) the operator eigenvalue."""
    cfg = KernelConfig.of(cfg)
    w = cfg.weight
    if r <= 0:
        raise ValueError("r must be positive")
    if not (w.is_surface and w.beta == -1) and w.is_surface:
        raise ValueError("weight has no eigen-operator")
    coef = cutoff_coefficients(n, cutoff) * w.eigenvalue(np.arange(2 * n + 1)) ** (r / 2)
    return _scalar(kernel_series(cfg, coef, p, q, method), p, q)


def christoffel(cfg, n: int, p, method=None):
    """lambda_n(p) = 1 / sum_{k<=n} P_k(p, p)."""
    cfg = KernelConfig.of(cfg)
    method = method or ("addition" if cfg.weight.has_addition else "basis")
    val = kernel_series(cfg, np.ones(n + 1), p, p, method)
    res = 1.0 / val
    return float(res[0]) if np.ndim(_as_points(p)) == 1 else res


# ---------------------------------------------------------------------------
# fast decaying polynomials


def _fast_m(n: int, r: int) -> int:
    return max(1, n // (2 * r))


def _bump(z, n: int, r: int):
    """[U_{2m}(z) / (2m+1)]^{2r}: even polynomial of degree 4mr <= 2n, value 1 at z = +-1."""
    m = _fast_m(n, r)
    psi = np.arccos(np.clip(np.abs(z), 0, 1))
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.sin((2 * m + 1) * psi) / ((2 * m + 1) * np.sin(psi))
    ratio = np.where(psi < 1e-8, 1.0, ratio)
    return ratio ** (2 * r)


def _surface_T(c, pts, n, r):
    x, t = c[..., :-1], c[..., -1]
    y, s = pts[..., :-1], pts[..., -1]
    a = np.sqrt(np.clip((np.sum(x * y, axis=-1) + t * s) / 2, 0, None))
    b = np.sqrt(np.clip((1 - t) * (1 - s), 0, None))
    return (_bump(a + b, n, r) + _bump(a - b, n, r)) / (1 + _bump(2 * t - 1, n, r))


def fast_decay_poly(domain, center, n: int, r: int, point):
    """Nonnegative polynomial equal to 1 at center and decaying like
    (1 + n d)^{-2r} away from it."""
    if n < 1 or r < 1:
        raise ValueError("need n >= 1 and r >= 1")
    c = np.asarray(_as_points(center), float)
    pts = np.asarray(_as_points(point), float)
    if Domain(domain) is Domain.SURFACE:
        return _surface_T(c, pts, n, r)
    C = _lift(c)
    Y = _lift(pts)
    Ystar = Y.copy()
    Ystar[..., -2] *= -1
    Cstar = C.copy()
    Cstar[..., -2] *= -1
    return (_surface_T(C, Y, n, r) + _surface_T(C, Ystar, n, r)) / (1 + _surface_T(C, Cstar, n, r))


def fast_decay_degree(domain, n: int, r: int) -> dict:
    """Degree certificate: degree of T and of q * T."""
    deg = 2 * _fast_m(n, r) * r
    if Domain(domain) is Domain.SURFACE:
        return {"degree": deg, "q_degree": deg, "q_times_T_degree": 2 * deg}
    return {"degree": deg, "q_degree": 2 * deg, "q_times_T_degree": 3 * deg}


# ---------------------------------------------------------------------------
# decay measurements


@dataclass
class DecayReport:
    n: list
    kappa: float
    sup_N1: list
    sup_N2: list
    sup_N3: list
    pairs: int
    cutoff: str = "a"

    def rows(self):
        return [(n, self.kappa, a, b, c, self.pairs)
                for n, a, b, c in zip(self.n, self.sup_N1, self.sup_N2, self.sup_N3)]

    def to_csv(self) -> str:
        lines = ["n,kappa,sup_N1,sup_N2,sup_N3,pairs"]
        for n, k, a, b, c, m in self.rows():
            lines.append(f"{n},{k!r},{a!r},{b!r},{c!r},{m}")
        return "\n".join(lines) + "\n"


def _towards(w: WeightSpec, p, target, scale):
    """Point on the segment p -> target (projected onto the surface when
    needed) at distance scale from p, by bisection."""
    lo, hi = 0.0, 1.0
    for _ in range(48):
        mid = (lo + hi) / 2
        if dist(w.domain, p, _segment(w, p, target, mid)) < scale:
            lo = mid
        else:
            hi = mid
    return _segment(w, p, target, hi)


def _segment(w, p, q, s):
    z = (1 - s) * p + s * q
    if w.is_surface:
        nx = np.linalg.norm(z[:-1])
        if nx > 0:
            z[:-1] *= z[-1] / nx
    return z


def base_points(w: WeightSpec, n: int) -> np.ndarray:
    """Points at fixed depths plus points 1/n^2 away from the apex and the rim."""
    ts = [0.5 / n ** 2, 2.0 / n ** 2, 0.05, 0.3, 0.7, 1 - 2.0 / n ** 2]
    rhos = [1.0] if w.is_surface else [0.0, 0.6, 1.0]
    out = []
    for t in ts:
        for rho in rhos:
            x = np.zeros(w.d)
            x[0] = t * rho
            out.append(np.append(x, t))
    return np.array(out)


DESIGN_DISTANCES = (0.0, 0.5, 1, 1.5, 2, 3, 4, 5, 6, 8, 10, 12, 15, 18, 22, 26, 30, 35, 40,
                    50, 60, 75, 90)


def pair_design(w: WeightSpec, n: int, seed: int = 0, n_targets: int | None = None,
                scaled=DESIGN_DISTANCES):
    """Deterministic pairs (p, q) with n d(p, q) on a fixed grid, so that the
    same normalized configurations are probed for every n."""
    n_targets = n_targets or (6 if w.is_surface else 3)
    targets = random_points(w.domain, w.d, n_targets, np.random.default_rng(seed))
    P, Q = [], []
    for p in base_points(w, n):
        for tg in targets:
            reach = dist(w.domain, p, tg)
            for sc in scaled:
                D = sc / n
                if D > reach:
                    break
                P.append(p)
                Q.append(p.copy() if D == 0 else _towards(w, p, tg, D))
    return np.array(P), np.array(Q)


def _caps(w, pts, n):
    return cap_measure_formula(w, pts, 1.0 / n)


def to_angles(w: WeightSpec, pts) -> np.ndarray:
    """Columns theta (t = sin^2(theta/2)), psi (rho = sin psi; cone only),
    chi (d = 3 only) and phi."""
    t, rho, cchi, phi = point_coords(w.domain, w.d, pts)
    cols = [2 * np.arcsin(np.sqrt(np.clip(t, 0, 1)))]
    if not w.is_surface:
        cols.append(np.arcsin(np.clip(rho, 0, 1)))
    if w.d == 3:
        cols.append(np.arccos(np.clip(cchi, -1, 1)))
    cols.append(phi)
    return np.stack(cols, axis=1)


def from_angles(w: WeightSpec, ang) -> np.ndarray:
    ang = np.atleast_2d(ang)
    t = np.sin(ang[:, 0] / 2) ** 2
    rho = np.sin(ang[:, 1]) if not w.is_surface else np.ones_like(t)
    phi = ang[:, -1]
    if w.d == 2:
        omega = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    else:
        ch = ang[:, -2]
        omega = np.stack([np.sin(ch) * np.cos(phi), np.sin(ch) * np.sin(phi), np.cos(ch)], axis=1)
    return np.concatenate([(t * rho)[:, None] * omega, t[:, None]], axis=1)


def _angle_bounds(w: WeightSpec):
    lo, hi = [0.0], [np.pi]
    if not w.is_surface:
        lo.append(0.0)
        hi.append(np.pi / 2)
    if w.d == 3:
        lo.append(0.0)
        hi.append(np.pi)
    lo.append(-np.inf)
    hi.append(np.inf)
    return np.array(lo), np.array(hi)


def _maximize_pairs(w: WeightSpec, n: int, objective, p, q, rng, keep: int = 8,
                    rounds: int = 8, batch: int = 24):
    """Random local search on (p, q) in angle coordinates, started at the
    best design pairs; returns the largest objective value found."""
    vals = objective(p, q)
    order = np.argsort(vals)[::-1][:keep]
    best_p, best_q, best_v = p[order], q[order], vals[order]
    lo, hi = _angle_bounds(w)
    step = 4.0 / n
    for _ in range(rounds):
        ap = np.repeat(to_angles(w, best_p), batch, axis=0)
        aq = np.repeat(to_angles(w, best_q), batch, axis=0)
        ap = np.clip(ap + step * rng.standard_normal(ap.shape), lo, hi)
        aq = np.clip(aq + step * rng.standard_normal(aq.shape), lo, hi)
        cp, cq = from_angles(w, ap), from_angles(w, aq)
        cv = objective(cp, cq)
        allp = np.vstack([best_p, cp])
        allq = np.vstack([best_q, cq])
        allv = np.concatenate([best_v, cv])
        order = np.argsort(allv)[::-1][:keep]
        best_p, best_q, best_v = allp[order], allq[order], allv[order]
        step /= 2
    return float(best_v[0])


def _graded_rule(lo: float, hi: float, center: float, h: float, per: int):
    """Composite Gauss-Legendre rule on [lo, hi] with panels shrinking
    geometrically towards center (smallest panel h)."""
    cuts = [lo, hi, min(max(center, lo), hi)]
    k = h
    while k < hi - lo:
        cuts += [center - k, center + k]
        k *= 2
    cuts = np.unique(np.clip(cuts, lo, hi))
    x, w = np.polynomial.legendre.leggauss(per)
    a, b = cuts[:-1, None], cuts[1:, None]
    nodes = (a + b) / 2 + (b - a) / 2 * x[None, :]
    weights = (b - a) / 2 * w[None, :]
    return nodes.ravel(), weights.ravel()


def _local_rule(w: WeightSpec, p, n: int):
    """Normalized quadrature for the weight, refined around the point p."""
    t0, rho0, cchi0, phi0 = (float(v[0]) for v in point_coords(w.domain, w.d, p[None, :]))
    per = 6 if w.dim <= 3 else 4
    h = 1.0 / (2 * n) if w.dim <= 3 else 1.0 / n
    th, wth = _graded_rule(0, np.pi, 2 * np.arcsin(np.sqrt(np.clip(t0, 0, 1))), h, per)
    a, g = w.t_exponent, w.gamma
    wth = wth * np.sin(th / 2) ** (2 * a + 1) * np.cos(th / 2) ** (2 * g + 1)
    axes, wts = [th], [wth]
    if not w.is_surface:
        ps, wps = _graded_rule(0, np.pi / 2, np.arcsin(np.clip(rho0, 0, 1)), h, per)
        wps = wps * np.cos(ps) ** (2 * w.mu) * np.sin(ps) ** (w.d - 1)
        axes.append(ps)
        wts.append(wps)
    if w.d == 3:
        ch, wch = _graded_rule(0, np.pi, np.arccos(np.clip(cchi0, -1, 1)), h, per)
        axes.append(ch)
        wts.append(wch * np.sin(ch))
    ph, wph = _graded_rule(phi0 - np.pi, phi0 + np.pi, phi0, h, per)
    axes.append(ph)
    wts.append(wph)
    grids = np.meshgrid(*axes, indexing="ij")
    W = wts[0]
    for extra in wts[1:]:
        W = np.multiply.outer(W, extra)
    W = W.ravel()
    g_ = [G.ravel() for G in grids]
    t = np.sin(g_[0] / 2) ** 2
    rho = np.sin(g_[1]) if not w.is_surface else np.ones_like(t)
    phi = g_[-1]
    if w.d == 2:
        omega = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    else:
        ch = g_[-2]
        omega = np.stack([np.sin(ch) * np.cos(phi), np.sin(ch) * np.sin(phi), np.cos(ch)], axis=1)
    pts = np.concatenate([(t * rho)[:, None] * omega, t[:, None]], axis=1)
    return pts, W / W.sum()


def _assertion3(w: WeightSpec, p, n: int, kappa: float) -> np.ndarray:
    """Integral of w(y) / (cap(y, 1/n) (1 + n d(p, y))^kappa) dy."""
    out = np.empty(len(p))
    for i, pt in enumerate(p):
        Y, W = _local_rule(w, pt, n)
        out[i] = np.sum(W / (_caps(w, Y, n) * (1 + n * dist(w.domain, pt, Y)) ** kappa))
    return out


def decay_report(cfg, n_values, kappa: float = 8.0, cutoff: CutoffSpec | None = None,
                 seed: int = 0, lipschitz: bool | None = None,
                 search: tuple | None = None, assertions: str = "123") -> DecayReport:
    """Normalized suprema for the three localization assertions.

    N1 = |L_n(p,q)| sqrt(cap(p,1/n) cap(q,1/n)) (1 + n d(p,q))^kappa
    N2 = |L_n(p1,q) - L_n(p2,q)| sqrt(cap(p1,1/n) cap(p2,1/n)) (1 + n d(p2,q))^kappa / (n d(p1,p2))
         with d(p1,p2) about delta/n
    N3 = integral of w(y) / (cap(y,1/n) (1 + n d(p,y))^kappa)

    search = (keep, rounds, batch) of the local search that refines the
    design pairs; (0, 0, 0) uses the design only.  Assertions not listed in
    `assertions` are reported as nan.
    """
    cfg = KernelConfig.of(cfg)
    w = cfg.weight
    if not w.localizable:
        raise ValueError("weight is not localizable")
    cutoff = cutoff or CutoffSpec()
    if lipschitz is None:
        lipschitz = w.lipschitz_localizable
    n_values = [int(n) for n in np.atleast_1d(n_values)]
    N1, N2, N3 = [], [], []
    npairs = 0
    delta = 0.25
    if search is None:
        search = (12, 12, 32) if w.is_surface else (8, 8, 24)
    keep, rounds, batch = search
    for n in n_values:
        p, q = pair_design(w, n, seed)
        npairs = len(p)
        coef = cutoff_coefficients(n, cutoff)

        def n1(a, b):
            val = kernel_series(cfg, coef, a, b)
            return (np.abs(val) * np.sqrt(_caps(w, a, n) * _caps(w, b, n))
                    * (1 + n * dist(w.domain, a, b)) ** kappa)

        def n2(a, b):
            # a1 at distance delta/n from a, towards b (or towards the apex side when b = a)
            far = dist(w.domain, a, b) > delta / n
            anchor = np.where(far[:, None], b, np.roll(b, 1, axis=0))
            a1 = np.array([_towards(w, x, y, delta / n) for x, y in zip(a, anchor)])
            d1 = dist(w.domain, a, a1)
            ok = d1 > 0
            diff = np.abs(kernel_series(cfg, coef, a1, b) - kernel_series(cfg, coef, a, b))
            val = (diff * np.sqrt(_caps(w, a, n) * _caps(w, a1, n))
                   * (1 + n * dist(w.domain, a, b)) ** kappa / np.where(ok, n * d1, 1.0))
            return np.where(ok, val, 0.0)

        if "1" in assertions:
            N1.append(_maximize_pairs(w, n, n1, p, q, np.random.default_rng(seed + 1),
                                      max(keep, 1), rounds, batch))
        else:
            N1.append(float("nan"))
        if lipschitz and "2" in assertions:
            N2.append(_maximize_pairs(w, n, n2, p, q, np.random.default_rng(seed + 2),
                                      max(keep, 1), rounds, batch))
        else:
            N2.append(float("nan"))
        if "3" in assertions:
            N3.append(float(np.max(_assertion3(w, base_points(w, n), n, kappa))))
        else:
            N3.append(float("nan"))
    kind = cutoff.kind.value if isinstance(cutoff.kind, CutoffKind) else str(cutoff.kind)
    return DecayReport(n_values, kappa, N1, N2, N3, npairs, kind)


# ---------------------------------------------------------------------------
# second-order operators with the orthogonal polynomials as eigenfunctions


def _fd2(f, base, e1, e2, h):
    """Central difference for the mixed second derivative along e1, e2."""
    if e1 is e2:
        return (f(base + h * e1) - 2 * f(base) + f(base - h * e1)) / h ** 2
    return (f(base + h * (e1 + e2)) - f(base + h * (e1 - e2))
            - f(base - h * (e1 - e2)) + f(base - h * (e1 + e2))) / (4 * h * h)


def eigen_operator(w: WeightSpec, f, pts, h: float = 1e-4) -> np.ndarray:
    """Apply the surface operator (beta = -1)

        t(1-t) f_tt + (d-1-(d+gamma) t) f_t + t^{-1} Delta_xi f

    or the cone operator (beta = 0)

        t(1-t) f_tt + 2(1-t) <x, grad_x f_t> + sum (t - x_i^2) f_ii - 2 sum_{i<j} x_i x_j f_ij
        + (2mu+d) f_t - (2mu+gamma+d+1)(<x, grad_x f> + t f_t)

    to f by central differences.  f maps an (m, d+1) array of points (x, t)
    to values of shape (..., m); the result has shape (..., len(pts)).
    On the surface t is moved along the generator (x = t xi) and the
    Laplace-Beltrami term is the Laplacian of the 0-homogeneous extension
    y -> f(t y / |y|, t) at y = xi."""
    pts = _as_points(pts)
    d, g = w.d, w.gamma
    out = []
    for p in pts:
        x, t = p[:-1], p[-1]
        if w.is_surface:
            if w.beta != -1:
                raise ValueError("surface operator needs beta = -1")
            xi = x / t
            radial = lambda s: f(np.append(s * xi, s)[None, :])[..., 0]
            f0 = radial(t)
            ft = (radial(t + h) - radial(t - h)) / (2 * h)
            ftt = (radial(t + h) - 2 * f0 + radial(t - h)) / h ** 2

            def ext(y):
                y = np.atleast_2d(y)
                u = y / np.linalg.norm(y, axis=1, keepdims=True)
                return f(np.column_stack([t * u, np.full(len(u), t)]))[..., 0]
            lap = sum(_fd2(ext, xi, e, e, h) for e in np.eye(d))
            out.append(t * (1 - t) * ftt + (d - 1 - (d + g) * t) * ft + lap / t)
            continue
        if w.beta != 0:
            raise ValueError("cone operator needs beta = 0")
        mu = w.mu
        F = lambda q: f(q[None, :])[..., 0]
        E = np.eye(d + 1)
        et = E[d]
        f0 = F(p)
        ft = (F(p + h * et) - F(p - h * et)) / (2 * h)
        ftt = _fd2(F, p, et, et, h)
        xgrad = sum(x[i] * (F(p + h * E[i]) - F(p - h * E[i])) / (2 * h) for i in range(d))
        val = t * (1 - t) * ftt + (2 * mu + d) * ft
        val = val - (2 * mu + g + d + 1) * (xgrad + t * ft)
        for i in range(d):
            val = val + 2 * (1 - t) * x[i] * _fd2(F, p, E[i], et, h)
            val = val + (t - x[i] ** 2) * _fd2(F, p, E[i], E[i], h)
            for j in range(i + 1, d):
                val = val - 2 * x[i] * x[j] * _fd2(F, p, E[i], E[j], h)
        out.append(val)
    return np.stack(out, axis=-1)


def eigen_check(w: WeightSpec, n_max: int = 8, n_points: int = 20, seed: int = 0,
                h: float = 1e-4) -> float:
    """Max over basis elements of degree <= n_max of
    ||D u + mu(n) u||_inf / ||mu(n) u||_inf at n_points interior points
    (degree 0 is skipped, its eigenvalue is 0)."""
    rng = np.random.default_rng(seed)
    pts = random_points(w.domain, w.d, n_points, rng)
    # keep away from the apex and the rim so the stencil stays inside
    t = 0.15 + 0.7 * pts[:, -1]
    pts = np.column_stack([pts[:, :-1] / np.maximum(pts[:, -1:], 1e-300) * t[:, None] * 0.9
                           if not w.is_surface else pts[:, :-1] / pts[:, -1:] * t[:, None], t])
    B = Basis(w, n_max)
    Du = eigen_operator(w, B.evaluate, pts, h)[1:]
    ref = w.eigenvalue(B.deg[1:])[:, None] * B.evaluate(pts)[1:]
    err = np.max(np.abs(Du + ref), axis=1) / np.max(np.abs(ref), axis=1)
    return float(err.max())
