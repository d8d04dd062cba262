"""Conic domains: weights, intrinsic distances, cap measures, separated sets
and exact product quadrature.

Points are arrays of shape (..., d+1) holding (x_1, ..., x_d, t).  The
surface is ||x|| = t, the solid cone ||x|| <= t, with 0 <= t <= 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
import warnings
from functools import cached_property

import numpy as np
from scipy import integrate, optimize
from scipy.special import betainc

from .specfun import gauss_jacobi

__all__ = [
    "Domain",
    "WeightSpec",
    "SurfacePoint",
    "ConePoint",
    "Layout",
    "SeparatedSet",
    "CubatureRule",
    "dist",
    "dist_interval",
    "dist_sphere",
    "dist_ball",
    "cap_measure_formula",
    "cap_measure_quad",
    "build_separated_set",
    "reference_quadrature",
    "cell_measures",
    "random_points",
    "sample_weight",
    "min_separation",
    "write_points",
]


class Domain(str, Enum):
    SURFACE = "surface"
    CONE = "cone"


@dataclass(frozen=True)
class WeightSpec:
    """Jacobi-type weight: t^beta (1-t)^gamma on the surface,
    (t^2 - ||x||^2)^(mu - 1/2) (1-t)^gamma on the cone (beta fixed at 0)."""

    domain: Domain = Domain.SURFACE
    d: int = 2
    beta: float = -1.0
    gamma: float = 0.0
    mu: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "domain", Domain(self.domain))
        if self.d not in (2, 3):
            raise ValueError(f"d must be 2 or 3, got {self.d}")
        if self.gamma <= -1:
            raise ValueError("gamma must exceed -1")
        if self.domain is Domain.SURFACE:
            if self.beta <= -self.d:
                raise ValueError("surface weight needs beta > -d")
        else:
            if self.mu < 0:
                raise ValueError("cone weight needs mu >= 0")
            object.__setattr__(self, "beta", 0.0)

    @property
    def is_surface(self) -> bool:
        return self.domain is Domain.SURFACE

    @property
    def dim(self) -> int:
        """Topological dimension: d on the surface, d+1 in the cone."""
        return self.d if self.is_surface else self.d + 1

    @property
    def has_addition(self) -> bool:
        if self.is_surface:
            return self.beta == -1 and self.gamma >= -0.5
        return self.gamma >= -0.5

    localizable = has_addition

    @property
    def lipschitz_localizable(self) -> bool:
        return self.has_addition and (self.is_surface or self.mu == 0)

    @property
    def zonal_lambda(self) -> float:
        """Gegenbauer index of the addition formula."""
        if self.is_surface:
            return self.gamma + self.d - 1
        return 2 * self.mu + self.gamma + self.d

    @property
    def reduction(self) -> tuple[float, float]:
        """Jacobi pair (lambda - 1/2, -1/2) of the one-dimensional reduction."""
        return (self.zonal_lambda - 0.5, -0.5)

    def eigenvalue(self, k):
        """mu(k) for the second-order operator (nonnegative)."""
        if not self.has_addition and not (self.is_surface and self.beta == -1):
            raise ValueError("weight has no eigen-operator")
        k = np.asarray(k, dtype=float)
        if self.is_surface:
            return k * (k + self.gamma + self.d - 1)
        return k * (k + 2 * self.mu + self.gamma + self.d)

    @property
    def doubling_index(self) -> float:
        if self.is_surface:
            return (self.d + 2 * max(0.0, self.beta + self.d / 2)
                    + 2 * max(0.0, self.gamma + 0.5))
        return (2 * self.mu + self.d + 1 + 2 * max(0.0, (self.d - 1) / 2)
                + 2 * max(0.0, self.gamma + 0.5))

    @property
    def t_exponent(self) -> float:
        """Exponent a of t^a (1-t)^gamma after integrating out the angular part."""
        if self.is_surface:
            return self.beta + self.d - 1
        return 2 * self.mu + self.d - 1

    def to_dict(self) -> dict:
        return {"domain": self.domain.value, "d": self.d, "beta": self.beta,
                "gamma": self.gamma, "mu": self.mu}


@dataclass(frozen=True)
class SurfacePoint:
    x: tuple
    t: float

    def __post_init__(self):
        if abs(np.linalg.norm(self.x) - self.t) > 1e-12 or not 0 <= self.t <= 1:
            raise ValueError("not a point of the conic surface")

    def array(self) -> np.ndarray:
        return np.append(np.asarray(self.x, float), self.t)


@dataclass(frozen=True)
class ConePoint:
    x: tuple
    t: float

    def __post_init__(self):
        if np.linalg.norm(self.x) > self.t + 1e-12 or not 0 <= self.t <= 1:
            raise ValueError("not a point of the solid cone")

    def array(self) -> np.ndarray:
        return np.append(np.asarray(self.x, float), self.t)

    def lift(self) -> np.ndarray:
        x = np.asarray(self.x, float)
        return np.append(x, np.sqrt(max(self.t ** 2 - x @ x, 0.0)))


def _as_points(p) -> np.ndarray:
    if isinstance(p, (SurfacePoint, ConePoint)):
        return p.array()
    return np.asarray(p, dtype=float)


def _acos(c):
    return np.arccos(np.clip(c, -1.0, 1.0))


def dist_interval(t, s):
    t, s = np.asarray(t, float), np.asarray(s, float)
    return _acos(np.sqrt(t * s) + np.sqrt(np.clip((1 - t) * (1 - s), 0, None)))


def dist_sphere(xi, eta):
    return _acos(np.sum(np.asarray(xi) * np.asarray(eta), axis=-1))


def dist_ball(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    rx = np.clip(1 - np.sum(x * x, axis=-1), 0, None)
    ry = np.clip(1 - np.sum(y * y, axis=-1), 0, None)
    return _acos(np.sum(x * y, axis=-1) + np.sqrt(rx * ry))


def _surface_cos(p, q):
    x, t = p[..., :-1], p[..., -1]
    y, s = q[..., :-1], q[..., -1]
    inner = np.clip((np.sum(x * y, axis=-1) + t * s) / 2, 0, None)
    return np.sqrt(inner) + np.sqrt(np.clip((1 - t) * (1 - s), 0, None))


def _lift(p):
    x, t = p[..., :-1], p[..., -1]
    h = np.sqrt(np.clip(t * t - np.sum(x * x, axis=-1), 0, None))
    return np.concatenate([x, h[..., None], t[..., None]], axis=-1)


def dist(domain, p, q):
    """Intrinsic distance on the surface or the cone (cone via the lift to one
    dimension higher)."""
    p, q = _as_points(p), _as_points(q)
    if Domain(domain) is Domain.CONE:
        p, q = _lift(p), _lift(q)
    return _acos(_surface_cos(p, q))


def cap_measure_formula(w: WeightSpec, center, r):
    """Closed form equivalent (up to constants) of the weighted cap measure."""
    c = _as_points(center)
    x, t = c[..., :-1], c[..., -1]
    r = np.asarray(r, float)
    r2 = r * r
    if w.is_surface:
        return r ** w.d * (t + r2) ** (w.beta + w.d / 2) * (1 - t + r2) ** (w.gamma + 0.5)
    h2 = np.clip(t * t - np.sum(x * x, axis=-1), 0, None)
    return (r ** (w.d + 1) * (t + r2) ** ((w.d - 1) / 2) * (1 - t + r2) ** (w.gamma + 0.5)
            * (h2 + r2) ** w.mu)


# ---------------------------------------------------------------------------
# cap measure by quadrature


def _sphere_cap_fraction(d: int, theta):
    """Normalized surface measure of a geodesic cap of radius theta on S^{d-1}."""
    theta = np.clip(theta, 0, np.pi)
    if d == 2:
        return theta / np.pi
    return (1 - np.cos(theta)) / 2


class _HemiCap:
    """Normalized measure of geodesic caps on the upper hemisphere S^d_+ for
    the density z^(2 mu), z the height; this is the ball weight
    (1-|y|^2)^(mu-1/2) seen through y -> (y, sqrt(1-|y|^2))."""

    def __init__(self, d: int, mu: float, order: int = 64):
        self.d, self.mu = d, mu
        self.gl = np.polynomial.legendre.leggauss(order)
        self.total = 1.0
        self.total = self(1.0, np.pi)

    def kinks(self, h0: float):
        psi0 = np.arccos(np.clip(h0, -1, 1))
        return np.pi / 2 - psi0, np.pi / 2 + psi0

    def __call__(self, h0: float, rho: float) -> float:
        if rho <= 0:
            return 0.0
        k1, k2 = self.kinks(h0)
        rho = min(rho, k2, np.pi)
        xg, wg = self.gl
        out = 0.0
        s0 = np.sqrt(max(1 - h0 * h0, 0.0))
        top = min(rho, k1)
        if top > 0:
            psi = 0.5 * top * (xg + 1)
            wpsi = 0.5 * top * wg
            out += self._radial(psi, wpsi, h0, s0)
        if rho > k1:
            # sqrt-type endpoint behaviour at k1 (and k2): sine-clustered map
            lo, hi = k1, rho
            full = hi >= k2 - 1e-15
            if full:
                mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
                psi = mid + half * np.sin(0.5 * np.pi * xg)
                wpsi = wg * half * 0.5 * np.pi * np.cos(0.5 * np.pi * xg)
            else:
                v = 0.5 * (xg + 1)
                psi = lo + (hi - lo) * (1 - np.cos(0.5 * np.pi * v))
                wpsi = 0.5 * wg * (hi - lo) * 0.5 * np.pi * np.sin(0.5 * np.pi * v)
            out += self._radial(psi, wpsi, h0, s0)
        return out / self.total

    def _radial(self, psi, wpsi, h0, s0):
        a, b = h0 * np.cos(psi), s0 * np.sin(psi)
        return float(np.dot(wpsi * np.sin(psi) ** (self.d - 1), self._inner(a, b)))

    def _inner(self, a, b):
        """Average over tangent directions of (a + b u)_+^(2 mu)."""
        e = 2 * self.mu
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.where(b > 1e-300, -a / np.where(b > 1e-300, b, 1.0),
                         np.where(a >= 0, -2.0, 2.0))
        if self.d == 3:
            # u uniform on [-1, 1]
            lo = np.clip(c, -1, 1)
            with np.errstate(divide="ignore", invalid="ignore"):
                val = ((a + b) ** (e + 1) - np.clip(a + b * lo, 0, None) ** (e + 1)) / (2 * b * (e + 1))
            val = np.where(b > 1e-300, val, np.clip(a, 0, None) ** e)
            return np.where(c >= 1, 0.0, val)
        # d == 2: u = cos(omega), omega uniform on [0, pi]
        om = np.where(c <= -1, np.pi, np.arccos(np.clip(c, -1, 1)))
        if e == 0:
            val = om / np.pi
        elif e == 1:
            val = (a * om + b * np.sin(om)) / np.pi
        elif e == 2:
            val = (a * a * om + 2 * a * b * np.sin(om)
                   + b * b * (om / 2 + np.sin(2 * om) / 4)) / np.pi
        else:
            xg, wg = self.gl
            nodes = 0.5 * om[:, None] * (xg + 1)
            z = np.clip(a[:, None] + b[:, None] * np.cos(nodes), 0, None)
            val = np.sum(wg * z ** e, axis=1) * 0.5 * om / np.pi
        return np.where(c >= 1, 0.0, val)


def cap_measure_quad(w: WeightSpec, center, r, tol: float = 1e-10) -> float:
    """Normalized weighted measure of the cap of radius r.

    The radial variable s = cos^2(b) runs over d_[0,1](t,s) <= r; for each s
    the admissible angular set is a geodesic cap of radius 2 arccos(tau_r)
    on the sphere (surface) or hemisphere (cone)."""
    from .specfun import jacobi_const

    c = _as_points(center)
    x, t = c[:-1], float(c[-1])
    r = float(r)
    a_exp, g = w.t_exponent, w.gamma
    norm = jacobi_const(a_exp, g)
    phase = np.arccos(np.sqrt(np.clip(t, 0, 1)))
    b_lo = max(0.0, phase - r)
    b_hi = min(np.pi / 2, phase + r)
    if b_hi <= b_lo:
        return 0.0
    cr = np.cos(r)
    if w.is_surface:
        crit = [np.pi]

        def angular(s):
            return _sphere_cap_fraction(w.d, 2 * _half_angle(t, s, cr))
    else:
        hemi = _HemiCap(w.d, w.mu)
        nx = np.linalg.norm(x)
        h0 = np.sqrt(max(1 - (nx / t) ** 2, 0.0)) if t > 0 else 1.0
        crit = [*hemi.kinks(h0), np.pi]

        def angular(s):
            return hemi(h0, 2 * _half_angle(t, s, cr))

    def integrand(b):
        s = np.cos(b) ** 2
        return norm * s ** a_exp * (1 - s) ** g * 2 * np.cos(b) * np.sin(b) * angular(s)

    # breakpoints where the angular radius crosses a kink of the angular measure
    grid = np.linspace(b_lo, b_hi, 257)
    rad = np.array([2 * _half_angle(t, np.cos(bb) ** 2, cr) for bb in grid])
    points = []
    for k in crit:
        f = rad - k
        for i in np.flatnonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0):
            points.append(optimize.brentq(
                lambda bb: 2 * _half_angle(t, np.cos(bb) ** 2, cr) - k, grid[i], grid[i + 1]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(integrand, b_lo, b_hi, epsabs=tol * 1e-3, epsrel=tol,
                                  limit=500, points=sorted(points) or None)
    if not np.isfinite(val) or err > 1e-6 * abs(val) + 1e-12:
        raise RuntimeError(f"cap quadrature did not converge (estimated error {err:.3g})")
    return float(min(val, 1.0))


def _half_angle(t, s, cr):
    """Largest half-angle phi/2 with sqrt(ts) cos(phi/2) + sqrt((1-t)(1-s)) >= cos r."""
    root = np.sqrt(max((1 - t) * (1 - s), 0.0))
    ts = np.sqrt(max(t * s, 0.0))
    if ts == 0.0:
        return np.pi / 2 if root >= cr else 0.0
    tau = (cr - root) / ts
    if tau <= 0:
        return np.pi / 2
    if tau >= 1:
        return 0.0
    return float(np.arccos(tau))


# ---------------------------------------------------------------------------
# node layouts: unions of equispaced azimuthal circles


@dataclass(frozen=True)
class Layout:
    """Points grouped into circles of equispaced azimuth.

    Group g has radial data t[g], rho[g] (ball radius of x/t, 1 on the
    surface) and cchi[g] (polar cosine of the direction on S^2, d=3 only), and
    size[g] points at azimuth offset[g] + 2 pi i / size[g].
    """

    domain: Domain
    d: int
    t: np.ndarray
    rho: np.ndarray
    cchi: np.ndarray
    size: np.ndarray
    offset: np.ndarray

    @property
    def n_groups(self) -> int:
        return len(self.t)

    @cached_property
    def group(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_groups), self.size)

    @cached_property
    def phi(self) -> np.ndarray:
        start = np.concatenate([[0], np.cumsum(self.size)[:-1]])
        idx = np.arange(int(self.size.sum())) - np.repeat(start, self.size)
        return np.repeat(self.offset, self.size) + 2 * np.pi * idx / np.repeat(self.size, self.size)

    @cached_property
    def starts(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.size)[:-1]]).astype(int)

    def __len__(self) -> int:
        return int(self.size.sum())

    @cached_property
    def points(self) -> np.ndarray:
        g = self.group
        t, rho, phi = self.t[g], self.rho[g], self.phi
        if self.d == 2:
            dirs = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        else:
            c = self.cchi[g]
            s = np.sqrt(np.clip(1 - c * c, 0, None))
            dirs = np.stack([s * np.cos(phi), s * np.sin(phi), c], axis=-1)
        x = (t * rho)[:, None] * dirs
        return np.concatenate([x, t[:, None]], axis=1)


def point_coords(domain, d: int, pts):
    """(t, rho, cchi, phi) of arbitrary points, matching Layout conventions."""
    pts = np.atleast_2d(_as_points(pts))
    x, t = pts[:, :-1], pts[:, -1]
    safe_t = np.where(t > 0, t, 1.0)
    y = x / safe_t[:, None]
    if Domain(domain) is Domain.SURFACE:
        rho = np.ones_like(t)
        omega = y
    else:
        rho = np.clip(np.linalg.norm(y, axis=1), 0, 1)
        omega = y / np.where(rho > 0, rho, 1.0)[:, None]
    omega = np.where((t > 0)[:, None] & (rho > 0)[:, None], omega, 0.0)
    if d == 2:
        cchi = np.zeros_like(t)
        phi = np.arctan2(omega[:, 1], omega[:, 0])
    else:
        nrm = np.linalg.norm(omega, axis=1)
        cchi = np.where(nrm > 0, omega[:, 2], 1.0)
        phi = np.arctan2(omega[:, 1], omega[:, 0])
    return t, rho, cchi, phi


# ---------------------------------------------------------------------------
# separated sets


@dataclass
class SeparatedSet:
    eps: float
    domain: Domain
    d: int
    layout: Layout
    ring_index: np.ndarray
    # cells are boxes in (theta, psi, chi, phi); unused coordinates have zero width
    cell_lo: np.ndarray
    cell_hi: np.ndarray
    cell_r_lo: np.ndarray = field(default=None)
    cell_r_hi: np.ndarray = field(default=None)
    seed: int | None = 0

    @property
    def points(self) -> np.ndarray:
        return self.layout.points

    def __len__(self) -> int:
        return len(self.layout)

    @property
    def n_rings(self) -> int:
        return int(self.ring_index.max()) if len(self.ring_index) else 0


def _ring_separation(eps: float, t: float) -> float:
    """Angular separation on the ring at height t that yields intrinsic
    separation eps between points of that ring."""
    s = np.sin(eps / 2) / np.sqrt(t)
    return np.pi * 4 if s >= 1 else 4 * np.arcsin(s)


def _circle(eps_ang: float):
    m = max(1, int(np.floor(2 * np.pi / eps_ang + 1e-12)))
    return m


def _azimuth_count(cos_polar: float, eps_ang: float) -> int:
    # points at equal polar angle on S^2 separated by eps_ang along great circles
    s2 = 1 - cos_polar ** 2
    if s2 <= 0:
        return 1
    c = (np.cos(eps_ang) - cos_polar ** 2) / s2
    if c <= -1:
        return 1
    return _circle(np.arccos(min(c, 1.0)))


def _polar_bands(span: float, e: float, far_pole: bool):
    """Bands in a polar angle on [0, span]: a cap at 0 (single node at the pole),
    rings at multiples of the spacing, and a second cap when far_pole."""
    if far_pole:
        k = int(np.floor(span / e + 1e-12))
        if k < 1:
            return [(0.0, span, 0.0)]
        step = span / k
        centers = step * np.arange(k + 1)
    else:
        k = int(np.floor(span / e - 0.5 + 1e-12))
        if k < 1:
            return [(0.0, span, 0.0)]
        step = span / (k + 0.5)
        centers = step * np.arange(k + 1)
    return [(max(0.0, c - step / 2), min(span, c + step / 2), c) for c in centers]


def _s2_rings(eps_ang: float):
    """Zonal rings on S^2: (chi_lo, chi_hi, chi_mid, azimuth count)."""
    out = []
    for lo, hi, mid in _polar_bands(np.pi, eps_ang, far_pole=True):
        m = 1 if mid in (0.0, np.pi) else _azimuth_count(np.cos(mid), eps_ang)
        out.append((lo, hi, mid, m))
    return out


def build_separated_set(domain, d: int, eps: float, seed: int | None = 0,
                        certify: bool = True) -> SeparatedSet:
    """Ring construction: N = floor(pi/(2 eps)) heights t_j = sin^2(theta_j/2),
    each carrying a separated set of the sphere (surface) or ball (cone)."""
    domain = Domain(domain)
    if not 0 < eps:
        raise ValueError("eps must be positive")
    n_rings = int(np.floor(np.pi / (2 * eps) + 1e-12))
    if n_rings < 1:
        raise ValueError(f"no rings: eps={eps} gives floor(pi/(2 eps)) = 0")
    rng = np.random.default_rng(seed) if seed is not None else None
    half = np.pi / (2 * n_rings)
    groups = []  # (ring, t, rho, cchi, size, offset, lo[4], hi[4])
    for j in range(1, n_rings + 1):
        theta = (2 * j - 1) * half
        t = np.sin(theta / 2) ** 2
        th_lo, th_hi = theta - half, theta + half
        e_j = _ring_separation(eps, t)
        if domain is Domain.SURFACE:
            sub = _sphere_cells(d, e_j)
            for (chi_lo, chi_hi, chi, m) in sub:
                groups.append((j, t, 1.0, np.cos(chi), m,
                               [th_lo, 0.0, chi_lo], [th_hi, 0.0, chi_hi]))
        else:
            for p_lo, p_hi, psi in _polar_bands(np.pi / 2, e_j, far_pole=False):
                if psi == 0.0:
                    sub = [(0.0, 0.0, 0.0, 1)]
                else:
                    # separation on S^{d-1} needed at polar angle psi of the hemisphere
                    s2 = np.sin(psi) ** 2
                    c = (np.cos(e_j) - np.cos(psi) ** 2) / s2
                    e_sub = np.pi * 4 if c <= -1 else np.arccos(min(c, 1.0))
                    sub = _sphere_cells(d, e_sub)
                for (chi_lo, chi_hi, chi, m) in sub:
                    if psi == 0.0 and d == 3:
                        chi_lo, chi_hi = 0.0, np.pi
                    elif psi == 0.0:
                        chi_lo = chi_hi = chi = np.pi / 2
                    groups.append((j, t, np.sin(psi), np.cos(chi), m,
                                   [th_lo, p_lo, chi_lo], [th_hi, p_hi, chi_hi]))
    size = np.array([g[4] for g in groups], dtype=int)
    if rng is not None:
        offset = rng.uniform(0, 1, len(groups)) * 2 * np.pi / size
    else:
        offset = np.zeros(len(groups))
    layout = Layout(domain, d,
                    t=np.array([g[1] for g in groups]),
                    rho=np.array([g[2] for g in groups]),
                    cchi=np.array([g[3] for g in groups]),
                    size=size, offset=offset)
    ring = np.repeat([g[0] for g in groups], size)
    lo = np.repeat(np.array([g[5] for g in groups]), size, axis=0)
    hi = np.repeat(np.array([g[6] for g in groups]), size, axis=0)
    dphi = 2 * np.pi / np.repeat(size, size)
    lo = np.column_stack([lo, layout.phi - dphi / 2])
    hi = np.column_stack([hi, layout.phi + dphi / 2])
    S = SeparatedSet(eps, domain, d, layout, ring, lo, hi, seed=seed)
    if certify:
        S.cell_r_lo, S.cell_r_hi = _cell_radii(S)
    return S


def _sphere_cells(d: int, e: float):
    if d == 2:
        return [(np.pi / 2, np.pi / 2, np.pi / 2, _circle(min(e, 4 * np.pi)))]
    if e > np.pi:
        return [(0.0, np.pi, 0.0, 1)]
    return _s2_rings(e)


def _cell_to_points(S: SeparatedSet, coords: np.ndarray) -> np.ndarray:
    """Map (theta, psi, chi, phi) box coordinates to points of the domain."""
    theta, psi, chi, phi = coords.T
    t = np.sin(theta / 2) ** 2
    rho = np.ones_like(t) if S.domain is Domain.SURFACE else np.sin(psi)
    if S.d == 2:
        dirs = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    else:
        dirs = np.stack([np.sin(chi) * np.cos(phi), np.sin(chi) * np.sin(phi), np.cos(chi)], -1)
    return np.concatenate([(t * rho)[:, None] * dirs, t[:, None]], axis=1)


def _cell_radii(S: SeparatedSet, k: int = 5):
    """Inner and outer cap radii of each cell around its node, estimated from a
    grid on the cell faces.  Faces lying on the domain boundary, or collapsing
    to an apex, pole or closed circle, do not limit the inner radius."""
    lo, hi = S.cell_lo, S.cell_hi
    active = [a for a in range(4) if np.any(hi[:, a] - lo[:, a] > 0)]
    grid = np.linspace(0, 1, k)
    rest = len(active) - 1
    face_mesh = np.array(np.meshgrid(*([grid] * rest), indexing="ij")).reshape(rest, -1).T
    limits = {0: (0.0, np.pi), 1: (0.0, np.pi / 2), 2: (0.0, np.pi)}
    pts = S.points
    r_lo = np.full(len(S), np.inf)
    r_hi = np.zeros(len(S))
    closed_circle = S.layout.size[S.layout.group] == 1
    for ai, a in enumerate(active):
        others = [b for b in active if b != a]
        for side in (0, 1):
            val = lo[:, a] if side == 0 else hi[:, a]
            if a == 3:
                true_face = ~closed_circle
            else:
                true_face = ~np.isin(np.round(val, 14), np.round(limits[a], 14))
            chunk = max(1, 200000 // len(face_mesh))
            for c0 in range(0, len(S), chunk):
                c1 = min(len(S), c0 + chunk)
                box = np.repeat(lo[c0:c1, None, :], len(face_mesh), axis=1)
                box[:, :, a] = val[c0:c1, None]
                for oi, b in enumerate(others):
                    box[:, :, b] += (hi[c0:c1, b] - lo[c0:c1, b])[:, None] * face_mesh[None, :, oi]
                cells = _cell_to_points(S, box.reshape(-1, 4)).reshape(c1 - c0, len(face_mesh), -1)
                dd = dist(S.domain, pts[c0:c1, None, :], cells)
                r_hi[c0:c1] = np.maximum(r_hi[c0:c1], dd.max(axis=1))
                inner = np.where(true_face[c0:c1], dd.min(axis=1), np.inf)
                r_lo[c0:c1] = np.minimum(r_lo[c0:c1], inner)
    r_lo = np.where(np.isfinite(r_lo), r_lo, r_hi)
    return r_lo, r_hi


def cell_measures(S: SeparatedSet, w: WeightSpec) -> np.ndarray:
    """Exact normalized weight of every partition cell."""
    if w.domain is not S.domain or w.d != S.d:
        raise ValueError("weight and point set live on different domains")
    th_lo, ps_lo, ch_lo, ph_lo = S.cell_lo.T
    th_hi, ps_hi, ch_hi, ph_hi = S.cell_hi.T
    a, g = w.t_exponent, w.gamma
    t_lo = np.sin(np.clip(th_lo, 0, np.pi) / 2) ** 2
    t_hi = np.sin(np.clip(th_hi, 0, np.pi) / 2) ** 2
    radial = betainc(a + 1, g + 1, t_hi) - betainc(a + 1, g + 1, t_lo)
    azim = (ph_hi - ph_lo) / (2 * np.pi)
    if S.d == 3:
        azim = azim * (np.cos(ch_lo) - np.cos(ch_hi)) / 2
    if w.is_surface:
        return radial * azim
    u_lo, u_hi = np.sin(ps_lo) ** 2, np.sin(ps_hi) ** 2
    ball = betainc(w.d / 2, w.mu + 0.5, u_hi) - betainc(w.d / 2, w.mu + 0.5, u_lo)
    return radial * ball * azim


# ---------------------------------------------------------------------------
# reference product quadrature


@dataclass
class CubatureRule:
    """Nodes with positive weights, exact on polynomials of degree <= degree."""

    layout: Layout
    weights: np.ndarray
    degree: int
    residual: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def points(self) -> np.ndarray:
        return self.layout.points

    def __len__(self) -> int:
        return len(self.weights)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def reference_quadrature(w: WeightSpec, degree: int) -> CubatureRule:
    """Product Gauss rule exact on all polynomials of degree <= degree."""
    n = max(int(degree), 0)
    nt = (n + 1 + 1) // 2 + 1
    rt = gauss_jacobi(nt, (w.gamma, w.t_exponent), (0.0, 1.0))
    m_az = n + 1
    if w.d == 3:
        nc = (n + 2) // 2 + 1
        xc, wc = np.polynomial.legendre.leggauss(nc)
        wc = wc / 2
    else:
        xc, wc = np.zeros(1), np.ones(1)
    if w.is_surface:
        rr, wr = np.ones(1), np.ones(1)
    else:
        # u = rho^2 with weight u^{d/2-1} (1-u)^{mu-1/2} on [0,1]
        nu = (n // 2 + 1 + 1) // 2 + 1
        ru = gauss_jacobi(nu, (w.mu - 0.5, w.d / 2 - 1), (0.0, 1.0))
        rr, wr = np.sqrt(ru.nodes), ru.weights
    T, R, C = np.meshgrid(rt.nodes, rr, xc, indexing="ij")
    W = (rt.weights[:, None, None] * wr[None, :, None] * wc[None, None, :])
    G = T.size
    layout = Layout(w.domain, w.d, t=T.ravel(), rho=R.ravel(), cchi=C.ravel(),
                    size=np.full(G, m_az), offset=np.zeros(G))
    weights = np.repeat(W.ravel() / m_az, m_az)
    return CubatureRule(layout, weights, n, 0.0, {"kind": "product"})


# ---------------------------------------------------------------------------
# sampling


def sample_weight(w: WeightSpec, size: int, rng) -> np.ndarray:
    """Independent samples from the normalized weight measure."""
    t = rng.beta(w.t_exponent + 1, w.gamma + 1, size)
    dirs = rng.standard_normal((size, w.d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    if w.is_surface:
        x = t[:, None] * dirs
    else:
        rho = np.sqrt(rng.beta(w.d / 2, w.mu + 0.5, size))
        x = (t * rho)[:, None] * dirs
    return np.concatenate([x, t[:, None]], axis=1)


def random_points(domain, d: int, size: int, rng) -> np.ndarray:
    """Points spread over the domain (uniform in the distance-adapted angle)."""
    theta = rng.uniform(0, np.pi, size)
    t = np.sin(theta / 2) ** 2
    dirs = rng.standard_normal((size, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    if Domain(domain) is Domain.SURFACE:
        x = t[:, None] * dirs
    else:
        rho = np.sin(rng.uniform(0, np.pi / 2, size))
        x = (t * rho)[:, None] * dirs
    return np.concatenate([x, t[:, None]], axis=1)


def min_separation(S: SeparatedSet, k: int = 12) -> float:
    """Smallest intrinsic distance from each node to its k nearest Euclidean
    neighbours (in the lifted coordinates), minimized over the set."""
    from scipy.spatial import cKDTree

    pts = S.points
    if len(pts) < 2:
        return float("inf")
    emb = _lift(pts) if S.domain is Domain.CONE else pts
    k = min(k + 1, len(pts))
    _, idx = cKDTree(emb).query(emb, k=k)
    dd = dist(S.domain, pts[:, None, :], pts[idx[:, 1:]])
    return float(dd.min())


def write_points(S: SeparatedSet, path: str) -> None:
    """CSV `j,t,x1..xd,cell_r_lo,cell_r_hi` with shortest round-trip floats."""
    import csv

    if S.cell_r_lo is None:
        S.cell_r_lo, S.cell_r_hi = _cell_radii(S)
    pts = S.points
    d = pts.shape[1] - 1
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["j", "t"] + [f"x{i + 1}" for i in range(d)] + ["cell_r_lo", "cell_r_hi"])
        for j, p, lo, hi in zip(S.ring_index, pts, S.cell_r_lo, S.cell_r_hi):
            wr.writerow([int(j), repr(float(p[-1]))] + [repr(float(v)) for v in p[:-1]]
                        + [repr(float(lo)), repr(float(hi))])
