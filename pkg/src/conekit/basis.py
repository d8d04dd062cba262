"""Orthonormal polynomial bases on the conic surface and the solid cone, and
fast moment operators on circle-structured node layouts.

Every basis element factors as radial(t, rho, chi) * trig(q * phi), where phi
is the azimuth of x.  Node layouts made of equispaced azimuthal circles let
us apply the moment matrix through per-circle trigonometric sums instead of
a dense (basis x nodes) matrix.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Layout, WeightSpec, point_coords
from .specfun import _monic_recurrence, jacobi_const, jacobi_norm, legendre_normalized_table

__all__ = ["Basis", "MomentOperator", "orthonormal_jacobi_table", "basis_eval", "basis_norm",
           "dim_polynomials", "Expansion"]


def orthonormal_jacobi_table(nmax: int, a: float, b: float, x) -> np.ndarray:
    """p_k = P_k^{(a,b)} / sqrt(h_k), k = 0..nmax, by the orthonormal recurrence."""
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = 1.0
    if nmax == 0:
        return out
    diag, off = _monic_recurrence(nmax + 1, a, b)
    out[1] = (x - diag[0]) / off[0]
    for k in range(1, nmax):
        out[k + 1] = ((x - diag[k]) * out[k] - off[k - 1] * out[k - 1]) / off[k]
    return out


def _harmonic_labels(d: int, l: int):
    """(q, kind) of an orthonormal harmonic basis of degree l on S^{d-1}."""
    if d == 2:
        return [(0, 0)] if l == 0 else [(l, 1), (l, 2)]
    out = [(0, 0)]
    for q in range(1, l + 1):
        out += [(q, 1), (q, 2)]
    return out


def dim_polynomials(w: WeightSpec, n: int) -> int:
    return Basis(w, n).size


class Basis:
    """Orthonormal basis of Pi_N for the normalized weight w.

    Surface:  P_{n-m}^{(2m+beta+d-1, gamma)}(1-2t) Y_m(x), Y_m a harmonic of
    degree m (homogeneous, so Y_m(x) = t^m Y_m(x/t)).
    Cone:     P_{n-m}^{(2m+2mu+d-1, gamma)}(1-2t) t^m B_m(x/t), B_m in the
    ball basis P_j^{(mu-1/2, m-2j+(d-2)/2)}(2|y|^2-1) Y_{m-2j}(y).
    """

    def __init__(self, w: WeightSpec, N: int):
        if not w.is_surface and w.beta != 0:
            raise ValueError("cone basis is implemented for beta = 0")
        self.w, self.N = w, int(N)
        rows = []
        for n in range(self.N + 1):
            for m in range(n + 1):
                js = [0] if w.is_surface else range(m // 2 + 1)
                for j in js:
                    l = m if w.is_surface else m - 2 * j
                    for q, kind in _harmonic_labels(w.d, l):
                        rows.append((n, m, j, l, q, kind))
        lab = np.array(rows, dtype=int).reshape(-1, 6)
        self.deg, self.m, self.j, self.l, self.q, self.kind = lab.T
        self.size = len(lab)

    @property
    def a0(self) -> float:
        """t-exponent of the weight after removing the angular part."""
        return self.w.t_exponent

    def radial(self, t, rho, cchi) -> np.ndarray:
        """All factors except trig(q phi), shape (size, len(t))."""
        w, N = self.w, self.N
        t = np.atleast_1d(np.asarray(t, float))
        rho = np.atleast_1d(np.asarray(rho, float))
        cchi = np.atleast_1d(np.asarray(cchi, float))
        out = np.empty((self.size, len(t)))
        u = 1 - 2 * t
        a0, g = self.a0, w.gamma
        # harmonic factor for each (l, q, kind)
        harm = {}
        if w.d == 3:
            lmax = N
            for q in range(lmax + 1):
                tab = legendre_normalized_table(lmax, q, cchi)
                for l in range(q, lmax + 1):
                    harm[(l, q)] = tab[l - q]
        sqrt2 = np.sqrt(2.0)

        def harmonic(l, q, kind):
            f = sqrt2 if kind else 1.0
            if w.d == 2:
                return f
            return f * harm[(l, q)]

        tpow = np.ones_like(t)
        for m in range(N + 1):
            if m:
                tpow = tpow * t
            am = a0 + 2 * m
            radial_t = orthonormal_jacobi_table(N - m, am, g, u)
            scale = np.sqrt(jacobi_const(am, g) / jacobi_const(a0, g)) * tpow
            sel_m = np.flatnonzero(self.m == m)
            if w.is_surface:
                for k in sel_m:
                    out[k] = radial_t[self.deg[k] - m] * scale * harmonic(m, self.q[k], self.kind[k])
                continue
            mu = w.mu
            for jj in range(m // 2 + 1):
                l = m - 2 * jj
                bl = l + (w.d - 2) / 2
                ball = orthonormal_jacobi_table(jj, mu - 0.5, bl, 2 * rho * rho - 1)[jj]
                ball = ball * np.sqrt(jacobi_const(mu - 0.5, bl) / jacobi_const(mu - 0.5, (w.d - 2) / 2))
                ball = ball * rho ** l
                for k in sel_m[self.j[sel_m] == jj]:
                    out[k] = radial_t[self.deg[k] - m] * scale * ball * harmonic(l, self.q[k], self.kind[k])
        return out

    def trig(self, phi) -> np.ndarray:
        phi = np.atleast_1d(np.asarray(phi, float))
        arg = self.q[:, None] * phi[None, :]
        return np.where(self.kind[:, None] == 2, np.sin(arg), np.cos(arg))

    def evaluate(self, points) -> np.ndarray:
        """Values of all basis elements at the points, shape (size, n_points)."""
        t, rho, cchi, phi = point_coords(self.w.domain, self.w.d, points)
        return self.radial(t, rho, cchi) * self.trig(phi)

    def norm_squared(self) -> np.ndarray:
        """Squared norms of the unnormalized elements (H on the surface, the
        product of Jacobi norms on the cone)."""
        w = self.w
        a0, g = self.a0, w.gamma
        am = a0 + 2 * self.m
        H = np.array([jacobi_const(a0, g) / jacobi_const(a, g) * jacobi_norm(n - m, (a, g))
                      for a, n, m in zip(am, self.deg, self.m)])
        if w.is_surface:
            return H
        bl = self.l + (w.d - 2) / 2
        ball = np.array([jacobi_const(w.mu - 0.5, (w.d - 2) / 2) / jacobi_const(w.mu - 0.5, b)
                         * jacobi_norm(j, (w.mu - 0.5, b)) for j, b in zip(self.j, bl)])
        return H * ball

    def index(self, n: int, m: int, idx: int) -> int:
        """Row of the idx-th element of order m in degree n."""
        rows = np.flatnonzero((self.deg == n) & (self.m == m))
        if not 0 <= idx < len(rows):
            raise IndexError(f"basis index {idx} out of range for n={n}, m={m} ({len(rows)} elements)")
        return int(rows[idx])


_basis_cache: dict = {}


def _cached_basis(w: WeightSpec, N: int) -> Basis:
    key = (w, N)
    if key not in _basis_cache:
        if len(_basis_cache) > 16:
            _basis_cache.clear()
        _basis_cache[key] = Basis(w, N)
    return _basis_cache[key]


def basis_eval(w: WeightSpec, n: int, m: int, index: int, point, normalized: bool = False):
    """Value of the index-th basis element of order m in degree n.

    With normalized=False the classical (unnormalized) element is returned,
    whose squared norm is basis_norm(w, n, m, index)."""
    if not 0 <= m <= n:
        raise IndexError("need 0 <= m <= n")
    B = _cached_basis(w, n)
    k = B.index(n, m, index)
    pts = np.atleast_2d(np.asarray(point, float))
    t, rho, cchi, phi = point_coords(w.domain, w.d, pts)
    val = B.radial(t, rho, cchi)[k] * B.trig(phi)[k]
    if not normalized:
        val = val * np.sqrt(B.norm_squared()[k])
    return val if np.ndim(point) > 1 else float(val[0])


def basis_norm(w: WeightSpec, n: int, m: int, index: int) -> float:
    B = _cached_basis(w, n)
    return float(B.norm_squared()[B.index(n, m, index)])


@dataclass
class MomentOperator:
    """The matrix A[k, i] = phi_k(node_i) applied through circle sums."""

    basis: Basis
    layout: Layout

    def __post_init__(self):
        B, L = self.basis, self.layout
        self.R = B.radial(L.t, L.rho, L.cchi)  # (M, G)
        Q = B.N
        phi = L.phi
        qs = np.arange(Q + 1)
        self.cos = np.cos(np.outer(phi, qs))  # (nodes, Q+1)
        self.sin = np.sin(np.outer(phi, qs))
        self.blocks = []
        for q in range(Q + 1):
            for kind in (0, 1, 2):
                rows = np.flatnonzero((B.q == q) & (B.kind == kind))
                if len(rows):
                    self.blocks.append((q, kind, rows, np.ascontiguousarray(self.R[rows])))
        self.group = L.group
        self.starts = L.starts

    @property
    def shape(self):
        return (self.basis.size, len(self.layout))

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """A @ v for v of shape (nodes,) or (nodes, r)."""
        v = np.asarray(v, float)
        one = v.ndim == 1
        V = v[:, None] if one else v
        out = np.empty((self.basis.size, V.shape[1]))
        sums = {}
        for q, kind, rows, Rb in self.blocks:
            trig = self.sin if kind == 2 else self.cos
            key = (q, kind == 2)
            if key not in sums:
                sums.clear()
                sums[key] = np.add.reduceat(trig[:, q, None] * V, self.starts, axis=0)
            out[rows] = Rb @ sums[key]
        return out[:, 0] if one else out

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        """A.T @ y for y of shape (M,) or (M, r)."""
        y = np.asarray(y, float)
        one = y.ndim == 1
        Y = y[:, None] if one else y
        g = self.group
        out = np.zeros((len(self.layout), Y.shape[1]))
        for q, kind, rows, Rb in self.blocks:
            trig = self.sin if kind == 2 else self.cos
            out += trig[:, q, None] * (Rb.T @ Y[rows])[g]
        return out[:, 0] if one else out

    def dense(self) -> np.ndarray:
        L = self.layout
        return self.R[:, L.group] * self.basis.trig(L.phi)


class Expansion:
    """f = sum_k coef[k] phi_k in the orthonormal basis of Pi_N (coef may carry
    a trailing batch axis)."""

    def __init__(self, w: WeightSpec, N: int, coef):
        self.w, self.N = w, int(N)
        self.basis = _cached_basis(w, self.N)
        self.coef = np.asarray(coef, dtype=float)
        if self.coef.shape[0] != self.basis.size:
            raise ValueError(f"expected {self.basis.size} coefficients for degree {N}, "
                             f"got {self.coef.shape[0]}")

    @classmethod
    def project(cls, w: WeightSpec, f, N: int, quad_degree: int | None = None) -> "Expansion":
        """Orthogonal projection of f onto Pi_N using a product Gauss rule of
        degree quad_degree (default 2N, exact when f is in Pi_N)."""
        from .geometry import reference_quadrature
        rule = reference_quadrature(w, 2 * N if quad_degree is None else quad_degree)
        op = MomentOperator(_cached_basis(w, N), rule.layout)
        vals = np.asarray(f(rule.points), dtype=float)
        if vals.ndim == 1:
            return cls(w, N, op.matvec(rule.weights * vals))
        return cls(w, N, op.matvec(rule.weights[:, None] * vals))

    def degrees(self) -> np.ndarray:
        return self.basis.deg

    def truncate(self, N: int) -> "Expansion":
        N = min(int(N), self.N)
        keep = self.basis.deg <= N
        return Expansion(self.w, N, self.coef[keep])

    def extend(self, N: int) -> "Expansion":
        """The same function written in the basis of Pi_N, N >= self.N."""
        if N <= self.N:
            return self.truncate(N)
        big = _cached_basis(self.w, N)
        out = np.zeros((big.size,) + self.coef.shape[1:])
        out[big.deg <= self.N] = self.coef
        return Expansion(self.w, N, out)

    def multiply(self, mult) -> "Expansion":
        """Apply a multiplier depending on the degree: coef_k * mult[deg_k]."""
        m = np.asarray(mult, dtype=float)[self.basis.deg]
        if self.coef.ndim > 1:
            m = m.reshape((-1,) + (1,) * (self.coef.ndim - 1))
        return Expansion(self.w, self.N, self.coef * m)

    def norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.coef ** 2, axis=0))

    def __call__(self, pts, chunk: int = 4096) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = []
        for i in range(0, len(pts), chunk):
            Phi = self.basis.evaluate(pts[i:i + chunk])
            out.append(np.tensordot(self.coef, Phi, axes=([0], [0])))
        return np.concatenate(out, axis=-1) if out else np.zeros(0)

    def on_layout(self, layout: Layout) -> np.ndarray:
        """Values at the nodes of a circle layout, shape (nodes,) or (nodes, r)."""
        return MomentOperator(self.basis, layout).rmatvec(self.coef)
