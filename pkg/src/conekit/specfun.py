"""One-dimensional building blocks: Jacobi and Gegenbauer polynomials,
Gauss-Jacobi rules, circular and spherical harmonics, cut-off functions.

All Jacobi weights are normalized to unit mass, so h_0 = 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import betainc, gammaln

__all__ = [
    "JacobiParams",
    "QuadratureRule1D",
    "CutoffKind",
    "CutoffSpec",
    "jacobi_const",
    "jacobi_eval",
    "jacobi_table",
    "jacobi_norm",
    "jacobi_at_one",
    "gegenbauer_eval",
    "zonal_eval",
    "zonal_even_series",
    "gauss_jacobi",
    "cutoff_eval",
    "circle_harmonic",
    "legendre_normalized_table",
]


@dataclass(frozen=True)
class JacobiParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > -1 and self.beta > -1):
            raise ValueError(
                f"Jacobi parameters must exceed -1, got alpha={self.alpha}, beta={self.beta}"
            )


def _params(p) -> JacobiParams:
    if isinstance(p, JacobiParams):
        return p
    a, b = p
    return JacobiParams(float(a), float(b))


def jacobi_const(alpha: float, beta: float) -> float:
    """c_{a,b} = 1 / B(a+1, b+1), the constant normalizing t^a (1-t)^b on [0,1]."""
    return float(np.exp(gammaln(alpha + beta + 2) - gammaln(alpha + 1) - gammaln(beta + 1)))


def jacobi_table(nmax: int, p, x) -> np.ndarray:
    """P_k^{(a,b)}(x) for k = 0..nmax, stacked along a new leading axis."""
    p = _params(p)
    a, b = p.alpha, p.beta
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = 1.0
    if nmax == 0:
        return out
    out[1] = 0.5 * (a - b) + 0.5 * (a + b + 2) * x
    for n in range(2, nmax + 1):
        s = 2 * n + a + b
        c1 = 2 * n * (n + a + b) * (s - 2)
        c2 = (s - 1) * (a * a - b * b)
        c3 = (s - 1) * s * (s - 2)
        c4 = 2 * (n + a - 1) * (n + b - 1) * s
        out[n] = ((c2 + c3 * x) * out[n - 1] - c4 * out[n - 2]) / c1
    return out


def jacobi_eval(n: int, p, x):
    """P_n^{(a,b)}(x) by the forward three-term recurrence."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    return jacobi_table(n, p, x)[n]


def jacobi_norm(n, p):
    """h_n: squared norm of P_n^{(a,b)} under the unit-mass weight (1-x)^a (1+x)^b."""
    p = _params(p)
    a, b = p.alpha, p.beta
    n = np.asarray(n, dtype=float)
    # (a+1)_n (b+1)_n (a+b+n+1) / (n! (a+b+2)_n (a+b+2n+1))
    log_h = (
        gammaln(a + 1 + n) - gammaln(a + 1)
        + gammaln(b + 1 + n) - gammaln(b + 1)
        - gammaln(n + 1)
        - gammaln(a + b + 2 + n) + gammaln(a + b + 2)
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (a + b + n + 1) / (a + b + 2 * n + 1)
    h = np.exp(log_h) * ratio
    # n = 0 with a+b+1 = 0 gives 0/0 in the ratio
    h = np.where(n == 0, 1.0, h)
    return float(h) if h.ndim == 0 else h


def jacobi_at_one(n, p):
    """P_n^{(a,b)}(1) = (a+1)_n / n!."""
    p = _params(p)
    n = np.asarray(n, dtype=float)
    v = np.exp(gammaln(p.alpha + 1 + n) - gammaln(p.alpha + 1) - gammaln(n + 1))
    return float(v) if v.ndim == 0 else v


def gegenbauer_eval(n: int, lam: float, x):
    x = np.asarray(x, dtype=float)
    c0 = np.ones_like(x)
    if n == 0:
        return c0
    c1 = 2 * lam * x
    for k in range(2, n + 1):
        c0, c1 = c1, (2 * x * (k + lam - 1) * c1 - (k + 2 * lam - 2) * c0) / k
    return c1


def zonal_eval(n: int, lam: float, x):
    """Z_n^lam(x) = (n + lam)/lam * C_n^lam(x)."""
    if lam <= 0:
        raise ValueError("zonal_eval needs lambda > 0")
    return (n + lam) / lam * gegenbauer_eval(n, lam, x)


def zonal_even_series(coef, lam: float, x, block: int = 32768):
    """sum_k coef[k] Z_{2k}^lam(x), through the Jacobi (lam-1/2, -1/2) form in 2x^2-1.

    The three-term recurrence runs in place over cache-sized blocks."""
    if lam <= 0:
        raise ValueError("zonal_even_series needs lambda > 0")
    coef = np.asarray(coef, dtype=float)
    a, b = lam - 0.5, -0.5
    K = len(coef)
    k = np.arange(K)
    scale = coef * jacobi_at_one(k, (a, b)) / jacobi_norm(k, (a, b))
    m = np.arange(2, K)
    s = 2 * m + a + b
    c1 = 2 * m * (m + a + b) * (s - 2)
    ca = (s - 1) * s * (s - 2) / c1
    cb = (s - 1) * (a * a - b * b) / c1
    cc = 2 * (m + a - 1) * (m + b - 1) * s / c1
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    out = np.empty_like(flat)
    for i in range(0, len(flat), block):
        y = flat[i:i + block]
        y = 2 * y * y - 1
        acc = np.full_like(y, scale[0])
        if K > 1:
            p0 = np.ones_like(y)
            p1 = 0.5 * (a - b) + 0.5 * (a + b + 2) * y
            acc += scale[1] * p1
            tmp = np.empty_like(y)
            for j in range(K - 2):
                np.multiply(y, ca[j], out=tmp)
                tmp += cb[j]
                tmp *= p1
                p0 *= -cc[j]
                p0 += tmp
                p0, p1 = p1, p0
                if scale[j + 2] != 0.0:
                    np.multiply(p1, scale[j + 2], out=tmp)
                    acc += tmp
        out[i:i + block] = acc
    return out.reshape(x.shape)


@dataclass(frozen=True)
class QuadratureRule1D:
    nodes: np.ndarray
    weights: np.ndarray
    exact_degree: int

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


def _monic_recurrence(m: int, a: float, b: float):
    k = np.arange(m, dtype=float)
    s = 2 * k + a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        diag = (b * b - a * a) / (s * (s + 2))
    diag[0] = (b - a) / (a + b + 2)
    kk = np.arange(1, m, dtype=float)
    s = 2 * kk + a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        off2 = 4 * kk * (kk + a) * (kk + b) * (kk + a + b) / (s * s * (s + 1) * (s - 1))
    if m > 1:
        off2[0] = 4 * (1 + a) * (1 + b) / ((2 + a + b) ** 2 * (3 + a + b))
    return diag, np.sqrt(off2)


def gauss_jacobi(m: int, p, interval=(-1.0, 1.0)) -> QuadratureRule1D:
    """m-point Gauss rule for (b-x)^alpha (x-a)^beta on [a,b], unit total mass.

    Nodes come from the Jacobi matrix (Golub-Welsch); weights are recomputed
    as reciprocal Christoffel sums, which keeps small tail weights accurate.
    """
    if m < 1:
        raise ValueError("need at least one node")
    p = _params(p)
    diag, off = _monic_recurrence(m, p.alpha, p.beta)
    try:
        x = eigh_tridiagonal(diag, off, eigvals_only=True)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(
            f"Gauss-Jacobi eigen-solve failed for m={m}, alpha={p.alpha}, beta={p.beta}"
        ) from exc
    # one Newton step on P_m, then Christoffel weights
    tab = jacobi_table(m, p, x)
    h = jacobi_norm(np.arange(m + 1), p)
    dP = 0.5 * (m + p.alpha + p.beta + 1) * jacobi_table(m - 1, (p.alpha + 1, p.beta + 1), x)[-1]
    x = x - tab[m] / dP
    tab = jacobi_table(m - 1, p, x)
    w = 1.0 / np.sum(tab * tab / h[:m, None], axis=0)
    w = w / w.sum()
    lo, hi = interval
    # (1-u)^alpha (1+u)^beta on [-1,1] maps to (hi-x)^alpha (x-lo)^beta
    nodes = lo + (hi - lo) * (x + 1) / 2
    order = np.argsort(nodes)
    return QuadratureRule1D(nodes[order], w[order], 2 * m - 1)


class CutoffKind(str, Enum):
    TYPE_A = "a"
    TYPE_B = "b"
    INDICATOR = "indicator"


@dataclass(frozen=True)
class CutoffSpec:
    """kind selects the support; transition "exp" is the C-infinity exp(-1/x)
    smoothstep, "poly" the C^smooth_order incomplete-beta smoothstep."""

    kind: CutoffKind = CutoffKind.TYPE_A
    smooth_order: int = 3
    transition: str = "exp"

    def __post_init__(self):
        object.__setattr__(self, "kind", CutoffKind(self.kind))
        if self.smooth_order < 3:
            raise ValueError("smooth_order must be at least 3")
        if self.transition not in ("exp", "poly"):
            raise ValueError(f"unknown transition {self.transition!r}")


def _smoothstep(x, order: int | None = None):
    """s(x) with s = 0 for x <= 0, 1 for x >= 1 and s(x) + s(1-x) = 1.

    order None: exp(-1/x) construction; otherwise the regularized incomplete
    beta I_x(order+1, order+1), which has order continuous derivatives."""
    x = np.asarray(x, dtype=float)
    if order is not None:
        return betainc(order + 1, order + 1, np.clip(x, 0.0, 1.0))
    with np.errstate(divide="ignore", over="ignore"):
        h0 = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        h1 = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return h0 / (h0 + h1)


def cutoff_eval(spec: CutoffSpec, t):
    """Admissible cut-off a(t) built from the exp(-1/x) smoothstep."""
    t = np.asarray(t, dtype=float)
    if not isinstance(spec, CutoffSpec):
        spec = CutoffSpec(spec)
    kind = spec.kind
    order = spec.smooth_order if spec.transition == "poly" else None
    if kind is CutoffKind.INDICATOR:
        return np.where((t >= 0) & (t <= 1), 1.0, 0.0)
    if kind is CutoffKind.TYPE_A:
        return np.where(t <= 1, 1.0, np.where(t < 2, _smoothstep(2 - t, order), 0.0))
    with np.errstate(divide="ignore"):
        lg = np.log2(np.where(t > 0, t, 1.0))
    up = np.sin(0.5 * np.pi * _smoothstep(lg + 1, order))
    down = np.cos(0.5 * np.pi * _smoothstep(lg, order))
    out = np.where((t >= 0.5) & (t <= 1), up, 0.0)
    return np.where((t > 1) & (t <= 2), down, out)


def circle_harmonic(m: int, kind: str, theta):
    """Real orthonormal harmonics on the circle for the measure dtheta/2pi."""
    theta = np.asarray(theta, dtype=float)
    if kind == "const":
        return np.ones_like(theta)
    if m < 1:
        raise ValueError("cos/sin harmonics need m >= 1")
    if kind == "cos":
        return np.sqrt(2.0) * np.cos(m * theta)
    if kind == "sin":
        return np.sqrt(2.0) * np.sin(m * theta)
    raise ValueError(f"unknown harmonic kind {kind!r}")


def legendre_normalized_table(lmax: int, q: int, x) -> np.ndarray:
    """sqrt((2l+1)(l-q)!/(l+q)!) P_l^q(x) for l = q..lmax (rows), no Condon-Shortley sign.

    With the sqrt(2) factor on cos/sin these give real spherical harmonics
    orthonormal for the normalized surface measure on S^2.
    """
    x = np.asarray(x, dtype=float)
    s = np.sqrt(np.clip(1 - x * x, 0.0, None))
    out = np.zeros((lmax - q + 1,) + x.shape)
    pqq = np.ones_like(x)
    for k in range(1, q + 1):
        pqq = pqq * np.sqrt((2 * k + 1) / (2 * k)) * s
    out[0] = pqq
    if lmax == q:
        return out
    out[1] = np.sqrt(2 * q + 3) * x * pqq
    for l in range(q + 2, lmax + 1):
        a = np.sqrt((2 * l + 1) * (2 * l - 1) / ((l - q) * (l + q)))
        b = np.sqrt((2 * l + 1) * (l + q - 1) * (l - q - 1) / ((2 * l - 3) * (l - q) * (l + q)))
        out[l - q] = a * x * out[l - q - 1] - b * out[l - q - 2]
    return out
