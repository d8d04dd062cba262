"""Positive cubature on separated sets, exactness checks and empirical
Marcinkiewicz-Zygmund constants.

Weights solve sum_z lam_z phi_k(z) = delta_{k0} for the orthonormal basis of
Pi_n.  The default solver looks for the solution closest to the exact cell
measures b in the metric sum (lam - b)^2 / b; the Gram system A diag(b) A^T is
well conditioned on separated sets, so conjugate gradients through the fast
moment operator handle tens of thousands of nodes.  Nodes whose weight falls
below a floor are pinned there and the rest re-solved (an active set); dense
Lawson-Hanson NNLS is the fallback for small systems.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls
from scipy.sparse.linalg import LinearOperator, cg

from .basis import Basis, MomentOperator
from .geometry import (CubatureRule, Layout, SeparatedSet, WeightSpec, build_separated_set,
                       cap_measure_formula, cell_measures, reference_quadrature)

__all__ = ["Infeasible", "solve_positive_cubature", "verify_exactness", "mz_constants",
           "calibrate_delta", "write_rule", "read_rule", "DEFAULT_DELTA"]

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-8

# delta_0 measured by calibrate_delta for n in {4, 8, 16, 32}, d = 2
DEFAULT_DELTA = {
    ("surface", 2): 1.0,
    ("cone", 2): 1.0,
}


class Infeasible(RuntimeError):
    """No positive cubature of the requested degree on this node set."""

    def __init__(self, msg, residual=np.inf, suggestion=None):
        super().__init__(msg)
        self.residual = residual
        self.suggestion = suggestion


def _moment_residual(op: MomentOperator, lam: np.ndarray) -> float:
    r = op.matvec(lam)
    r[0] -= 1.0
    return float(np.max(np.abs(r)))


def _least_change(op: MomentOperator, b: np.ndarray, free: np.ndarray, fixed_val: np.ndarray,
                  tol: float, maxiter: int):
    """lam = fixed_val off `free`, b + b A^T y on `free`, with A lam = e1."""
    D = np.where(free, b, 0.0)
    base = np.where(free, b, fixed_val)
    rhs = -op.matvec(base)
    rhs[0] += 1.0
    M = op.shape[0]
    G = LinearOperator((M, M), matvec=lambda y: op.matvec(D * op.rmatvec(y)), dtype=float)
    y, info = cg(G, rhs, rtol=tol, atol=0.0, maxiter=maxiter)
    return base + D * op.rmatvec(y), info


def _active_set(op, b, floor, tol, maxiter, max_sweeps=30):
    free = np.ones(len(b), dtype=bool)
    fixed_val = floor * b
    lam = None
    for sweep in range(max_sweeps):
        lam, info = _least_change(op, b, free, fixed_val, tol, maxiter)
        low = free & (lam < floor * b)
        if not low.any():
            return lam, sweep + 1
        free &= ~low
    return lam, max_sweeps


def _nnls_solve(op: MomentOperator):
    A = op.dense()
    e1 = np.zeros(A.shape[0])
    e1[0] = 1.0
    lam, _ = nnls(A, e1, maxiter=50 * A.shape[1])
    return lam


def _pruned(layout: Layout, keep: np.ndarray) -> Layout:
    """Layout restricted to nodes in keep; circles losing nodes are split into
    single-node circles so the circle structure stays valid."""
    g = layout.group
    full = np.bincount(g[keep], minlength=layout.n_groups) == layout.size
    t, rho, cchi, size, offset = [], [], [], [], []
    phi = layout.phi
    for k in range(layout.n_groups):
        idx = np.flatnonzero((g == k) & keep)
        if not len(idx):
            continue
        if full[k]:
            t.append(layout.t[k]); rho.append(layout.rho[k]); cchi.append(layout.cchi[k])
            size.append(layout.size[k]); offset.append(layout.offset[k])
            continue
        for i in idx:
            t.append(layout.t[k]); rho.append(layout.rho[k]); cchi.append(layout.cchi[k])
            size.append(1); offset.append(phi[i])
    return Layout(layout.domain, layout.d, np.array(t), np.array(rho), np.array(cchi),
                  np.array(size, dtype=int), np.array(offset))


def solve_positive_cubature(S: SeparatedSet, n: int, w: WeightSpec, *, floor: float = 0.05,
                            tol: float = 1e-13, method: str = "auto",
                            dense_limit: int = 4000) -> CubatureRule:
    """Positive weights on the nodes of S, exact for Pi_n.

    method: "least-change" (active set around the cell measures), "nnls"
    (Lawson-Hanson on the dense moment matrix, zero weights pruned), or
    "auto" (least-change, then nnls if the system is small enough)."""
    n = int(n)
    if n < 0:
        raise ValueError("degree must be nonnegative")
    b = cell_measures(S, w)
    b = b / b.sum()
    meta = {"eps": S.eps, "n_nodes": len(S), "weight": w.to_dict()}
    if n == 0:
        return CubatureRule(S.layout, b, 0, 0.0, {**meta, "method": "cell"})
    op = MomentOperator(Basis(w, n), S.layout)
    M = op.shape[0]
    if len(S) < M and method != "nnls":
        raise Infeasible(f"{len(S)} nodes for {M} moments", suggestion=S.eps / 2)
    res = np.inf
    if method in ("auto", "least-change"):
        lam, sweeps = _active_set(op, b, floor, tol, maxiter=20 * M)
        res = _moment_residual(op, lam)
        if res <= RESIDUAL_TOL and lam.min() > 0:
            return CubatureRule(S.layout, lam, n, res,
                                {**meta, "method": "least-change", "sweeps": sweeps})
        log.info("least-change solve failed (residual %.2e, min weight %.2e)", res, lam.min())
    if method == "nnls" or (method == "auto" and len(S) * M <= dense_limit * 1200):
        lam = _nnls_solve(op)
        keep = lam > 0
        res = _moment_residual(op, lam)
        if res <= RESIDUAL_TOL:
            if not keep.all():
                layout = _pruned(S.layout, keep)
                # re-solve on the pruned nodes to polish the residual
                op2 = MomentOperator(op.basis, layout)
                lam2, _ = nnls(op2.dense(), np.eye(M)[0], maxiter=50 * len(layout))
                res2 = _moment_residual(op2, lam2)
                if res2 <= RESIDUAL_TOL and lam2.min() > 0:
                    return CubatureRule(layout, lam2, n, res2,
                                        {**meta, "method": "nnls", "pruned": int((~keep).sum())})
            elif lam.min() > 0:
                return CubatureRule(S.layout, lam, n, res, {**meta, "method": "nnls"})
    raise Infeasible(f"no positive cubature of degree {n} with eps={S.eps:g} "
                     f"(residual {res:.2e}); try a smaller eps", res, S.eps / 2)


def _random_coefficients(M: int, trials: int, rng) -> np.ndarray:
    return rng.standard_normal((M, trials)) / np.sqrt(M)


def verify_exactness(rule: CubatureRule, w: WeightSpec, trials: int = 20, seed: int = 0,
                     degree: int | None = None) -> float:
    """Max over random g in Pi_degree of |node sum - integral| / (1 + |integral|).

    g = sum c_k phi_k in the orthonormal basis, so the integral is c_0."""
    degree = rule.degree if degree is None else int(degree)
    op = MomentOperator(Basis(w, degree), rule.layout)
    C = _random_coefficients(op.shape[0], trials, np.random.default_rng(seed))
    sums = C.T @ op.matvec(rule.weights)
    exact = C[0]
    return float(np.max(np.abs(sums - exact) / (1 + np.abs(exact))))


def _cell_sample_layouts(S: SeparatedSet, fractions=(0.0, 0.5, 1.0)):
    """Copies of the node layout moved to a grid of positions inside each
    cell box, so every copy keeps the circle structure."""
    L = S.layout
    first = L.starts
    lo, hi = S.cell_lo[first], S.cell_hi[first]
    axes = [a for a in range(3) if np.any(hi[:, a] > lo[:, a])]
    grids = np.array(np.meshgrid(*([fractions] * (len(axes) + 1)), indexing="ij"))
    grids = grids.reshape(len(axes) + 1, -1).T
    out = []
    for f in grids:
        th, ps, ch = (lo[:, :3] + (hi[:, :3] - lo[:, :3]) * 0.5).T
        vals = {0: th, 1: ps, 2: ch}
        for a, fa in zip(axes, f[:-1]):
            vals[a] = lo[:, a] + (hi[:, a] - lo[:, a]) * fa
        t = np.sin(np.clip(vals[0], 0, np.pi) / 2) ** 2
        rho = L.rho if S.domain.value == "surface" else np.sin(np.clip(vals[1], 0, np.pi / 2))
        cchi = np.cos(vals[2]) if S.d == 3 else L.cchi
        shift = (f[-1] - 0.5) * 2 * np.pi / L.size
        shift = np.where(L.size == 1, 0.0, shift)
        out.append(Layout(L.domain, L.d, t, rho, cchi, L.size, L.offset + shift))
    return out


@dataclass
class MZResult:
    lower: float
    upper: float
    p: float
    n: int
    trials: int

    def __iter__(self):
        return iter((self.lower, self.upper))


def mz_constants(S: SeparatedSet, n: int, w: WeightSpec, p=1, trials: int = 20, seed: int = 0,
                 measure: str = "cap") -> MZResult:
    """Empirical constants c, C with

        c ||f||_p^p <= sum_z min_{cell z} |f|^p w(z) ,  sum_z max_{cell z} |f|^p w(z) <= C ||f||_p^p

    over random f in Pi_n (p = 1, 2).  For p = inf the pair is the range of
    max_z |f(z)| / ||f||_inf.  w(z) is cap_measure_formula(z, eps) by default or
    the exact cell measure with measure="cell".  Half of the test functions
    have Gaussian coefficients, the other half are reproducing kernels
    K_n(., y) at random y (the most localized elements of Pi_n)."""
    p = np.inf if p in ("inf", np.inf) else float(p)
    rng = np.random.default_rng(seed)
    B = Basis(w, n)
    M = B.size
    C = _random_coefficients(M, trials, rng)
    half = trials // 2
    if half:
        from .geometry import random_points
        ys = random_points(w.domain, w.d, half, rng)
        C[:, trials - half:] = B.evaluate(ys)
    fine = reference_quadrature(w, 4 * n + 4)
    vals_fine = MomentOperator(B, fine.layout).rmatvec(C)
    if p == 2:
        norm = np.sum(C * C, axis=0)
    elif p == 1:
        norm = fine.weights @ np.abs(vals_fine)
    else:
        norm = np.abs(vals_fine).max(axis=0)
    node_vals = np.abs(MomentOperator(B, S.layout).rmatvec(C))
    if p == np.inf:
        cell_max = node_vals
        for L in _cell_sample_layouts(S):
            cell_max = np.maximum(cell_max, np.abs(MomentOperator(B, L).rmatvec(C)))
        norm = np.maximum(norm, cell_max.max(axis=0))
        ratio = node_vals.max(axis=0) / norm
        return MZResult(float(ratio.min()), float(ratio.max()), p, n, trials)
    cmax, cmin = node_vals.copy(), node_vals.copy()
    for L in _cell_sample_layouts(S):
        v = np.abs(MomentOperator(B, L).rmatvec(C))
        cmax = np.maximum(cmax, v)
        cmin = np.minimum(cmin, v)
    if measure == "cap":
        wz = cap_measure_formula(w, S.points, S.eps)
    else:
        wz = cell_measures(S, w)
    upper = (wz @ cmax ** p) / norm
    lower = (wz @ cmin ** p) / norm
    return MZResult(float(lower.min()), float(upper.max()), p, n, trials)


def calibrate_delta(w: WeightSpec, n_values=(4, 8, 16, 32), start: float = 1.0,
                    smallest: float = 1 / 64, seed: int = 0):
    """Largest delta = start / 2^k for which every degree in n_values has a
    positive cubature on the set with eps = delta / n."""
    delta = start
    while delta >= smallest:
        try:
            for n in n_values:
                S = build_separated_set(w.domain, w.d, delta / n, seed=seed, certify=False)
                solve_positive_cubature(S, n, w)
            return delta
        except Infeasible as exc:
            log.info("delta=%g infeasible: %s", delta, exc)
            delta /= 2
    raise Infeasible(f"no feasible delta down to {smallest}")


def default_delta(w: WeightSpec) -> float:
    return DEFAULT_DELTA.get((w.domain.value, w.d), 0.25)


def write_rule(rule: CubatureRule, path: str, w: WeightSpec | None = None, delta=None,
               ring: np.ndarray | None = None) -> None:
    """CSV `j,t,x1..xd,weight` plus a JSON sidecar (path + '.json')."""
    pts = rule.points
    d = pts.shape[1] - 1
    j = ring if ring is not None else rule.layout.group
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["j", "t"] + [f"x{i + 1}" for i in range(d)] + ["weight"])
        for jj, pt, lam in zip(j, pts, rule.weights):
            wr.writerow([int(jj), repr(float(pt[-1]))] + [repr(float(v)) for v in pt[:-1]]
                        + [repr(float(lam))])
    side = {"degree": rule.degree, "residual": rule.residual, "delta": delta,
            "n_nodes": len(rule), "weight": w.to_dict() if w is not None else None,
            "method": rule.meta.get("method")}
    with open(path + ".json", "w") as fh:
        json.dump(side, fh, indent=2)


def read_rule(path: str):
    """Points (x, t), weights and the sidecar dict of a rule file."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t, x, lam = data[:, 1], data[:, 2:-1], data[:, -1]
    try:
        with open(path + ".json") as fh:
            side = json.load(fh)
    except FileNotFoundError:
        side = {}
    return np.column_stack([x, t]), lam, side
