"""Tight needlet frames built from dyadic localized kernels and positive
cubature rules.

Level 0 is the constant function; level j >= 1 uses F_j = L_{2^{j-1}} with a
type-b cutoff, whose squares form a partition of unity over the degrees.
Elements are psi_{z,j} = sqrt(lam_{z,j}) F_j(., z).  Analysis and synthesis go
through orthonormal coefficients, F_j f = sum_k a(k / 2^{j-1}) proj_k f, so no
element matrix is ever formed.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .basis import Expansion, MomentOperator, _cached_basis
from .cubature import Infeasible, default_delta, solve_positive_cubature, write_rule
from .geometry import (CubatureRule, SeparatedSet, WeightSpec, build_separated_set,
                       cap_measure_formula, dist, random_points, reference_quadrature)
from .kernels import KernelConfig, _towards, base_points, cutoff_coefficients, localized_kernel
from .specfun import CutoffKind, CutoffSpec

__all__ = ["NeedletFrame", "FrameLevel", "FrameCoefficients", "FrameInfeasible", "build_frame",
           "analyze", "synthesize", "parseval_check", "frame_operator", "needlet_decay_check",
           "level_multiplier", "write_frame", "write_coefficients"]


class FrameInfeasible(Infeasible):
    def __init__(self, level: int, exc: Infeasible):
        super().__init__(f"level {level}: {exc}", exc.residual, exc.suggestion)
        self.level = level


@dataclass
class FrameLevel:
    j: int
    degree: int  # exactness degree of the rule
    eps: float
    points: SeparatedSet
    rule: CubatureRule

    @property
    def sqrt_weights(self) -> np.ndarray:
        return np.sqrt(self.rule.weights)

    def __len__(self) -> int:
        return len(self.rule)


@dataclass
class NeedletFrame:
    weight: WeightSpec
    J: int
    cutoff: CutoffSpec
    delta: float
    levels: list
    band_limit: int | None = None
    _ops: dict = field(default_factory=dict, repr=False)

    @property
    def n_elements(self) -> int:
        return sum(len(L) for L in self.levels)

    def level_sizes(self):
        return [len(L) for L in self.levels]

    def element_degree(self, j: int) -> int:
        return 0 if j == 0 else 2 ** j

    def op(self, j: int, N: int) -> MomentOperator:
        key = (j, N)
        if key not in self._ops:
            self._ops[key] = MomentOperator(_cached_basis(self.weight, N), self.levels[j].rule.layout)
        return self._ops[key]

    def element(self, j: int, index: int, p) -> np.ndarray:
        """psi_{z,j}(p) through the kernel addition formula."""
        L = self.levels[j]
        z = L.rule.points[index]
        p = np.atleast_2d(p)
        if j == 0:
            return np.full(len(p), L.sqrt_weights[index])
        cfg = KernelConfig.of(self.weight)
        zz = np.repeat(z[None, :], len(p), axis=0)
        return L.sqrt_weights[index] * localized_kernel(cfg, 2 ** (j - 1), self.cutoff, p, zz)


def level_multiplier(j: int, N: int, cutoff: CutoffSpec) -> np.ndarray:
    """Multiplier of F_j on degrees 0..N."""
    m = np.zeros(N + 1)
    if j == 0:
        m[0] = 1.0
        return m
    a = cutoff_coefficients(2 ** (j - 1), cutoff)
    k = min(N, len(a) - 1)
    m[:k + 1] = a[:k + 1]
    return m


def build_frame(w: WeightSpec, J: int, delta: float | None = None, cutoff: CutoffSpec | None = None,
                band_limit: int | None = None, seed: int | None = 0,
                retries: int = 4) -> NeedletFrame:
    """Levels 0..J.  Level j carries a positive cubature of degree 2^{j+1}
    (capped at 2 * band_limit when given) on a set with eps_j = 2 delta / degree,
    which is delta / 2^j without the cap.  A level whose rule is infeasible
    halves its eps up to `retries` times; the delta actually used is kept in
    the rule metadata."""
    cutoff = cutoff or CutoffSpec(CutoffKind.TYPE_B)
    if cutoff.kind is not CutoffKind.TYPE_B:
        raise ValueError("frames need a type-b cutoff")
    if J < 0:
        raise ValueError("J must be nonnegative")
    delta = default_delta(w) / 2 if delta is None else float(delta)
    levels = []
    for j in range(J + 1):
        deg = 2 ** (j + 1)
        if band_limit is not None:
            deg = max(2, min(deg, 2 * int(band_limit)))
        eps = 2 * delta / deg
        for attempt in range(retries + 1):
            S = build_separated_set(w.domain, w.d, eps, seed=seed, certify=False)
            try:
                rule = solve_positive_cubature(S, deg, w)
                break
            except Infeasible as exc:
                if attempt == retries:
                    raise FrameInfeasible(j, exc) from exc
                eps /= 2
        rule.meta["delta"] = eps * deg / 2
        levels.append(FrameLevel(j, deg, eps, S, rule))
    return NeedletFrame(w, J, cutoff, delta, levels, band_limit)


@dataclass
class FrameCoefficients:
    levels: list  # per level, array (nodes,) or (nodes, r)

    @property
    def count(self) -> int:
        return sum(len(c) for c in self.levels)

    def energy(self) -> np.ndarray:
        return sum(np.sum(c ** 2, axis=0) for c in self.levels)

    def level_energy(self) -> list:
        return [np.sum(c ** 2, axis=0) for c in self.levels]

    def scaled(self, a: float) -> "FrameCoefficients":
        return FrameCoefficients([a * c for c in self.levels])

    def __add__(self, other: "FrameCoefficients") -> "FrameCoefficients":
        if [c.shape for c in self.levels] != [c.shape for c in other.levels]:
            raise ValueError("coefficient shapes differ")
        return FrameCoefficients([a + b for a, b in zip(self.levels, other.levels)])


def _as_expansion(frame: NeedletFrame, f, degree: int | None) -> Expansion:
    if isinstance(f, Expansion):
        return f
    N = 2 ** frame.J if degree is None else int(degree)
    f_arr = np.asarray(f) if not callable(f) else None
    if f_arr is not None:
        return Expansion(frame.weight, N, f_arr)
    quad = None if degree is None else max(2 * N, degree)
    return Expansion.project(frame.weight, f, N, quad)


def analyze(frame: NeedletFrame, f, degree: int | None = None) -> FrameCoefficients:
    """<f, psi_{z,j}> = sqrt(lam_z) F_j f(z) for every level and node.

    f is an Expansion, a coefficient array, or a callable on points, which is
    projected onto Pi_{2^J} (exact when f is a polynomial of that degree)."""
    fe = _as_expansion(frame, f, degree)
    out = []
    for L in frame.levels:
        N = min(fe.N, frame.element_degree(L.j))
        part = fe.truncate(N).multiply(level_multiplier(L.j, N, frame.cutoff))
        vals = frame.op(L.j, N).rmatvec(part.coef)
        sw = L.sqrt_weights if vals.ndim == 1 else L.sqrt_weights[:, None]
        out.append(sw * vals)
    return FrameCoefficients(out)


def synthesize(frame: NeedletFrame, coeffs: FrameCoefficients) -> Expansion:
    """sum_{j,z} c_{z,j} psi_{z,j}, returned as an Expansion (callable)."""
    if len(coeffs.levels) != len(frame.levels):
        raise ValueError("coefficients do not match the frame levels")
    # with a band limit the level rules are exact only up to 2 * band_limit, so
    # synthesis stays in Pi_{band_limit}
    cap = frame.band_limit if frame.band_limit is not None else None
    degree = lambda j: frame.element_degree(j) if cap is None else min(frame.element_degree(j), cap)
    Ntop = max(degree(L.j) for L in frame.levels)
    total = None
    for L, c in zip(frame.levels, coeffs.levels):
        c = np.asarray(c, dtype=float)
        if c.shape[0] != len(L):
            raise ValueError(f"level {L.j}: expected {len(L)} coefficients, got {c.shape[0]}")
        N = degree(L.j)
        sw = L.sqrt_weights if c.ndim == 1 else L.sqrt_weights[:, None]
        moments = frame.op(L.j, N).matvec(sw * c)
        part = Expansion(frame.weight, N, moments).multiply(level_multiplier(L.j, N, frame.cutoff))
        part = part.extend(Ntop)
        total = part.coef if total is None else total + part.coef
    return Expansion(frame.weight, Ntop, total)


def parseval_check(frame: NeedletFrame, f, degree: int | None = None) -> np.ndarray:
    """|sum |<f, psi>|^2 - ||f||^2| / ||f||^2; for callables ||f||^2 comes from
    a product Gauss rule of degree 2 * degree (default 2^{J-1})."""
    N = 2 ** max(frame.J - 1, 0) if degree is None else int(degree)
    if isinstance(f, Expansion):
        norm2 = np.sum(f.coef ** 2, axis=0)
    elif callable(f):
        rule = reference_quadrature(frame.weight, 2 * N)
        vals = np.asarray(f(rule.points), dtype=float)
        norm2 = rule.weights @ (vals ** 2 if vals.ndim == 1 else vals.T ** 2)
    else:
        coef = np.asarray(f, dtype=float)
        norm2 = np.sum(coef ** 2, axis=0)
        f = Expansion(frame.weight, N, coef)
    energy = analyze(frame, f, N).energy()
    return np.abs(energy - norm2) / norm2


def frame_operator(frame: NeedletFrame, N: int | None = None) -> np.ndarray:
    """Matrix of f -> sum <f, psi> psi on Pi_N in the orthonormal basis."""
    N = 2 ** max(frame.J - 1, 0) if N is None else int(N)
    M = _cached_basis(frame.weight, N).size
    T = np.zeros((M, M))
    eye = np.eye(M)
    deg = _cached_basis(frame.weight, N).deg
    for L in frame.levels:
        m = level_multiplier(L.j, N, frame.cutoff)[deg]
        if not m.any():
            continue
        op = frame.op(L.j, N)
        vals = op.rmatvec(eye * m[None, :])  # (nodes, M): F_j phi_k at the nodes
        T += vals.T @ (L.rule.weights[:, None] * vals)
    return T


def needlet_decay_check(frame: NeedletFrame, kappa: float = 6.0, levels=None, n_targets: int = 6,
                        seed: int = 0, scaled=(0, 0.5, 1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64),
                        at: str = "probe"):
    """Per level: sup of |psi_{z,j}(p)| sqrt(cap(c, 2^-j)) (1 + 2^j d(p, z))^kappa
    over nodes z nearest to fixed reference points and probes p at scaled
    distances x / 2^j towards random targets.  The cap is centred at the
    probe (c = p, as in the needlet bound) or at the node (at="node")."""
    w = frame.weight
    levels = range(1, frame.J + 1) if levels is None else levels
    targets = random_points(w.domain, w.d, n_targets, np.random.default_rng(seed))
    cfg = KernelConfig.of(w)
    rows = []
    for j in levels:
        L = frame.levels[j]
        n = 2 ** j
        nodes = L.rule.points
        idx = sorted({int(np.argmin(dist(w.domain, b, nodes))) for b in base_points(w, n)})
        Z, P, I = [], [], []
        for i in idx:
            z = nodes[i]
            for tg in targets:
                reach = dist(w.domain, z, tg)
                for x in scaled:
                    if x / n > reach:
                        break
                    Z.append(z)
                    I.append(i)
                    P.append(z.copy() if x == 0 else _towards(w, z, tg, x / n))
        Z, P, I = np.array(Z), np.array(P), np.array(I)
        psi = L.sqrt_weights[I] * localized_kernel(cfg, 2 ** (j - 1), frame.cutoff, P, Z)
        center = P if at == "probe" else Z
        val = (np.abs(psi) * np.sqrt(cap_measure_formula(w, center, 1.0 / n))
               * (1 + n * dist(w.domain, P, Z)) ** kappa)
        rows.append({"level": j, "sup": float(val.max()), "probes": len(P)})
    return rows


def write_coefficients(coeffs: FrameCoefficients, path: str) -> None:
    """CSV `j,node_index,coef` (first column of batched coefficients)."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["j", "node_index", "coef"])
        for j, c in enumerate(coeffs.levels):
            c = np.asarray(c)
            c = c if c.ndim == 1 else c[:, 0]
            for i, v in enumerate(c):
                wr.writerow([j, i, repr(float(v))])


def write_frame(frame: NeedletFrame, directory: str) -> str:
    """Per-level rule files plus manifest.json; returns the manifest path."""
    os.makedirs(directory, exist_ok=True)
    files = []
    for L in frame.levels:
        name = f"level_{L.j}.csv"
        write_rule(L.rule, os.path.join(directory, name), frame.weight, frame.delta)
        files.append({"j": L.j, "file": name, "eps": L.eps, "delta": L.rule.meta.get("delta"),
                      "degree": L.degree, "nodes": len(L)})
    manifest = {"weight": frame.weight.to_dict(), "J": frame.J, "delta": frame.delta,
                "band_limit": frame.band_limit,
                "cutoff": {"kind": frame.cutoff.kind.value, "transition": frame.cutoff.transition,
                           "smooth_order": frame.cutoff.smooth_order},
                "levels": files}
    path = os.path.join(directory, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
    return path
