"""Command-line driver: point sets, cubature, kernel studies, frames,
approximation experiments and the invariant check suites.

Exit codes: 0 success, 2 invalid configuration, 3 numerical infeasibility,
4 failed invariants (check).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import approx, cubature, frames, geometry, kernels
from .basis import Expansion, _cached_basis
from .geometry import WeightSpec
from .specfun import CutoffSpec

FORMATS = """\
Output formats (all files UTF-8, LF line endings, floats in shortest
round-trip decimal form).

points.csv        j,t,x1..xd,cell_r_lo,cell_r_hi
                  j is the ring index; cell_r_lo/hi are inner and outer
                  intrinsic radii of the node's partition cell.
points.json       seed, eps, domain, d, n_rings, cardinality, min_separation
                  (over 12 nearest neighbours), covering_estimate (max cell_r_hi).
rule.csv          j,t,x1..xd,weight  (j is the circle group of the layout)
rule.csv.json     degree, residual, delta, n_nodes, weight, method, seed
kernel_*.csv      decay: n,kappa,sup_N1,sup_N2,sup_N3,pairs
                  christoffel: n,t,x1..xd,lambda,cap,ratio
                  eigen: max_rel_error in the JSON report
frame/manifest.json  weight, J, delta, band_limit, cutoff, levels[j, file,
                  eps, delta, degree, nodes], seed
frame/level_j.csv same columns as rule.csv
coefficients.csv  j,node_index,coef
corpus.csv        function,r,n,E_n,K_hat,omega,ratio  (ratio = E_n / K_hat)
*.json reports    always carry "seed" and the command's parameters.
"""


class ConfigError(ValueError):
    pass


def _weight(a) -> WeightSpec:
    beta = a.beta
    if beta is None:
        beta = -1.0 if a.domain == "surface" else 0.0
    try:
        return WeightSpec(a.domain, a.d, beta, a.gamma, a.mu)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _cutoff(a) -> CutoffSpec:
    try:
        return CutoffSpec(a.cutoff, smooth_order=a.smooth_order, transition=a.transition)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated integer list, got {text!r}") from exc


def _json(path: str, data: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out(a, name: str) -> str:
    os.makedirs(a.out, exist_ok=True)
    return os.path.join(a.out, name)


def _gnuplot(a, name: str, script: str) -> None:
    if getattr(a, "gnuplot", False):
        with open(_out(a, name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(script)


# ---------------------------------------------------------------------------
# commands


def cmd_points(a) -> int:
    try:
        S = geometry.build_separated_set(a.domain, a.d, a.eps, seed=a.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    geometry.write_points(S, _out(a, "points.csv"))
    info = {"seed": a.seed, "eps": a.eps, "domain": a.domain, "d": a.d, "n_rings": S.n_rings,
            "cardinality": len(S), "min_separation": geometry.min_separation(S),
            "covering_estimate": float(np.max(S.cell_r_hi))}
    _json(_out(a, "points.json"), info)
    _gnuplot(a, "points.gp", "set datafile separator ','\nsplot 'points.csv' using 3:4:2 with points pt 7 ps 0.3\n")
    print(f"{S.n_rings} rings, {len(S)} points, min separation {info['min_separation']:.4g} "
          f"(eps {a.eps:g}), covering {info['covering_estimate']:.4g}")
    return 0


def cmd_cubature(a) -> int:
    w = _weight(a)
    delta = cubature.default_delta(w) if a.delta is None else a.delta
    try:
        S = geometry.build_separated_set(w.domain, w.d, delta / max(a.n, 1), seed=a.seed, certify=False)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    t0 = time.time()
    try:
        rule = cubature.solve_positive_cubature(S, a.n, w, method=a.method)
    except cubature.Infeasible as exc:
        exc.delta_hint = delta / 2
        raise
    path = _out(a, "rule.csv")
    cubature.write_rule(rule, path, w, delta)
    side = json.load(open(path + ".json"))
    side.update({"seed": a.seed, "seconds": time.time() - t0})
    _json(path + ".json", side)
    _gnuplot(a, "rule.gp", "set datafile separator ','\nset logscale y\n"
             "plot 'rule.csv' using 2:(column('weight')) with points pt 7 ps 0.3\n")
    print(f"degree {a.n}: {len(rule)} nodes, residual {rule.residual:.3e}, "
          f"min weight {rule.weights.min():.3e}, method {rule.meta.get('method')}")
    return 0


def cmd_kernel(a) -> int:
    w = _weight(a)
    cutoff = _cutoff(a)
    ns = _ints(a.n)
    report = {"seed": a.seed, "op": a.op, "weight": w.to_dict(), "n": ns}
    if a.op == "decay":
        rep = kernels.decay_report(w, ns, kappa=a.kappa, cutoff=cutoff, seed=a.seed,
                                   assertions=a.assertions)
        with open(_out(a, "kernel_decay.csv"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(rep.to_csv())
        report.update({"kappa": a.kappa, "cutoff": cutoff.kind.value, "transition": cutoff.transition,
                       "sup_N1": rep.sup_N1, "sup_N2": rep.sup_N2, "sup_N3": rep.sup_N3})
        _gnuplot(a, "kernel_decay.gp", "set datafile separator ','\nset logscale xy\n"
                 "plot 'kernel_decay.csv' using 1:3 w lp t 'N1', '' using 1:4 w lp t 'N2'\n")
        print(rep.to_csv(), end="")
    elif a.op == "christoffel":
        rng = np.random.default_rng(a.seed)
        pts = geometry.random_points(w.domain, w.d, a.points, rng)
        rows = []
        for n in ns:
            lam = kernels.christoffel(w, n, pts)
            cap = np.array([geometry.cap_measure_formula(w, p, 1.0 / n) for p in pts])
            rows += [(n, p, l, c) for p, l, c in zip(pts, lam, cap)]
        with open(_out(a, "kernel_christoffel.csv"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write("n,t," + ",".join(f"x{i + 1}" for i in range(w.d)) + ",lambda,cap,ratio\n")
            for n, p, l, c in rows:
                fh.write(",".join([str(n), repr(float(p[-1]))] + [repr(float(v)) for v in p[:-1]]
                                  + [repr(float(l)), repr(float(c)), repr(float(l / c))]) + "\n")
        ratios = [l / c for _, _, l, c in rows]
        report.update({"ratio_min": float(min(ratios)), "ratio_max": float(max(ratios))})
        print(f"lambda_n / cap in [{min(ratios):.4g}, {max(ratios):.4g}]")
    elif a.op == "eigen":
        err = kernels.eigen_check(w, n_max=max(ns), seed=a.seed)
        report["max_rel_error"] = float(err)
        print(f"eigen-operator max relative error {err:.3e}")
    elif a.op == "oracle":
        err = _oracle_error(w, max(ns), a.points, a.seed)
        report["max_rel_error"] = err
        print(f"addition vs basis kernel max relative error {err:.3e}")
    _json(_out(a, f"kernel_{a.op}.json"), report)
    return 0


def cmd_frame(a) -> int:
    w = _weight(a)
    cutoff = CutoffSpec("b", smooth_order=a.smooth_order, transition=a.transition)
    band = a.band_limit if a.band_limit is not None else 2 ** (a.J - 1)
    t0 = time.time()
    try:
        fr = frames.build_frame(w, a.J, delta=a.delta, cutoff=cutoff, band_limit=band, seed=a.seed)
    except cubature.Infeasible as exc:
        exc.delta_hint = (a.delta if a.delta is not None else cubature.default_delta(w) / 2) / 2
        raise
    path = frames.write_frame(fr, _frame_dir(a))
    man = json.load(open(path))
    man.update({"seed": a.seed, "seconds": time.time() - t0})
    _json(path, man)
    print(f"frame J={a.J}: levels {fr.level_sizes()}, {fr.n_elements} elements -> {path}")
    return 0


def _frame_dir(a) -> str:
    return a.frame if getattr(a, "frame", None) else os.path.join(a.out, "frame")


def _load_frame(directory: str) -> frames.NeedletFrame:
    path = os.path.join(directory, "manifest.json")
    if not os.path.exists(path):
        raise ConfigError(f"no frame manifest at {path}; run `frame` first")
    man = json.load(open(path))
    wd = man["weight"]
    w = WeightSpec(wd["domain"], wd["d"], wd["beta"], wd["gamma"], wd["mu"])
    c = man["cutoff"]
    cutoff = CutoffSpec(c["kind"], smooth_order=c["smooth_order"], transition=c["transition"])
    return frames.build_frame(w, man["J"], delta=man["delta"], cutoff=cutoff,
                              band_limit=man["band_limit"], seed=man.get("seed", 0))


def cmd_approx(a) -> int:
    report: dict = {"seed": a.seed, "op": a.op}
    rng = np.random.default_rng(a.seed)
    if a.op == "parseval":
        fr = _load_frame(_frame_dir(a))
        N = fr.band_limit or 2 ** (fr.J - 1)
        B = _cached_basis(fr.weight, N)
        f = Expansion(fr.weight, N, rng.standard_normal((B.size, a.trials)))
        defect = frames.parseval_check(fr, f)
        report.update({"J": fr.J, "degree": N, "trials": a.trials,
                       "parseval_defect": float(np.max(defect))})
        coeffs = frames.analyze(fr, Expansion(fr.weight, N, f.coef[:, 0]))
        frames.write_coefficients(coeffs, _out(a, "coefficients.csv"))
        print(f"Parseval defect {np.max(defect):.3e} over {a.trials} functions of degree <= {N}")
    elif a.op == "corpus":
        w = _weight(a)
        ns = _ints(a.n) if a.n else [4, 8, 16, 32, 64]
        N = a.N or 2 * max(ns)
        rows = approx.corpus_experiment(w, ns, (1, 2), N=N)
        manifest = {"seed": a.seed, "weight": w.to_dict(), "N": N, "n": ns, "r": [1, 2],
                    "functions": list(approx.CORPUS)}
        approx.write_experiment(rows, _out(a, "corpus.csv"), manifest)
        report.update({"max_direct": max(r.ratio for r in rows),
                       "max_inverse": max(r.inverse for r in rows)})
        print(f"{len(rows)} rows; max E_n/K_hat {report['max_direct']:.3g}, "
              f"max inverse constant {report['max_inverse']:.3g}")
    elif a.op == "nikolskii":
        w = _weight(a)
        rep = approx.nikolskii_report(w, _ints(a.n) if a.n else (8, 16, 32))
        report.update({"n": rep.n, "ratio": rep.ratio, "slope": rep.slope, "bound": rep.bound})
        print(f"Nikolskii slope {rep.slope:.3f} (bound {rep.bound:.3f})")
    elif a.op == "near-best":
        w = _weight(a)
        n = _ints(a.n)[0] if a.n else 8
        f = approx.CORPUS[a.function]
        nb = approx.near_best(w, n, f, seed=a.seed)
        pts = approx.probe_grid(w, 2 * n, 2)
        err = float(np.max(np.abs(nb(pts) - f(pts))))
        report.update({"n": n, "function": a.function, "sup_error": err, "nodes": nb.rule_nodes})
        print(f"||f - L_n f||_inf ~ {err:.3e} (n={n}, {nb.rule_nodes} cubature nodes)")
    _json(_out(a, f"approx_{a.op}.json"), report)
    return 0


# ---------------------------------------------------------------------------
# check suites


def _oracle_error(w: WeightSpec, n_max: int, pairs: int, seed: int) -> float:
    rng = np.random.default_rng(seed)
    p = geometry.random_points(w.domain, w.d, pairs, rng)
    q = geometry.random_points(w.domain, w.d, pairs, rng)
    worst = 0.0
    for n in range(n_max + 1):
        ka = kernels.reprod_kernel(w, n, p, q, method="addition")
        kb = kernels.reprod_kernel(w, n, p, q, method="basis")
        worst = max(worst, float(np.max(np.abs(ka - kb)) / max(np.max(np.abs(kb)), 1e-300)))
    return worst


def _suite_geometry(w: WeightSpec, seed: int) -> dict:
    S = geometry.build_separated_set(w.domain, w.d, 0.2, seed=seed)
    ratios = []
    rng = np.random.default_rng(seed)
    for p in geometry.random_points(w.domain, w.d, 5, rng):
        for r in (0.05, 0.2, 0.8):
            ratios.append(geometry.cap_measure_quad(w, p, r) / geometry.cap_measure_formula(w, p, r))
    mass = float(np.sum(geometry.cell_measures(S, w)))
    return {
        "geometry.separation": (geometry.min_separation(S) >= 0.2 * (1 - 1e-12), geometry.min_separation(S)),
        "geometry.cap_equivalence": (1 / 20 <= min(ratios) and max(ratios) <= 20, [min(ratios), max(ratios)]),
        "geometry.cell_partition": (abs(mass - 1) < 1e-10, mass),
    }


def _suite_kernels(w: WeightSpec, seed: int) -> dict:
    err = _oracle_error(w, 10, 20, seed)
    out = {"kernels.oracle_equivalence": (err <= 1e-8, err)}
    if w.is_surface and w.beta == -1 or not w.is_surface:
        e = kernels.eigen_check(w, n_max=4, n_points=6, seed=seed)
        out["kernels.eigenvalues"] = (e <= 1e-4, e)
    rng = np.random.default_rng(seed)
    pts = geometry.random_points(w.domain, w.d, 5, rng)
    r = []
    for n in (4, 8):
        lam = kernels.christoffel(w, n, pts)
        r += [l / geometry.cap_measure_formula(w, p, 1 / n) for p, l in zip(pts, lam)]
    out["kernels.christoffel_bound"] = (1 / 50 <= min(r) and max(r) <= 50, [min(r), max(r)])
    return out


def _suite_cubature(w: WeightSpec, seed: int) -> dict:
    S = geometry.build_separated_set(w.domain, w.d, cubature.default_delta(w) / 8, seed=seed, certify=False)
    rule = cubature.solve_positive_cubature(S, 8, w)
    exact = cubature.verify_exactness(rule, w, trials=5, seed=seed)
    return {"cubature.residual": (rule.residual <= 1e-8, rule.residual),
            "cubature.positive": (bool(np.all(rule.weights > 0)), float(rule.weights.min())),
            "cubature.exactness": (exact <= 1e-8, exact)}


def _suite_frames(w: WeightSpec, seed: int) -> dict:
    fr = frames.build_frame(w, 3, band_limit=4, seed=seed)
    B = _cached_basis(w, 4)
    f = Expansion(w, 4, np.random.default_rng(seed).standard_normal((B.size, 5)))
    defect = float(np.max(frames.parseval_check(fr, f)))
    return {"frames.parseval": (defect <= 1e-6, defect)}


def _suite_approx(w: WeightSpec, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    N = 4
    f = Expansion(w, N, rng.standard_normal(_cached_basis(w, N).size))
    g = lambda s: np.exp(s)
    x = geometry.random_points(w.domain, w.d, 2, rng)
    lhs = approx.convolve(w, f, g)(x)
    rhs = approx.convolution_direct(w, f, g, x, quad_degree=2 * N + 20, order=30)
    conv = float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs)))
    nb = approx.near_best(w, N, f, seed=seed)
    P = geometry.random_points(w.domain, w.d, 50, rng)
    rep = float(np.max(np.abs(nb(P) - f(P))))
    return {"approx.convolution_theorem": (conv <= 1e-7, conv),
            "approx.near_best_reproduction": (rep <= 1e-8, rep)}


SUITES = {"geometry": _suite_geometry, "kernels": _suite_kernels, "cubature": _suite_cubature,
          "frames": _suite_frames, "approx": _suite_approx}


def cmd_check(a) -> int:
    w = _weight(a)
    names = list(SUITES) if a.suite == "all" else [a.suite]
    results = {}
    for name in names:
        try:
            results.update(SUITES[name](w, a.seed))
        except ValueError as exc:
            raise ConfigError(f"suite {name}: {exc}") from exc
    failed = [k for k, (ok, _) in results.items() if not ok]
    report = {"seed": a.seed, "weight": w.to_dict(), "suite": a.suite,
              "results": {k: {"ok": bool(ok), "value": np.asarray(v, float).tolist()}
                          for k, (ok, v) in results.items()},
              "failed": failed}
    _json(_out(a, f"check_{a.suite}.json"), report)
    for k, (ok, v) in results.items():
        shown = ", ".join(f"{float(x):.3e}" for x in np.atleast_1d(v))
        print(f"{'ok  ' if ok else 'FAIL'} {k}: {shown}")
    if failed:
        print("failed invariants: " + ", ".join(failed), file=sys.stderr)
        return 4
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="conekit", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter,
                                 epilog="`conekit --help formats` describes the output files.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, weight=True):
        p.add_argument("--domain", choices=["surface", "cone"], default="surface")
        p.add_argument("--d", type=int, default=2)
        if weight:
            p.add_argument("--beta", type=float, default=None, help="surface only (default -1)")
            p.add_argument("--gamma", type=float, default=0.0)
            p.add_argument("--mu", type=float, default=0.0, help="cone only")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=".")
        p.add_argument("--gnuplot", action="store_true", help="also write gnuplot scripts")

    def cut(p, kinds=("a", "b", "indicator")):
        p.add_argument("--cutoff", choices=kinds, default=kinds[0])
        p.add_argument("--transition", choices=["exp", "poly"], default="exp")
        p.add_argument("--smooth-order", type=int, default=3)

    p = sub.add_parser("points", help="epsilon-separated ring set")
    common(p, weight=False)
    p.add_argument("--eps", type=float, required=True)
    p.set_defaults(func=cmd_points)

    p = sub.add_parser("cubature", help="positive cubature of degree n")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--method", choices=["auto", "least-change", "nnls"], default="auto")
    p.set_defaults(func=cmd_cubature)

    p = sub.add_parser("kernel", help="kernel studies: decay, christoffel, eigen, oracle")
    common(p)
    cut(p)
    p.add_argument("--op", choices=["decay", "christoffel", "eigen", "oracle"], default="decay")
    p.add_argument("--n", default="16,32,64", help="comma-separated degrees")
    p.add_argument("--kappa", type=float, default=8.0)
    p.add_argument("--assertions", default="123")
    p.add_argument("--points", type=int, default=20)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("frame", help="tight needlet frame")
    common(p)
    p.add_argument("--J", type=int, required=True)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--band-limit", type=int, default=None, help="default 2^(J-1)")
    p.add_argument("--transition", choices=["exp", "poly"], default="exp")
    p.add_argument("--smooth-order", type=int, default=3)
    p.add_argument("--frame", default=None, help="output directory (default OUT/frame)")
    p.set_defaults(func=cmd_frame)

    p = sub.add_parser("approx", help="approximation experiments")
    common(p)
    p.add_argument("--op", choices=["parseval", "corpus", "nikolskii", "near-best"], required=True)
    p.add_argument("--frame", default=None, help="frame directory (default OUT/frame)")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--n", default=None)
    p.add_argument("--N", type=int, default=None, help="projection degree for the corpus")
    p.add_argument("--function", choices=list(approx.CORPUS), default="exp_x1")
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("check", help="invariant suites; exit 4 on failure")
    common(p)
    p.add_argument("--suite", choices=list(SUITES) + ["all"], default="all")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("formats", help="describe output file formats")
    p.set_defaults(func=lambda a: print(FORMATS, end="") or 0)
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv[:2] in (["--help", "formats"], ["-h", "formats"]):
        print(FORMATS, end="")
        return 0
    a = build_parser().parse_args(argv)
    try:
        return a.func(a)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except cubature.Infeasible as exc:
        sugg = getattr(exc, "delta_hint", None)
        msg = f"infeasible: {exc}"
        if sugg is not None:
            msg += f"; try a smaller delta, e.g. --delta {sugg:g}"
        print(msg, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
